//! Symmetric band matrices in diagonal storage.

use std::io::{Read, Write};

use crate::discretization::Grid;
use crate::error::{Error, Result};

/// Real symmetric band matrix. `bands[d][i]` holds `H[i + d][i] = H[i][i + d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    order: usize,
    half_bandwidth: usize,
    bands: Vec<Vec<f64>>,
    grid: Option<Grid>,
}

impl BandMatrix {
    pub fn zeros(order: usize, half_bandwidth: usize) -> Self {
        let bands = (0..=half_bandwidth).map(|d| vec![0.0; order.saturating_sub(d)]).collect();
        BandMatrix { order, half_bandwidth, bands, grid: None }
    }

    pub fn from_bands(bands: Vec<Vec<f64>>) -> Result<Self> {
        let order = bands.first().map_or(0, Vec::len);
        if order == 0 {
            return Err(Error::InvalidGrid("empty band matrix".into()));
        }
        for (d, band) in bands.iter().enumerate() {
            if band.len() != order.saturating_sub(d) {
                return Err(Error::InvalidGrid(format!(
                    "band {d} has length {}, expected {}",
                    band.len(),
                    order.saturating_sub(d)
                )));
            }
            if band.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidGrid(format!("band {d} has a non-finite entry")));
            }
        }
        Ok(BandMatrix { order, half_bandwidth: bands.len() - 1, bands, grid: None })
    }

    pub(crate) fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    /// Grid the matrix was assembled on, if any.
    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.half_bandwidth {
            0.0
        } else {
            self.bands[d][lo]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.half_bandwidth, "({i}, {j}) lies outside the band");
        self.bands[d][lo] = value;
    }

    /// `y = H x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order);
        let mut y: Vec<f64> = self.bands[0].iter().zip(x).map(|(a, b)| a * b).collect();
        for (d, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                y[i] += a * x[i + d];
                y[i + d] += a * x[i];
            }
        }
        y
    }

    /// Max absolute row sum; an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.order];
        for (d, band) in self.bands.iter().enumerate() {
            for (i, &a) in band.iter().enumerate() {
                rows[i] += a.abs();
                if d > 0 {
                    rows[i + d] += a.abs();
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.order;
        let mut a = vec![vec![0.0; n]; n];
        for (d, band) in self.bands.iter().enumerate() {
            for (i, &v) in band.iter().enumerate() {
                a[i + d][i] = v;
                a[i][i + d] = v;
            }
        }
        a
    }

    /// Debug dump: `order` and `half_bandwidth` as little-endian u64, then
    /// diagonals `0..=half_bandwidth` back to back as little-endian f64
    /// (diagonal `d` has `order - d` entries).
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.order as u64).to_le_bytes())?;
        w.write_all(&(self.half_bandwidth as u64).to_le_bytes())?;
        for band in &self.bands {
            for v in band {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> std::io::Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let order = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let half_bandwidth = u64::from_le_bytes(word) as usize;
        let mut m = BandMatrix::zeros(order, half_bandwidth);
        for band in &mut m.bands {
            for v in band.iter_mut() {
                r.read_exact(&mut word)?;
                *v = f64::from_le_bytes(word);
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BandMatrix {
        let mut m = BandMatrix::zeros(6, 2);
        for i in 0..6 {
            m.set(i, i, 2.0 + i as f64);
            if i + 1 < 6 {
                m.set(i, i + 1, -1.0);
            }
            if i + 2 < 6 {
                m.set(i + 2, i, 0.25);
            }
        }
        m
    }

    #[test]
    fn matvec_matches_dense() {
        let m = sample();
        let x: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let y = m.matvec(&x);
        let dense = m.to_dense();
        for i in 0..6 {
            let yi: f64 = (0..6).map(|j| dense[i][j] * x[j]).sum();
            assert!((yi - y[i]).abs() < 1e-14);
            for j in 0..6 {
                assert_eq!(dense[i][j], dense[j][i]);
                assert_eq!(dense[i][j], m.get(j, i));
            }
        }
        assert_eq!(m.norm_inf(), 7.0 + 1.0 + 0.25);
    }

    #[test]
    fn binary_layout() {
        let m = sample();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * (6 + 5 + 4));
        assert_eq!(&buf[..8], &6u64.to_le_bytes());
        assert_eq!(&buf[8..16], &2u64.to_le_bytes());
        assert_eq!(&buf[16..24], &2.0f64.to_le_bytes());
        let back = BandMatrix::read_binary(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn from_bands_checks_lengths() {
        assert!(BandMatrix::from_bands(vec![vec![1.0; 4], vec![0.0; 4]]).is_err());
        assert!(BandMatrix::from_bands(vec![vec![1.0; 4], vec![f64::NAN; 3]]).is_err());
        assert!(BandMatrix::from_bands(vec![vec![1.0; 4], vec![0.0; 3]]).is_ok());
    }
}
