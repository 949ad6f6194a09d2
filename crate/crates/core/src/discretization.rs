//! Uniform grids and the eighth-order finite-difference Hamiltonian.
//!
//! `H = -(1/2) D2 + diag(V(q_i))` with `hbar = m = 1`. The second derivative
//! uses the 9-point central stencil; taps that fall outside the grid are
//! dropped, which is a hard wall (`psi = 0`) just beyond each end.

use serde::{Deserialize, Serialize};

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::potentials::Potential;

/// Half-width of the finite-difference stencil.
pub const HALF_BANDWIDTH: usize = 4;

/// Central 8th-order second-derivative weights `c_0..c_4` (unit spacing);
/// `c_{-k} = c_k`.
pub const LAPLACIAN_WEIGHTS: [f64; 5] = [
    -205.0 / 72.0,
    8.0 / 5.0,
    -1.0 / 5.0,
    8.0 / 315.0,
    -1.0 / 560.0,
];

/// Uniform 1D grid with both endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    q_min: f64,
    q_max: f64,
    n_points: usize,
    h: f64,
}

impl Grid {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        if !(q_min.is_finite() && q_max.is_finite()) || !(q_max > q_min) {
            return Err(Error::InvalidGrid(format!("need q_max > q_min, got [{q_min}, {q_max}]")));
        }
        if n_points < 2 * HALF_BANDWIDTH + 1 {
            return Err(Error::InvalidGrid(format!(
                "need at least {} points, got {n_points}",
                2 * HALF_BANDWIDTH + 1
            )));
        }
        let h = (q_max - q_min) / (n_points - 1) as f64;
        Ok(Grid { q_min, q_max, n_points, h })
    }

    /// Smallest grid on `[q_min, q_max]` with spacing at most `max_spacing`.
    pub fn covering(q_min: f64, q_max: f64, max_spacing: f64) -> Result<Self> {
        if !(max_spacing > 0.0) {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        let intervals = ((q_max - q_min) / max_spacing).ceil().max(8.0) as usize;
        Grid::new(q_min, q_max, intervals + 1)
    }

    /// Grid on `[-half_width, half_width]` with an odd point count, so `q = 0`
    /// is a node and node `i` mirrors node `n - 1 - i` exactly.
    pub fn symmetric(half_width: f64, max_spacing: f64) -> Result<Self> {
        if !(max_spacing > 0.0) || !(half_width > 0.0) {
            return Err(Error::InvalidGrid("spacing and half-width must be positive".into()));
        }
        let half = (half_width / max_spacing).ceil().max(4.0) as usize;
        Grid::new(-half_width, half_width, 2 * half + 1)
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// `true` when the grid is mirror-symmetric about `q = 0` node by node.
    pub fn is_symmetric(&self) -> bool {
        self.q_min == -self.q_max && self.n_points % 2 == 1
    }

    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_points);
        if i == 0 {
            self.q_min
        } else if i + 1 == self.n_points {
            self.q_max
        } else if self.is_symmetric() {
            // exact negation between mirrored nodes
            let mid = (self.n_points / 2) as f64;
            (i as f64 - mid) * self.h
        } else {
            self.q_min + i as f64 * self.h
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Spacing giving `points_per_wavelength` nodes per local de Broglie
    /// wavelength at kinetic energy `kinetic_max`.
    pub fn spacing_for_energy(kinetic_max: f64, points_per_wavelength: f64) -> f64 {
        let p = (2.0 * kinetic_max.max(1e-300)).sqrt();
        2.0 * std::f64::consts::PI / (points_per_wavelength * p)
    }
}

/// The 9 stencil weights `c_{-4..=4} / h^2`.
pub fn laplacian_row_coefficients(h: f64) -> [f64; 9] {
    let inv = 1.0 / (h * h);
    let mut row = [0.0; 9];
    for k in 0..=HALF_BANDWIDTH {
        row[HALF_BANDWIDTH + k] = LAPLACIAN_WEIGHTS[k] * inv;
        row[HALF_BANDWIDTH - k] = LAPLACIAN_WEIGHTS[k] * inv;
    }
    row
}

/// Where the dropped-tap closure puts the hard wall, in steps beyond the
/// outermost node.
///
/// At zero energy the discrete solution that vanishes on the four dropped
/// ghost nodes is `u_j = j + a + (decaying modes)`, with the decaying modes
/// coming from the three stencil roots inside the unit circle. Its linear
/// part vanishes at `j = -a`, short of the first ghost node. Bound states
/// never see the wall, but a state with a finite slope there (a box) does.
pub const EFFECTIVE_WALL: f64 = 0.898_001_645_570_516;

/// Applies the stencil to `f` at node `q`.
pub fn apply_laplacian<F: Fn(f64) -> f64>(f: F, q: f64, h: f64) -> f64 {
    let row = laplacian_row_coefficients(h);
    // pair symmetric taps before summing to limit cancellation
    let mut acc = row[HALF_BANDWIDTH] * f(q);
    for k in (1..=HALF_BANDWIDTH).rev() {
        let kh = k as f64 * h;
        acc += row[HALF_BANDWIDTH + k] * (f(q + kh) + f(q - kh));
    }
    acc
}

pub fn assemble_hamiltonian<P: Potential + ?Sized>(grid: &Grid, pot: &P) -> Result<BandMatrix> {
    assemble_hamiltonian_with(grid, pot, Execution::default())
}

pub fn assemble_hamiltonian_with<P: Potential + ?Sized>(
    grid: &Grid,
    pot: &P,
    exec: Execution,
) -> Result<BandMatrix> {
    let n = grid.len();
    let row = laplacian_row_coefficients(grid.spacing());
    let diag = exec
        .map_range(n, |i| {
            let q = grid.point(i);
            match pot.value(q) {
                Ok(v) if v.is_finite() => Ok(v - 0.5 * row[HALF_BANDWIDTH]),
                Ok(_) => Err(Error::PotentialOverflow { node: i, q }),
                Err(e) => Err(e),
            }
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let mut bands = Vec::with_capacity(HALF_BANDWIDTH + 1);
    bands.push(diag);
    for d in 1..=HALF_BANDWIDTH {
        bands.push(vec![-0.5 * row[HALF_BANDWIDTH + d]; n - d]);
    }
    Ok(BandMatrix::from_bands(bands)?.with_grid(*grid))
}

const SCAN_LIMIT: f64 = 1e6;

/// Position of `V = energy` between `inside` (V < energy) and `outside` (V >= energy).
fn bisect_crossing<P: Potential + ?Sized>(pot: &P, mut inside: f64, mut outside: f64, energy: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside || (outside - inside).abs() <= 1e-13 * mid.abs().max(1.0) {
            break;
        }
        let v = pot.value(mid)?;
        if v < energy {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(0.5 * (inside + outside))
}

fn outermost_turning_point<P: Potential + ?Sized>(pot: &P, center: f64, dir: f64, energy: f64) -> Result<f64> {
    if let Some(radius) = pot.confinement_radius(energy) {
        let steps = 20_000usize;
        let step = radius / steps as f64;
        let mut outer = center + dir * radius;
        for s in 1..=steps {
            let q = center + dir * (radius - s as f64 * step);
            if pot.value(q)? < energy {
                return bisect_crossing(pot, q, outer, energy);
            }
            outer = q;
        }
        return Err(Error::TurningPointNotFound { energy });
    }
    let mut step = 1e-3 * center.abs().max(1.0);
    let mut q = center;
    while (q - center).abs() < SCAN_LIMIT {
        let next = q + dir * step;
        let v = pot.value(next)?;
        if !(v < energy) {
            return bisect_crossing(pot, q, next, energy);
        }
        q = next;
        step *= 1.1;
    }
    Err(Error::TurningPointNotFound { energy })
}

/// Domain whose hard walls sit `pad` times farther from the envelope minimum
/// than the outermost classical turning points at `target_energy`.
/// Even potentials get a symmetric domain.
pub fn auto_domain<P: Potential + ?Sized>(pot: &P, target_energy: f64, pad: f64) -> Result<(f64, f64)> {
    if !(pad >= 1.0) {
        return Err(Error::invalid("pad", "must be at least 1"));
    }
    let center = pot.envelope_center();
    if !(pot.value(center)? < target_energy) {
        return Err(Error::invalid("target_energy", "must lie above the potential minimum"));
    }
    let left = outermost_turning_point(pot, center, -1.0, target_energy)?;
    let right = outermost_turning_point(pot, center, 1.0, target_energy)?;
    let lo = center + pad * (left - center);
    let hi = center + pad * (right - center);
    if pot.is_even() {
        let half = hi.abs().max(lo.abs());
        Ok((-half, half))
    } else {
        Ok((lo, hi))
    }
}
