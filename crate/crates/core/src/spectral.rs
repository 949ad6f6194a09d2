//! Derived spectral quantities: spacings, scaled spacings, turning-point
//! characteristics, power-law fits and near-degeneracy catalogs.
//!
//! Labels follow the physics convention: the ground state is `n = 1`,
//! `dE_n = E_n - E_{n-1}` exists for `n >= 2` and `dR_n = dE_{n+1} / dE_n`
//! for `2 <= n <= M - 1`.

use serde::{Deserialize, Serialize};

use crate::eigensolver::spacing_floor_of;
use crate::error::{Error, Result};

/// Relative size below which two consecutive spacings count as tied.
pub const TIE_TOL: f64 = 1e-14;

pub const DEFAULT_WINDOW: usize = 11;
pub const DEFAULT_FACTOR: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct SpacingAnalysis {
    /// `spacings[i] = dE_{i+2}`.
    pub spacings: Vec<f64>,
    /// `scaled[i] = dR_{i+2}`; `None` when `dE_{i+2}` is below the floor.
    pub scaled: Vec<Option<f64>>,
    /// `degenerate[i]` is set when `dE_{i+2}` is below the floor.
    pub degenerate: Vec<bool>,
    pub floor: f64,
    /// Spacing labels `n` where the trend of `dE_n` reverses.
    pub turning_indices: Vec<usize>,
    /// `N(i)`: label gaps between consecutive turning points.
    pub tp_counts: Vec<usize>,
}

impl SpacingAnalysis {
    /// `dE_n`.
    pub fn spacing(&self, n: usize) -> Option<f64> {
        self.spacings.get(n.checked_sub(2)?).copied()
    }

    /// `dR_n`.
    pub fn scaled_spacing(&self, n: usize) -> Option<f64> {
        self.scaled.get(n.checked_sub(2)?).copied().flatten()
    }

    /// Labels `n` of the spacings, i.e. `2..=M`.
    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.spacings.len()).map(|i| i + 2)
    }
}

/// Spacings, scaled spacings and floor flags (turning points left empty).
pub fn spacings(energies: &[f64]) -> Result<SpacingAnalysis> {
    if energies.len() < 3 {
        return Err(Error::TooFewValues { needed: 3, got: energies.len() });
    }
    let floor = spacing_floor_of(energies);
    let spacings: Vec<f64> = energies.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let degenerate: Vec<bool> = spacings.iter().map(|&d| d < floor).collect();
    let scaled = spacings
        .windows(2)
        .zip(&degenerate)
        .map(|(w, &deg)| if deg { None } else { Some(w[1] / w[0]) })
        .collect();
    Ok(SpacingAnalysis { spacings, scaled, degenerate, floor, turning_indices: Vec::new(), tp_counts: Vec::new() })
}

/// Spacings plus turning points.
pub fn analyze(energies: &[f64]) -> Result<SpacingAnalysis> {
    let mut a = spacings(energies)?;
    if a.spacings.len() >= 3 {
        let (idx, counts) = turning_points(&a.spacings)?;
        a.turning_indices = idx.into_iter().map(|i| i + 2).collect();
        a.tp_counts = counts;
    }
    Ok(a)
}

/// Turning points of a spacing sequence, as 0-based positions into
/// `spacings`, and the gaps `N(i)` between consecutive ones.
///
/// Position `i` turns when the differences on either side have strictly
/// opposite signs. A tied difference keeps the sign of the last nonzero one,
/// so a plateau continues the trend.
pub fn turning_points(spacings: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    if spacings.len() < 3 {
        return Err(Error::TooFewValues { needed: 3, got: spacings.len() });
    }
    let mut trend = 0i8;
    let signs: Vec<i8> = spacings
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if d.abs() > TIE_TOL * w[0].abs().max(w[1].abs()) {
                trend = if d > 0.0 { 1 } else { -1 };
            }
            trend
        })
        .collect();
    let indices: Vec<usize> = (1..signs.len()).filter(|&i| signs[i - 1] * signs[i] < 0).collect();
    let counts = indices.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((indices, counts))
}

/// Ordinary least-squares fit `ln E_n = ln c + p ln n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub n_lo: usize,
    pub n_hi: usize,
    /// RMS of `ln E_n - ln(c n^p)` over the range.
    pub rms_residual: f64,
}

/// Fits `E_n = c n^p` over labels `n_lo..=n_hi` of `energies` (`energies[0] = E_1`).
pub fn fit_power_law(energies: &[f64], n_lo: usize, n_hi: usize) -> Result<PowerLawFit> {
    if n_lo < 1 || n_hi < n_lo + 10 {
        return Err(Error::invalid("fit_range", "need 1 <= n_lo and n_hi - n_lo >= 10"));
    }
    if n_hi > energies.len() {
        return Err(Error::TooFewValues { needed: n_hi, got: energies.len() });
    }
    let mut xs = Vec::with_capacity(n_hi - n_lo + 1);
    let mut ys = Vec::with_capacity(n_hi - n_lo + 1);
    for n in n_lo..=n_hi {
        let e = energies[n - 1];
        if !(e > 0.0) {
            return Err(Error::NonPositiveEnergy { n, energy: e });
        }
        xs.push((n as f64).ln());
        ys.push(e.ln());
    }
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum::<f64>() / len).sqrt();
    Ok(PowerLawFit { exponent, prefactor: intercept.exp(), n_lo, n_hi, rms_residual: rms })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Spacings far below their local median: `(n, dE_n)` with
/// `dE_n < factor * median(dE in a centered window of width `window`)`.
/// Windows are shifted inward at the ends of the spectrum.
pub fn near_degeneracies(analysis: &SpacingAnalysis, window: usize, factor: f64) -> Result<Vec<(usize, f64)>> {
    if window < 5 || window.is_multiple_of(2) {
        return Err(Error::invalid("degeneracy_window", "must be odd and at least 5"));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::invalid("degeneracy_factor", "must lie in (0, 1)"));
    }
    let s = &analysis.spacings;
    let len = s.len();
    let w = window.min(len);
    let half = w / 2;
    let mut out = Vec::new();
    let mut buf = Vec::with_capacity(w);
    for i in 0..len {
        let start = i.saturating_sub(half).min(len - w);
        buf.clear();
        buf.extend_from_slice(&s[start..start + w]);
        let med = median(&mut buf);
        if s[i] < factor * med {
            out.push((i + 2, s[i]));
        }
    }
    Ok(out)
}

/// A run of near-degeneracies whose splittings keep shrinking.
#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracySeries {
    /// Label of the first member.
    pub onset: usize,
    pub members: Vec<(usize, f64)>,
}

/// Splits flagged near-degeneracies into series.
///
/// Members are taken in label order. Each one continues the series whose
/// latest splitting is the smallest value still above it; when no series
/// qualifies it opens a new one. Splittings below `floor` are unresolved and
/// only ever extend the series that already reached the floor.
pub fn degeneracy_series(flagged: &[(usize, f64)], floor: f64) -> Vec<DegeneracySeries> {
    let mut series: Vec<DegeneracySeries> = Vec::new();
    let mut last: Vec<f64> = Vec::new();
    for &(n, split) in flagged {
        let target = if split < floor {
            last.iter()
                .enumerate()
                .filter(|(_, &l)| l < floor)
                .map(|(i, _)| i)
                .next()
                .or_else(|| {
                    last.iter()
                        .enumerate()
                        .min_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(i, _)| i)
                })
        } else {
            last.iter()
                .enumerate()
                .filter(|(_, &l)| l > split)
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
        };
        match target {
            Some(i) => {
                series[i].members.push((n, split));
                last[i] = split.min(last[i]);
            }
            None => {
                series.push(DegeneracySeries { onset: n, members: vec![(n, split)] });
                last.push(split);
            }
        }
    }
    series
}
