//! From a potential to a spectrum: domain and spacing selection, assembly,
//! and the eigensolve, with a WKB estimate to size the domain up front.

use serde::{Deserialize, Serialize};

use crate::discretization::{assemble_hamiltonian_with, auto_domain, Grid};
use crate::eigensolver::{solve_below_with, solve_lowest_with, SolverOptions, Spectrum};
use crate::error::{Error, Result};
use crate::potentials::Potential;

pub const DEFAULT_PAD: f64 = 1.3;
pub const DEFAULT_POINTS_PER_WAVELENGTH: f64 = 20.0;

/// Samples used for the WKB phase integral.
const WKB_SAMPLES: usize = 20_000;

/// How the spatial grid is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridPolicy {
    Explicit { q_min: f64, q_max: f64, n_points: usize },
    /// Walls from [`auto_domain`] at the highest wanted energy; spacing from
    /// the local wavelength there.
    Auto { pad: f64, points_per_wavelength: f64 },
    /// Fixed walls, spacing from the local wavelength.
    Walls { q_min: f64, q_max: f64, points_per_wavelength: f64 },
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy::Auto { pad: DEFAULT_PAD, points_per_wavelength: DEFAULT_POINTS_PER_WAVELENGTH }
    }
}

/// Which part of the spectrum to compute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Lowest(usize),
    Below(f64),
}

fn sample_range<P: Potential + ?Sized>(pot: &P, (a, b): (f64, f64), n: usize) -> Result<(Vec<f64>, f64)> {
    let step = (b - a) / (n - 1) as f64;
    let vs = (0..n).map(|i| pot.value(a + i as f64 * step)).collect::<Result<Vec<_>>>()?;
    Ok((vs, step))
}

/// Semiclassical level count `N(E) = (1/pi) * integral sqrt(2 (E - V))_+ dq + 1/2`.
pub fn wkb_count<P: Potential + ?Sized>(pot: &P, energy: f64) -> Result<f64> {
    let domain = auto_domain(pot, energy, 1.0)?;
    let (vs, step) = sample_range(pot, domain, WKB_SAMPLES)?;
    let phase: f64 = vs.iter().map(|&v| (2.0 * (energy - v)).max(0.0).sqrt()).sum::<f64>() * step;
    Ok(phase / std::f64::consts::PI + 0.5)
}

/// Energy at which the WKB count reaches `n`.
pub fn wkb_energy<P: Potential + ?Sized>(pot: &P, n: usize) -> Result<f64> {
    let v0 = pot.value(pot.envelope_center())?;
    let mut lo = v0;
    let mut hi = v0 + 1.0;
    while wkb_count(pot, hi)? < n as f64 {
        lo = hi;
        hi = v0 + 2.0 * (hi - v0);
        if !hi.is_finite() || hi - v0 > 1e12 {
            return Err(Error::TurningPointNotFound { energy: hi });
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if wkb_count(pot, mid)? < n as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-5 * (hi - v0) {
            break;
        }
    }
    Ok(hi)
}

/// Grid for states up to `e_max` under `policy`.
pub fn plan_grid<P: Potential + ?Sized>(pot: &P, e_max: f64, policy: &GridPolicy) -> Result<Grid> {
    let (walls, ppw) = match *policy {
        GridPolicy::Explicit { q_min, q_max, n_points } => return Grid::new(q_min, q_max, n_points),
        GridPolicy::Auto { pad, points_per_wavelength } => (auto_domain(pot, e_max, pad)?, points_per_wavelength),
        GridPolicy::Walls { q_min, q_max, points_per_wavelength } => ((q_min, q_max), points_per_wavelength),
    };
    if !(ppw > 0.0) {
        return Err(Error::invalid("points_per_wavelength", "must be positive"));
    }
    let (vs, _) = sample_range(pot, walls, WKB_SAMPLES)?;
    let v_min = vs.iter().copied().fold(f64::INFINITY, f64::min);
    let h = Grid::spacing_for_energy(e_max - v_min, ppw);
    if walls.0 == -walls.1 && pot.is_even() {
        Grid::symmetric(walls.1, h)
    } else {
        Grid::covering(walls.0, walls.1, h)
    }
}

/// Discretizes `pot` and computes the requested part of its spectrum.
///
/// For `Target::Lowest(m)` with a sized policy the top energy is first
/// estimated semiclassically; if the computed `E_m` lands above the estimate
/// the grid is rebuilt for the larger energy.
pub fn solve_potential<P: Potential + ?Sized>(
    pot: &P,
    target: Target,
    policy: &GridPolicy,
    want_states: bool,
    opts: &SolverOptions,
) -> Result<Spectrum> {
    match target {
        Target::Below(e) => {
            let grid = plan_grid(pot, e, policy)?;
            let h = assemble_hamiltonian_with(&grid, pot, opts.execution)?;
            solve_below_with(&h, e, want_states, opts)
        }
        Target::Lowest(m) => {
            if m == 0 {
                return Err(Error::invalid("states", "must be at least 1"));
            }
            if let GridPolicy::Explicit { .. } = policy {
                let grid = plan_grid(pot, 0.0, policy)?;
                let h = assemble_hamiltonian_with(&grid, pot, opts.execution)?;
                return solve_lowest_with(&h, m, want_states, opts);
            }
            let v0 = pot.value(pot.envelope_center())?;
            let mut e_max = wkb_energy(pot, m)?;
            e_max += 0.05 * (e_max - v0);
            for _ in 0..4 {
                let grid = plan_grid(pot, e_max, policy)?;
                let h = assemble_hamiltonian_with(&grid, pot, opts.execution)?;
                let spectrum = solve_lowest_with(&h, m, want_states, opts)?;
                let top = spectrum.energies[m - 1];
                if top <= e_max {
                    return Ok(spectrum);
                }
                log::info!("E_{m} = {top} above the estimate {e_max}; enlarging the grid");
                e_max = top + 0.05 * (top - v0);
            }
            Err(Error::NoConvergence { converged: 0, requested: m })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wkb_is_exact_for_harmonic() {
        let harmonic = |q: f64| 0.5 * q * q;
        // N(E) = E + 1/2 for the oscillator
        let n = wkb_count(&harmonic, 10.0).unwrap();
        assert!((n - 10.5).abs() < 1e-5, "{n}");
        let e = wkb_energy(&harmonic, 20).unwrap();
        assert!((e - 19.5).abs() < 1e-3, "{e}");
    }

    #[test]
    fn auto_policy_reaches_requested_count() {
        let harmonic = |q: f64| 0.5 * q * q;
        let s = solve_potential(&harmonic, Target::Lowest(30), &GridPolicy::default(), false, &SolverOptions::default())
            .unwrap();
        assert_eq!(s.len(), 30);
        for (i, e) in s.energies.iter().enumerate() {
            assert!((e - (i as f64 + 0.5)).abs() < 1e-6, "E_{} = {e}", i + 1);
        }
    }

    #[test]
    fn below_target_counts_levels() {
        let harmonic = |q: f64| 0.5 * q * q;
        let s = solve_potential(&harmonic, Target::Below(10.0), &GridPolicy::default(), false, &SolverOptions::default())
            .unwrap();
        assert_eq!(s.len(), 10);
    }
}
