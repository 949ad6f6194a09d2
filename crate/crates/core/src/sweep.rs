//! Parameter sweeps and grid-convergence studies over independent solves.

use serde::{Deserialize, Serialize};

use crate::discretization::{assemble_hamiltonian_with, auto_domain, Grid};
use crate::eigensolver::{solve_lowest_with, SolverOptions};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pipeline::{wkb_energy, GridPolicy};
use crate::potentials::{Potential, PotentialSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    Beta,
    K,
    Phi,
    Gamma,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Beta => "beta",
            SweepParameter::K => "k",
            SweepParameter::Phi => "phi",
            SweepParameter::Gamma => "gamma",
        }
    }

    pub const ALL: [SweepParameter; 5] =
        [SweepParameter::Alpha, SweepParameter::Beta, SweepParameter::K, SweepParameter::Phi, SweepParameter::Gamma];

    /// `base` with this parameter set to `value`, validated.
    pub fn apply(self, base: &PotentialSpec, value: f64) -> Result<PotentialSpec> {
        let mut s = *base;
        match self {
            SweepParameter::Alpha => s.alpha = value,
            SweepParameter::Beta => s.beta = value,
            SweepParameter::K => s.k = value,
            SweepParameter::Phi => s.phi = value,
            SweepParameter::Gamma => s.gamma = value,
        }
        PotentialSpec::new(s.family, s.alpha, s.beta, s.k, s.phi, s.gamma)
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("parameter", format!("`{s}` is not one of alpha, beta, k, phi, gamma")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub base: PotentialSpec,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub states: usize,
    pub policy: GridPolicy,
    pub want_states: bool,
}

impl SweepPlan {
    pub fn new(
        base: PotentialSpec,
        parameter: SweepParameter,
        values: Vec<f64>,
        states: usize,
        policy: GridPolicy,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("values", "sweep needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "must be finite"));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::invalid("values", "must be strictly monotone"));
        }
        if states == 0 {
            return Err(Error::invalid("states", "must be at least 1"));
        }
        Ok(SweepPlan { base, parameter, values, states, policy, want_states: false })
    }

    /// `points` phases `2 pi j / points`, `j = 0..points`. The period end is
    /// left out because it repeats `phi = 0`; with `points` divisible by 4
    /// the symmetric phases `pi/2`, `pi`, `3 pi/2` are hit exactly.
    pub fn phase(base: PotentialSpec, points: usize, states: usize, policy: GridPolicy) -> Result<Self> {
        if points == 0 {
            return Err(Error::invalid("points", "must be at least 1"));
        }
        let tau = 2.0 * std::f64::consts::PI;
        let values = (0..points).map(|j| tau * j as f64 / points as f64).collect();
        SweepPlan::new(base, SweepParameter::Phi, values, states, policy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub spec: Option<PotentialSpec>,
    pub energies: Option<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
    /// Grid shared by every point.
    pub grid: Grid,
    pub rtol: f64,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }
}

/// Specs of the plan values that pass validation; the rest fail later as
/// individual points.
fn valid_specs(plan: &SweepPlan) -> Result<Vec<PotentialSpec>> {
    let specs: Vec<_> = plan.values.iter().filter_map(|&v| plan.parameter.apply(&plan.base, v).ok()).collect();
    if specs.is_empty() {
        return Err(Error::SweepFailed("no plan value is a valid parameter".into()));
    }
    Ok(specs)
}

/// One grid for every plan value: the union of the per-value domains, and
/// the spacing demanded by the highest per-value energy.
pub fn shared_grid(plan: &SweepPlan) -> Result<Grid> {
    let (pad, ppw) = match plan.policy {
        GridPolicy::Explicit { q_min, q_max, n_points } => return Grid::new(q_min, q_max, n_points),
        GridPolicy::Walls { q_min, q_max, points_per_wavelength } => {
            let mut e_max = f64::NEG_INFINITY;
            for spec in valid_specs(plan)? {
                e_max = e_max.max(wkb_energy(&spec, plan.states)?);
            }
            let h = Grid::spacing_for_energy(1.05 * e_max, points_per_wavelength);
            return Grid::covering(q_min, q_max, h);
        }
        GridPolicy::Auto { pad, points_per_wavelength } => (pad, points_per_wavelength),
    };
    let (mut lo, mut hi, mut e_top) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut any_even = false;
    for spec in valid_specs(plan)? {
        let v0 = spec.value(spec.envelope_center())?;
        let e = wkb_energy(&spec, plan.states)?;
        let e = e + 0.05 * (e - v0);
        let (a, b) = auto_domain(&spec, e, pad)?;
        lo = lo.min(a);
        hi = hi.max(b);
        e_top = e_top.max(e - v0);
        any_even |= spec.is_even();
    }
    let h = Grid::spacing_for_energy(e_top, ppw);
    if any_even || (lo < 0.0 && hi > 0.0) {
        Grid::symmetric(hi.max(-lo), h)
    } else {
        Grid::covering(lo, hi, h)
    }
}

/// Solves every plan point on a shared grid. Point failures are recorded;
/// only a sweep with no successful point is an error.
pub fn run_sweep(plan: &SweepPlan, opts: &SolverOptions) -> Result<SweepResult> {
    let grid = shared_grid(plan)?;
    // Points run in parallel; each solve stays sequential so results do not
    // depend on how work is split.
    let inner = SolverOptions { execution: Execution::Sequential, ..*opts };
    let points = opts.execution.map(&plan.values, |&value| {
        let outcome = plan.parameter.apply(&plan.base, value).and_then(|spec| {
            let h = assemble_hamiltonian_with(&grid, &spec, Execution::Sequential)?;
            let s = solve_lowest_with(&h, plan.states, false, &inner)?;
            Ok((spec, s.energies))
        });
        match outcome {
            Ok((spec, energies)) => SweepPoint { value, spec: Some(spec), energies: Some(energies), error: None },
            Err(e) => {
                log::warn!("sweep point {} = {value}: {e}", plan.parameter.name());
                SweepPoint { value, spec: None, energies: None, error: Some(e.to_string()) }
            }
        }
    });
    if points.iter().all(|p| p.error.is_some()) {
        return Err(Error::SweepFailed(points[0].error.clone().unwrap_or_default()));
    }
    Ok(SweepResult { parameter: plan.parameter, points, grid, rtol: opts.rtol })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub spacings: Vec<f64>,
    /// `energies[j][n]`: state `n + 1` on grid `j`.
    pub energies: Vec<Vec<f64>>,
    /// Per-state error estimate of the finest grid, from the last two grids
    /// and the fitted order. Empty with fewer than two grids.
    pub richardson: Vec<f64>,
    /// Per-step orders `ln(d_j / d_{j+1}) / ln(h_j / h_{j+1})` of the summed
    /// absolute changes `d_j = sum_n |E_n(h_j) - E_n(h_{j+1})|`.
    pub step_orders: Vec<f64>,
    /// Least-squares slope of `ln d_j` against `ln h_j`.
    pub order: Option<f64>,
}

/// `E_n(h)` on a fixed domain for each spacing in `h_list`.
pub fn convergence_study<P: Potential + ?Sized>(
    pot: &P,
    states: usize,
    (q_min, q_max): (f64, f64),
    h_list: &[f64],
    opts: &SolverOptions,
) -> Result<ConvergenceTable> {
    if h_list.is_empty() {
        return Err(Error::invalid("h_list", "needs at least one spacing"));
    }
    if !h_list.windows(2).all(|w| w[1] < w[0]) || h_list.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::invalid("h_list", "spacings must be positive and strictly decreasing"));
    }
    let mut energies = Vec::with_capacity(h_list.len());
    let mut spacings = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let n = ((q_max - q_min) / h).round() as usize + 1;
        let grid = Grid::new(q_min, q_max, n)?;
        let hm = assemble_hamiltonian_with(&grid, pot, opts.execution)?;
        energies.push(solve_lowest_with(&hm, states, false, opts)?.energies);
        spacings.push(grid.spacing());
    }
    let diffs: Vec<f64> = energies
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum())
        .collect();
    let step_orders: Vec<f64> = diffs
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(d, h)| (d[0] / d[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    let order = (diffs.len() >= 2).then(|| {
        let xs: Vec<f64> = spacings[..diffs.len()].iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = diffs.iter().map(|d| d.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    });
    let richardson = match (energies.len(), order) {
        (k, Some(p)) if k >= 2 => {
            let r = (spacings[k - 2] / spacings[k - 1]).powf(p) - 1.0;
            energies[k - 1].iter().zip(&energies[k - 2]).map(|(f, c)| (f - c).abs() / r).collect()
        }
        _ => Vec::new(),
    };
    Ok(ConvergenceTable { spacings, energies, richardson, step_orders, order })
}
