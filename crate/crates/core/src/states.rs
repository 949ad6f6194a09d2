//! Eigenstate classification: parity, per-well probability, left/right
//! asymmetry, localization and tunnelling doublets.

use serde::{Deserialize, Serialize};

use crate::discretization::Grid;
use crate::eigensolver::{clusters, fix_sign, Spectrum, CLUSTER_TOL};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::jacobi_eigen;
use crate::potentials::WellGeometry;

/// Single-well mass above which a state counts as localized.
pub const LOCALIZED_MASS: f64 = 0.5;
/// `|A|` above which a state counts as one-sided.
pub const ONE_SIDED: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    /// 1-based state label.
    pub n: usize,
    /// `<psi|P psi>`; `None` on grids without mirror symmetry.
    pub parity_overlap: Option<f64>,
    pub well_masses: Vec<f64>,
    /// `(P_right - P_left) / (P_right + P_left)`.
    pub asymmetry: f64,
    pub dominant_well: Option<usize>,
    /// Largest single-well mass.
    pub localization: f64,
}

impl StateMetrics {
    /// Most of the probability on one side of `q = 0`.
    pub fn is_one_sided(&self) -> bool {
        self.asymmetry.abs() > ONE_SIDED
    }
}

/// `sum psi(q_i) psi(-q_i) h` on a mirror-symmetric grid.
pub fn parity_overlap(state: &[f64], grid: &Grid) -> Result<f64> {
    if !grid.is_symmetric() {
        return Err(Error::AsymmetricGrid);
    }
    check_len(state, grid)?;
    let n = state.len();
    Ok((0..n).map(|i| state[i] * state[n - 1 - i]).sum::<f64>() * grid.spacing())
}

fn check_len(state: &[f64], grid: &Grid) -> Result<()> {
    if state.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "state has {} samples but the grid has {} points",
            state.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// Integral of the piecewise-linear interpolant of `psi^2` from `q_min` to
/// `q`, clamped to the grid.
struct CumulativeDensity<'a> {
    grid: &'a Grid,
    density: Vec<f64>,
    prefix: Vec<f64>,
}

impl<'a> CumulativeDensity<'a> {
    fn new(state: &[f64], grid: &'a Grid) -> Self {
        let density: Vec<f64> = state.iter().map(|x| x * x).collect();
        let h = grid.spacing();
        let mut prefix = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for w in density.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            prefix.push(acc);
        }
        CumulativeDensity { grid, density, prefix }
    }

    fn at(&self, q: f64) -> f64 {
        let g = self.grid;
        if q <= g.q_min() {
            return 0.0;
        }
        let last = g.len() - 1;
        if q >= g.q_max() {
            return self.prefix[last];
        }
        let h = g.spacing();
        let x = (q - g.q_min()) / h;
        let i = (x.floor() as usize).min(last - 1);
        let t = (q - g.point(i)) / h;
        let (a, b) = (self.density[i], self.density[i + 1]);
        self.prefix[i] + h * (a * t + 0.5 * (b - a) * t * t)
    }

    fn between(&self, a: f64, b: f64) -> f64 {
        (self.at(b) - self.at(a)).max(0.0)
    }
}

/// Probability in each well interval, integrating the linear interpolant of
/// `psi^2` exactly so partial cells at the interval edges are counted.
pub fn well_masses(state: &[f64], grid: &Grid, wells: &WellGeometry) -> Result<Vec<f64>> {
    check_len(state, grid)?;
    let cum = CumulativeDensity::new(state, grid);
    Ok(wells.well_intervals.iter().map(|&[a, b]| cum.between(a, b)).collect())
}

/// Probability on `q < 0` and on `q > 0`.
pub fn side_masses(state: &[f64], grid: &Grid) -> Result<(f64, f64)> {
    check_len(state, grid)?;
    let cum = CumulativeDensity::new(state, grid);
    let total = cum.at(grid.q_max());
    let left = cum.at(0.0);
    Ok((left, total - left))
}

fn asymmetry_of(left: f64, right: f64) -> f64 {
    let total = left + right;
    if total > 0.0 {
        ((right - left) / total).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

fn dominant(masses: &[f64]) -> (Option<usize>, f64) {
    masses
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or((None, 0.0), |(i, &m)| (Some(i), m))
}

/// Metrics of one normalized state.
pub fn metrics_of(n: usize, state: &[f64], grid: &Grid, wells: &WellGeometry) -> Result<StateMetrics> {
    let parity_overlap = if grid.is_symmetric() { Some(parity_overlap(state, grid)?) } else { None };
    let well_masses = well_masses(state, grid, wells)?;
    let (left, right) = side_masses(state, grid)?;
    let (dominant_well, localization) = dominant(&well_masses);
    Ok(StateMetrics { n, parity_overlap, well_masses, asymmetry: asymmetry_of(left, right), dominant_well, localization })
}

fn grid_and_states(spectrum: &Spectrum) -> Result<(&Grid, &[Vec<f64>])> {
    let grid = spectrum.grid.as_ref().ok_or_else(|| Error::invalid("spectrum", "has no grid"))?;
    let states = spectrum.states.as_deref().ok_or_else(|| Error::invalid("spectrum", "has no eigenstates"))?;
    Ok((grid, states))
}

/// Metrics for every state of `spectrum`.
pub fn state_metrics(spectrum: &Spectrum, wells: &WellGeometry, exec: Execution) -> Result<Vec<StateMetrics>> {
    let (grid, states) = grid_and_states(spectrum)?;
    exec.map_range(states.len(), |i| metrics_of(i + 1, &states[i], grid, wells)).into_iter().collect()
}

/// Rotates each cluster of near-degenerate states into parity eigenstates.
///
/// For an even potential the exact eigenstates have definite parity, but
/// when a doublet splitting is below what the solver resolves its members
/// come out as arbitrary mixtures of the two parity states. Diagonalizing the
/// reflection operator inside the cluster undoes that. Rotated vectors are
/// matched back to the original slots by largest overlap, so well-resolved
/// clusters are left in place. Returns the number of clusters rotated.
pub fn adapt_parity(spectrum: &mut Spectrum) -> Result<usize> {
    let gap = CLUSTER_TOL * spectrum.matrix_norm;
    let grid = *spectrum.grid.as_ref().ok_or_else(|| Error::invalid("spectrum", "has no grid"))?;
    if !grid.is_symmetric() {
        return Err(Error::AsymmetricGrid);
    }
    let ranges = clusters(&spectrum.energies, gap);
    let states = spectrum.states.as_mut().ok_or_else(|| Error::invalid("spectrum", "has no eigenstates"))?;
    let h = grid.spacing();
    let mut rotated = 0;
    for range in ranges.into_iter().filter(|r| r.len() > 1) {
        let k = range.len();
        let block: Vec<&Vec<f64>> = states[range.clone()].iter().collect();
        let n = block[0].len();
        let p: Vec<Vec<f64>> = (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| (0..n).map(|i| block[a][i] * block[b][n - 1 - i]).sum::<f64>() * h)
                    .collect()
            })
            .collect();
        let p: Vec<Vec<f64>> = (0..k).map(|a| (0..k).map(|b| 0.5 * (p[a][b] + p[b][a])).collect()).collect();
        let (_, rot) = jacobi_eigen(p);
        // rot[a][c]: coefficient of old state a in new state c
        let mut new_states: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                let mut v = vec![0.0; n];
                for (a, old) in block.iter().enumerate() {
                    let w = rot[a][c];
                    v.iter_mut().zip(old.iter()).for_each(|(x, y)| *x += w * y);
                }
                fix_sign(&mut v);
                v
            })
            .collect();
        let mut slot_of = vec![usize::MAX; k];
        let mut taken = vec![false; k];
        let mut pairs: Vec<(f64, usize, usize)> =
            (0..k).flat_map(|a| (0..k).map(move |c| (a, c))).map(|(a, c)| (rot[a][c].abs(), a, c)).collect();
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        for (_, a, c) in pairs {
            if slot_of[c] == usize::MAX && !taken[a] {
                slot_of[c] = a;
                taken[a] = true;
            }
        }
        let mut ordered = vec![Vec::new(); k];
        for (c, v) in new_states.drain(..).enumerate() {
            ordered[slot_of[c]] = v;
        }
        for (offset, v) in ordered.into_iter().enumerate() {
            states[range.start + offset] = v;
        }
        rotated += 1;
    }
    Ok(rotated)
}

/// A near-degenerate pair classified by its eigenstates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Doublet {
    pub n_lo: usize,
    pub n_hi: usize,
    pub splitting: f64,
    /// Wells holding the two localized combinations, ordered by position.
    pub left_well: Option<usize>,
    pub right_well: Option<usize>,
    pub parities: (Option<f64>, Option<f64>),
    /// Smaller of the two combinations' largest single-well mass.
    pub localization: f64,
    /// `true` when the localization signature holds.
    pub is_doublet: bool,
}

/// Checks each flagged spacing `(n, dE_n)` for the doublet signature.
///
/// The pair `(n - 1, n)` is combined into `(psi_a +- psi_b) / sqrt(2)`, the
/// states a particle prepared in one well would be built from. It is a
/// doublet when the two combinations sit in a mirror pair of outer wells
/// (neither is the central well) and each holds more than `threshold` of its
/// probability in its well. For parity eigenstates a single member spreads
/// evenly over both wells, so the combinations are what localizes.
pub fn find_doublets(
    spectrum: &Spectrum,
    metrics: &[StateMetrics],
    wells: &WellGeometry,
    flagged: &[(usize, f64)],
    threshold: f64,
) -> Result<Vec<Doublet>> {
    let (grid, states) = grid_and_states(spectrum)?;
    let central = wells.central();
    let mut out = Vec::with_capacity(flagged.len());
    for &(n, splitting) in flagged {
        if n < 2 || n > states.len() {
            continue;
        }
        let (a, b) = (&states[n - 2], &states[n - 1]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus: Vec<f64> = a.iter().zip(b).map(|(x, y)| s * (x + y)).collect();
        let minus: Vec<f64> = a.iter().zip(b).map(|(x, y)| s * (x - y)).collect();
        let (wp, lp) = dominant(&well_masses(&plus, grid, wells)?);
        let (wm, lm) = dominant(&well_masses(&minus, grid, wells)?);
        let parity = |k: usize| metrics.iter().find(|m| m.n == k).and_then(|m| m.parity_overlap);
        let mirrored = match (wp, wm) {
            (Some(i), Some(j)) => i != j && wells.mirror_of(i) == Some(j) && Some(i) != central,
            _ => false,
        };
        let localization = lp.min(lm);
        let (left_well, right_well) = match (wp, wm) {
            (Some(i), Some(j)) if wells.minima[i].0 <= wells.minima[j].0 => (Some(i), Some(j)),
            (Some(i), Some(j)) => (Some(j), Some(i)),
            _ => (None, None),
        };
        out.push(Doublet {
            n_lo: n - 1,
            n_hi: n,
            splitting,
            left_well,
            right_well,
            parities: (parity(n - 1), parity(n)),
            localization,
            is_doublet: mirrored && localization > threshold,
        });
    }
    Ok(out)
}
