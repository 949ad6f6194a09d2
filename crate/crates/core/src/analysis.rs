//! Full analysis of one computed spectrum: spacings, turning points, power
//! law, near-degeneracy catalog, state metrics, doublets and doublet series.

use serde::{Deserialize, Serialize};

use crate::eigensolver::Spectrum;
use crate::error::Result;
use crate::exec::Execution;
use crate::potentials::{locate_wells, Potential, WellGeometry};
use crate::spectral::{self, DegeneracySeries, PowerLawFit, SpacingAnalysis};
use crate::states::{self, Doublet, StateMetrics};

/// Knobs of [`analyze_spectrum`]. Defaults enable everything.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    pub spacings: bool,
    pub turning_points: bool,
    pub fit: bool,
    /// Inclusive label range; clipped to the spectrum.
    pub fit_range: [usize; 2],
    pub degeneracy_window: usize,
    /// Catalog threshold: `dE_n < factor * local median`.
    pub degeneracy_factor: f64,
    /// Looser threshold for doublet candidates; the eigenstate signature
    /// does the actual classification.
    pub doublet_factor: f64,
    /// A doublet joins a series once its splitting is a decade below the
    /// local median.
    pub series_factor: f64,
    pub state_metrics: bool,
    pub localization_threshold: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            spacings: true,
            turning_points: true,
            fit: true,
            fit_range: [10, 250],
            degeneracy_window: spectral::DEFAULT_WINDOW,
            degeneracy_factor: spectral::DEFAULT_FACTOR,
            doublet_factor: DOUBLET_FACTOR,
            series_factor: SERIES_FACTOR,
            state_metrics: true,
            localization_threshold: states::LOCALIZED_MASS,
        }
    }
}

pub const DOUBLET_FACTOR: f64 = 0.2;
pub const SERIES_FACTOR: f64 = 0.1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalysisReport {
    /// Present when spacings are enabled.
    pub spacing: Option<SpacingAnalysis>,
    /// `N(i)`, present when turning points are enabled.
    pub turning: Option<Vec<usize>>,
    pub fit: Option<PowerLawFit>,
    pub near_degenerate: Vec<(usize, f64)>,
    pub wells: Option<WellGeometry>,
    pub metrics: Vec<StateMetrics>,
    /// Every doublet candidate, with `is_doublet` set by the signature test.
    pub doublets: Vec<Doublet>,
    pub series: Vec<DegeneracySeries>,
}

impl AnalysisReport {
    pub fn confirmed_doublets(&self) -> impl Iterator<Item = &Doublet> {
        self.doublets.iter().filter(|d| d.is_doublet)
    }
}

/// Keeps one entry per run of adjacent labels: the smallest splitting.
fn merge_adjacent(events: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(events.len());
    let mut prev_label = None;
    for &(n, s) in events {
        match out.last_mut() {
            Some(last) if prev_label.map(|p: usize| p + 1) == Some(n) => {
                if s < last.1 {
                    *last = (n, s);
                }
            }
            _ => out.push((n, s)),
        }
        prev_label = Some(n);
    }
    out
}

/// Runs every enabled analysis on `spectrum`. State-based analyses need
/// eigenvectors and a grid; they are skipped otherwise.
pub fn analyze_spectrum<P: Potential + ?Sized>(
    spectrum: &mut Spectrum,
    pot: &P,
    settings: &AnalysisSettings,
    exec: Execution,
) -> Result<AnalysisReport> {
    let mut report = AnalysisReport::default();
    let m = spectrum.len();
    if m < 3 {
        return Ok(report);
    }
    let sa = if settings.turning_points {
        spectral::analyze(&spectrum.energies)?
    } else {
        spectral::spacings(&spectrum.energies)?
    };

    if settings.fit {
        let [lo, hi] = settings.fit_range;
        let hi = hi.min(m);
        if hi >= lo + 10 {
            report.fit = Some(spectral::fit_power_law(&spectrum.energies, lo.max(1), hi)?);
        }
    }

    let window = settings.degeneracy_window;
    report.near_degenerate = spectral::near_degeneracies(&sa, window, settings.degeneracy_factor)?;
    let series_flags = spectral::near_degeneracies(&sa, window, settings.series_factor)?;

    let with_states = settings.state_metrics && spectrum.states.is_some() && spectrum.grid.is_some();
    let series_events = if with_states {
        let grid = spectrum.grid.expect("checked above");
        if grid.is_symmetric() && pot.is_even() {
            states::adapt_parity(spectrum)?;
        }
        let wells = locate_wells(pot, (grid.q_min(), grid.q_max()), grid.len())?;
        report.metrics = states::state_metrics(spectrum, &wells, exec)?;
        let candidates = spectral::near_degeneracies(&sa, window, settings.doublet_factor)?;
        report.doublets =
            states::find_doublets(spectrum, &report.metrics, &wells, &candidates, settings.localization_threshold)?;
        report.wells = Some(wells);
        let confirmed: Vec<usize> = report.confirmed_doublets().map(|d| d.n_hi).collect();
        series_flags.iter().copied().filter(|(n, _)| confirmed.contains(n)).collect::<Vec<_>>()
    } else {
        series_flags
    };
    report.series = spectral::degeneracy_series(&merge_adjacent(&series_events), sa.floor);

    if settings.turning_points {
        report.turning = Some(sa.tp_counts.clone());
    }
    if settings.spacings {
        report.spacing = Some(sa);
    }
    Ok(report)
}
