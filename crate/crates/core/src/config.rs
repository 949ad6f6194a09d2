//! Run configuration in TOML.
//!
//! ```toml
//! [potential]
//! family = "opp_cos"
//! alpha = 0.3
//! beta = 0.05
//! k = 1
//!
//! [grid]
//! kind = "auto"
//! pad = 1.3
//! points_per_wavelength = 20
//!
//! [solve]
//! states = 250
//!
//! [analysis]
//! fit_range = [10, 250]
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every section except `[potential]` may be omitted. An optional `[sweep]`
//! section turns the run into a parameter sweep.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisSettings;
use crate::eigensolver::SolverOptions;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pipeline::{GridPolicy, Target};
use crate::potentials::{Family, PotentialSpec};
use crate::sweep::{SweepParameter, SweepPlan};

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub family: Family,
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "one")]
    pub gamma: f64,
}

impl PotentialConfig {
    pub fn spec(&self) -> Result<PotentialSpec> {
        PotentialSpec::new(self.family, self.alpha, self.beta, self.k, self.phi, self.gamma)
    }
}

impl From<PotentialSpec> for PotentialConfig {
    fn from(s: PotentialSpec) -> Self {
        PotentialConfig { family: s.family, alpha: s.alpha, beta: s.beta, k: s.k, phi: s.phi, gamma: s.gamma }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Number of lowest states. Exclusive with `below`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
    /// Every state below this energy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub below: Option<f64>,
    pub rtol: f64,
    pub eigenvectors: bool,
    pub execution: Execution,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            states: None,
            below: None,
            rtol: SolverOptions::default().rtol,
            eigenvectors: true,
            execution: Execution::Parallel,
        }
    }
}

pub const DEFAULT_STATES: usize = 250;

impl SolveConfig {
    pub fn target(&self) -> Result<Target> {
        match (self.states, self.below) {
            (Some(_), Some(_)) => Err(value_error("solve.states", "give either `states` or `below`, not both")),
            (Some(0), None) => Err(value_error("solve.states", "must be at least 1")),
            (Some(m), None) => Ok(Target::Lowest(m)),
            (None, Some(e)) if e.is_finite() => Ok(Target::Below(e)),
            (None, Some(_)) => Err(value_error("solve.below", "must be finite")),
            (None, None) => Ok(Target::Lowest(DEFAULT_STATES)),
        }
    }

    pub fn options(&self) -> Result<SolverOptions> {
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(value_error("solve.rtol", "must lie in (0, 1)"));
        }
        Ok(SolverOptions { rtol: self.rtol, execution: self.execution })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write `wavefunctions.csv`.
    pub wavefunctions: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), wavefunctions: false }
    }
}

/// `values` lists the sweep points. Otherwise `points` samples `range`
/// inclusively; for `phi` without a range the points cover one period
/// `2 pi j / points`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

pub const DEFAULT_PHASE_POINTS: usize = 128;

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        match (&self.values, self.points, self.range) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                Err(value_error("sweep.values", "give either `values` or `points`/`range`"))
            }
            (Some(v), None, None) => Ok(v.clone()),
            (None, points, Some([a, b])) => {
                let n = points.unwrap_or(DEFAULT_PHASE_POINTS);
                if n < 2 {
                    return Err(value_error("sweep.points", "a range needs at least 2 points"));
                }
                Ok((0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect())
            }
            (None, points, None) if self.parameter == SweepParameter::Phi => {
                let n = points.unwrap_or(DEFAULT_PHASE_POINTS);
                if n == 0 {
                    return Err(value_error("sweep.points", "must be at least 1"));
                }
                let tau = 2.0 * std::f64::consts::PI;
                Ok((0..n).map(|j| tau * j as f64 / n as f64).collect())
            }
            (None, _, None) => Err(value_error("sweep.range", "required unless `values` is given")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    #[serde(default)]
    pub grid: GridPolicy,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn new(spec: PotentialSpec) -> Self {
        RunConfig {
            potential: spec.into(),
            grid: GridPolicy::default(),
            solve: SolveConfig::default(),
            analysis: AnalysisSettings::default(),
            output: OutputConfig::default(),
            sweep: None,
        }
    }

    /// Checks everything serde cannot: parameter rules, exclusive keys,
    /// threshold ranges.
    pub fn validate(&self) -> Result<()> {
        self.potential.spec().map_err(|e| in_section("potential", e))?;
        self.solve.target()?;
        self.solve.options()?;
        validate_grid(&self.grid)?;
        let a = &self.analysis;
        if a.degeneracy_window < 5 || a.degeneracy_window.is_multiple_of(2) {
            return Err(value_error("analysis.degeneracy_window", "must be odd and at least 5"));
        }
        for (key, f) in [
            ("analysis.degeneracy_factor", a.degeneracy_factor),
            ("analysis.doublet_factor", a.doublet_factor),
            ("analysis.series_factor", a.series_factor),
            ("analysis.localization_threshold", a.localization_threshold),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(value_error(key, "must lie in (0, 1)"));
            }
        }
        if a.fit_range[0] < 1 || a.fit_range[1] < a.fit_range[0] + 10 {
            return Err(value_error("analysis.fit_range", "needs 1 <= lo and hi >= lo + 10"));
        }
        if self.sweep.is_some() {
            self.sweep_plan()?;
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<PotentialSpec> {
        self.potential.spec().map_err(|e| in_section("potential", e))
    }

    /// The sweep described by `[sweep]`, if any.
    pub fn sweep_plan(&self) -> Result<Option<SweepPlan>> {
        let Some(sw) = &self.sweep else { return Ok(None) };
        let states = match self.solve.target()? {
            Target::Lowest(m) => m,
            Target::Below(_) => return Err(value_error("solve.below", "sweeps need a fixed `states` count")),
        };
        let plan = SweepPlan::new(self.spec()?, sw.parameter, sw.values()?, states, self.grid)
            .map_err(|e| in_section("sweep", e))?;
        Ok(Some(plan))
    }
}

fn validate_grid(g: &GridPolicy) -> Result<()> {
    match *g {
        GridPolicy::Explicit { q_min, q_max, n_points } => {
            if !(q_min.is_finite() && q_max.is_finite() && q_min < q_max) {
                return Err(value_error("grid.q_min", "need finite q_min < q_max"));
            }
            if n_points < 3 {
                return Err(value_error("grid.n_points", "must be at least 3"));
            }
        }
        GridPolicy::Auto { pad, points_per_wavelength } => {
            if !(pad >= 1.0 && pad.is_finite()) {
                return Err(value_error("grid.pad", "must be at least 1"));
            }
            if !(points_per_wavelength > 0.0 && points_per_wavelength.is_finite()) {
                return Err(value_error("grid.points_per_wavelength", "must be positive"));
            }
        }
        GridPolicy::Walls { q_min, q_max, points_per_wavelength } => {
            if !(q_min.is_finite() && q_max.is_finite() && q_min < q_max) {
                return Err(value_error("grid.q_min", "need finite q_min < q_max"));
            }
            if !(points_per_wavelength > 0.0 && points_per_wavelength.is_finite()) {
                return Err(value_error("grid.points_per_wavelength", "must be positive"));
            }
        }
    }
    Ok(())
}

fn value_error(key: &str, message: &str) -> Error {
    Error::ConfigValue { key: key.to_string(), message: message.to_string() }
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::ConfigValue { key: format!("{section}.{name}"), message: reason },
        other => other,
    }
}

/// 1-based line and column of byte `offset` in `text`.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::ConfigSyntax { line, column, message: e.message().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a configuration; [`parse_config`] reads it back unchanged.
pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("run configs always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("[potential]\nfamily = \"opp_cos\"\nalpha = 0.3\nbeta = 0.05\nk = 1\n[analysis]\n").unwrap();
        assert_eq!(cfg.spec().unwrap(), PotentialSpec::opp_cos(0.3, 0.05, 1.0).unwrap());
        assert_eq!(cfg.analysis, AnalysisSettings::default());
        assert_eq!(cfg.grid, GridPolicy::default());
        assert_eq!(cfg.solve.target().unwrap(), Target::Lowest(DEFAULT_STATES));
    }

    #[test]
    fn negative_alpha_names_the_key() {
        let err = parse_config("[potential]\nfamily = \"sso\"\nalpha = -1\n").unwrap_err();
        match err {
            Error::ConfigValue { key, message } => {
                assert_eq!(key, "potential.alpha");
                assert!(message.contains("alpha must be positive"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = parse_config("[potential]\nfamily = \"sso\"\nalpha = 1\n\n[solve]\nstate = 3\n").unwrap_err();
        match err {
            Error::ConfigSyntax { line, column, message } => {
                assert_eq!((line, column), (6, 1));
                assert!(message.contains("state"), "{message}");
            }
            e => panic!("{e}"),
        }
        let err = parse_config("[potential]\nfamily = \"sso\"\nalpha = 1 +\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 3, .. }), "{err}");
    }

    #[test]
    fn exclusive_targets() {
        let err = parse_config("[potential]\nfamily = \"sso\"\nalpha = 1\n[solve]\nstates = 3\nbelow = 2.0\n");
        assert!(matches!(err, Err(Error::ConfigValue { .. })));
    }

    #[test]
    fn phase_sweep_defaults_to_a_period() {
        let cfg = parse_config(
            "[potential]\nfamily = \"opp_phase\"\nalpha = 0.3\nbeta = 0.05\nk = 1\n[solve]\nstates = 21\n[sweep]\nparameter = \"phi\"\n",
        )
        .unwrap();
        let plan = cfg.sweep_plan().unwrap().unwrap();
        assert_eq!(plan.values.len(), DEFAULT_PHASE_POINTS);
        assert_eq!(plan.values[DEFAULT_PHASE_POINTS / 4], std::f64::consts::FRAC_PI_2);
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            0.05f64..5.0,
            0.0f64..0.04,
            0.1f64..4.0,
            0.01f64..2.0,
            prop_oneof![
                (1usize..500).prop_map(|m| (Some(m), None)),
                (0.1f64..1e3).prop_map(|e| (None, Some(e))),
            ],
            prop_oneof![
                (1.0f64..2.0, 5.0f64..40.0)
                    .prop_map(|(pad, points_per_wavelength)| GridPolicy::Auto { pad, points_per_wavelength }),
                (-50.0f64..-1.0, 1.0f64..50.0, 3usize..5000)
                    .prop_map(|(q_min, q_max, n_points)| GridPolicy::Explicit { q_min, q_max, n_points }),
            ],
            1e-3f64..0.5,
            any::<bool>(),
        )
            .prop_map(|(alpha, beta, k, gamma, (states, below), grid, factor, wavefunctions)| {
                let mut cfg = RunConfig::new(PotentialSpec::opp_cos(alpha, beta * alpha, k).unwrap().with_gamma(gamma).unwrap());
                cfg.grid = grid;
                cfg.solve.states = states;
                cfg.solve.below = below;
                cfg.analysis.degeneracy_factor = factor;
                cfg.output.wavefunctions = wavefunctions;
                cfg
            })
    }

    proptest! {
        #[test]
        fn config_round_trips(cfg in arb_config()) {
            let text = emit_config(&cfg);
            let back = parse_config(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(emit_config(&back), text);
        }
    }
}
