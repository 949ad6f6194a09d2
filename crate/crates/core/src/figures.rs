//! Canned configurations for the published figures. Parameter sets are
//! fixed; grids follow the default policy unless a figure needs walls.

use std::path::Path;

use crate::config::{RunConfig, SweepConfig, DEFAULT_PHASE_POINTS};
use crate::discretization::auto_domain;
use crate::error::{Error, Result};
use crate::pipeline::{GridPolicy, DEFAULT_PAD, DEFAULT_POINTS_PER_WAVELENGTH};
use crate::potentials::PotentialSpec;
use crate::runner::{run_config, RunOutcome};
use crate::sweep::SweepParameter;

pub const FIGURES: [&str; 12] =
    ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12"];

/// Scaled-spacing runs: energies only.
fn energies_only(spec: PotentialSpec, states: usize) -> RunConfig {
    let mut cfg = RunConfig::new(spec);
    cfg.solve.states = Some(states);
    cfg.solve.eigenvectors = false;
    cfg.analysis.state_metrics = false;
    cfg
}

fn with_states(spec: PotentialSpec, states: usize, wavefunctions: bool) -> RunConfig {
    let mut cfg = RunConfig::new(spec);
    cfg.solve.states = Some(states);
    cfg.output.wavefunctions = wavefunctions;
    cfg
}

/// Shifted SSO below its transition energy. It is not confining to the
/// left, so the left wall sits on the barrier top at `q = -2/e`.
fn shifted_below_transition(alpha: f64) -> Result<RunConfig> {
    let spec = PotentialSpec::shifted_sso(alpha)?;
    let e_tr = spec.transition_energy()?;
    let (_, right) = auto_domain(&spec, e_tr, DEFAULT_PAD)?;
    let mut cfg = energies_only(spec, 0);
    cfg.solve.states = None;
    cfg.solve.below = Some(e_tr);
    cfg.grid = GridPolicy::Walls {
        q_min: -2.0 / std::f64::consts::E,
        q_max: right,
        points_per_wavelength: DEFAULT_POINTS_PER_WAVELENGTH,
    };
    Ok(cfg)
}

fn label(alpha: f64) -> String {
    format!("alpha_{alpha}")
}

pub fn cos_sublinear() -> Result<PotentialSpec> {
    PotentialSpec::opp_cos(0.3, 0.05, 1.0)
}

pub fn sin_sublinear() -> Result<PotentialSpec> {
    PotentialSpec::opp_sin(0.3, 0.05, 1.0)
}

pub fn cos_linear() -> Result<PotentialSpec> {
    PotentialSpec::opp_cos(1.0, 0.05, 1.0)
}

pub fn cos_quadratic() -> Result<PotentialSpec> {
    PotentialSpec::opp_cos(2.0, 0.1, 3.0)?.with_gamma(0.05)
}

pub fn cos_quartic() -> Result<PotentialSpec> {
    PotentialSpec::opp_cos(4.0, 1.0, 2.0)?.with_gamma(0.1)
}

/// Named runs making up figure `id` (`fig6` or `6`).
pub fn figure_configs(id: &str) -> Result<Vec<(String, RunConfig)>> {
    let key = id.trim().to_ascii_lowercase();
    let key = key.strip_prefix("fig").unwrap_or(&key);
    let runs = match key {
        "1" => [1e3, 4e3, 1e4, 1e5]
            .into_iter()
            .map(|a| Ok((label(a), shifted_below_transition(a)?)))
            .collect::<Result<Vec<_>>>()?,
        "2" => [1.0, 10.0, 1e3, 1e4, 1e6]
            .into_iter()
            .map(|a| Ok((label(a), energies_only(PotentialSpec::right_sym_sso(a)?, 60))))
            .collect::<Result<Vec<_>>>()?,
        "3" => [1.0, 10.0, 1e2, 1e4]
            .into_iter()
            .map(|a| Ok((label(a), energies_only(PotentialSpec::power_law_sso(a, 0.5)?, 60))))
            .collect::<Result<Vec<_>>>()?,
        "4" => [1.0, 10.0, 1e2, 1e3, 1e4]
            .into_iter()
            .map(|a| Ok((label(a), energies_only(PotentialSpec::power_law_sso(a, 0.25)?, 60))))
            .collect::<Result<Vec<_>>>()?,
        "5" => vec![
            ("cos_alpha_0.3".into(), with_states(cos_sublinear()?, 250, false)),
            ("cos_alpha_1".into(), with_states(cos_linear()?, 250, false)),
            ("quadratic".into(), with_states(cos_quadratic()?, 250, false)),
            ("quartic".into(), with_states(cos_quartic()?, 250, false)),
        ],
        "6" => vec![("cos_alpha_0.3".into(), with_states(cos_sublinear()?, 21, true))],
        "7" => vec![("sin_alpha_0.3".into(), with_states(sin_sublinear()?, 250, false))],
        "8" => vec![("sin_alpha_0.3".into(), with_states(sin_sublinear()?, 17, true))],
        "9" => {
            let mut cfg = energies_only(PotentialSpec::opp_phase(0.3, 0.05, 1.0, 0.0)?, 21);
            cfg.sweep = Some(SweepConfig {
                parameter: SweepParameter::Phi,
                values: None,
                points: Some(DEFAULT_PHASE_POINTS),
                range: None,
            });
            vec![("phase".into(), cfg)]
        }
        "10" => vec![
            ("cos_alpha_1".into(), with_states(cos_linear()?, 250, false)),
            (
                "long_wavelength".into(),
                with_states(PotentialSpec::opp_cos(1.0, 0.09, 0.2)?.with_gamma(0.002)?, 17, true),
            ),
        ],
        "11" => vec![("quadratic".into(), with_states(cos_quadratic()?, 250, false))],
        "12" => vec![("quartic".into(), with_states(cos_quartic()?, 60, true))],
        _ => return Err(Error::UnknownFigure(id.to_string())),
    };
    Ok(runs)
}

/// Runs every configuration of figure `id`, each into `dir/<run name>`.
pub fn reproduce(id: &str, dir: &Path) -> Result<Vec<(String, RunOutcome)>> {
    figure_configs(id)?
        .into_iter()
        .map(|(name, mut cfg)| {
            let sub = dir.join(&name);
            // recorded relative so the saved config does not depend on where it ran
            cfg.output.dir = Path::new(id).join(&name);
            log::info!("{id}/{name}");
            Ok((name, run_config(&cfg, &sub)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_has_valid_configs() {
        for id in FIGURES {
            let runs = figure_configs(id).unwrap();
            assert!(!runs.is_empty(), "{id}");
            for (_, cfg) in &runs {
                cfg.validate().unwrap();
            }
        }
        assert_eq!(figure_configs("6").unwrap(), figure_configs("FIG6").unwrap());
        assert!(matches!(figure_configs("fig13"), Err(Error::UnknownFigure(_))));
    }
}
