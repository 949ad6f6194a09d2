//! Executes a [`RunConfig`] end to end and writes its outputs.

use std::path::{Path, PathBuf};

use crate::analysis::{analyze_spectrum, AnalysisReport};
use crate::config::RunConfig;
use crate::eigensolver::Spectrum;
use crate::error::Result;
use crate::output::{emit_outputs, write_config, write_sweep};
use crate::pipeline::solve_potential;
use crate::sweep::{run_sweep, SweepResult};

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub spectrum: Option<Spectrum>,
    pub report: Option<AnalysisReport>,
    pub sweep: Option<SweepResult>,
    pub files: Vec<PathBuf>,
}

/// Solves (or sweeps), analyzes and writes everything into `dir`.
pub fn run_config(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let opts = cfg.solve.options()?;
    let mut out = RunOutcome::default();
    if let Some(plan) = cfg.sweep_plan()? {
        let sweep = run_sweep(&plan, &opts)?;
        out.files.push(write_sweep(dir, &sweep)?);
        out.sweep = Some(sweep);
    } else {
        let spec = cfg.spec()?;
        let want_states = cfg.solve.eigenvectors && (cfg.analysis.state_metrics || cfg.output.wavefunctions);
        let mut spectrum = solve_potential(&spec, cfg.solve.target()?, &cfg.grid, want_states, &opts)?;
        log::info!("{}: {} states", spec.family.name(), spectrum.len());
        let report = analyze_spectrum(&mut spectrum, &spec, &cfg.analysis, opts.execution)?;
        out.files = emit_outputs(dir, &spectrum, &report, cfg.output.wavefunctions)?;
        out.spectrum = Some(spectrum);
        out.report = Some(report);
    }
    out.files.push(write_config(dir, cfg)?);
    Ok(out)
}
