//! CSV output. Floats are written as the shortest decimal that parses back
//! to the same value, missing floats as `nan` and missing integers as an
//! empty field. Every file has a header row and LF line endings.

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::AnalysisReport;
use crate::config::{emit_config, RunConfig};
use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};
use crate::sweep::{ConvergenceTable, SweepResult};

/// Shortest round-trip form; `nan`, `inf` and `-inf` for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), format_float)
}

fn opt_int(x: Option<usize>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self> {
        let path = dir.join(name);
        let file = fs::File::create(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
        let writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
        let mut t = Table { path, writer };
        t.row(header)?;
        Ok(t)
    }

    fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<()> {
        self.writer.write_record(fields).map_err(|source| Error::Csv { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|source| Error::Io { path: self.path.clone(), source })?;
        Ok(self.path)
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn wide_header(first: &str, m: usize, prefix: &str) -> Vec<String> {
    std::iter::once(first.to_string()).chain((1..=m).map(|n| format!("{prefix}{n}"))).collect()
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

/// Writes the CSV files for one solved and analyzed spectrum. Files whose
/// analysis did not run are skipped. Returns the paths written.
pub fn emit_outputs(dir: &Path, spectrum: &Spectrum, report: &AnalysisReport, wavefunctions: bool) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();

    let mut t = Table::create(dir, "eigenvalues.csv", &header(&["n", "E"]))?;
    for (i, e) in spectrum.energies.iter().enumerate() {
        t.row(&[(i + 1).to_string(), format_float(*e)])?;
    }
    written.push(t.finish()?);

    if let Some(sa) = &report.spacing {
        let flagged: Vec<usize> = report.near_degenerate.iter().map(|&(n, _)| n).collect();
        let mut t = Table::create(dir, "spacings.csv", &header(&["n", "dE", "dR", "degenerate_flag"]))?;
        for (i, n) in sa.labels().enumerate() {
            let flag = sa.degenerate[i] || flagged.contains(&n);
            t.row(&[n.to_string(), format_float(sa.spacings[i]), opt_float(sa.scaled_spacing(n)), u8::from(flag).to_string()])?;
        }
        written.push(t.finish()?);
    }

    if let Some(counts) = &report.turning {
        let mut t = Table::create(dir, "turning.csv", &header(&["i", "N"]))?;
        for (i, c) in counts.iter().enumerate() {
            t.row(&[(i + 1).to_string(), c.to_string()])?;
        }
        written.push(t.finish()?);
    }

    if let Some(fit) = &report.fit {
        let mut t = Table::create(dir, "fit.csv", &header(&["p", "c", "n_lo", "n_hi", "residual"]))?;
        t.row(&[
            format_float(fit.exponent),
            format_float(fit.prefactor),
            fit.n_lo.to_string(),
            fit.n_hi.to_string(),
            format_float(fit.rms_residual),
        ])?;
        written.push(t.finish()?);
    }

    if !report.metrics.is_empty() {
        let cols = ["n", "parity_overlap", "asymmetry", "dominant_well", "localization"];
        let mut t = Table::create(dir, "states.csv", &header(&cols))?;
        for m in &report.metrics {
            t.row(&[
                m.n.to_string(),
                opt_float(m.parity_overlap),
                format_float(m.asymmetry),
                opt_int(m.dominant_well),
                format_float(m.localization),
            ])?;
        }
        written.push(t.finish()?);

        let cols = ["n_lo", "n_hi", "splitting", "left_well", "right_well"];
        let mut t = Table::create(dir, "doublets.csv", &header(&cols))?;
        for d in report.confirmed_doublets() {
            t.row(&[
                d.n_lo.to_string(),
                d.n_hi.to_string(),
                format_float(d.splitting),
                opt_int(d.left_well),
                opt_int(d.right_well),
            ])?;
        }
        written.push(t.finish()?);
    }

    if report.spacing.is_some() {
        let mut t = Table::create(dir, "series.csv", &header(&["series", "onset", "n", "dE"]))?;
        for (k, s) in report.series.iter().enumerate() {
            for &(n, de) in &s.members {
                t.row(&[(k + 1).to_string(), s.onset.to_string(), n.to_string(), format_float(de)])?;
            }
        }
        written.push(t.finish()?);
    }

    if wavefunctions {
        if let (Some(grid), Some(states)) = (&spectrum.grid, &spectrum.states) {
            let mut t = Table::create(dir, "wavefunctions.csv", &wide_header("q", states.len(), "psi_"))?;
            for i in 0..grid.len() {
                let row: Vec<String> = std::iter::once(format_float(grid.point(i)))
                    .chain(states.iter().map(|s| format_float(s[i])))
                    .collect();
                t.row(&row)?;
            }
            written.push(t.finish()?);
        } else {
            log::warn!("wavefunctions requested but the spectrum carries no eigenstates");
        }
    }
    Ok(written)
}

/// `sweep.csv`: the parameter, then `E_1..E_M`; failed points are `nan`.
pub fn write_sweep(dir: &Path, sweep: &SweepResult) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let m = sweep.points.iter().filter_map(|p| p.energies.as_ref().map(Vec::len)).max().unwrap_or(0);
    let mut t = Table::create(dir, "sweep.csv", &wide_header(sweep.parameter.name(), m, "E_"))?;
    for p in &sweep.points {
        let row: Vec<String> = std::iter::once(format_float(p.value))
            .chain((0..m).map(|n| opt_float(p.energies.as_ref().and_then(|e| e.get(n).copied()))))
            .collect();
        t.row(&row)?;
    }
    t.finish()
}

/// `convergence.csv` (`h`, then `E_1..E_M`) and `richardson.csv` (`n`,
/// estimated error of the finest grid).
pub fn write_convergence(dir: &Path, table: &ConvergenceTable) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let m = table.energies.first().map_or(0, Vec::len);
    let mut t = Table::create(dir, "convergence.csv", &wide_header("h", m, "E_"))?;
    for (h, es) in table.spacings.iter().zip(&table.energies) {
        let row: Vec<String> = std::iter::once(format_float(*h)).chain(es.iter().map(|e| format_float(*e))).collect();
        t.row(&row)?;
    }
    let mut written = vec![t.finish()?];
    let mut t = Table::create(dir, "richardson.csv", &header(&["n", "error"]))?;
    for (i, e) in table.richardson.iter().enumerate() {
        t.row(&[(i + 1).to_string(), format_float(*e)])?;
    }
    written.push(t.finish()?);
    Ok(written)
}

/// Saves the configuration that produced a directory's results.
pub fn write_config(dir: &Path, cfg: &RunConfig) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("config.toml");
    fs::write(&path, emit_config(cfg)).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze_spectrum, AnalysisSettings};
    use crate::eigensolver::Spectrum;
    use crate::exec::Execution;
    use proptest::prelude::*;

    #[test]
    fn float_format() {
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(2.0), "2.0");
        assert_eq!(format_float(1e-300), "1e-300");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    proptest! {
        #[test]
        fn floats_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            prop_assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    fn spectrum(energies: Vec<f64>) -> Spectrum {
        let m = energies.len();
        Spectrum { energies, states: None, grid: None, residual_norms: vec![0.0; m], matrix_norm: 1.0 }
    }

    #[test]
    fn harmonic_eigenvalue_rows() {
        let dir = tempfile::tempdir().unwrap();
        let harmonic = |q: f64| 0.5 * q * q;
        let mut s = spectrum(vec![0.5, 1.5, 2.5]);
        let r = analyze_spectrum(&mut s, &harmonic, &AnalysisSettings::default(), Execution::Sequential).unwrap();
        emit_outputs(dir.path(), &s, &r, false).unwrap();
        let text = fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
        assert_eq!(text, "n,E\n1,0.5\n2,1.5\n3,2.5\n");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn below_floor_spacing_is_nan_and_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let flat = |_: f64| 0.0;
        let mut s = spectrum(vec![1.0, 2.0, 2.0, 3.0, 4.0]);
        let r = analyze_spectrum(&mut s, &flat, &AnalysisSettings::default(), Execution::Sequential).unwrap();
        emit_outputs(dir.path(), &s, &r, false).unwrap();
        let text = fs::read_to_string(dir.path().join("spacings.csv")).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "n,dE,dR,degenerate_flag");
        assert_eq!(rows[2], "3,0.0,nan,1");
        assert_eq!(rows[1], "2,1.0,0.0,0");
    }
}
