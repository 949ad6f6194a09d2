use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use superexp_core::config::{parse_config, RunConfig, SweepConfig};
use superexp_core::discretization::auto_domain;
use superexp_core::exec::{with_workers, workers_from_env, Execution};
use superexp_core::figures::{reproduce, FIGURES};
use superexp_core::oracles::{compare_analytic, AnalyticCase};
use superexp_core::output::{write_config, write_convergence};
use superexp_core::pipeline::{wkb_energy, GridPolicy, Target};
use superexp_core::runner::run_config;
use superexp_core::sweep::{convergence_study, SweepParameter};
use superexp_core::{Error, Grid};

/// Overrides the output directory of every subcommand.
const OUT_DIR_ENV: &str = "SUPEREXP_OUT_DIR";

#[derive(Parser)]
#[command(name = "superexp", version, about = "Spectra of confining superexponential potentials")]
struct Cli {
    /// Worker threads (default: SUPEREXP_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and analyze one potential.
    Solve {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter on a shared grid.
    Sweep {
        config: PathBuf,
        /// Parameter to sweep, replacing any [sweep] section.
        #[arg(long)]
        parameter: Option<SweepParameter>,
        /// Number of sweep points.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-convergence study at fixed walls.
    Converge {
        config: PathBuf,
        /// Comma-separated, strictly decreasing spacings.
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the solver with closed-form spectra.
    Oracle {
        #[arg(long, default_value_t = 100)]
        states: usize,
        #[arg(long, default_value_t = 30)]
        box_states: usize,
    },
    /// Regenerate the data behind a figure.
    Reproduce {
        /// fig1 ... fig12, or `all`.
        figure: String,
        #[arg(long, default_value = "reproduce")]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConfigSyntax { .. } | Error::ConfigValue { .. } | Error::InvalidParameter { .. } | Error::UnknownFigure(_) => 1,
        Error::Io { .. } | Error::Csv { .. } => 3,
        _ => 2,
    }
}

fn load(path: &Path) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

/// Precedence: environment, then the command line, then the config.
fn out_dir(flag: Option<PathBuf>, fallback: PathBuf) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).or(flag).unwrap_or(fallback)
}

fn run(cli: Cli) -> Result<(), Error> {
    let execution = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Solve { config, out } => {
            let mut cfg = load(&config)?;
            cfg.solve.execution = execution;
            let dir = out_dir(out, cfg.output.dir.clone());
            let outcome = run_config(&cfg, &dir)?;
            if let Some(r) = &outcome.report {
                if let Some(fit) = &r.fit {
                    println!("power law: E_n ~ {:.6} n^{:.6} over [{}, {}]", fit.prefactor, fit.exponent, fit.n_lo, fit.n_hi);
                }
                println!("near-degenerate spacings: {}", r.near_degenerate.len());
                println!("doublets: {}", r.confirmed_doublets().count());
                for s in &r.series {
                    println!("series onset n = {} ({} members)", s.onset, s.members.len());
                }
            }
            println!("wrote {} files to {}", outcome.files.len(), dir.display());
        }
        Command::Sweep { config, parameter, points, out } => {
            let mut cfg = load(&config)?;
            cfg.solve.execution = execution;
            if let Some(p) = parameter {
                cfg.sweep = Some(SweepConfig { parameter: p, values: None, points, range: None });
            } else if let Some(sw) = cfg.sweep.as_mut() {
                if points.is_some() {
                    sw.points = points;
                    sw.values = None;
                }
            }
            if cfg.sweep.is_none() {
                return Err(Error::ConfigValue { key: "sweep".into(), message: "no [sweep] section or --parameter".into() });
            }
            let dir = out_dir(out, cfg.output.dir.clone());
            let outcome = run_config(&cfg, &dir)?;
            let sweep = outcome.sweep.expect("sweep run");
            println!("{} points, {} failed; wrote {}", sweep.points.len(), sweep.failures(), dir.display());
        }
        Command::Converge { config, h, out } => {
            let mut cfg = load(&config)?;
            cfg.solve.execution = execution;
            let spec = cfg.spec()?;
            let states = match cfg.solve.target()? {
                Target::Lowest(m) => m,
                Target::Below(_) => {
                    return Err(Error::ConfigValue { key: "solve.below".into(), message: "converge needs `states`".into() })
                }
            };
            let walls = match cfg.grid {
                GridPolicy::Explicit { q_min, q_max, .. } | GridPolicy::Walls { q_min, q_max, .. } => (q_min, q_max),
                GridPolicy::Auto { pad, .. } => {
                    let e = wkb_energy(&spec, states)?;
                    auto_domain(&spec, 1.05 * e, pad)?
                }
            };
            let table = convergence_study(&spec, states, walls, &h, &cfg.solve.options()?)?;
            let dir = out_dir(out, cfg.output.dir.clone());
            write_convergence(&dir, &table)?;
            write_config(&dir, &cfg)?;
            for (h, p) in table.spacings.iter().skip(1).zip(&table.step_orders) {
                println!("order at h = {h}: {p:.3}");
            }
            match table.order {
                Some(p) => println!("fitted order: {p:.3}"),
                None => println!("fitted order: needs three spacings"),
            }
        }
        Command::Oracle { states, box_states } => {
            let opts = superexp_core::eigensolver::SolverOptions { execution, ..Default::default() };
            let grid = Grid::new(-20.0, 20.0, 4001)?;
            let rows = compare_analytic(AnalyticCase::Harmonic, &grid, states, &opts)?;
            let worst = rows.iter().map(|(c, x)| (c - x).abs()).fold(0.0, f64::max);
            println!("harmonic, [-20, 20], h = 0.01, {states} states: max |E - (n - 1/2)| = {worst:e}");
            let case = AnalyticCase::Box { length: 1.0 };
            let grid = AnalyticCase::box_grid(1.0, 4000)?;
            let rows = compare_analytic(case, &grid, box_states, &opts)?;
            let worst = rows.iter().map(|(c, x)| ((c - x) / x).abs()).fold(0.0, f64::max);
            println!("box, L = 1, 4000 nodes, {box_states} states: max relative error = {worst:e}");
        }
        Command::Reproduce { figure, out } => {
            let out = out_dir(None, out);
            let ids: Vec<&str> = if figure == "all" { FIGURES.to_vec() } else { vec![figure.as_str()] };
            for id in ids {
                let runs = reproduce(id, &out.join(id.to_ascii_lowercase()))?;
                for (name, o) in runs {
                    println!("{id}/{name}: {} files", o.files.len());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let workers = cli.workers.or_else(workers_from_env);
    match with_workers(workers, || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
