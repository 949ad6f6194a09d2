//! Invariants checked on random inputs and on real spectra.

use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use superexp_core::analysis::{analyze_spectrum, AnalysisSettings};
use superexp_core::config::RunConfig;
use superexp_core::discretization::{apply_laplacian, auto_domain};
use superexp_core::eigensolver::{solve_lowest, SolverOptions};
use superexp_core::figures;
use superexp_core::oracles::dense_eigensolve;
use superexp_core::pipeline::{solve_potential, wkb_energy, GridPolicy, Target};
use superexp_core::runner::run_config;
use superexp_core::states::well_masses;
use superexp_core::sweep::{convergence_study, run_sweep, SweepParameter, SweepPlan};
use superexp_core::{assemble_hamiltonian, BandMatrix, Execution, Grid, Potential, PotentialSpec};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn even_spec(which: u8, alpha: f64, beta_frac: f64, k: f64) -> PotentialSpec {
    let beta = beta_frac * alpha;
    match which % 4 {
        0 => PotentialSpec::right_sym_sso(alpha * 100.0).unwrap(),
        1 => PotentialSpec::power_law_sso(alpha * 100.0, 0.25 + beta_frac).unwrap(),
        2 => PotentialSpec::opp_cos(alpha, beta, k).unwrap(),
        _ => PotentialSpec::opp_phase(alpha, beta, k, FRAC_PI_2).unwrap(),
    }
}

fn random_band(n: usize, b: usize, seed: &[f64]) -> BandMatrix {
    let mut m = BandMatrix::zeros(n, b);
    let mut it = seed.iter().cycle();
    for i in 0..n {
        for j in i..(i + b + 1).min(n) {
            let mut v = *it.next().unwrap();
            if i == j {
                v += 4.0 * (i as f64 / n as f64);
            }
            m.set(i, j, v);
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn even_families_are_mirror_symmetric(
        which in 0u8..4, alpha in 0.2f64..4.0, beta_frac in 0.0f64..0.5, k in 0.1f64..3.0, q in 0.0f64..50.0,
    ) {
        let spec = even_spec(which, alpha, beta_frac, k);
        prop_assert!(spec.is_even());
        prop_assert_eq!(spec.value(q).unwrap(), spec.value(-q).unwrap());
    }

    #[test]
    fn phase_family_hits_sine_and_cosine(
        alpha in 0.2f64..4.0, beta_frac in 0.0f64..0.5, k in 0.1f64..3.0, q in -50.0f64..50.0,
    ) {
        let beta = beta_frac * alpha;
        let p0 = PotentialSpec::opp_phase(alpha, beta, k, 0.0).unwrap();
        let s = PotentialSpec::opp_sin(alpha, beta, k).unwrap();
        prop_assert_eq!(p0.value(q).unwrap(), s.value(q).unwrap());
        let p1 = PotentialSpec::opp_phase(alpha, beta, k, FRAC_PI_2).unwrap();
        let c = PotentialSpec::opp_cos(alpha, beta, k).unwrap();
        let (a, b) = (p1.value(q).unwrap(), c.value(q).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn stencil_is_exact_on_low_degree_polynomials(
        coeffs in prop::collection::vec(-1.0f64..1.0, 10), q in -2.0f64..2.0, h in 0.05f64..0.5,
    ) {
        let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let d2 = |x: f64| {
            coeffs.iter().enumerate().skip(2).map(|(j, c)| c * (j * (j - 1)) as f64 * x.powi(j as i32 - 2)).sum::<f64>()
        };
        let scale: f64 = (0..=8).map(|k| p(q + (k as f64 - 4.0) * h).abs()).fold(1.0, f64::max) / (h * h);
        let got = apply_laplacian(p, q, h);
        prop_assert!((got - d2(q)).abs() <= 1e-11 * scale, "{} vs {}", got, d2(q));
    }

    #[test]
    fn band_solver_matches_dense_oracle(
        n in 20usize..90, b in 1usize..6, seed in prop::collection::vec(-1.0f64..1.0, 37), frac in 0.1f64..1.0,
    ) {
        let h = random_band(n, b, &seed);
        let m = ((n as f64 * frac) as usize).max(1);
        let ours = solve_lowest(&h, m, true).unwrap();
        let dense = dense_eigensolve(&h).unwrap();
        let scale = h.norm_inf();
        let states = ours.states.as_ref().unwrap();
        for k in 0..m {
            prop_assert!((ours.energies[k] - dense.energies[k]).abs() <= 1e-10 * scale);
            let hv = h.matvec(&states[k]);
            let r: Vec<f64> = hv.iter().zip(&states[k]).map(|(a, x)| a - ours.energies[k] * x).collect();
            prop_assert!(norm(&r) <= 1e-10 * scale * norm(&states[k]));
            for j in 0..k {
                let o = dot(&states[j], &states[k]) / (norm(&states[j]) * norm(&states[k]));
                prop_assert!(o.abs() <= 1e-8, "states {} {} overlap {}", j, k, o);
            }
        }
    }
}

/// Wider walls at the same spacing give a matrix containing the old one as a
/// principal block, so energies can only go down, and for bound states the
/// change is negligible once the wall is past the turning point.
#[test]
fn growing_the_domain_lowers_energies_monotonically() {
    let pot = |q: f64| 0.5 * q * q;
    let h = 0.0625;
    let mut prev: Option<Vec<f64>> = None;
    for m in [64usize, 80, 96, 128] {
        let half = m as f64 * h;
        let g = Grid::new(-half, half, 2 * m + 1).unwrap();
        let e = solve_lowest(&assemble_hamiltonian(&g, &pot).unwrap(), 20, false).unwrap().energies;
        if let Some(p) = &prev {
            for (a, b) in e.iter().zip(p) {
                assert!(*a <= b + 1e-12 * b.abs(), "{a} > {b} at half-width {half}");
            }
        }
        prev = Some(e);
    }
}

#[test]
fn widening_the_pad_leaves_cosine_levels_unchanged() {
    let spec = figures::cos_sublinear().unwrap();
    let e = 1.05 * wkb_energy(&spec, 250).unwrap();
    let h = 0.0625;
    let grid = |pad: f64| {
        let m = (auto_domain(&spec, e, pad).unwrap().1 / h).ceil() as usize;
        Grid::new(-(m as f64) * h, m as f64 * h, 2 * m + 1).unwrap()
    };
    let solve = |g: &Grid| solve_lowest(&assemble_hamiltonian(g, &spec).unwrap(), 250, false).unwrap().energies;
    let (narrow, wide) = (solve(&grid(1.3)), solve(&grid(1.6)));
    let worst = narrow.iter().zip(&wide).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "pad 1.3 -> 1.6 moved a level by {worst:e}");
}

#[test]
fn halving_h_shrinks_errors_at_eighth_order() {
    let spec = figures::cos_quartic().unwrap();
    let e = 1.05 * wkb_energy(&spec, 60).unwrap();
    let dom = auto_domain(&spec, e, 1.3).unwrap();
    let h0 = Grid::spacing_for_energy(e, 20.0);
    let table = convergence_study(&spec, 60, dom, &[2.0 * h0, h0, h0 / 2.0], &SolverOptions::default()).unwrap();
    for p in &table.step_orders {
        assert!(*p >= 6.0, "observed order {p}");
    }
}

#[test]
fn cosine_states_respect_symmetry() {
    let spec = figures::cos_sublinear().unwrap();
    let opts = SolverOptions::default();
    let mut s = solve_potential(&spec, Target::Lowest(60), &GridPolicy::default(), true, &opts).unwrap();
    let r = analyze_spectrum(&mut s, &spec, &AnalysisSettings::default(), Execution::Parallel).unwrap();
    let grid = s.grid.unwrap();
    let wells = r.wells.as_ref().unwrap();
    let states = s.states.as_ref().unwrap();

    for m in &r.metrics {
        let p = m.parity_overlap.unwrap();
        assert!((p.abs() - 1.0).abs() < 1e-6, "state {} parity {p}", m.n);
        let masses = well_masses(&states[m.n - 1], &grid, wells).unwrap();
        for (i, w) in masses.iter().enumerate() {
            let j = wells.mirror_of(i).unwrap();
            assert!((w - masses[j]).abs() < 1e-6, "state {} wells {i}/{j}", m.n);
        }
    }

    let hgrid = grid.spacing();
    for d in r.confirmed_doublets() {
        let o = dot(&states[d.n_lo - 1], &states[d.n_hi - 1]) * hgrid;
        assert!(o.abs() < 1e-8, "doublet ({}, {}) overlap {o:e}", d.n_lo, d.n_hi);
    }

    let floor = r.spacing.as_ref().unwrap().floor;
    for series in &r.series {
        let resolved: Vec<f64> = series.members.iter().map(|m| m.1).filter(|&d| d >= floor).collect();
        assert!(resolved.windows(2).all(|w| w[1] < w[0]), "series at {}: {resolved:?}", series.onset);
    }
}

/// Thresholds measured on this spectrum and then frozen: off-centre states
/// with localization at least 0.85 have |A| >= 0.936, states below 0.5
/// have |A| <= 0.678.
#[test]
fn sine_states_split_by_localization() {
    let spec = figures::sin_sublinear().unwrap();
    let opts = SolverOptions::default();
    let mut s = solve_potential(&spec, Target::Lowest(250), &GridPolicy::default(), true, &opts).unwrap();
    let r = analyze_spectrum(&mut s, &spec, &AnalysisSettings::default(), Execution::Parallel).unwrap();
    let central = r.wells.as_ref().unwrap().central();
    let (mut localized, mut spread) = (0, 0);
    for m in &r.metrics {
        if m.dominant_well != central && m.localization >= 0.85 {
            assert!(m.asymmetry.abs() > 0.9, "state {} A = {}", m.n, m.asymmetry);
            assert!(m.is_one_sided());
            localized += 1;
        }
        if m.localization < 0.5 {
            assert!(m.asymmetry.abs() < 0.7, "state {} A = {}", m.n, m.asymmetry);
            spread += 1;
        }
    }
    assert!(localized > 100 && spread > 30, "{localized} localized, {spread} spread");
}

#[test]
fn sweeps_are_bitwise_reproducible() {
    let base = PotentialSpec::opp_cos(0.5, 0.1, 1.0).unwrap();
    let values = vec![0.5, 0.6, 0.7, 0.8];
    let plan = |vals: Vec<f64>| SweepPlan::new(base, SweepParameter::Alpha, vals, 15, GridPolicy::default()).unwrap();
    let run = |vals: Vec<f64>, execution| {
        run_sweep(&plan(vals), &SolverOptions { execution, ..Default::default() }).unwrap()
    };
    let par = run(values.clone(), Execution::Parallel);
    let seq = run(values.clone(), Execution::Sequential);
    assert_eq!(par.points, seq.points);

    let reversed = run(values.iter().rev().copied().collect(), Execution::Parallel);
    for (a, b) in par.points.iter().zip(reversed.points.iter().rev()) {
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.energies, b.energies);
    }
}

#[test]
fn config_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(figures::cos_sublinear().unwrap());
    cfg.solve.states = Some(21);
    let text = superexp_core::config::emit_config(&cfg);
    let cfg = superexp_core::config::parse_config(&text).unwrap();
    let out = run_config(&cfg, dir.path()).unwrap();
    assert!(out.files.iter().all(|f| f.exists()));

    let mut rdr = csv::Reader::from_path(dir.path().join("doublets.csv")).unwrap();
    let pairs: Vec<(usize, usize)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert!(pairs.contains(&(9, 10)), "{pairs:?}");

    let eig = std::fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().count(), 22);
}
