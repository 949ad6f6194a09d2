//! Reference results that do not share code with the production path:
//! closed-form spectra and a dense Householder + implicit-QL eigensolver.

use crate::band::BandMatrix;
use crate::discretization::Grid;
use crate::discretization::{assemble_hamiltonian_with, EFFECTIVE_WALL};
use crate::eigensolver::{fix_sign, solve_lowest_with, SolverOptions, Spectrum};
use crate::error::{Error, Result};

/// Largest order accepted by [`dense_eigensolve`].
pub const DENSE_LIMIT: usize = 1000;

/// Problems with closed-form eigenvalues (`hbar = m = omega = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticCase {
    /// `V = q^2 / 2`, `E_n = n - 1/2`.
    Harmonic,
    /// Hard-wall box on `[0, length]`, `E_n = n^2 pi^2 / (2 L^2)`.
    Box { length: f64 },
}

impl AnalyticCase {
    /// Energy of state `n` (1-based).
    pub fn energy(&self, n: usize) -> f64 {
        let n = n as f64;
        match *self {
            AnalyticCase::Harmonic => n - 0.5,
            AnalyticCase::Box { length } => {
                let k = n * std::f64::consts::PI / length;
                0.5 * k * k
            }
        }
    }

    pub fn energies(&self, m: usize) -> Vec<f64> {
        (1..=m).map(|n| self.energy(n)).collect()
    }

    /// Normalized eigenfunction `n` (1-based) at `q`.
    pub fn wavefunction(&self, n: usize, q: f64) -> f64 {
        match *self {
            AnalyticCase::Harmonic => {
                let mut prev = 0.0;
                let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * q * q).exp();
                for k in 0..n.saturating_sub(1) {
                    let kf = k as f64;
                    let next = (2.0 / (kf + 1.0)).sqrt() * q * cur - (kf / (kf + 1.0)).sqrt() * prev;
                    prev = cur;
                    cur = next;
                }
                cur
            }
            AnalyticCase::Box { length } => {
                if !(0.0..=length).contains(&q) {
                    return 0.0;
                }
                (2.0 / length).sqrt() * (n as f64 * std::f64::consts::PI * q / length).sin()
            }
        }
    }

    pub fn potential(&self, q: f64) -> f64 {
        match self {
            AnalyticCase::Harmonic => 0.5 * q * q,
            AnalyticCase::Box { .. } => 0.0,
        }
    }

    /// Grid of `nodes` points whose effective hard walls (see
    /// [`EFFECTIVE_WALL`]) sit at `0` and `L`.
    pub fn box_grid(length: f64, nodes: usize) -> Result<Grid> {
        let h = length / ((nodes - 1) as f64 + 2.0 * EFFECTIVE_WALL);
        Grid::new(EFFECTIVE_WALL * h, length - EFFECTIVE_WALL * h, nodes)
    }
}

/// Householder reduction of a dense symmetric matrix to tridiagonal form,
/// accumulating the transformation in `a`.
fn tred2(a: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = a.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i][k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i][l];
            } else {
                for k in 0..=l {
                    a[i][k] /= scale;
                    h += a[i][k] * a[i][k];
                }
                let mut f = a[i][l];
                let mut g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i][l] = f - g;
                f = 0.0;
                for j in 0..=l {
                    a[j][i] = a[i][j] / h;
                    g = 0.0;
                    for k in 0..=j {
                        g += a[j][k] * a[i][k];
                    }
                    for k in j + 1..=l {
                        g += a[k][j] * a[i][k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i][j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j][k] -= f * e[k] + g * a[i][k];
                    }
                }
            }
        } else {
            e[i] = a[i][l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let g: f64 = (0..i).map(|k| a[i][k] * a[k][j]).sum();
                for k in 0..i {
                    a[k][j] -= g * a[k][i];
                }
            }
        }
        d[i] = a[i][i];
        a[i][i] = 1.0;
        for j in 0..i {
            a[j][i] = 0.0;
            a[i][j] = 0.0;
        }
    }
}

/// Implicit QL with Wilkinson-type shifts on the tridiagonal `(d, e)`,
/// rotating the columns of `z`.
fn tqli(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence { converged: l, requested: n });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// All eigenpairs of `h` by dense diagonalization. States follow the same
/// normalization and sign conventions as the production solver.
pub fn dense_eigensolve(h: &BandMatrix) -> Result<Spectrum> {
    let n = h.order();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { order: n, limit: DENSE_LIMIT });
    }
    let mut a = h.to_dense();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut a, &mut d, &mut e);
    tqli(&mut d, &mut e, &mut a)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let energies: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut states: Vec<Vec<f64>> = order.iter().map(|&k| (0..n).map(|r| a[r][k]).collect()).collect();
    let residual_norms = states
        .iter()
        .zip(&energies)
        .map(|(v, &lam)| {
            let hv = h.matvec(v);
            hv.iter().zip(v).map(|(x, y)| (x - lam * y).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let grid = h.grid().copied();
    let scale = grid.as_ref().map_or(1.0, |g| 1.0 / g.spacing().sqrt());
    for v in &mut states {
        fix_sign(v);
        v.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(Spectrum { energies, states: Some(states), grid, residual_norms, matrix_norm: h.norm_inf() })
}

/// Lowest `m` production eigenvalues of `case` on `grid` next to the
/// closed form, as `(computed, exact)`.
pub fn compare_analytic(case: AnalyticCase, grid: &Grid, m: usize, opts: &SolverOptions) -> Result<Vec<(f64, f64)>> {
    let pot = move |q: f64| case.potential(q);
    let h = assemble_hamiltonian_with(grid, &pot, opts.execution)?;
    let s = solve_lowest_with(&h, m, false, opts)?;
    Ok(s.energies.into_iter().zip(case.energies(m)).collect())
}
