//! Lowest eigenpairs of a real symmetric band matrix.
//!
//! Eigenvalues: Givens reduction of the band to tridiagonal form, then
//! Sturm-sequence bisection, one independent bisection per eigenvalue.
//! Eigenvectors: inverse iteration with a pivoted band LU of `H - sigma I`
//! on the original matrix. Eigenvalues closer than `1e-8 ||H||` form a
//! cluster; cluster members are reorthogonalized against each other and
//! finished with a Rayleigh-Ritz step so near-degenerate pairs come out
//! orthogonal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::band::BandMatrix;
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{dot, jacobi_eigen, norm2};

/// Relative gap (in units of `||H||`) below which eigenvalues share a cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Relative resolvability of a spacing, in units of `max |E|`.
pub const SPACING_FLOOR_REL: f64 = 1e-12;

const MAX_INVERSE_ITERATIONS: usize = 8;
const MIN_INVERSE_ITERATIONS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Residual tolerance relative to `||H||`.
    pub rtol: f64,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rtol: 1e-12, execution: Execution::default() }
    }
}

/// Ordered eigenvalues with optional eigenvectors.
///
/// With a grid attached, states satisfy `sum psi_i^2 h = 1`; otherwise they
/// have unit Euclidean norm. `residual_norms[n]` is `||H psi - E psi||_2` for
/// the Euclidean-normalized vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub states: Option<Vec<Vec<f64>>>,
    pub grid: Option<Grid>,
    pub residual_norms: Vec<f64>,
    /// `||H||_inf` of the matrix the spectrum came from.
    pub matrix_norm: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Weight of the discrete inner product (`h`, or 1 without a grid).
    pub fn weight(&self) -> f64 {
        self.grid.as_ref().map_or(1.0, Grid::spacing)
    }

    /// State `n` (1-based label), if states were computed.
    pub fn state(&self, n: usize) -> Option<&[f64]> {
        self.states.as_ref()?.get(n.checked_sub(1)?).map(Vec::as_slice)
    }
}

/// Spacings below this are reported as numerically degenerate.
pub fn spacing_floor(spectrum: &Spectrum) -> f64 {
    spacing_floor_of(&spectrum.energies)
}

pub(crate) fn spacing_floor_of(energies: &[f64]) -> f64 {
    SPACING_FLOOR_REL * energies.iter().fold(0.0f64, |m, e| m.max(e.abs()))
}

/// Symmetric tridiagonal matrix: `diag[0..n]`, `off[0..n-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Lower band work storage with room for one bulge diagonal:
/// `ab[j * stride + (i - j)] = A[i][j]` for `0 <= i - j <= width`.
struct BandWork {
    n: usize,
    width: usize,
    stride: usize,
    ab: Vec<f64>,
}

impl BandWork {
    /// `A <- G A G^T` with `G` rotating rows/columns `p` and `p + 1`.
    /// Entries farther than `width` from the diagonal are zero on entry.
    #[inline]
    fn rotate(&mut self, p: usize, c: f64, s: f64) {
        let (n, w, st) = (self.n, self.width, self.stride);
        let q = p + 1;
        let first = (p + 1).saturating_sub(w);
        let last = (p + w).min(n - 1);
        assert!(q < n && (last + 1) * st <= self.ab.len() + st);
        let ab = self.ab.as_mut_ptr();
        // SAFETY: every index below is < (last + 1) * stride <= ab.len() + stride,
        // and offsets within a column never exceed `width < stride`, so each
        // access stays inside column `k <= q < n`.
        unsafe {
            // rows p and q left of the 2x2 block: adjacent in column k
            for k in first..p {
                let base = ab.add(k * st + (p - k));
                let x = *base;
                let y = *base.add(1);
                *base = c * x + s * y;
                *base.add(1) = -s * x + c * y;
            }
            let pp = ab.add(p * st);
            let qq = ab.add(q * st);
            let app = *pp;
            let apq = *pp.add(1);
            let aqq = *qq;
            let cs = c * s;
            *pp = c * c * app + 2.0 * cs * apq + s * s * aqq;
            *qq = s * s * app - 2.0 * cs * apq + c * c * aqq;
            *pp.add(1) = cs * (aqq - app) + (c * c - s * s) * apq;
            // columns p and q below the block
            for t in 0..last.saturating_sub(q) {
                let x = pp.add(2 + t);
                let y = qq.add(1 + t);
                let (a, b) = (*x, *y);
                *x = c * a + s * b;
                *y = -s * a + c * b;
            }
        }
    }

    /// Zeroes `A[row][col]` by rotating rows `row - 1` and `row`.
    #[inline]
    fn annihilate(&mut self, row: usize, col: usize) {
        let base = col * self.stride + (row - 1 - col);
        let a = self.ab[base];
        let b = self.ab[base + 1];
        if b == 0.0 {
            return;
        }
        let mut r = (a * a + b * b).sqrt();
        if !(r.is_normal()) {
            r = a.hypot(b);
        }
        self.rotate(row - 1, a / r, b / r);
        self.ab[base + 1] = 0.0;
    }
}

/// Orthogonal reduction to tridiagonal form (eigenvalues only).
pub fn reduce_to_tridiagonal(h: &BandMatrix) -> Tridiagonal {
    let n = h.order();
    let b = h.half_bandwidth().min(n.saturating_sub(1));
    let width = b + 1;
    let stride = width + 1;
    let mut work = BandWork { n, width, stride, ab: vec![0.0; stride * n] };
    for (d, band) in h.bands().iter().enumerate().take(b + 1) {
        for (j, &v) in band.iter().enumerate() {
            work.ab[j * stride + d] = v;
        }
    }
    if b >= 2 {
        for j in 0..n.saturating_sub(2) {
            let last = (j + b).min(n - 1);
            for i in (j + 2..=last).rev() {
                if work.ab[j * stride + (i - j)] == 0.0 {
                    continue;
                }
                work.annihilate(i, j);
                // chase the bulge at (i - 1 + width, i - 1) off the end
                let mut col = i - 1;
                let mut row = col + width;
                while row < n {
                    work.annihilate(row, col);
                    col = row - 1;
                    row = col + width;
                }
            }
        }
    }
    let diag = (0..n).map(|j| work.ab[j * stride]).collect();
    let off = (0..n.saturating_sub(1)).map(|j| work.ab[j * stride + 1]).collect();
    Tridiagonal { diag, off }
}

impl Tridiagonal {
    fn pivmin(&self) -> f64 {
        let emax = self.off.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        self.sturm_count_with(x, self.pivmin())
    }

    fn sturm_count_with(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + self.pivmin();
        (lo - pad, hi + pad)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let pivmin = self.pivmin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let tol = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + 2.0 * pivmin;
            if hi - lo <= tol || mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count_with(mid, pivmin) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Pivoted LU of `H - sigma I` in band storage. Column `j` keeps rows
/// `j - 2b ..= j + b` (U gains `b` extra superdiagonals from pivoting).
struct BandLu {
    n: usize,
    b: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * (3 * self.b + 1) + (i + 2 * self.b - j)
    }

    fn factor(h: &BandMatrix, sigma: f64, pivot_floor: f64) -> Self {
        let n = h.order();
        let b = h.half_bandwidth();
        let mut lu = BandLu { n, b, ab: vec![0.0; n * (3 * b + 1)], ipiv: vec![0; n] };
        for (d, band) in h.bands().iter().enumerate() {
            for (i, &v) in band.iter().enumerate() {
                let v = if d == 0 { v - sigma } else { v };
                let lower = lu.idx(i + d, i);
                lu.ab[lower] = v;
                if d > 0 {
                    let upper = lu.idx(i, i + d);
                    lu.ab[upper] = v;
                }
            }
        }
        for k in 0..n {
            let last = (k + b).min(n - 1);
            let right = (k + 2 * b).min(n - 1);
            let mut p = k;
            let mut best = lu.ab[lu.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = lu.ab[lu.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            lu.ipiv[k] = p;
            if p != k {
                for j in k..=right {
                    let (a, c) = (lu.idx(k, j), lu.idx(p, j));
                    lu.ab.swap(a, c);
                }
            }
            let kk = lu.idx(k, k);
            if lu.ab[kk].abs() < pivot_floor {
                lu.ab[kk] = if lu.ab[kk] < 0.0 { -pivot_floor } else { pivot_floor };
            }
            let pivot = lu.ab[kk];
            for i in k + 1..=last {
                let ik = lu.idx(i, k);
                let l = lu.ab[ik] / pivot;
                lu.ab[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=right {
                        let (ij, kj) = (lu.idx(i, j), lu.idx(k, j));
                        lu.ab[ij] -= l * lu.ab[kj];
                    }
                }
            }
        }
        lu
    }

    fn solve(&self, x: &mut [f64]) {
        let (n, b) = (self.n, self.b);
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + b).min(n - 1) {
                    x[i] -= self.ab[self.idx(i, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + 2 * b).min(n - 1) {
                s -= self.ab[self.idx(k, j)] * x[j];
            }
            x[k] = s / self.ab[self.idx(k, k)];
        }
    }
}

fn residual_norm(h: &BandMatrix, x: &[f64], lambda: f64) -> f64 {
    let hx = h.matvec(x);
    hx.iter().zip(x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

/// Eigenvectors for one cluster of eigenvalues (global indices `first..`).
fn cluster_vectors(
    h: &BandMatrix,
    norm: f64,
    first: usize,
    lambdas: &[f64],
    tol: f64,
) -> std::result::Result<Vec<Vec<f64>>, usize> {
    let n = h.order();
    let sep = 10.0 * f64::EPSILON * norm;
    let pivot_floor = f64::EPSILON * norm;
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    let mut prev_sigma = f64::NEG_INFINITY;
    for (t, &lambda) in lambdas.iter().enumerate() {
        let mut sigma = lambda;
        if t > 0 && sigma - prev_sigma < sep {
            sigma = prev_sigma + sep;
        }
        prev_sigma = sigma;
        let lu = BandLu::factor(h, sigma, pivot_floor);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + (first + t) as u64);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut converged = false;
        for it in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut x);
            for _ in 0..2 {
                for v in &vecs {
                    let c = dot(v, &x);
                    x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= c * vi);
                }
            }
            let nrm = norm2(&x);
            if !(nrm.is_finite() && nrm > 0.0) {
                break;
            }
            x.iter_mut().for_each(|xi| *xi /= nrm);
            if it + 1 >= MIN_INVERSE_ITERATIONS && residual_norm(h, &x, lambda) <= tol {
                converged = true;
                break;
            }
        }
        if !converged && lambdas.len() == 1 {
            return Err(t);
        }
        vecs.push(x);
    }
    if lambdas.len() > 1 {
        rayleigh_ritz(h, &mut vecs);
        for (t, v) in vecs.iter().enumerate() {
            if residual_norm(h, v, lambdas[t]) > tol {
                return Err(t);
            }
        }
    }
    Ok(vecs)
}

/// Rotates an orthonormal set into the Ritz basis of `H`, ascending.
fn rayleigh_ritz(h: &BandMatrix, vecs: &mut [Vec<f64>]) {
    let k = vecs.len();
    let hv: Vec<Vec<f64>> = vecs.iter().map(|v| h.matvec(v)).collect();
    let mut proj = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            proj[i][j] = 0.5 * (dot(&vecs[i], &hv[j]) + dot(&vecs[j], &hv[i]));
        }
    }
    let (_, rot) = jacobi_eigen(proj);
    let n = vecs[0].len();
    let rotated: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut out = vec![0.0; n];
            for (r, v) in vecs.iter().enumerate() {
                let w = rot[r][c];
                out.iter_mut().zip(v).for_each(|(o, x)| *o += w * x);
            }
            let nrm = norm2(&out);
            out.iter_mut().for_each(|o| *o /= nrm);
            out
        })
        .collect();
    for (v, r) in vecs.iter_mut().zip(rotated) {
        *v = r;
    }
}

/// Flips `v` so its largest-magnitude component is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Groups consecutive eigenvalues closer than `gap` into index ranges.
pub(crate) fn clusters(energies: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=energies.len() {
        if i == energies.len() || energies[i] - energies[i - 1] > gap {
            out.push(start..i);
            start = i;
        }
    }
    out
}

pub fn solve_lowest(h: &BandMatrix, m: usize, want_states: bool) -> Result<Spectrum> {
    solve_lowest_with(h, m, want_states, &SolverOptions::default())
}

/// All eigenpairs with eigenvalue strictly below `e_max`.
pub fn solve_below(h: &BandMatrix, e_max: f64, want_states: bool) -> Result<Spectrum> {
    solve_below_with(h, e_max, want_states, &SolverOptions::default())
}

pub fn solve_below_with(h: &BandMatrix, e_max: f64, want_states: bool, opts: &SolverOptions) -> Result<Spectrum> {
    let tri = reduce_to_tridiagonal(h);
    let m = tri.sturm_count(e_max);
    finish(h, &tri, m, want_states, opts)
}

pub fn solve_lowest_with(h: &BandMatrix, m: usize, want_states: bool, opts: &SolverOptions) -> Result<Spectrum> {
    if m == 0 || m > h.order() {
        return Err(Error::invalid("m", format!("need 1 <= m <= {}", h.order())));
    }
    let tri = reduce_to_tridiagonal(h);
    finish(h, &tri, m, want_states, opts)
}

fn finish(h: &BandMatrix, tri: &Tridiagonal, m: usize, want_states: bool, opts: &SolverOptions) -> Result<Spectrum> {
    let exec = opts.execution;
    let mut energies = exec.map_range(m, |k| tri.eigenvalue(k));
    // bisection intervals are independent; enforce order against roundoff
    for i in 1..energies.len() {
        if energies[i] < energies[i - 1] {
            energies[i] = energies[i - 1];
        }
    }
    let norm = h.norm_inf();
    let grid = h.grid().copied();
    if !want_states {
        return Ok(Spectrum { energies, states: None, grid, residual_norms: Vec::new(), matrix_norm: norm });
    }
    let tol = opts.rtol * norm;
    let groups = clusters(&energies, CLUSTER_TOL * norm);
    let solved = exec.map(&groups, |r| cluster_vectors(h, norm, r.start, &energies[r.clone()], tol));
    let mut states = Vec::with_capacity(m);
    for (r, result) in groups.iter().zip(solved) {
        match result {
            Ok(vs) => states.extend(vs),
            Err(t) => {
                return Err(Error::NoConvergence { converged: r.start + t, requested: m });
            }
        }
    }
    let residual_norms = states
        .iter()
        .zip(&energies)
        .map(|(v, &e)| residual_norm(h, v, e))
        .collect();
    let scale = grid.as_ref().map_or(1.0, |g| 1.0 / g.spacing().sqrt());
    for v in &mut states {
        fix_sign(v);
        if scale != 1.0 {
            v.iter_mut().for_each(|x| *x *= scale);
        }
    }
    Ok(Spectrum { energies, states: Some(states), grid, residual_norms, matrix_norm: norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_band(n: usize, b: usize, seed: u64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bands = (0..=b)
            .map(|d| (0..n - d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        BandMatrix::from_bands(bands).unwrap()
    }

    /// Trace and Frobenius norm are invariant under the reduction.
    #[test]
    fn reduction_preserves_invariants() {
        let h = random_band(60, 4, 3);
        let t = reduce_to_tridiagonal(&h);
        let tr_h: f64 = h.bands()[0].iter().sum();
        let tr_t: f64 = t.diag.iter().sum();
        assert!((tr_h - tr_t).abs() < 1e-12);
        let fro_h: f64 = h.to_dense().iter().flatten().map(|x| x * x).sum();
        let fro_t: f64 = t.diag.iter().map(|x| x * x).sum::<f64>() + 2.0 * t.off.iter().map(|x| x * x).sum::<f64>();
        assert!((fro_h - fro_t).abs() < 1e-11 * fro_h);
    }

    #[test]
    fn sturm_count_brackets() {
        let t = Tridiagonal { diag: vec![2.0; 5], off: vec![-1.0; 4] };
        // eigenvalues 2 - 2 cos(k pi / 6)
        let exact: Vec<f64> = (1..=5).map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos()).collect();
        for (k, &e) in exact.iter().enumerate() {
            assert_eq!(t.sturm_count(e - 1e-9), k);
            assert!((t.eigenvalue(k) - e).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_pairs_are_orthogonal() {
        // two decoupled identical blocks: every eigenvalue is exactly double
        let n = 40;
        let mut h = BandMatrix::zeros(2 * n, 1);
        for i in 0..n {
            for off in [0, n] {
                h.set(off + i, off + i, 2.0 + (i as f64 * 0.1).sin());
                if i + 1 < n {
                    h.set(off + i, off + i + 1, -1.0);
                }
            }
        }
        let s = solve_lowest(&h, 10, true).unwrap();
        let states = s.states.as_ref().unwrap();
        for a in 0..10 {
            for b in 0..a {
                assert!(dot(&states[a], &states[b]).abs() < 1e-10, "({a},{b})");
            }
            assert!((norm2(&states[a]) - 1.0).abs() < 1e-12);
            assert!(s.residual_norms[a] < 1e-12 * s.matrix_norm);
        }
        for p in 0..5 {
            assert!((s.energies[2 * p] - s.energies[2 * p + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_below_counts() {
        let h = random_band(80, 3, 11);
        let all = solve_lowest(&h, 80, false).unwrap();
        let cut = 0.5 * (all.energies[20] + all.energies[21]);
        let below = solve_below(&h, cut, true).unwrap();
        assert_eq!(below.len(), 21);
        assert!(solve_lowest(&h, 0, false).is_err());
        assert!(solve_lowest(&h, 81, false).is_err());
    }

    #[test]
    fn sign_convention() {
        let h = random_band(50, 4, 5);
        let s = solve_lowest(&h, 5, true).unwrap();
        for v in s.states.as_ref().unwrap() {
            let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn floor_definition() {
        let s = Spectrum { energies: vec![-3.0, 1.0, 10.0], states: None, grid: None, residual_norms: vec![], matrix_norm: 1.0 };
        assert!((spacing_floor(&s) - 1e-11).abs() < 1e-25);
    }
}
