//! Superexponential potential families.
//!
//! Every family is evaluated as `gamma * V_family(q)`. Powers with a
//! position-dependent exponent go through [`abs_pow`], which uses the
//! two-sided limit at the singular base point (`|0|^0 = 1`).

use std::f64::consts::{E, FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / E;

/// `|x|^e` evaluated as `exp(e ln|x|)`, with `|0|^0 = 1` and `|0|^e = 0` for `e > 0`.
pub fn abs_pow(x: f64, e: f64) -> Result<f64> {
    if x == 0.0 {
        if e == 0.0 {
            Ok(1.0)
        } else if e > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::SingularPower { exponent: e })
        }
    } else {
        Ok((e * x.abs().ln()).exp())
    }
}

/// Anything that can be put on a grid.
pub trait Potential: Sync {
    fn value(&self, q: f64) -> Result<f64>;

    /// `V(q) == V(-q)` exactly.
    fn is_even(&self) -> bool {
        false
    }

    /// Position of the minimum of the confining envelope; domains are padded around it.
    fn envelope_center(&self) -> f64 {
        0.0
    }

    /// A distance from [`Potential::envelope_center`] beyond which `V >= energy`
    /// is guaranteed on both sides, when the family admits a closed-form bound.
    /// Potentials with side wells need this so the outermost turning point is
    /// found instead of the first one.
    fn confinement_radius(&self, _energy: f64) -> Option<f64> {
        None
    }
}

impl<F> Potential for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn value(&self, q: f64) -> Result<f64> {
        Ok(self(q))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `alpha |q|^q`
    Sso,
    /// SSO moved so that its minimum sits at `q = 0` with `V = 0`.
    ShiftedSso,
    /// `alpha |beta q|^(s q)`; the skew exponent `s` is stored in the `k` slot.
    SkewedSso,
    /// Right half of the SSO well mirrored to the left.
    RightSymSso,
    /// Right-symmetrized SSO with an extra power `beta` in the exponent.
    PowerLawSso,
    /// `|q|^(alpha + beta cos(k q))`
    OppCos,
    /// `|q|^(alpha + beta sin(k q))`
    OppSin,
    /// `|q|^(alpha + beta sin(k q + phi))`
    OppPhase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Param {
    Alpha,
    Beta,
    K,
    Phi,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Sso,
        Family::ShiftedSso,
        Family::SkewedSso,
        Family::RightSymSso,
        Family::PowerLawSso,
        Family::OppCos,
        Family::OppSin,
        Family::OppPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sso => "sso",
            Family::ShiftedSso => "shifted_sso",
            Family::SkewedSso => "skewed_sso",
            Family::RightSymSso => "right_sym_sso",
            Family::PowerLawSso => "power_law_sso",
            Family::OppCos => "opp_cos",
            Family::OppSin => "opp_sin",
            Family::OppPhase => "opp_phase",
        }
    }

    pub fn is_opp(self) -> bool {
        matches!(self, Family::OppCos | Family::OppSin | Family::OppPhase)
    }

    fn params(self) -> &'static [Param] {
        use Param::*;
        match self {
            Family::Sso | Family::ShiftedSso | Family::RightSymSso => &[Alpha],
            Family::SkewedSso => &[Alpha, Beta, K],
            Family::PowerLawSso => &[Alpha, Beta],
            Family::OppCos | Family::OppSin => &[Alpha, Beta, K],
            Family::OppPhase => &[Alpha, Beta, K, Phi],
        }
    }
}

/// One potential family together with its parameters.
///
/// Build through [`PotentialSpec::new`] or the shorthand constructors so the
/// parameter rules are enforced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: Family,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    pub phi: f64,
    pub gamma: f64,
}

impl PotentialSpec {
    /// Validates parameters. Parameters the family does not read are reset
    /// to zero with a warning.
    pub fn new(family: Family, alpha: f64, beta: f64, k: f64, phi: f64, gamma: f64) -> Result<Self> {
        let mut spec = PotentialSpec { family, alpha, beta, k, phi, gamma };
        let used = family.params();
        for (param, name) in [
            (Param::Alpha, "alpha"),
            (Param::Beta, "beta"),
            (Param::K, "k"),
            (Param::Phi, "phi"),
        ] {
            let slot = match param {
                Param::Alpha => &mut spec.alpha,
                Param::Beta => &mut spec.beta,
                Param::K => &mut spec.k,
                Param::Phi => &mut spec.phi,
            };
            if !slot.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
            if !used.contains(&param) && *slot != 0.0 {
                log::warn!("{} ignores `{name}` (= {}); resetting it to 0", family.name(), *slot);
                *slot = 0.0;
            }
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be positive"));
        }
        if !(spec.alpha > 0.0) {
            return Err(Error::invalid("alpha", "alpha must be positive"));
        }
        match family {
            Family::PowerLawSso if !(spec.beta > 0.0) => {
                return Err(Error::invalid("beta", "power-law exponent must be positive"));
            }
            Family::SkewedSso => {
                if spec.beta == 0.0 {
                    return Err(Error::invalid("beta", "skew scale must be nonzero"));
                }
                if !(spec.k > 0.0) {
                    return Err(Error::invalid("k", "skew exponent must be positive"));
                }
            }
            f if f.is_opp() => {
                if !(spec.k > 0.0) {
                    return Err(Error::invalid("k", "wavevector must be positive"));
                }
                if spec.beta.abs() >= spec.alpha {
                    return Err(Error::invalid(
                        "beta",
                        "oscillation amplitude must stay below alpha so the power is positive",
                    ));
                }
            }
            _ => {}
        }
        Ok(spec)
    }

    pub fn sso(alpha: f64) -> Result<Self> {
        Self::new(Family::Sso, alpha, 0.0, 0.0, 0.0, 1.0)
    }

    pub fn shifted_sso(alpha: f64) -> Result<Self> {
        Self::new(Family::ShiftedSso, alpha, 0.0, 0.0, 0.0, 1.0)
    }

    /// `alpha |beta q|^(skew q)`.
    pub fn skewed_sso(alpha: f64, beta: f64, skew: f64) -> Result<Self> {
        Self::new(Family::SkewedSso, alpha, beta, skew, 0.0, 1.0)
    }

    pub fn right_sym_sso(alpha: f64) -> Result<Self> {
        Self::new(Family::RightSymSso, alpha, 0.0, 0.0, 0.0, 1.0)
    }

    pub fn power_law_sso(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Family::PowerLawSso, alpha, beta, 0.0, 0.0, 1.0)
    }

    pub fn opp_cos(alpha: f64, beta: f64, k: f64) -> Result<Self> {
        Self::new(Family::OppCos, alpha, beta, k, 0.0, 1.0)
    }

    pub fn opp_sin(alpha: f64, beta: f64, k: f64) -> Result<Self> {
        Self::new(Family::OppSin, alpha, beta, k, 0.0, 1.0)
    }

    pub fn opp_phase(alpha: f64, beta: f64, k: f64, phi: f64) -> Result<Self> {
        Self::new(Family::OppPhase, alpha, beta, k, phi, 1.0)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.family, self.alpha, self.beta, self.k, self.phi, gamma)
    }

    pub fn with_phi(self, phi: f64) -> Result<Self> {
        Self::new(self.family, self.alpha, self.beta, self.k, phi, self.gamma)
    }

    /// Minimum position `q_m` of the mirrored families.
    fn mirror_minimum(&self) -> f64 {
        match self.family {
            Family::PowerLawSso => (-1.0 / self.beta).exp(),
            _ => INV_E,
        }
    }

    fn unscaled(&self, q: f64) -> Result<f64> {
        match self.family {
            Family::Sso => Ok(self.alpha * abs_pow(q, q)?),
            Family::ShiftedSso => {
                let x = q + INV_E;
                Ok(self.alpha * (abs_pow(x, x)? - abs_pow(INV_E, INV_E)?))
            }
            Family::SkewedSso => Ok(self.alpha * abs_pow(self.beta * q, self.k * q)?),
            Family::RightSymSso => {
                let qm = self.mirror_minimum();
                let x = qm + q.abs();
                Ok(self.alpha * (abs_pow(x, x)? - abs_pow(qm, qm)?))
            }
            Family::PowerLawSso => {
                let qm = self.mirror_minimum();
                let x = qm + q.abs();
                let top = abs_pow(x, abs_pow(x, self.beta)?)?;
                let bottom = abs_pow(qm, abs_pow(qm, self.beta)?)?;
                Ok(self.alpha * (top - bottom))
            }
            Family::OppCos => {
                let q = q.abs();
                abs_pow(q, self.alpha + self.beta * (self.k * q).cos())
            }
            Family::OppSin => abs_pow(q, self.alpha + self.beta * (self.k * q).sin()),
            Family::OppPhase => {
                let q = if self.is_even() { q.abs() } else { q };
                abs_pow(q, self.alpha + self.beta * (self.k * q + self.phi).sin())
            }
        }
    }

    /// Energy at the SSO transition point `q = 0` (unshifted coordinates).
    pub fn transition_energy(&self) -> Result<f64> {
        match self.family {
            Family::Sso => Ok(self.gamma * self.alpha),
            Family::ShiftedSso => Ok(self.gamma * self.alpha * (1.0 - abs_pow(INV_E, INV_E)?)),
            f => Err(Error::UnsupportedFamily { family: f.name(), operation: "transition_energy" }),
        }
    }
}

impl Potential for PotentialSpec {
    fn value(&self, q: f64) -> Result<f64> {
        if !q.is_finite() {
            return Err(Error::invalid("q", "position must be finite"));
        }
        Ok(self.gamma * self.unscaled(q)?)
    }

    fn is_even(&self) -> bool {
        match self.family {
            Family::RightSymSso | Family::PowerLawSso | Family::OppCos => true,
            Family::OppPhase => {
                // sin(kq + phi) is even in q iff phi = pi/2 (mod pi)
                let r = ((self.phi - FRAC_PI_2) / PI).rem_euclid(1.0);
                r.min(1.0 - r) < 1e-12
            }
            _ => false,
        }
    }

    fn envelope_center(&self) -> f64 {
        match self.family {
            Family::Sso => INV_E,
            _ => 0.0,
        }
    }

    fn confinement_radius(&self, energy: f64) -> Option<f64> {
        if !self.family.is_opp() {
            return None;
        }
        // |q| >= 1 gives V >= gamma |q|^(alpha - |beta|)
        let floor_power = self.alpha - self.beta.abs();
        let r = (energy.max(self.gamma) / self.gamma).powf(1.0 / floor_power);
        Some(r.max(1.0) * (1.0 + 1e-9))
    }
}

/// Extrema of a potential on a finite domain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WellGeometry {
    pub minima: Vec<(f64, f64)>,
    pub maxima: Vec<(f64, f64)>,
    /// One interval per minimum, bounded by the neighbouring maxima or the domain edges.
    pub well_intervals: Vec<[f64; 2]>,
}

impl WellGeometry {
    /// Index of the well whose interval contains `q`.
    pub fn well_containing(&self, q: f64) -> Option<usize> {
        self.well_intervals.iter().position(|&[a, b]| a <= q && q <= b)
    }

    /// Well whose minimum is the reflection of well `i`'s minimum through `q = 0`.
    pub fn mirror_of(&self, i: usize) -> Option<usize> {
        let (q, _) = *self.minima.get(i)?;
        let scale = self
            .well_intervals
            .get(i)
            .map(|[a, b]| (b - a).abs())
            .unwrap_or(1.0)
            .max(1e-12);
        self.minima
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (a.0 + q).abs().total_cmp(&(b.0 + q).abs()))
            .filter(|(_, m)| (m.0 + q).abs() < 0.05 * scale)
            .map(|(j, _)| j)
    }

    /// Well holding `q = 0`.
    pub fn central(&self) -> Option<usize> {
        self.well_containing(0.0)
    }
}

const EXTREMUM_TOL: f64 = 1e-10;

/// Sign of the centered difference `V(q+d) - V(q-d)`.
fn slope_sign<P: Potential + ?Sized>(pot: &P, q: f64) -> Result<f64> {
    let d = 6e-6 * q.abs().max(1.0);
    let diff = pot.value(q + d)? - pot.value(q - d)?;
    Ok(if diff > 0.0 {
        1.0
    } else if diff < 0.0 {
        -1.0
    } else {
        0.0
    })
}

/// Bisection on the slope sign, with `sign(lo) == from`.
fn refine_extremum<P: Potential + ?Sized>(pot: &P, mut lo: f64, mut hi: f64, from: f64) -> Result<f64> {
    while hi - lo > EXTREMUM_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope_sign(pot, mid)? == from {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Finds all interior local extrema of `pot` on `[q_min, q_max]` from `resolution`
/// uniform samples, refined to 1e-10 in `q`.
pub fn locate_wells<P: Potential + ?Sized>(
    pot: &P,
    (q_min, q_max): (f64, f64),
    resolution: usize,
) -> Result<WellGeometry> {
    if !(q_max > q_min) {
        return Err(Error::invalid("domain", "q_max must exceed q_min"));
    }
    if resolution < 3 {
        return Err(Error::invalid("resolution", "need at least 3 samples"));
    }
    let step = (q_max - q_min) / (resolution - 1) as f64;
    let qs: Vec<f64> = (0..resolution).map(|i| q_min + i as f64 * step).collect();
    let vs = qs.iter().map(|&q| pot.value(q)).collect::<Result<Vec<_>>>()?;

    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    // (sample index where the last nonzero slope started, its sign)
    let mut last: Option<(usize, f64)> = None;
    for i in 0..resolution - 1 {
        let d = vs[i + 1] - vs[i];
        let s = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            continue;
        };
        if let Some((j, prev)) = last {
            if prev != s {
                // Extremum between q_j and q_{i+1}.
                let q = refine_extremum(pot, qs[j], qs[i + 1], prev)?;
                let v = pot.value(q)?;
                if prev < 0.0 {
                    minima.push((q, v));
                } else {
                    maxima.push((q, v));
                }
            }
        }
        last = Some((i, s));
    }

    // Maxima not separating two minima are walls, not well boundaries.
    let mut well_intervals = Vec::with_capacity(minima.len());
    for (idx, &(qmin, _)) in minima.iter().enumerate() {
        let left = if idx == 0 {
            q_min
        } else {
            maxima
                .iter()
                .rev()
                .find(|m| m.0 < qmin)
                .map(|m| m.0)
                .unwrap_or(q_min)
        };
        let right = if idx + 1 == minima.len() {
            q_max
        } else {
            maxima.iter().find(|m| m.0 > qmin).map(|m| m.0).unwrap_or(q_max)
        };
        well_intervals.push([left, right]);
    }
    Ok(WellGeometry { minima, maxima, well_intervals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sso_extremal_values() {
        let sso = PotentialSpec::sso(1.0).unwrap();
        assert_abs_diff_eq!(sso.value(INV_E).unwrap(), (-INV_E).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(sso.value(INV_E).unwrap(), 0.692201, epsilon = 1e-6);
        assert_abs_diff_eq!(sso.value(-INV_E).unwrap(), 1.444668, epsilon = 1e-6);
        assert_eq!(sso.value(0.0).unwrap(), 1.0);
    }

    #[test]
    fn shifted_and_opp_zeros() {
        let sh = PotentialSpec::shifted_sso(123.0).unwrap();
        assert_eq!(sh.value(0.0).unwrap(), 0.0);
        let c = PotentialSpec::opp_cos(0.3, 0.05, 1.0).unwrap();
        assert_eq!(c.value(0.0).unwrap(), 0.0);
        let rso = PotentialSpec::right_sym_sso(7.0).unwrap();
        assert_eq!(rso.value(0.0).unwrap(), 0.0);
        let pl = PotentialSpec::power_law_sso(3.0, 0.25).unwrap();
        assert_eq!(pl.value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn mirrored_families_are_even() {
        let rso = PotentialSpec::right_sym_sso(10.0).unwrap();
        for c in [0.1, 0.7, 2.3] {
            assert_eq!(rso.value(c).unwrap(), rso.value(-c).unwrap());
        }
        assert!(rso.is_even());
        assert!(!PotentialSpec::opp_sin(0.3, 0.05, 1.0).unwrap().is_even());
        assert!(PotentialSpec::opp_phase(0.3, 0.05, 1.0, 1.5 * PI).unwrap().is_even());
        assert!(!PotentialSpec::opp_phase(0.3, 0.05, 1.0, 0.0).unwrap().is_even());
    }

    #[test]
    fn abs_pow_singular_point() {
        assert_eq!(abs_pow(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(abs_pow(0.0, 2.5).unwrap(), 0.0);
        assert!(matches!(abs_pow(0.0, -1.0), Err(Error::SingularPower { .. })));
        assert_abs_diff_eq!(abs_pow(-2.0, 3.0).unwrap(), 8.0, epsilon = 1e-13);
    }

    #[test]
    fn transition_energies() {
        assert_eq!(PotentialSpec::sso(1.0).unwrap().transition_energy().unwrap(), 1.0);
        let sh = PotentialSpec::shifted_sso(1.0).unwrap();
        assert_abs_diff_eq!(sh.transition_energy().unwrap(), 1.0 - (-INV_E).exp(), epsilon = 1e-15);
        assert!(PotentialSpec::opp_cos(0.3, 0.05, 1.0).unwrap().transition_energy().is_err());
    }

    #[test]
    fn shifted_transition_energy_is_two_sided_limit() {
        let sh = PotentialSpec::shifted_sso(1e3).unwrap();
        let et = sh.transition_energy().unwrap();
        assert_abs_diff_eq!(et, 307.799, epsilon = 1e-3);
        // The transition point sits at q = -1/e in shifted coordinates.
        let mut prev = f64::INFINITY;
        for d in 4..=12 {
            let eps = 10f64.powi(-d);
            let lo = sh.value(-INV_E - eps).unwrap();
            let hi = sh.value(-INV_E + eps).unwrap();
            let err = (lo - et).abs().max((hi - et).abs());
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn parameter_rules() {
        assert!(PotentialSpec::sso(-1.0).is_err());
        assert!(PotentialSpec::sso(1.0).unwrap().with_gamma(0.0).is_err());
        assert!(PotentialSpec::opp_cos(0.3, 0.3, 1.0).is_err());
        assert!(PotentialSpec::opp_cos(0.3, 0.05, 0.0).is_err());
        assert!(PotentialSpec::power_law_sso(1.0, 0.0).is_err());
        // unused parameters are dropped
        let s = PotentialSpec::new(Family::Sso, 1.0, 5.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!((s.beta, s.k, s.phi), (0.0, 0.0, 0.0));
    }

    #[test]
    fn skewed_sso_reduces_to_sso() {
        let sk = PotentialSpec::skewed_sso(2.0, 1.0, 1.0).unwrap();
        let sso = PotentialSpec::sso(2.0).unwrap();
        for q in [-1.3, -0.2, 0.0, 0.4, 1.1] {
            assert_abs_diff_eq!(sk.value(q).unwrap(), sso.value(q).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn wells_of_sso_and_harmonic() {
        let sso = PotentialSpec::sso(1.0).unwrap();
        let w = locate_wells(&sso, (0.1, 1.0), 200).unwrap();
        assert_eq!(w.minima.len(), 1);
        assert!(w.maxima.is_empty());
        assert_abs_diff_eq!(w.minima[0].0, INV_E, epsilon = 1e-8);

        let harmonic = |q: f64| 0.5 * q * q;
        let w = locate_wells(&harmonic, (-5.0, 5.0), 101).unwrap();
        assert_eq!(w.minima.len(), 1);
        assert!(w.maxima.is_empty());
        assert_abs_diff_eq!(w.minima[0].0, 0.0, epsilon = 1e-9);
        assert_eq!(w.well_intervals, vec![[-5.0, 5.0]]);

        let wall = |q: f64| q.exp();
        let w = locate_wells(&wall, (0.0, 3.0), 50).unwrap();
        assert!(w.minima.is_empty() && w.maxima.is_empty());
    }

    #[test]
    fn opp_cos_wells_are_symmetric() {
        let c = PotentialSpec::opp_cos(0.3, 0.05, 1.0).unwrap();
        let w = locate_wells(&c, (-30.0, 30.0), 6001).unwrap();
        assert_eq!(w.minima.len() % 2, 1);
        let mid = w.minima.len() / 2;
        assert_abs_diff_eq!(w.minima[mid].0, 0.0, epsilon = 1e-9);
        assert_eq!(w.central(), Some(mid));
        for i in 0..w.minima.len() {
            let j = w.minima.len() - 1 - i;
            assert_abs_diff_eq!(w.minima[i].0, -w.minima[j].0, epsilon = 1e-8);
            assert_eq!(w.mirror_of(i), Some(j));
        }
        // interleaving
        for (i, m) in w.maxima.iter().enumerate() {
            assert!(w.minima[i].0 < m.0 && m.0 < w.minima[i + 1].0);
        }
        // outer-well bottoms rise with |q|
        for i in mid + 1..w.minima.len() - 1 {
            assert!(w.minima[i + 1].1 > w.minima[i].1);
        }
    }

    #[test]
    fn phase_family_limits() {
        let c = PotentialSpec::opp_cos(0.3, 0.05, 1.0).unwrap();
        let s = PotentialSpec::opp_sin(0.3, 0.05, 1.0).unwrap();
        let p2 = PotentialSpec::opp_phase(0.3, 0.05, 1.0, FRAC_PI_2).unwrap();
        let p0 = PotentialSpec::opp_phase(0.3, 0.05, 1.0, 0.0).unwrap();
        for i in -200..=200 {
            let q = i as f64 * 0.173;
            let vc = c.value(q).unwrap();
            assert!((p2.value(q).unwrap() - vc).abs() <= 4.0 * f64::EPSILON * vc.max(1.0));
            assert_eq!(p0.value(q).unwrap(), s.value(q).unwrap());
        }
    }

    #[test]
    fn power_law_minimum_is_flat() {
        let pl = PotentialSpec::power_law_sso(1.0, 0.25).unwrap();
        for h in [1e-3, 5e-4, 2.5e-4] {
            let slope = (pl.value(h).unwrap() - pl.value(0.0).unwrap()) / h;
            // one-sided slope is O(h) because V'(0) = 0
            assert!(slope.abs() < 300.0 * h, "slope {slope} at h {h}");
        }
    }
}
