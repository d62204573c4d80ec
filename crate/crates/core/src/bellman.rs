//! Scalar machinery: `H_p`, its inverse `ω_p` on `[1, p/(p-1)]`, and the
//! Bellman value `B_p(f, F) = F ω_p(f^p/F)^p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents in `(1, 1 + DEGENERATE_P_MARGIN]` are rejected: the bracket
/// `[1, p/(p-1)]` becomes too wide to be useful.
pub const DEGENERATE_P_MARGIN: f64 = 1e-9;

/// Relative slack under which `f^p/F` is treated as exactly 1.
const TRIVIAL_RATIO_SLACK: f64 = 1e-12;

const BRACKET_WIDTH: f64 = 1e-14;

/// The exponent `p > 1` of the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PParams {
    p: f64,
}

impl PParams {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::domain(format!("p must be > 1, got {p}")));
        }
        if p <= 1.0 + DEGENERATE_P_MARGIN {
            return Err(Error::domain(format!(
                "p = {p} is numerically degenerate (p/(p-1) too large)"
            )));
        }
        Ok(PParams { p })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    /// The conjugate exponent `p/(p-1)`, which is also the sharp `L^p`
    /// constant of the dyadic maximal operator.
    #[inline]
    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

impl TryFrom<f64> for PParams {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        PParams::new(p)
    }
}

impl From<PParams> for f64 {
    fn from(params: PParams) -> f64 {
        params.p
    }
}

/// First and p-th moments `(f, F)` of a candidate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    f: f64,
    #[serde(rename = "F")]
    big_f: f64,
}

impl MomentPair {
    /// Moment pair feasible for `params`, i.e. `0 < f^p <= F`.
    pub fn new(params: PParams, f: f64, big_f: f64) -> Result<Self> {
        let pair = MomentPair { f, big_f };
        pair.check(params)?;
        Ok(pair)
    }

    #[inline]
    pub fn f(&self) -> f64 {
        self.f
    }

    #[inline]
    pub fn big_f(&self) -> f64 {
        self.big_f
    }

    /// `f^p / F`, the argument handed to `ω_p`.
    pub fn ratio(&self, params: PParams) -> f64 {
        self.f.powf(params.p()) / self.big_f
    }

    /// True when `f^p = F` (up to rounding), which forces `g ≡ f`.
    pub fn is_trivial(&self, params: PParams) -> bool {
        self.ratio(params) >= 1.0 - TRIVIAL_RATIO_SLACK
    }

    pub fn check(&self, params: PParams) -> Result<()> {
        let (f, big_f) = (self.f, self.big_f);
        if !(f.is_finite() && big_f.is_finite()) || f <= 0.0 || big_f <= 0.0 {
            return Err(Error::domain(format!(
                "moments must be positive and finite, got f = {f}, F = {big_f}"
            )));
        }
        if self.ratio(params) > 1.0 + TRIVIAL_RATIO_SLACK {
            return Err(Error::Infeasible {
                p: params.p(),
                f,
                big_f,
            });
        }
        Ok(())
    }
}

/// `c = ω_p(x)` together with the ratio `x` it inverts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaValue {
    pub c: f64,
    pub x: f64,
}

/// `H_p(z) = -(p-1) z^p + p z^(p-1)` on `[1, p/(p-1)]`.
pub fn hp_eval(params: PParams, z: f64) -> Result<f64> {
    let q = params.conjugate();
    if !(1.0..=q).contains(&z) {
        return Err(Error::domain(format!("z = {z} outside [1, {q}]")));
    }
    Ok(hp_unchecked(params.p(), z))
}

#[inline]
fn hp_unchecked(p: f64, z: f64) -> f64 {
    let zp1 = z.powf(p - 1.0);
    zp1 * (p - (p - 1.0) * z)
}

#[inline]
fn hp_derivative(p: f64, z: f64) -> f64 {
    p * (p - 1.0) * z.powf(p - 2.0) * (1.0 - z)
}

/// Inverse of `H_p` on `[1, p/(p-1)]`.
///
/// `H_p` is strictly decreasing there, so the root is bracketed by bisection
/// down to width `1e-14` and then polished with guarded Newton steps.
pub fn omega_p(params: PParams, x: f64) -> Result<OmegaValue> {
    if !x.is_finite() || x <= 0.0 || x > 1.0 {
        return Err(Error::domain(format!("omega_p needs 0 < x <= 1, got {x}")));
    }
    if x == 1.0 {
        return Ok(OmegaValue { c: 1.0, x });
    }
    let p = params.p();
    let (mut lo, mut hi) = (1.0, params.conjugate());
    while hi - lo > BRACKET_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hp_unchecked(p, mid) > x {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut c = 0.5 * (lo + hi);
    let mut best = (hp_unchecked(p, c) - x).abs();
    for _ in 0..4 {
        let d = hp_derivative(p, c);
        if d == 0.0 {
            break;
        }
        let next = c - (hp_unchecked(p, c) - x) / d;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let residual = (hp_unchecked(p, next) - x).abs();
        if residual >= best {
            break;
        }
        c = next;
        best = residual;
    }
    Ok(OmegaValue { c, x })
}

/// `B_p(f, F) = F ω_p(f^p/F)^p`.
pub fn bellman_value(params: PParams, moments: MomentPair) -> Result<f64> {
    moments.check(params)?;
    if moments.is_trivial(params) {
        return Ok(moments.big_f());
    }
    let omega = omega_p(params, moments.ratio(params))?;
    Ok(moments.big_f() * omega.c.powf(params.p()))
}

/// `ω_p(f^p/F)`, short-circuiting the trivial case to `c = 1`.
pub fn eigenvalue(params: PParams, moments: MomentPair) -> Result<f64> {
    moments.check(params)?;
    if moments.is_trivial(params) {
        return Ok(1.0);
    }
    Ok(omega_p(params, moments.ratio(params))?.c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p2() -> PParams {
        PParams::new(2.0).unwrap()
    }

    // For p = 2, H_2(c) = -c^2 + 2c, so c = 1 + sqrt(1 - x) on [1, 2].
    fn quadratic_omega(x: f64) -> f64 {
        1.0 + (1.0 - x).sqrt()
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(PParams::new(1.0).is_err());
        assert!(PParams::new(0.5).is_err());
        assert!(PParams::new(1.0 + 1e-10).is_err());
        assert!(PParams::new(f64::NAN).is_err());
        assert!(PParams::new(1.0 + 1e-6).is_ok());
    }

    #[test]
    fn hp_examples() {
        assert_eq!(hp_eval(p2(), 1.0).unwrap(), 1.0);
        assert_eq!(hp_eval(p2(), 2.0).unwrap(), 0.0);
        assert_relative_eq!(hp_eval(p2(), 1.5).unwrap(), 0.75, epsilon = 1e-15);
        assert!(hp_eval(p2(), 0.99).is_err());
        assert!(hp_eval(p2(), 2.01).is_err());
    }

    #[test]
    fn omega_examples() {
        assert_eq!(omega_p(p2(), 1.0).unwrap().c, 1.0);
        assert!((omega_p(p2(), 0.5).unwrap().c - quadratic_omega(0.5)).abs() < 1e-13);
        assert!((omega_p(p2(), 0.8).unwrap().c - quadratic_omega(0.8)).abs() < 1e-13);
        assert!(omega_p(p2(), 0.0).is_err());
        assert!(omega_p(p2(), -0.1).is_err());
        assert!(omega_p(p2(), 1.0 + 1e-9).is_err());
    }

    #[test]
    fn omega_limit_at_zero() {
        for p in [1.5, 2.0, 3.0, 5.0] {
            let params = PParams::new(p).unwrap();
            let c = omega_p(params, 1e-10).unwrap().c;
            assert!((c - params.conjugate()).abs() < 1e-4, "p = {p}, c = {c}");
        }
    }

    #[test]
    fn bellman_examples() {
        let b = |f, big_f| bellman_value(p2(), MomentPair::new(p2(), f, big_f).unwrap()).unwrap();
        assert_eq!(b(1.0, 1.0), 1.0);
        assert!((b(1.0, 2.0) - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        let c = quadratic_omega(0.8);
        assert!((b(1.0, 1.25) - 1.25 * c * c).abs() < 1e-12);
    }

    #[test]
    fn infeasible_moments() {
        let err = MomentPair::new(p2(), 2.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
        assert!(MomentPair::new(p2(), 0.0, 1.0).is_err());
        assert!(MomentPair::new(p2(), 1.0, -1.0).is_err());
    }

    #[test]
    fn omega_is_strictly_decreasing() {
        for p in [1.5, 2.0, 3.0, 5.0] {
            let params = PParams::new(p).unwrap();
            let mut prev = f64::INFINITY;
            for i in 0..=200 {
                let x = 10f64.powf(-6.0 + 6.0 * i as f64 / 200.0);
                let c = omega_p(params, x).unwrap().c;
                assert!(c < prev, "p = {p}, x = {x}");
                prev = c;
            }
        }
    }

    proptest! {
        #[test]
        fn inverse_identity(p in 1.05f64..8.0, log_x in -6.0f64..0.0) {
            let params = PParams::new(p).unwrap();
            let x = 10f64.powf(log_x);
            let omega = omega_p(params, x).unwrap();
            prop_assert!(omega.c >= 1.0 && omega.c <= params.conjugate());
            prop_assert!((hp_eval(params, omega.c).unwrap() - x).abs() <= 1e-12);
        }

        #[test]
        fn bellman_scaling(p in 1.2f64..6.0, ratio in 0.01f64..1.0, lambda in 0.1f64..10.0) {
            let params = PParams::new(p).unwrap();
            let base = MomentPair::new(params, 1.0, 1.0 / ratio).unwrap();
            let scaled = MomentPair::new(params, lambda, lambda.powf(p) / ratio).unwrap();
            let b0 = bellman_value(params, base).unwrap();
            let b1 = bellman_value(params, scaled).unwrap();
            prop_assert!((b1 - lambda.powf(p) * b0).abs() <= 1e-12 * b1);
        }

        #[test]
        fn bellman_bounds(p in 1.2f64..6.0, ratio in 0.001f64..0.999) {
            let params = PParams::new(p).unwrap();
            let m = MomentPair::new(params, 1.0, 1.0 / ratio).unwrap();
            let b = bellman_value(params, m).unwrap();
            prop_assert!(b >= m.big_f());
            prop_assert!(b < m.big_f() * params.conjugate().powf(p));
        }
    }
}
