//! Moments, Hardy averages, the functional `Φ_p(g) = ∫_0^1 (Hg)^p` and
//! the eigen-defect `∫_0^1 |Hg - c g|^p`.
//!
//! On cell `i` the Hardy average is `Hg(t) = v_i + a_i / t` with
//! `a_i = C_{i-1} - v_i t_{i-1} >= 0`, so every per-cell integrand is smooth
//! and bounded, and the first cell (`a_1 = 0`) is constant.

use serde::{Deserialize, Serialize};

use super::step::{CumulativeProfile, StepFunction};
use crate::bellman::PParams;
use crate::error::{Error, Result};
use crate::quad;

/// `∫_0^1 |Hg - c g|^p`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DefectValue(pub f64);

impl DefectValue {
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// How `Φ_p` is evaluated on each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMethod {
    /// Closed form when `p = 2`, adaptive quadrature otherwise.
    Auto,
    /// Adaptive quadrature for every `p`.
    Quadrature,
}

pub fn integral(g: &StepFunction) -> f64 {
    g.cells().map(|(lo, hi, v)| v * (hi - lo)).sum()
}

pub fn p_moment(g: &StepFunction, params: PParams) -> f64 {
    let p = params.p();
    g.cells().map(|(lo, hi, v)| pow(v, p) * (hi - lo)).sum()
}

/// `(1/t) ∫_0^t g` for `t` in `(0, 1]`.
pub fn hardy_at(g: &StepFunction, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t = {t} outside (0, 1]")));
    }
    let profile = CumulativeProfile::new(g);
    let i = g.cell_index(t);
    let v = g.values()[i];
    let a = profile.hardy_offset(i);
    Ok(if a == 0.0 { v } else { v + a / t })
}

pub fn phi_functional(g: &StepFunction, params: PParams) -> f64 {
    phi_with(g, params, PhiMethod::Auto)
}

pub fn phi_with(g: &StepFunction, params: PParams, method: PhiMethod) -> f64 {
    phi_slices(g.breakpoints(), g.values(), params.p(), 0.0, 1.0, method)
}

/// `∫_lo^hi (Hg)^p` for `0 <= lo <= hi <= 1`.
pub fn phi_between(g: &StepFunction, params: PParams, lo: f64, hi: f64) -> Result<f64> {
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::domain(format!("need 0 <= lo <= hi <= 1, got [{lo}, {hi}]")));
    }
    Ok(phi_slices(
        g.breakpoints(),
        g.values(),
        params.p(),
        lo,
        hi,
        PhiMethod::Auto,
    ))
}

/// `Φ_p` over raw slices with no monotonicity requirement; the Hardy
/// representation `v_i + a_i/t` holds for any values, which the gradient
/// finite-difference checks rely on.
pub(crate) fn phi_slices(
    breakpoints: &[f64],
    values: &[f64],
    p: f64,
    lo: f64,
    hi: f64,
    method: PhiMethod,
) -> f64 {
    let closed = method == PhiMethod::Auto && p == 2.0;
    let mut prefix = 0.0;
    let mut total = 0.0;
    for (w, &v) in breakpoints.windows(2).zip(values) {
        let (t0, t1) = (w[0], w[1]);
        let a = prefix - v * t0;
        prefix += v * (t1 - t0);
        let (u, w) = (t0.max(lo), t1.min(hi));
        if u >= w {
            if t0 >= hi {
                break;
            }
            continue;
        }
        total += if a == 0.0 || u == 0.0 {
            pow(v, p) * (w - u)
        } else if closed {
            square_piece(v, a, u, w)
        } else {
            quad::integrate_cell(|t| pow(v + a / t, p), u, w)
        };
    }
    total
}

/// `∫_u^w (v + a/t)^2 dt` for `u > 0`.
#[inline]
fn square_piece(v: f64, a: f64, u: f64, w: f64) -> f64 {
    let len = w - u;
    v * v * len + 2.0 * v * a * (w / u).ln() + a * a * len / (u * w)
}

/// `∫_0^1 |Hg(t) - c g(t)|^p dt` for `c >= 1`.
///
/// On cell `i` the inner expression `(1 - c) v_i + a_i / t` is monotone in
/// `t`; its zero `t* = a_i / ((c - 1) v_i)` splits the cell into two smooth
/// pieces when it is interior.
pub fn defect(g: &StepFunction, c: f64, params: PParams) -> Result<DefectValue> {
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::domain(format!("defect needs c >= 1, got {c}")));
    }
    let p = params.p();
    let profile = CumulativeProfile::new(g);
    let mut total = 0.0;
    for (i, (t0, t1, v)) in g.cells().enumerate() {
        let a = profile.hardy_offset(i);
        let slope = (1.0 - c) * v;
        if a == 0.0 {
            total += pow(slope.abs(), p) * (t1 - t0);
            continue;
        }
        let piece = |u: f64, w: f64| quad::integrate_cell(|t| pow((slope + a / t).abs(), p), u, w);
        let root = if c > 1.0 && v > 0.0 {
            a / ((c - 1.0) * v)
        } else {
            f64::INFINITY
        };
        total += if root > t0 && root < t1 {
            piece(t0, root) + piece(root, t1)
        } else {
            piece(t0, t1)
        };
    }
    Ok(DefectValue(total))
}

/// `∫_0^1 |g - h|^p` over the merged partition.
pub fn lp_distance(g: &StepFunction, h: &StepFunction, params: PParams) -> f64 {
    let p = params.p();
    let (gb, gv) = (g.breakpoints(), g.values());
    let (hb, hv) = (h.breakpoints(), h.values());
    let (mut i, mut j) = (0, 0);
    let mut left = 0.0;
    let mut total = 0.0;
    while i < gv.len() && j < hv.len() {
        let right = gb[i + 1].min(hb[j + 1]);
        total += pow((gv[i] - hv[j]).abs(), p) * (right - left);
        left = right;
        if gb[i + 1] == right {
            i += 1;
        }
        if hb[j + 1] == right {
            j += 1;
        }
    }
    total
}

/// `∫_(0, δ] g^p`, the tail mass used for equi-integrability checks.
pub fn tail_p_mass(g: &StepFunction, params: PParams, delta: f64) -> f64 {
    let p = params.p();
    g.cells()
        .take_while(|&(lo, _, _)| lo < delta)
        .map(|(lo, hi, v)| pow(v, p) * (hi.min(delta) - lo))
        .sum()
}

#[inline]
pub(crate) fn pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(p: f64) -> PParams {
        PParams::new(p).unwrap()
    }

    fn split() -> StepFunction {
        StepFunction::new(vec![0.0, 0.5, 1.0], vec![1.5, 0.5]).unwrap()
    }

    fn quarter() -> StepFunction {
        StepFunction::new(vec![0.0, 0.25, 1.0], vec![2.0, 0.0]).unwrap()
    }

    #[test]
    fn integral_examples() {
        assert_eq!(integral(&StepFunction::constant(1.0).unwrap()), 1.0);
        assert_eq!(integral(&split()), 1.0);
        assert_eq!(integral(&quarter()), 0.5);
    }

    #[test]
    fn p_moment_examples() {
        assert_eq!(p_moment(&StepFunction::constant(1.0).unwrap(), p(2.0)), 1.0);
        // 2.25 * 0.5 + 0.25 * 0.5
        assert_eq!(p_moment(&split(), p(2.0)), 1.25);
        assert_eq!(p_moment(&quarter(), p(2.0)), 1.0);
    }

    #[test]
    fn hardy_examples() {
        let g = StepFunction::constant(0.7).unwrap();
        for t in [1e-9, 0.3, 1.0] {
            assert!((hardy_at(&g, t).unwrap() - 0.7).abs() < 1e-15);
        }
        assert_eq!(hardy_at(&split(), 1.0).unwrap(), 1.0);
        // prefix-mass oracle: (0.75 + 0.5 * 0.25) / 0.75
        let expected = (0.75 + 0.5 * 0.25) / 0.75;
        assert!((hardy_at(&split(), 0.75).unwrap() - expected).abs() < 1e-15);
        assert!(hardy_at(&split(), 0.0).is_err());
        assert!(hardy_at(&split(), 1.5).is_err());
    }

    #[test]
    fn phi_examples() {
        let g = StepFunction::constant(1.3).unwrap();
        assert!((phi_functional(&g, p(2.0)) - 1.69).abs() < 1e-14);
        // ∫_0^0.5 1.5^2 + ∫_0.5^1 (0.5 + 0.5/t)^2
        //   = 1.125 + [0.25 t + 0.5 ln t - 0.25/t]_{0.5}^{1}
        let anti = |t: f64| 0.25 * t + 0.5 * t.ln() - 0.25 / t;
        let expected = 1.125 + anti(1.0) - anti(0.5);
        assert!((phi_functional(&split(), p(2.0)) - expected).abs() < 1e-14);
        assert!((expected - 1.8465736).abs() < 1e-7);
    }

    #[test]
    fn phi_quarter_instance() {
        // g = 4 on (0, 1/4]: ∫_0^{1/4} 16 + ∫_{1/4}^1 t^{-2} = 4 + 3
        let g = StepFunction::new(vec![0.0, 0.25, 1.0], vec![4.0, 0.0]).unwrap();
        assert!((phi_functional(&g, p(2.0)) - 7.0).abs() < 1e-14);
        assert!((phi_with(&g, p(2.0), PhiMethod::Quadrature) - 7.0).abs() < 1e-9);
    }

    #[test]
    fn phi_between_partitions() {
        let g = split();
        let whole = phi_functional(&g, p(3.0));
        let parts = phi_between(&g, p(3.0), 0.0, 0.3).unwrap()
            + phi_between(&g, p(3.0), 0.3, 0.77).unwrap()
            + phi_between(&g, p(3.0), 0.77, 1.0).unwrap();
        assert!((whole - parts).abs() < 1e-9 * whole);
        assert!(phi_between(&g, p(3.0), 0.5, 0.2).is_err());
    }

    #[test]
    fn defect_examples() {
        let g = StepFunction::constant(0.8).unwrap();
        assert_eq!(defect(&g, 1.0, p(3.0)).unwrap().value(), 0.0);
        assert!((defect(&g, 2.0, p(2.0)).unwrap().value() - 0.64).abs() < 1e-15);
        assert!(defect(&g, 0.5, p(2.0)).is_err());
    }

    #[test]
    fn defect_matches_p2_closed_form() {
        // On the second cell of `split`, Hg - 2g = -0.5 + 0.5/t
        // ∫_0.5^1 (0.5/t - 0.5)^2 = 0.25 [t - 2 ln t - 1/t]_{0.5}^{1}
        let anti = |t: f64| 0.25 * (t - 2.0 * t.ln() - 1.0 / t);
        let expected = 0.5 * (1.5f64 - 3.0).powi(2) + anti(1.0) - anti(0.5);
        let got = defect(&split(), 2.0, p(2.0)).unwrap().value();
        assert!((got - expected).abs() < 1e-10 * expected, "{got} vs {expected}");
    }

    #[test]
    fn lp_distance_examples() {
        let one = StepFunction::constant(1.0).unwrap();
        let zero = StepFunction::constant(0.0).unwrap();
        assert_eq!(lp_distance(&split(), &split(), p(2.0)), 0.0);
        assert_eq!(lp_distance(&one, &zero, p(2.0)), 1.0);
        assert_eq!(lp_distance(&one, &split(), p(2.0)), 0.25);
        let other = StepFunction::new(vec![0.0, 0.2, 0.7, 1.0], vec![3.0, 1.0, 0.0]).unwrap();
        // merged cells: (0,0.2] 1.5 vs 3; (0.2,0.5] 1.5 vs 1; (0.5,0.7] 0.5 vs 1; (0.7,1] 0.5 vs 0
        let expected = 2.25 * 0.2 + 0.25 * 0.3 + 0.25 * 0.2 + 0.25 * 0.3;
        assert!((lp_distance(&split(), &other, p(2.0)) - expected).abs() < 1e-15);
    }

    #[test]
    fn tail_mass() {
        let g = split();
        assert_eq!(tail_p_mass(&g, p(2.0), 0.25), 2.25 * 0.25);
        assert_eq!(tail_p_mass(&g, p(2.0), 1.0), 1.25);
    }

    fn arb_step() -> impl Strategy<Value = StepFunction> {
        (1usize..30)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(0.01f64..1.0, n),
                    proptest::collection::vec(0.0f64..5.0, n),
                )
            })
            .prop_map(|(mut lens, mut vals)| {
                let sum: f64 = lens.iter().sum();
                lens.iter_mut().for_each(|l| *l /= sum);
                let mut bps = vec![0.0];
                let mut acc = 0.0;
                for l in &lens[..lens.len() - 1] {
                    acc += l;
                    bps.push(acc);
                }
                bps.push(1.0);
                vals.sort_by(|a, b| b.total_cmp(a));
                StepFunction::new(bps, vals).unwrap()
            })
    }

    proptest! {
        #[test]
        fn hardy_dominates(g in arb_step(), t in 1e-6f64..1.0) {
            let h = hardy_at(&g, t).unwrap();
            prop_assert!(h >= g.eval(t).unwrap() * (1.0 - 1e-12));
        }

        #[test]
        fn phi_dominates_p_moment(g in arb_step(), pp in 1.1f64..5.0) {
            let params = p(pp);
            prop_assert!(phi_functional(&g, params) >= p_moment(&g, params) * (1.0 - 1e-10));
        }

        #[test]
        fn phi_scaling(g in arb_step(), pp in 1.1f64..5.0, lambda in 0.1f64..10.0) {
            let params = p(pp);
            let base = phi_functional(&g, params);
            let scaled = phi_functional(&g.scaled(lambda).unwrap(), params);
            prop_assert!((scaled - lambda.powf(pp) * base).abs() <= 1e-10 * scaled.max(1e-300));
        }

        #[test]
        fn closed_form_matches_quadrature(g in arb_step()) {
            let params = p(2.0);
            let closed = phi_with(&g, params, PhiMethod::Auto);
            let quad = phi_with(&g, params, PhiMethod::Quadrature);
            prop_assert!((closed - quad).abs() <= 1e-9 * closed.max(1e-300));
        }
    }
}
