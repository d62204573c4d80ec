use super::functional::{integral, p_moment, pow};
use super::step::StepFunction;
use crate::bellman::{MomentPair, PParams};
use crate::error::{Error, Result};

/// Maps `g` to `a g + b` with `a > 0` so that `∫ = f` and `∫ (·)^p = F`.
///
/// With `b = f - a ∫g` the p-th moment `P(a) = ∫ (f + a (g - ∫g))^p` is
/// convex in `a` with its minimum `f^p` at `a = 0`, so the root on
/// `[0, a_max]` is unique; `a_max` is the largest `a` keeping the smallest
/// value nonnegative. Monotonicity survives because `a > 0`.
pub fn renormalize_moments(
    g: &StepFunction,
    target: MomentPair,
    params: PParams,
) -> Result<StepFunction> {
    target.check(params)?;
    let (f, big_f) = (target.f(), target.big_f());
    if target.is_trivial(params) {
        return StepFunction::constant_on(g.breakpoints().to_vec(), f);
    }

    let mass = integral(g);
    let moment = p_moment(g, params);
    if close(mass, f) && close(moment, big_f) {
        return Ok(g.clone());
    }

    let lengths = g.lengths();
    let values = g.values();
    let v_min = *values.last().unwrap();
    let spread = mass - v_min;
    if !(spread > 0.0) {
        return Err(Error::InfeasibleProjection(format!(
            "g is constant, cannot reach F = {big_f} > f^p"
        )));
    }

    let p = params.p();
    let moment_at = |a: f64| -> f64 {
        let b = f - a * mass;
        values
            .iter()
            .zip(&lengths)
            .map(|(v, len)| pow((a * v + b).max(0.0), p) * len)
            .sum()
    };

    let a_max = f / spread;
    if moment_at(a_max) < big_f {
        return Err(Error::InfeasibleProjection(format!(
            "largest admissible stretch a = {a_max} reaches p-moment {} < F = {big_f}",
            moment_at(a_max)
        )));
    }

    let (mut lo, mut hi) = (0.0, a_max);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if moment_at(mid) < big_f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = if (moment_at(lo) - big_f).abs() <= (moment_at(hi) - big_f).abs() {
        lo
    } else {
        hi
    };
    let b = f - a * mass;
    let out = values.iter().map(|v| (a * v + b).max(0.0)).collect();
    Ok(StepFunction::from_parts_unchecked(
        g.breakpoints().to_vec(),
        out,
    ))
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-14 * y.abs()
}
