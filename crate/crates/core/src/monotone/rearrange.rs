use super::step::StepFunction;
use crate::error::{Error, Result};

const LENGTH_SUM_TOL: f64 = 1e-12;

/// Equimeasurable decreasing rearrangement of a nonnegative function given
/// as `values[i]` on pieces of measure `lengths[i]` partitioning `(0, 1]`.
pub fn decreasing_rearrangement(values: &[f64], lengths: &[f64]) -> Result<StepFunction> {
    if values.len() != lengths.len() || values.is_empty() {
        return Err(Error::domain(format!(
            "{} values for {} lengths",
            values.len(),
            lengths.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::domain(format!("values must be finite and >= 0, got {v}")));
    }
    if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::domain(format!("lengths must be finite and >= 0, got {l}")));
    }
    let total: f64 = lengths.iter().sum();
    if (total - 1.0).abs() > LENGTH_SUM_TOL {
        return Err(Error::domain(format!("lengths sum to {total}, not 1")));
    }

    let mut order: Vec<usize> = (0..values.len()).filter(|&i| lengths[i] > 0.0).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let mut breakpoints = Vec::with_capacity(order.len() + 1);
    let mut sorted = Vec::with_capacity(order.len());
    breakpoints.push(0.0);
    let mut acc = 0.0;
    for (k, &i) in order.iter().enumerate() {
        acc += lengths[i];
        let right = if k + 1 == order.len() { 1.0 } else { acc };
        if right <= *breakpoints.last().unwrap() {
            // piece below the resolution of the running sum; fold into the previous cell
            continue;
        }
        breakpoints.push(right);
        sorted.push(values[i]);
    }
    if sorted.is_empty() {
        return Err(Error::domain("no piece of positive measure"));
    }
    *breakpoints.last_mut().unwrap() = 1.0;
    StepFunction::new(breakpoints, sorted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::PParams;
    use crate::monotone::{integral, p_moment};
    use proptest::prelude::*;

    #[test]
    fn sorted_input_is_identity() {
        let g = decreasing_rearrangement(&[1.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(g.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.values(), &[1.5, 0.5]);
    }

    #[test]
    fn swap() {
        let g = decreasing_rearrangement(&[0.5, 1.5], &[0.5, 0.5]).unwrap();
        assert_eq!(g.values(), &[1.5, 0.5]);
        assert_eq!(g.breakpoints(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn errors() {
        assert!(decreasing_rearrangement(&[1.0, 2.0], &[0.5, 0.4]).is_err());
        assert!(decreasing_rearrangement(&[1.0], &[0.5, 0.5]).is_err());
        assert!(decreasing_rearrangement(&[-1.0, 2.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_length_pieces_dropped() {
        let g = decreasing_rearrangement(&[9.0, 1.0, 2.0], &[0.0, 0.25, 0.75]).unwrap();
        assert_eq!(g.values(), &[2.0, 1.0]);
        assert_eq!(g.breakpoints(), &[0.0, 0.75, 1.0]);
    }

    proptest! {
        #[test]
        fn moments_invariant(vals in proptest::collection::vec(0.0f64..10.0, 1..64), pp in 1.1f64..4.0) {
            let n = vals.len();
            let lengths = vec![1.0 / n as f64; n];
            let g = decreasing_rearrangement(&vals, &lengths).unwrap();
            let params = PParams::new(pp).unwrap();
            let mass: f64 = vals.iter().map(|v| v / n as f64).sum();
            let moment: f64 = vals.iter().map(|v| v.powf(pp) / n as f64).sum();
            prop_assert!((integral(&g) - mass).abs() <= 1e-13 * mass.max(1.0));
            prop_assert!((p_moment(&g, params) - moment).abs() <= 1e-13 * moment.max(1.0));
            prop_assert!(g.values().windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
