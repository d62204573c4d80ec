//! Seeded random instances for property sweeps.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::dyadic::{DyadicTree, LeafFunction};
use crate::error::Result;
use crate::monotone::StepFunction;

/// Leaf values from a mix of shapes: flat noise, sparse spikes and
/// heavy-tailed samples, with random zeros.
pub fn random_leaf_function<R: Rng>(tree: DyadicTree, rng: &mut R) -> Result<LeafFunction> {
    let shape = rng.random_range(0..3u8);
    let zero_rate = rng.random::<f64>() * 0.5;
    let values = (0..tree.leaves())
        .map(|_| {
            if rng.random::<f64>() < zero_rate {
                return 0.0;
            }
            let x: f64 = Exp1.sample(rng);
            match shape {
                0 => x,
                1 => if rng.random::<f64>() < 0.05 { 20.0 * x } else { 0.1 * x },
                _ => x.powi(3),
            }
        })
        .collect();
    LeafFunction::new(tree, values)
}

/// Non-increasing step function with `cells` random cells and sorted
/// exponential values.
pub fn random_step_function<R: Rng>(cells: usize, rng: &mut R) -> Result<StepFunction> {
    let cells = cells.max(1);
    let mut cuts: Vec<f64> = (0..cells - 1).map(|_| rng.random::<f64>()).collect();
    cuts.retain(|&x| x > 1e-6 && x < 1.0 - 1e-6);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut breakpoints = vec![0.0];
    breakpoints.extend(cuts);
    breakpoints.push(1.0);
    let mut values: Vec<f64> = (0..breakpoints.len() - 1)
        .map(|_| Exp1.sample(rng))
        .map(|x: f64| x * x)
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    StepFunction::new(breakpoints, values)
}
