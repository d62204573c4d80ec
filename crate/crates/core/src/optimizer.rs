//! Projected gradient ascent of `Φ_p` over non-increasing step functions
//! with prescribed moments `(f, F)` on a fixed grid.
//!
//! Each iteration takes a step along the functional gradient, restores
//! monotonicity with weighted pool-adjacent-violators, then restores the
//! moments with the affine renormalization. Steps that do not increase the
//! objective are rejected and the step size is halved.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::bellman::{bellman_value, MomentPair, PParams};
use crate::error::{Error, Result};
use crate::extremal::{build_g0, discretize_g0_on};
use crate::monotone::{
    defect, fmt_f64, lp_distance, phi_functional, pow, renormalize_moments, CumulativeProfile,
    StepFunction,
};
use crate::quad;

/// Consecutive accepted steps after which the step size is reset upwards.
const ACCEPTS_BEFORE_RESET: usize = 5;
/// Step sizes below this end the run.
const MIN_STEP: f64 = 1e-14;
/// Relative floor on values inside the metric weights.
const METRIC_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AscentConfig {
    pub cells: usize,
    pub max_iters: usize,
    pub step_size: f64,
    pub tol_obj: f64,
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            cells: 1 << 12,
            max_iters: 5000,
            step_size: 1e-2,
            tol_obj: 1e-12,
            seed: 0,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells < 8 {
            return Err(Error::Config(format!("cells must be >= 8, got {}", self.cells)));
        }
        if !(self.tol_obj > 0.0) {
            return Err(Error::Config(format!("tol_obj must be > 0, got {}", self.tol_obj)));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!(
                "step_size must be > 0, got {}",
                self.step_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentRecord {
    pub iter: usize,
    /// Objective of the current iterate after this iteration.
    pub objective: f64,
    pub defect: f64,
    pub lp_dist: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AscentTrace {
    pub records: Vec<AscentRecord>,
}

impl AscentTrace {
    /// `iter,objective,defect,lp_dist,accepted`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["iter", "objective", "defect", "lp_dist", "accepted"])?;
        for r in &self.records {
            out.write_record([
                r.iter.to_string(),
                fmt_f64(r.objective),
                fmt_f64(r.defect),
                fmt_f64(r.lp_dist),
                (r.accepted as u8).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn accepted(&self) -> impl Iterator<Item = &AscentRecord> {
        self.records.iter().filter(|r| r.accepted)
    }
}

#[derive(Debug, Clone)]
pub struct AscentOutcome {
    pub best: StepFunction,
    pub trace: AscentTrace,
    /// False when `max_iters` ran out before the gain dropped below `tol_obj`.
    pub converged: bool,
    /// Largest objective over every evaluated candidate, accepted or not.
    pub max_candidate_objective: f64,
    pub bellman: f64,
}

impl AscentOutcome {
    pub fn objective(&self) -> f64 {
        self.trace
            .records
            .last()
            .map(|r| r.objective)
            .unwrap_or(f64::NAN)
    }
}

/// Weighted pool-adjacent-violators fit onto non-increasing sequences.
pub fn pava_nonincreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // (weighted sum, weight, cells)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v * w, w, 1));
        while blocks.len() > 1 {
            let (s1, w1, _) = blocks[blocks.len() - 1];
            let (s0, w0, _) = blocks[blocks.len() - 2];
            if s0 / w0 >= s1 / w1 {
                break;
            }
            let (_, _, n1) = blocks.pop().unwrap();
            let last = blocks.last_mut().unwrap();
            last.0 += s1;
            last.1 += w1;
            last.2 += n1;
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, w, n) in blocks {
        out.extend(std::iter::repeat_n(s / w, n));
    }
    out
}

/// Weighted PAVA on the grid's cell lengths, then moment renormalization.
pub fn project(
    values: &[f64],
    breakpoints: &[f64],
    target: MomentPair,
    params: PParams,
) -> Result<StepFunction> {
    if breakpoints.len() != values.len() + 1 {
        return Err(Error::domain(format!(
            "{} values on {} breakpoints",
            values.len(),
            breakpoints.len()
        )));
    }
    let lengths: Vec<f64> = breakpoints.windows(2).map(|w| w[1] - w[0]).collect();
    project_weighted(values, breakpoints, &lengths, target, params)
}

fn project_weighted(
    values: &[f64],
    breakpoints: &[f64],
    weights: &[f64],
    target: MomentPair,
    params: PParams,
) -> Result<StepFunction> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite candidate value {v}")));
    }
    let mut pooled = pava_nonincreasing(values, weights);
    // the affine family a g + b is shift invariant, so lifting to a
    // nonnegative representative does not change the projection
    let floor = *pooled.last().unwrap();
    if floor < 0.0 {
        pooled.iter_mut().for_each(|v| *v = (*v - floor).max(0.0));
    }
    for i in 1..pooled.len() {
        if pooled[i] > pooled[i - 1] {
            pooled[i] = pooled[i - 1];
        }
    }
    let g = StepFunction::new(breakpoints.to_vec(), pooled)?;
    renormalize_moments(&g, target, params)
}

/// `∂Φ_p/∂v_i = p ∫_0^1 (Hg)^(p-1) w_i(t) dt` with
/// `w_i(t) = |cell_i ∩ (0, t]| / t`.
///
/// Splits into the on-cell part `K_i` and `Δ_i Σ_{j>i} J_j` with
/// `J_j = ∫_{cell j} (Hg)^(p-1) / t`, so the whole gradient costs O(n).
pub fn gradient(g: &StepFunction, params: PParams) -> Vec<f64> {
    gradient_slices(g.breakpoints(), g.values(), params.p())
}

pub(crate) fn gradient_slices(breakpoints: &[f64], values: &[f64], p: f64) -> Vec<f64> {
    let profile = CumulativeProfile::from_slices(breakpoints, values);
    let n = values.len();
    let mut on_cell = vec![0.0; n];
    let mut after = vec![0.0; n];
    for i in 0..n {
        let (t0, t1) = (breakpoints[i], breakpoints[i + 1]);
        let v = values[i];
        let a = profile.hardy_offset(i);
        let len = t1 - t0;
        if t0 == 0.0 || a == 0.0 {
            let h = pow(v, p - 1.0);
            on_cell[i] = if t0 == 0.0 { h * len } else { h * (len - t0 * (t1 / t0).ln()) };
            after[i] = if t0 == 0.0 { 0.0 } else { h * (t1 / t0).ln() };
            continue;
        }
        if p == 2.0 {
            let log = (t1 / t0).ln();
            after[i] = v * log + a * len / (t0 * t1);
            on_cell[i] = v * len + (a - v * t0) * log - a * len / t1;
        } else {
            let hardy = |t: f64| pow(v + a / t, p - 1.0);
            after[i] = quad::integrate_cell(|t| hardy(t) / t, t0, t1);
            on_cell[i] = quad::integrate_cell(|t| hardy(t) * (1.0 - t0 / t), t0, t1);
        }
    }
    let mut grad = vec![0.0; n];
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        grad[i] = p * (on_cell[i] + (breakpoints[i + 1] - breakpoints[i]) * suffix);
        suffix += after[i];
    }
    grad
}

/// Per-cell weights `μ_i = Δ_i max(v_i, floor)^(p-2)` of the metric the
/// ascent runs in. For `p = 2` this is plain `L^2(0, 1)`.
pub fn metric_weights(g: &StepFunction, params: PParams) -> Vec<f64> {
    let p = params.p();
    let lengths = g.lengths();
    if p == 2.0 {
        return lengths;
    }
    let mass: f64 = g.values().iter().zip(&lengths).map(|(v, l)| v * l).sum();
    let floor = METRIC_FLOOR * mass.max(f64::MIN_POSITIVE);
    g.values()
        .iter()
        .zip(&lengths)
        .map(|(&v, l)| l * v.max(floor).powf(p - 2.0))
        .collect()
}

/// Gradient of `Φ_p` in the metric `μ` with its components along the
/// gradients of the two moment constraints removed.
pub fn tangent_direction(g: &StepFunction, grad: &[f64], params: PParams) -> Vec<f64> {
    let weights = metric_weights(g, params);
    tangent_in(g, grad, &weights, params)
}

fn tangent_in(g: &StepFunction, grad: &[f64], weights: &[f64], params: PParams) -> Vec<f64> {
    let lengths = g.lengths();
    let p = params.p();
    let d: Vec<f64> = grad.iter().zip(weights).map(|(a, w)| a / w).collect();
    let n1: Vec<f64> = lengths.iter().zip(weights).map(|(l, w)| l / w).collect();
    let n2: Vec<f64> = g
        .values()
        .iter()
        .zip(&n1)
        .map(|(&v, n)| n * pow(v, p - 1.0))
        .collect();
    let dot = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).zip(weights).map(|((a, b), w)| a * b * w).sum()
    };
    let (g11, g12, g22) = (dot(&n1, &n1), dot(&n1, &n2), dot(&n2, &n2));
    let (r1, r2) = (dot(&d, &n1), dot(&d, &n2));
    let det = g11 * g22 - g12 * g12;
    if !(det > 1e-14 * g11 * g22) {
        let l1 = r1 / g11;
        return d.iter().zip(&n1).map(|(x, n)| x - l1 * n).collect();
    }
    let l1 = (r1 * g22 - r2 * g12) / det;
    let l2 = (g11 * r2 - g12 * r1) / det;
    d.iter()
        .zip(n1.iter().zip(&n2))
        .map(|(x, (a, b))| x - l1 * a - l2 * b)
        .collect()
}

/// Random feasible start: sorted exponential samples, projected.
///
/// Samples that are too flat to reach `F` are sharpened by raising them to
/// the powers 2, 4, 8, ... until the projection succeeds.
pub fn random_start(
    breakpoints: &[f64],
    target: MomentPair,
    params: PParams,
    seed: u64,
) -> Result<StepFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..breakpoints.len() - 1)
        .map(|_| Exp1.sample(&mut rng))
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let mut power = 1.0;
    loop {
        let shaped: Vec<f64> = values.iter().map(|v| v.powf(power)).collect();
        match project(&shaped, breakpoints, target, params) {
            Err(Error::InfeasibleProjection(_)) if power < 64.0 => power *= 2.0,
            other => return other,
        }
    }
}

/// Projected gradient ascent from a seeded random start.
pub fn maximize(config: &AscentConfig, params: PParams, target: MomentPair) -> Result<AscentOutcome> {
    config.validate()?;
    target.check(params)?;
    let g0 = build_g0(params, target)?;
    let bellman = bellman_value(params, target)?;
    let grid = g0.grid(params, config.cells)?;
    let reference = discretize_g0_on(&g0, grid.clone(), target, params)?;

    let diagnostics = |g: &StepFunction| -> Result<(f64, f64)> {
        Ok((defect(g, g0.c, params)?.value(), lp_distance(g, &reference, params)))
    };

    let mut trace = AscentTrace::default();
    if target.is_trivial(params) {
        let g = StepFunction::constant_on(grid, target.f())?;
        let objective = phi_functional(&g, params);
        let (d, l) = diagnostics(&g)?;
        trace.records.push(AscentRecord {
            iter: 0,
            objective,
            defect: d,
            lp_dist: l,
            accepted: true,
        });
        return Ok(AscentOutcome {
            best: g,
            trace,
            converged: true,
            max_candidate_objective: objective,
            bellman,
        });
    }

    let mut current = random_start(&grid, target, params, config.seed)?;
    let mut objective = phi_functional(&current, params);
    let mut max_candidate = objective;
    let (d, l) = diagnostics(&current)?;
    trace.records.push(AscentRecord {
        iter: 0,
        objective,
        defect: d,
        lp_dist: l,
        accepted: true,
    });

    let mut step = config.step_size;
    let mut streak = 0;
    let mut converged = false;
    for iter in 1..=config.max_iters {
        let weights = metric_weights(&current, params);
        let direction = tangent_in(&current, &gradient(&current, params), &weights, params);
        let candidate: Vec<f64> = current
            .values()
            .iter()
            .zip(&direction)
            .map(|(v, d)| v + step * d)
            .collect();
        let accepted = match project_weighted(&candidate, &grid, &weights, target, params) {
            Ok(next) => {
                let next_objective = phi_functional(&next, params);
                max_candidate = max_candidate.max(next_objective);
                if next_objective > objective {
                    let gain = next_objective - objective;
                    current = next;
                    objective = next_objective;
                    if gain < config.tol_obj {
                        converged = true;
                    }
                    true
                } else {
                    false
                }
            }
            Err(Error::InfeasibleProjection(_)) => false,
            Err(e) => return Err(e),
        };
        if accepted {
            streak += 1;
            if streak >= ACCEPTS_BEFORE_RESET {
                step *= 2.0;
                streak = 0;
            }
        } else {
            streak = 0;
            step *= 0.5;
        }
        let (d, l) = diagnostics(&current)?;
        trace.records.push(AscentRecord {
            iter,
            objective,
            defect: d,
            lp_dist: l,
            accepted,
        });
        if converged || step < MIN_STEP {
            converged = true;
            break;
        }
    }

    Ok(AscentOutcome {
        best: current,
        trace,
        converged,
        max_candidate_objective: max_candidate,
        bellman,
    })
}
