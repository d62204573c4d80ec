//! Tree side of the problem on `[0, 1)`: the dyadic maximal operator, the
//! symmetrization bound against `Φ_p`, and the ranked family `S_m`, `A_m`
//! carrying the functions `φ_a` built from a non-increasing `g`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::PParams;
use crate::error::{Error, Result};
use crate::monotone::{
    decreasing_rearrangement, phi_between, phi_functional, pow, CumulativeProfile, StepFunction,
};

/// Depths above this would not fit the leaf array in memory.
pub const MAX_TREE_DEPTH: u32 = 26;

/// Default depth rule: least `M` with `(1 - a)^M <= DEPTH_TAIL`.
pub const DEPTH_TAIL: f64 = 1e-6;
/// Uncovered share of `∫g` above which `φ_a` is flagged as truncated.
pub const TRUNCATION_TOL: f64 = 1e-9;
pub const DEFAULT_COVER_LEVELS: u32 = 4;

/// Dyadic intervals `[j 2^-m, (j+1) 2^-m)` for `m <= depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicTree {
    depth: u32,
}

impl DyadicTree {
    pub fn new(depth: u32) -> Result<Self> {
        if depth > MAX_TREE_DEPTH {
            return Err(Error::domain(format!(
                "tree depth {depth} exceeds {MAX_TREE_DEPTH}"
            )));
        }
        Ok(DyadicTree { depth })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaves(&self) -> usize {
        1 << self.depth
    }

    pub fn node_count(&self) -> usize {
        (1 << (self.depth + 1)) - 1
    }

    /// `[j 2^-m, (j+1) 2^-m)`.
    pub fn node(&self, m: u32, j: usize) -> (f64, f64) {
        let w = (-(m as f64)).exp2();
        (j as f64 * w, (j + 1) as f64 * w)
    }

    pub fn leaf_measure(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }
}

/// Nonnegative values on the leaves of a [`DyadicTree`], left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafFunction {
    depth: u32,
    values: Vec<f64>,
}

impl LeafFunction {
    pub fn new(tree: DyadicTree, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.leaves() {
            return Err(Error::domain(format!(
                "depth {} needs {} leaf values, got {}",
                tree.depth(),
                tree.leaves(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!("leaf values must be finite and >= 0, got {v}")));
        }
        Ok(LeafFunction { depth: tree.depth(), values })
    }

    pub fn constant(tree: DyadicTree, value: f64) -> Result<Self> {
        Self::new(tree, vec![value; tree.leaves()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `φ*` as a step function on `(0, 1]`.
    pub fn rearrangement(&self) -> Result<StepFunction> {
        let w = 1.0 / self.values.len() as f64;
        decreasing_rearrangement(&self.values, &vec![w; self.values.len()])
    }
}

/// `M_T φ` on each leaf: the largest average over the leaf's ancestors,
/// carried down as a running max.
pub fn maximal_operator(tree: &DyadicTree, phi: &LeafFunction) -> Result<LeafFunction> {
    if phi.depth != tree.depth() {
        return Err(Error::domain(format!(
            "leaf function of depth {} on a tree of depth {}",
            phi.depth,
            tree.depth()
        )));
    }
    // averages by level, leaves first
    let mut levels = vec![phi.values.clone()];
    while levels.last().unwrap().len() > 1 {
        let below = levels.last().unwrap();
        levels.push(below.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect());
    }
    let mut running = vec![levels.last().unwrap()[0]];
    for level in levels.iter().rev().skip(1) {
        running = level
            .iter()
            .enumerate()
            .map(|(j, &avg)| avg.max(running[j / 2]))
            .collect();
    }
    Ok(LeafFunction {
        depth: phi.depth,
        values: running,
    })
}

/// `(Σ (M_T φ)^p 2^-N, Φ_p(φ*))`; the first never exceeds the second.
pub fn symmetrization_check(
    tree: &DyadicTree,
    phi: &LeafFunction,
    params: PParams,
) -> Result<(f64, f64)> {
    let m = maximal_operator(tree, phi)?;
    let p = params.p();
    let lhs = m.values.iter().map(|&v| pow(v, p)).sum::<f64>() * tree.leaf_measure();
    let rhs = phi_functional(&phi.rearrangement()?, params);
    Ok((lhs, rhs))
}

/// Ranked family for a parameter `a` in `(0, 1)`: `S_m = [0, (1-a)^m)` and
/// `A_m = [(1-a)^(m+1), (1-a)^m)` for `m <= depth`, with each `A_m` split
/// into `branching` equal pieces, each covered dyadically `cover_levels`
/// times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaTree {
    a: f64,
    depth: u32,
    branching: u32,
    cover_levels: u32,
}

impl AlphaTree {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::domain(format!("a must lie in (0, 1), got {a}")));
        }
        Ok(AlphaTree {
            a,
            depth: default_depth(a),
            branching: 1,
            cover_levels: DEFAULT_COVER_LEVELS,
        })
    }

    pub fn with_depth(mut self, depth: u32) -> Result<Self> {
        if depth == 0 || depth > 100_000 {
            return Err(Error::domain(format!("alpha-tree depth {depth} out of range")));
        }
        self.depth = depth;
        Ok(self)
    }

    pub fn with_branching(mut self, b: u32) -> Result<Self> {
        if b == 0 || b > 1 << 10 {
            return Err(Error::domain(format!("branching factor {b} out of range")));
        }
        self.branching = b;
        Ok(self)
    }

    pub fn with_cover_levels(mut self, levels: u32) -> Result<Self> {
        if levels > 16 {
            return Err(Error::domain(format!("cover levels {levels} > 16")));
        }
        self.cover_levels = levels;
        Ok(self)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    pub fn cover_levels(&self) -> u32 {
        self.cover_levels
    }

    /// `µ(S_m) = (1-a)^m`.
    pub fn rank_start(&self, m: u32) -> f64 {
        if m == 0 {
            return 1.0;
        }
        (m as f64 * (-self.a).ln_1p()).exp()
    }

    /// `µ(A_m)`, taken as `µ(S_m) - µ(S_{m+1})` so the ranks tile exactly.
    pub fn rank_measure(&self, m: u32) -> f64 {
        self.rank_start(m) - self.rank_start(m + 1)
    }

    /// `1 - (1-a)^(depth+1)`.
    pub fn covered_measure(&self) -> f64 {
        1.0 - self.rank_start(self.depth + 1)
    }

    /// Least `m` with `(1-a)^m <= gamma`, so `S_m ⊂ [0, gamma)`.
    pub fn start_rank(&self, gamma: f64) -> Result<u32> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::domain(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        let mut m = (gamma.ln() / (-self.a).ln_1p()).floor().max(0.0) as u32;
        while m > 0 && self.rank_start(m - 1) <= gamma {
            m -= 1;
        }
        while self.rank_start(m) > gamma {
            m += 1;
        }
        if m > self.depth {
            return Err(Error::domain(format!(
                "gamma = {gamma} lies below the deepest rank {}",
                self.depth
            )));
        }
        Ok(m)
    }

    /// `γ_m = (1/µ(A_m)) ∫_{A_m} g` for `m = 0..=depth`.
    pub fn gammas(&self, g: &StepFunction) -> Vec<f64> {
        let profile = CumulativeProfile::new(g);
        (0..=self.depth)
            .map(|m| {
                let (lo, hi) = (self.rank_start(m + 1), self.rank_start(m));
                (profile.at(hi) - profile.at(lo)) / (hi - lo)
            })
            .collect()
    }

    /// `θ_m = (1/µ(S_m)) ∫_{S_m} g` for `m = 0..=depth`.
    pub fn thetas(&self, g: &StepFunction) -> Vec<f64> {
        let profile = CumulativeProfile::new(g);
        (0..=self.depth)
            .map(|m| {
                let s = self.rank_start(m);
                profile.at(s) / s
            })
            .collect()
    }
}

fn default_depth(a: f64) -> u32 {
    let mut m = (DEPTH_TAIL.ln() / (-a).ln_1p()).ceil().max(1.0) as u32;
    let start = |m: u32| (m as f64 * (-a).ln_1p()).exp();
    while m > 1 && start(m - 1) <= DEPTH_TAIL {
        m -= 1;
    }
    while start(m) > DEPTH_TAIL {
        m += 1;
    }
    m
}

/// `φ_a` as contiguous pieces of `[0, 1)`: the tail block `[0, (1-a)^(M+1))`
/// followed by `A_M, ..., A_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiA {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// `region[k]` is the rank of piece `k`, or `None` inside the tail block.
    region: Vec<Option<u32>>,
    uncovered_mass: f64,
    truncated: bool,
}

impl PhiA {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ g` over the tail block.
    pub fn uncovered_mass(&self) -> f64 {
        self.uncovered_mass
    }

    /// True when the tail block holds more than `1e-9` of `∫ g`.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn rank_of_piece(&self, k: usize) -> Option<u32> {
        self.region[k]
    }

    /// Sum of transported masses over pieces contained in `[0, s)`, where
    /// `s` is a piece boundary.
    pub fn mass_before(&self, s: f64) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .take_while(|(w, _)| w[1] <= s)
            .map(|(w, v)| v * (w[1] - w[0]))
            .sum()
    }

    /// Sorted `(value, mass)` pairs with equal values merged.
    pub fn distribution(&self) -> Vec<(f64, f64)> {
        merged_distribution(&self.values, &self.lengths())
    }

    pub fn rearrangement(&self) -> Result<StepFunction> {
        decreasing_rearrangement(&self.values, &self.lengths())
    }
}

/// Sorted `(value, mass)` pairs, equal values merged, zero masses dropped.
pub fn merged_distribution(values: &[f64], lengths: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(lengths)
        .filter(|(_, &l)| l > 0.0)
        .map(|(&v, &l)| (v, l))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (v, l) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += l,
            _ => out.push((v, l)),
        }
    }
    out
}

/// Pieces `(value, length)` of `g` restricted to `(lo, hi]`, left to right.
fn restrict(g: &StepFunction, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let bps = g.breakpoints();
    let first = g.cell_index(lo.max(f64::MIN_POSITIVE));
    let mut out = Vec::new();
    for i in first..g.len() {
        let (t0, t1) = (bps[i].max(lo), bps[i + 1].min(hi));
        if t1 > t0 {
            out.push((g.values()[i], t1 - t0));
        }
        if bps[i + 1] >= hi {
            break;
        }
    }
    out
}

/// Transport of `g` onto the ranked family.
///
/// On `A_m` each branch receives a copy of `g` restricted to
/// `((1-a)^(m+1), (1-a)^m]` with every piece shrunk by the factor `1/b`,
/// kept in order. Every branch therefore averages `γ_m` and `φ_a` has the
/// distribution of `g`. For `b = 1` this is the identity.
pub fn build_phi_a(alpha: &AlphaTree, g: &StepFunction) -> Result<PhiA> {
    let total: f64 = crate::monotone::integral(g);
    let mut breakpoints = vec![0.0];
    let mut values = Vec::new();
    let mut region = Vec::new();
    let b = alpha.branching() as usize;

    let tail_end = alpha.rank_start(alpha.depth() + 1);
    let mut uncovered_mass = 0.0;
    for (v, len) in restrict(g, 0.0, tail_end) {
        let next = breakpoints.last().unwrap() + len;
        breakpoints.push(next);
        values.push(v);
        region.push(None);
        uncovered_mass += v * len;
    }
    *breakpoints.last_mut().unwrap() = tail_end;

    for m in (0..=alpha.depth()).rev() {
        let (lo, hi) = (alpha.rank_start(m + 1), alpha.rank_start(m));
        let pieces = restrict(g, lo, hi);
        for k in 0..b {
            let branch_hi = if k + 1 == b {
                hi
            } else {
                lo + (hi - lo) * (k + 1) as f64 / b as f64
            };
            let mut pos = *breakpoints.last().unwrap();
            for (j, &(v, len)) in pieces.iter().enumerate() {
                pos = if j + 1 == pieces.len() { branch_hi } else { pos + len / b as f64 };
                if pos <= *breakpoints.last().unwrap() {
                    continue;
                }
                breakpoints.push(pos);
                values.push(v);
                region.push(Some(m));
            }
        }
    }
    let truncated = uncovered_mass > TRUNCATION_TOL * total;
    Ok(PhiA {
        breakpoints,
        values,
        region,
        uncovered_mass,
        truncated,
    })
}

/// `|Av_{S_m}(φ_a) - (1/(1-a)^m) ∫_0^{(1-a)^m} g|`: the left side sums the
/// transported masses, the right side reads the cumulative profile of `g`.
pub fn average_identity_check(alpha: &AlphaTree, phi_a: &PhiA, g: &StepFunction, m: u32) -> Result<f64> {
    if m > alpha.depth() + 1 {
        return Err(Error::domain(format!(
            "rank {m} beyond depth {}",
            alpha.depth()
        )));
    }
    let s = alpha.rank_start(m);
    let left = phi_a.mass_before(s) / s;
    let right = CumulativeProfile::new(g).at(s) / s;
    Ok((left - right).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub a: f64,
    /// `Σ_{ℓ=m_a}^{M} θ_ℓ^p µ(A_ℓ)`.
    pub lower: f64,
    /// `∫ (M φ_a)^p` over `A_{m_a} ∪ ... ∪ A_M` on the realized nodes.
    pub tree: f64,
    /// `∫ (Hg)^p` over the same covered region.
    pub upper: f64,
    pub start_rank: u32,
    pub depth: u32,
    pub truncated: bool,
}

impl Sandwich {
    /// `(upper - lower) / upper`.
    pub fn relative_gap(&self) -> f64 {
        if self.upper == 0.0 {
            return 0.0;
        }
        (self.upper - self.lower) / self.upper
    }

    pub fn is_ordered(&self, tol: f64) -> bool {
        let slack = tol * self.upper.abs().max(1.0);
        self.lower <= self.tree + slack && self.tree <= self.upper + slack
    }
}

/// Lower Riemann sum, realized tree value and Hardy upper bound over the
/// ranks `m_a..=M`, where `m_a` is the least rank with `S_{m_a} ⊂ [0, gamma)`.
///
/// In chain mode every realized node containing `x ∈ A_ℓ` averages at most
/// `Hg(x)` and `S_ℓ` averages exactly `θ_ℓ`, which gives the ordering.
pub fn sandwich(alpha: &AlphaTree, g: &StepFunction, params: PParams, gamma: f64) -> Result<Sandwich> {
    let m_a = alpha.start_rank(gamma)?;
    let p = params.p();
    let phi_a = build_phi_a(alpha, g)?;

    let thetas = alpha.thetas(g);
    let lower: f64 = (m_a..=alpha.depth())
        .map(|l| pow(thetas[l as usize], p) * alpha.rank_measure(l))
        .sum();

    // masses of φ_a on S_m, accumulated from the left
    let lengths = phi_a.lengths();
    let mut s_mass = vec![0.0; alpha.depth() as usize + 2];
    let mut acc = 0.0;
    let mut k = 0;
    for m in (0..=alpha.depth() + 1).rev() {
        let s = alpha.rank_start(m);
        while k < lengths.len() && phi_a.breakpoints[k + 1] <= s {
            acc += phi_a.values[k] * lengths[k];
            k += 1;
        }
        s_mass[m as usize] = acc;
    }

    let mut running = 0.0f64;
    let mut tree = 0.0;
    for l in 0..=alpha.depth() {
        let s = alpha.rank_start(l);
        running = running.max(s_mass[l as usize] / s);
        if l < m_a {
            continue;
        }
        tree += rank_tree_value(alpha, &phi_a, l, running, p);
    }

    let upper = phi_between(g, params, alpha.rank_start(alpha.depth() + 1), alpha.rank_start(m_a))?;
    Ok(Sandwich {
        a: alpha.a(),
        lower,
        tree,
        upper,
        start_rank: m_a,
        depth: alpha.depth(),
        truncated: phi_a.truncated(),
    })
}

/// `∫_{A_ℓ} (M φ_a)^p` over the nodes `A_ℓ`, its branches and their dyadic
/// covers, given the running max `inherited` over the `S_m` containing `A_ℓ`.
fn rank_tree_value(alpha: &AlphaTree, phi_a: &PhiA, l: u32, inherited: f64, p: f64) -> f64 {
    let (lo, hi) = (alpha.rank_start(l + 1), alpha.rank_start(l));
    let b = alpha.branching() as usize;
    let fine = 1usize << alpha.cover_levels();
    let cells = b * fine;
    let width = (hi - lo) / cells as f64;
    let edge = |c: usize| if c == cells { hi } else { lo + width * c as f64 };

    // exact masses on the finest cover cells
    let mut masses = vec![0.0; cells];
    let bps = &phi_a.breakpoints;
    let start = bps.partition_point(|&x| x <= lo).saturating_sub(1);
    for k in start..phi_a.values.len() {
        let (u, w) = (bps[k].max(lo), bps[k + 1].min(hi));
        if bps[k] >= hi {
            break;
        }
        if w <= u {
            continue;
        }
        let v = phi_a.values[k];
        let mut c = (((u - lo) / width) as usize).min(cells - 1);
        while c > 0 && edge(c) > u {
            c -= 1;
        }
        let mut left = u;
        while left < w && c < cells {
            let right = edge(c + 1).min(w);
            if right > left {
                masses[c] += v * (right - left);
            }
            left = right;
            c += 1;
        }
    }

    let rank_avg: f64 = masses.iter().sum::<f64>() / (hi - lo);
    let base = inherited.max(rank_avg);
    let mut total = 0.0;
    for branch in masses.chunks(fine) {
        // sums per cover level, finest first
        let mut levels = vec![branch.to_vec()];
        while levels.last().unwrap().len() > 1 {
            let below = levels.last().unwrap();
            levels.push(below.chunks(2).map(|c| c[0] + c[1]).collect());
        }
        let mut running = vec![base];
        for (depth, level) in levels.iter().rev().enumerate() {
            let measure = (hi - lo) / (b << depth) as f64;
            running = level
                .iter()
                .enumerate()
                .map(|(j, &mass)| (mass / measure).max(running[j / 2]))
                .collect();
        }
        let measure = (hi - lo) / cells as f64;
        total += running.iter().map(|&v| pow(v, p) * measure).sum::<f64>();
    }
    total
}

/// One row of the `a` sweep: `a,lower,tree,upper,gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub a: f64,
    pub lower: f64,
    pub tree: f64,
    pub upper: f64,
    pub gap: f64,
}

/// The default schedule `a ∈ {0.5, 0.2, 0.1, 0.05, 0.02}`.
pub const A_SCHEDULE: [f64; 5] = [0.5, 0.2, 0.1, 0.05, 0.02];

/// Sandwiches along a schedule of `a`, evaluated in parallel.
pub fn sandwich_sweep(
    g: &StepFunction,
    params: PParams,
    schedule: &[f64],
    gamma: f64,
    branching: u32,
) -> Result<Vec<Sandwich>> {
    schedule
        .par_iter()
        .map(|&a| {
            let alpha = AlphaTree::new(a)?.with_branching(branching)?;
            sandwich(&alpha, g, params, gamma)
        })
        .collect()
}

pub fn sweep_rows(sweep: &[Sandwich]) -> Vec<SandwichRow> {
    sweep
        .iter()
        .map(|s| SandwichRow {
            a: s.a,
            lower: s.lower,
            tree: s.tree,
            upper: s.upper,
            gap: s.relative_gap(),
        })
        .collect()
}
