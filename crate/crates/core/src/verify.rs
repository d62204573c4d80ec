//! The acceptance suite behind `hbl verify`: nine numbered criteria grouped
//! into named suites.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bellman::{bellman_value, hp_eval, omega_p, MomentPair, PParams};
use crate::commands::symmetrization_sweep;
use crate::dyadic::{
    average_identity_check, build_phi_a, sandwich_sweep, symmetrization_check, AlphaTree,
    DyadicTree, LeafFunction, A_SCHEDULE,
};
use crate::error::{Error, Result};
use crate::extremal::{
    build_g0, discretize_g0, eigen_identity_check, sequence_series, SequenceKind, SequencePoint,
};
use crate::monotone::{
    decreasing_rearrangement, defect, integral, p_moment, phi_functional, phi_slices,
    PhiMethod,
};
use crate::optimizer::{gradient_slices, maximize, AscentConfig};
use crate::report::{CheckResult, RunReport, Series};
use crate::sampling::random_step_function;
use crate::stats::{spearman, strictly_decreasing};

pub const CRITERIA: [(u8, &str, &str); 9] = [
    (1, "bellman", "inverse fidelity"),
    (2, "bellman", "Bellman closed form"),
    (3, "extremal", "extremal attainment"),
    (4, "sequence", "defect and gap decay along truncation"),
    (5, "sequence", "L^p convergence along truncation"),
    (6, "optimizer", "optimizer near-optimality"),
    (7, "dyadic", "symmetrization inequality"),
    (8, "dyadic", "sandwich convergence"),
    (9, "invariants", "invariant suite"),
];

pub const EXTREMAL_CELLS: usize = 1 << 16;
pub const OPTIMIZER_CELLS: usize = 1 << 12;
pub const OPTIMIZER_SEEDS: u64 = 5;
const SWEEP_SEED: u64 = 0x5eed;

/// `n = 2^4, ..., 2^14`.
pub fn truncation_schedule() -> Vec<usize> {
    (4..=14).map(|k| 1usize << k).collect()
}

/// Pass thresholds for every criterion. Recorded in the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub inverse_residual: f64,
    pub inverse_limit: f64,
    pub bellman_closed_form: f64,
    pub extremal_phi_rel: f64,
    pub extremal_defect: f64,
    pub eigen_rel: f64,
    pub defect_ratio: f64,
    pub lp_last: f64,
    pub optimizer_ratio: f64,
    pub optimizer_lp: f64,
    pub optimizer_excess: f64,
    pub symmetrization_slack: f64,
    pub average_identity: f64,
    pub sandwich_order: f64,
    pub sandwich_gap: f64,
    pub bellman_scaling: f64,
    pub phi_scaling: f64,
    pub rearrangement: f64,
    pub gradient_fd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            inverse_residual: 1e-12,
            inverse_limit: 1e-4,
            bellman_closed_form: 1e-12,
            extremal_phi_rel: 1e-3,
            extremal_defect: 1e-4,
            eigen_rel: 1e-12,
            defect_ratio: 0.01,
            lp_last: 1e-3,
            optimizer_ratio: 0.99,
            optimizer_lp: 0.05,
            optimizer_excess: 1e-8,
            symmetrization_slack: 1e-9,
            average_identity: 1e-10,
            sandwich_order: 1e-12,
            sandwich_gap: 0.05,
            bellman_scaling: 1e-12,
            phi_scaling: 1e-9,
            rearrangement: 1e-12,
            gradient_fd: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn entries(&self) -> [(&'static str, f64); 19] {
        [
            ("inverse_residual", self.inverse_residual),
            ("inverse_limit", self.inverse_limit),
            ("bellman_closed_form", self.bellman_closed_form),
            ("extremal_phi_rel", self.extremal_phi_rel),
            ("extremal_defect", self.extremal_defect),
            ("eigen_rel", self.eigen_rel),
            ("defect_ratio", self.defect_ratio),
            ("lp_last", self.lp_last),
            ("optimizer_ratio", self.optimizer_ratio),
            ("optimizer_lp", self.optimizer_lp),
            ("optimizer_excess", self.optimizer_excess),
            ("symmetrization_slack", self.symmetrization_slack),
            ("average_identity", self.average_identity),
            ("sandwich_order", self.sandwich_order),
            ("sandwich_gap", self.sandwich_gap),
            ("bellman_scaling", self.bellman_scaling),
            ("phi_scaling", self.phi_scaling),
            ("rearrangement", self.rearrangement),
            ("gradient_fd", self.gradient_fd),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection(BTreeSet<u8>);

impl Selection {
    pub fn all() -> Self {
        Selection(CRITERIA.iter().map(|c| c.0).collect())
    }

    /// Comma-separated suite names or criterion numbers; `None` or `all`
    /// selects everything.
    pub fn parse(only: Option<&str>) -> Result<Self> {
        let Some(text) = only else {
            return Ok(Self::all());
        };
        let mut ids = BTreeSet::new();
        for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if token == "all" {
                return Ok(Self::all());
            }
            if let Ok(id) = token.parse::<u8>() {
                if !(1..=9).contains(&id) {
                    return Err(Error::Config(format!("no criterion {id}")));
                }
                ids.insert(id);
                continue;
            }
            let matched: Vec<u8> = CRITERIA.iter().filter(|c| c.1 == token).map(|c| c.0).collect();
            if matched.is_empty() {
                return Err(Error::Config(format!("unknown suite {token:?}")));
            }
            ids.extend(matched);
        }
        if ids.is_empty() {
            return Err(Error::Config("empty --only selection".into()));
        }
        Ok(Selection(ids))
    }

    pub fn ids(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, id: u8) -> bool {
        self.0.contains(&id)
    }
}

struct Ctx<'a> {
    report: &'a mut RunReport,
    tol: &'a Tolerances,
    truncation: Option<Result<Vec<SequencePoint>>>,
}

impl Ctx<'_> {
    fn scalar(&mut self, id: u8, key: &str, value: f64) {
        self.report.scalar(&format!("c{id}.{key}"), value);
    }

    fn truncation(&mut self) -> Result<Vec<SequencePoint>> {
        if self.truncation.is_none() {
            let params = PParams::new(2.0)?;
            let m = MomentPair::new(params, 1.0, 2.0)?;
            let series = sequence_series(
                SequenceKind::Truncation,
                params,
                m,
                &truncation_schedule(),
                EXTREMAL_CELLS,
            );
            self.truncation = Some(series);
        }
        match self.truncation.as_ref().unwrap() {
            Ok(v) => Ok(v.clone()),
            Err(e) => Err(Error::Domain(e.to_string())),
        }
    }
}

fn check(id: u8, passed: bool, detail: String) -> CheckResult {
    let (_, suite, name) = CRITERIA[id as usize - 1];
    CheckResult {
        id: id.to_string(),
        name: format!("{suite}: {name}"),
        passed,
        detail,
    }
}

/// Runs the selected criteria into a fresh report.
pub fn run(selection: &Selection) -> Result<RunReport> {
    run_with(selection, &Tolerances::default())
}

pub fn run_with(selection: &Selection, tol: &Tolerances) -> Result<RunReport> {
    let base: Vec<u8> = selection.ids().filter(|&id| id != 9).collect();
    let mut report = criteria_report(&base, tol);
    if selection.contains(9) {
        let snapshot = if base.is_empty() { None } else { Some(report.clone()) };
        let result = {
            let mut ctx = Ctx { report: &mut report, tol, truncation: None };
            invariants(&mut ctx, &base, snapshot)
        };
        report.checks.push(result.unwrap_or_else(|e| check(9, false, e.to_string())));
    }
    Ok(report)
}

fn criteria_report(ids: &[u8], tol: &Tolerances) -> RunReport {
    let mut report = RunReport::new("verify");
    for (key, value) in tol.entries() {
        report.tolerance(key, value);
    }
    let mut ctx = Ctx { report: &mut report, tol, truncation: None };
    let mut results = Vec::new();
    for &id in ids {
        let outcome = match id {
            1 => inverse_fidelity(&mut ctx),
            2 => bellman_closed_form(&mut ctx),
            3 => extremal_attainment(&mut ctx),
            4 => truncation_decay(&mut ctx),
            5 => truncation_convergence(&mut ctx),
            6 => optimizer_near_optimality(&mut ctx),
            7 => symmetrization(&mut ctx),
            8 => sandwich_convergence(&mut ctx),
            _ => continue,
        };
        results.push(outcome.unwrap_or_else(|e| check(id, false, format!("error: {e}"))));
    }
    report.checks = results;
    report
}

fn inverse_fidelity(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut at_one = true;
    let mut limit = 0.0f64;
    for p in [1.5, 2.0, 3.0, 5.0] {
        let params = PParams::new(p)?;
        for i in 0..1000 {
            let x = 10f64.powf(-6.0 + 6.0 * i as f64 / 999.0);
            let c = omega_p(params, x)?.c;
            worst = worst.max((hp_eval(params, c)? - x).abs());
        }
        at_one &= omega_p(params, 1.0)?.c == 1.0;
        limit = limit.max((omega_p(params, 1e-10)?.c - params.conjugate()).abs());
    }
    ctx.scalar(1, "max_residual", worst);
    ctx.scalar(1, "limit_error", limit);
    Ok(check(
        1,
        worst <= ctx.tol.inverse_residual && at_one && limit <= ctx.tol.inverse_limit,
        format!("max |H(ω(x)) - x| = {worst:.3e}, ω(1) = 1: {at_one}, |ω(1e-10) - q| = {limit:.3e}"),
    ))
}

fn bellman_closed_form(ctx: &mut Ctx) -> Result<CheckResult> {
    let params = PParams::new(2.0)?;
    let b1 = bellman_value(params, MomentPair::new(params, 1.0, 2.0)?)?;
    let b2 = bellman_value(params, MomentPair::new(params, 1.0, 1.25)?)?;
    let e1 = (b1 - (3.0 + 2.0 * 2f64.sqrt())).abs();
    let e2 = (b2 - 1.25 * (1.0 + 0.2f64.sqrt()).powi(2)).abs();
    ctx.scalar(2, "B_2_1_2", b1);
    ctx.scalar(2, "B_2_1_1.25", b2);
    Ok(check(
        2,
        e1 <= ctx.tol.bellman_closed_form && e2 <= ctx.tol.bellman_closed_form,
        format!("errors {e1:.3e}, {e2:.3e}"),
    ))
}

fn extremal_attainment(ctx: &mut Ctx) -> Result<CheckResult> {
    let triples = [(2.0, 1.0, 2.0), (2.0, 1.0, 1.25), (3.0, 1.0, 2.0), (1.5, 1.0, 3.0)];
    let rows: Vec<Result<(f64, f64, f64)>> = triples
        .par_iter()
        .map(|&(p, f, big_f)| {
            let params = PParams::new(p)?;
            let m = MomentPair::new(params, f, big_f)?;
            let g0 = build_g0(params, m)?;
            let b = bellman_value(params, m)?;
            let g = discretize_g0(&g0, EXTREMAL_CELLS, m, params)?;
            let rel = (phi_functional(&g, params) - b).abs() / b;
            let d = defect(&g, g0.c, params)?.value();
            let mut eigen = 0.0f64;
            for i in 0..100 {
                let t = 10f64.powf(-12.0 + 12.0 * i as f64 / 99.0);
                eigen = eigen.max(eigen_identity_check(&g0, g0.c, t)? / (g0.c * g0.eval(t)));
            }
            Ok((rel, d, eigen))
        })
        .collect();
    let mut passed = true;
    let mut detail = Vec::new();
    for (&(p, f, big_f), row) in triples.iter().zip(rows) {
        let (rel, d, eigen) = row?;
        let tag = format!("{p}_{f}_{big_f}");
        ctx.scalar(3, &format!("phi_rel_{tag}"), rel);
        ctx.scalar(3, &format!("defect_{tag}"), d);
        ctx.scalar(3, &format!("eigen_{tag}"), eigen);
        let tol = ctx.tol;
        passed &= rel <= tol.extremal_phi_rel && d <= tol.extremal_defect && eigen <= tol.eigen_rel;
        detail.push(format!("({p},{f},{big_f}) relΦ {rel:.2e} defect {d:.2e} eigen {eigen:.1e}"));
    }
    Ok(check(3, passed, detail.join("; ")))
}

fn sequence_table(points: &[SequencePoint]) -> Series {
    let mut s = Series::new(["n", "phi", "gap", "defect", "lp_dist"]);
    for pt in points {
        s.push(vec![pt.n as f64, pt.phi, pt.gap, pt.defect, pt.lp_dist]);
    }
    s
}

fn truncation_decay(ctx: &mut Ctx) -> Result<CheckResult> {
    let points = ctx.truncation()?;
    ctx.report.series.insert("truncation".into(), sequence_table(&points));
    let gaps: Vec<f64> = points.iter().map(|p| p.gap).collect();
    let defects: Vec<f64> = points.iter().map(|p| p.defect).collect();
    let rho = spearman(&gaps, &defects).unwrap_or(f64::NAN);
    let ratio = defects.last().unwrap() / defects[0];
    ctx.scalar(4, "rank_correlation", rho);
    ctx.scalar(4, "defect_ratio", ratio);
    let (gd, dd) = (strictly_decreasing(&gaps), strictly_decreasing(&defects));
    Ok(check(
        4,
        gd && dd && rho == 1.0 && ratio <= ctx.tol.defect_ratio,
        format!(
            "gap decreasing {gd}, defect decreasing {dd}, ρ = {rho}, defect(2^14)/defect(2^4) = {ratio:.4} (need <= {})",
            ctx.tol.defect_ratio
        ),
    ))
}

fn truncation_convergence(ctx: &mut Ctx) -> Result<CheckResult> {
    let points = ctx.truncation()?;
    let lp: Vec<f64> = points.iter().map(|p| p.lp_dist).collect();
    let last = *lp.last().unwrap();
    ctx.scalar(5, "lp_last", last);
    let dec = strictly_decreasing(&lp);
    Ok(check(
        5,
        dec && last <= ctx.tol.lp_last,
        format!("lp decreasing {dec}, lp(2^14) = {last:.4e} (need <= {:e})", ctx.tol.lp_last),
    ))
}

fn optimizer_near_optimality(ctx: &mut Ctx) -> Result<CheckResult> {
    let params = PParams::new(2.0)?;
    let m = MomentPair::new(params, 1.0, 2.0)?;
    let runs: Vec<Result<_>> = (0..OPTIMIZER_SEEDS)
        .into_par_iter()
        .map(|seed| {
            let cfg = AscentConfig {
                cells: OPTIMIZER_CELLS,
                seed,
                ..AscentConfig::default()
            };
            maximize(&cfg, params, m)
        })
        .collect();
    let mut passed = true;
    let mut detail = Vec::new();
    for (seed, run) in runs.into_iter().enumerate() {
        let out = run?;
        let last = out.trace.records.last().unwrap();
        let ratio = last.objective / out.bellman;
        let excess = out.max_candidate_objective - out.bellman;
        ctx.scalar(6, &format!("ratio_seed{seed}"), ratio);
        ctx.scalar(6, &format!("lp_seed{seed}"), last.lp_dist);
        ctx.scalar(6, &format!("excess_seed{seed}"), excess);
        let tol = ctx.tol;
        passed &= ratio >= tol.optimizer_ratio && last.lp_dist <= tol.optimizer_lp && excess <= tol.optimizer_excess;
        detail.push(format!("seed {seed}: Φ/B {ratio:.6} lp {:.2e}", last.lp_dist));
    }
    Ok(check(6, passed, detail.join("; ")))
}

fn symmetrization(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for p in [2.0, 3.0] {
        let pairs = symmetrization_sweep(8, 200, SWEEP_SEED, PParams::new(p)?)?;
        violations += pairs.iter().filter(|(l, r)| *l > r + ctx.tol.symmetrization_slack).count();
        worst = pairs.iter().map(|(l, r)| l - r).fold(worst, f64::max);
    }
    let tree = DyadicTree::new(2)?;
    let phi = LeafFunction::new(tree, vec![4.0, 0.0, 0.0, 0.0])?;
    let (lhs, rhs) = symmetrization_check(&tree, &phi, PParams::new(2.0)?)?;
    ctx.scalar(7, "violations", violations as f64);
    ctx.scalar(7, "max_excess", worst);
    ctx.scalar(7, "hand_lhs", lhs);
    ctx.scalar(7, "hand_rhs", rhs);
    Ok(check(
        7,
        violations == 0 && lhs == 5.5 && rhs == 7.0,
        format!("{violations} violations in 400, max lhs - rhs = {worst:.3e}, hand pair ({lhs}, {rhs})"),
    ))
}

fn sandwich_convergence(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let mut identity = 0.0f64;
    for _ in 0..20 {
        let a = rng.random_range(0.02..0.9);
        let b = rng.random_range(1..=3u32);
        let g = random_step_function(rng.random_range(2..60), &mut rng)?;
        let alpha = AlphaTree::new(a)?.with_branching(b)?;
        let phi_a = build_phi_a(&alpha, &g)?;
        for m in 0..=alpha.depth() + 1 {
            identity = identity.max(average_identity_check(&alpha, &phi_a, &g, m)?);
        }
    }
    ctx.scalar(8, "average_identity_max", identity);

    let params = PParams::new(2.0)?;
    let m = MomentPair::new(params, 1.0, 2.0)?;
    let g = discretize_g0(&build_g0(params, m)?, EXTREMAL_CELLS, m, params)?;
    let sweep = sandwich_sweep(&g, params, &A_SCHEDULE, 1.0, 1)?;
    let mut table = Series::new(["a", "lower", "tree", "upper", "gap"]);
    for s in &sweep {
        table.push(vec![s.a, s.lower, s.tree, s.upper, s.relative_gap()]);
    }
    ctx.report.series.insert("sandwich".into(), table);
    let gaps: Vec<f64> = sweep.iter().map(|s| s.relative_gap()).collect();
    let ordered = sweep.iter().all(|s| s.is_ordered(ctx.tol.sandwich_order));
    let last = *gaps.last().unwrap();
    ctx.scalar(8, "gap_last", last);
    let dec = strictly_decreasing(&gaps);
    Ok(check(
        8,
        identity <= ctx.tol.average_identity && ordered && last <= ctx.tol.sandwich_gap && dec,
        format!(
            "identity max {identity:.2e}, ordered {ordered}, gaps {}",
            gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>().join(" ")
        ),
    ))
}

/// Largest componentwise relative deviation between the analytic gradient
/// and central differences with step `1e-6`.
pub fn gradient_fd_deviation(g: &crate::monotone::StepFunction, params: PParams) -> f64 {
    let (bps, vals, p) = (g.breakpoints(), g.values(), params.p());
    let grad = gradient_slices(bps, vals, p);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..vals.len() {
        let mut up = vals.to_vec();
        let mut down = vals.to_vec();
        up[i] += h;
        down[i] -= h;
        let fd = (phi_slices(bps, &up, p, 0.0, 1.0, PhiMethod::Auto)
            - phi_slices(bps, &down, p, 0.0, 1.0, PhiMethod::Auto))
            / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs());
    }
    worst
}

fn invariants(ctx: &mut Ctx, base: &[u8], snapshot: Option<RunReport>) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED + 9);
    let mut failures = Vec::new();

    let mut scaling = 0.0f64;
    for p in [1.5, 2.0, 3.0, 5.0] {
        let params = PParams::new(p)?;
        for _ in 0..20 {
            let ratio = 10f64.powf(rng.random_range(-4.0..0.0));
            let lambda = 10f64.powf(rng.random_range(-1.0..1.0));
            let b0 = bellman_value(params, MomentPair::new(params, 1.0, 1.0 / ratio)?)?;
            let b1 = bellman_value(params, MomentPair::new(params, lambda, lambda.powf(p) / ratio)?)?;
            scaling = scaling.max((b1 - lambda.powf(p) * b0).abs() / b1);
        }
    }
    ctx.scalar(9, "bellman_scaling", scaling);
    let tol = *ctx.tol;
    if scaling > tol.bellman_scaling {
        failures.push(format!("Bellman scaling {scaling:.2e}"));
    }

    let (mut phi_scaling, mut hardy_margin, mut rearr) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut gradient = 0.0f64;
    for trial in 0..20 {
        let p = [1.5, 2.0, 3.0][trial % 3];
        let params = PParams::new(p)?;
        let g = random_step_function(rng.random_range(2..40), &mut rng)?;
        let lambda = rng.random_range(0.2..5.0);
        let phi = phi_functional(&g, params);
        let scaled = phi_functional(&g.scaled(lambda)?, params);
        phi_scaling = phi_scaling.max((scaled - lambda.powf(p) * phi).abs() / scaled);
        hardy_margin = hardy_margin.min((phi - p_moment(&g, params)) / phi);

        let n = rng.random_range(2..50);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let lengths: Vec<f64> = raw.iter().map(|l| l / sum).collect();
        let r = decreasing_rearrangement(&values, &lengths)?;
        let m1: f64 = values.iter().zip(&lengths).map(|(v, l)| v * l).sum();
        let mp: f64 = values.iter().zip(&lengths).map(|(v, l)| v.powf(p) * l).sum();
        rearr = rearr
            .max((integral(&r) - m1).abs() / m1)
            .max((p_moment(&r, params) - mp).abs() / mp);

        let g = random_step_function(8, &mut rng)?;
        if g.lengths().iter().all(|&l| l >= 1e-2) {
            gradient = gradient.max(gradient_fd_deviation(&g, params));
        }
    }
    for p in [1.5, 2.0, 3.0] {
        let g = crate::monotone::StepFunction::new(
            vec![0.0, 0.02, 0.1, 0.25, 0.45, 0.7, 1.0],
            vec![9.0, 4.0, 2.5, 1.2, 0.8, 0.3],
        )?;
        gradient = gradient.max(gradient_fd_deviation(&g, PParams::new(p)?));
    }
    ctx.scalar(9, "phi_scaling", phi_scaling);
    ctx.scalar(9, "hardy_margin_min", hardy_margin);
    ctx.scalar(9, "rearrangement_moments", rearr);
    ctx.scalar(9, "gradient_fd", gradient);
    if phi_scaling > tol.phi_scaling {
        failures.push(format!("Φ scaling {phi_scaling:.2e}"));
    }
    if hardy_margin < 0.0 {
        failures.push(format!("Hardy domination margin {hardy_margin:.2e}"));
    }
    if rearr > tol.rearrangement {
        failures.push(format!("rearrangement moments {rearr:.2e}"));
    }
    if gradient > tol.gradient_fd {
        failures.push(format!("gradient vs finite differences {gradient:.2e}"));
    }

    let ids: Vec<u8> = if base.is_empty() { vec![1, 2] } else { base.to_vec() };
    let first = match snapshot {
        Some(r) => r,
        None => criteria_report(&ids, &tol),
    };
    let second = criteria_report(&ids, &tol);
    let same = first.fingerprint()? == second.fingerprint()?;
    ctx.scalar(9, "deterministic", same as u8 as f64);
    if !same {
        failures.push("reports differ between consecutive runs".into());
    }

    let detail = if failures.is_empty() {
        format!(
            "scaling {scaling:.1e}/{phi_scaling:.1e}, Hardy margin {hardy_margin:.2e}, rearrangement {rearr:.1e}, gradient {gradient:.1e}, deterministic over criteria {ids:?}"
        )
    } else {
        failures.join("; ")
    };
    Ok(check(9, failures.is_empty(), detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_parsing() {
        assert_eq!(Selection::parse(None).unwrap(), Selection::all());
        let s = Selection::parse(Some("bellman")).unwrap();
        assert_eq!(s.ids().collect::<Vec<_>>(), vec![1, 2]);
        let s = Selection::parse(Some("dyadic, 1")).unwrap();
        assert_eq!(s.ids().collect::<Vec<_>>(), vec![1, 7, 8]);
        assert!(Selection::parse(Some("nope")).is_err());
        assert!(Selection::parse(Some("10")).is_err());
    }

    #[test]
    fn bellman_suite_passes() {
        let r = run(&Selection::parse(Some("bellman")).unwrap()).unwrap();
        assert_eq!(r.checks.len(), 2);
        assert!(r.all_passed(), "{:?}", r.checks);
    }

    #[test]
    fn tampered_tolerance_fails() {
        let sel = Selection::parse(Some("1")).unwrap();
        let tight = Tolerances { inverse_residual: 1e-20, ..Tolerances::default() };
        let r = run_with(&sel, &tight).unwrap();
        assert!(!r.all_passed());
        assert_eq!(r.tolerances["inverse_residual"], 1e-20);
        assert!(run(&sel).unwrap().all_passed());
    }

    #[test]
    fn schedule() {
        let ns = truncation_schedule();
        assert_eq!((ns[0], *ns.last().unwrap(), ns.len()), (16, 16384, 11));
    }
}
