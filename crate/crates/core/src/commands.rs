//! The five driver commands. Each returns a [`RunReport`]; writing it out is
//! left to the caller.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bellman::{bellman_value, hp_eval, omega_p};
use crate::config::ExperimentConfig;
use crate::dyadic::{
    average_identity_check, build_phi_a, sandwich_sweep, symmetrization_check, sweep_rows,
    AlphaTree, DyadicTree, LeafFunction, A_SCHEDULE,
};
use crate::error::{Error, Result};
use crate::extremal::{
    build_g0, discretize_g0, eigen_identity_check, sequence_series, SequenceKind, DEFAULT_CELLS,
};
use crate::monotone::{defect, integral, p_moment, phi_functional, StepFunction};
use crate::optimizer::{maximize, AscentConfig};
use crate::report::{CheckResult, RunReport, Series};
use crate::sampling::random_leaf_function;
use crate::stats::strictly_decreasing;
use crate::verify;

pub const DEFAULT_SIMULATE_CELLS: usize = 1 << 12;
pub const DEFAULT_LEAF_DEPTH: u32 = 8;
pub const DEFAULT_SAMPLES: usize = 200;
/// Slack allowed in `lhs <= rhs` and in the sandwich ordering.
pub const ORDER_TOL: f64 = 1e-9;

fn finish(mut report: RunReport, start: Instant) -> RunReport {
    report.wall_time = start.elapsed().as_secs_f64();
    report
}

fn echo_moments(report: &mut RunReport, cfg: &ExperimentConfig) -> Result<()> {
    let params = cfg.params()?;
    let m = cfg.moments(params)?;
    report.input("p", params.p()).input("f", m.f()).input("F", m.big_f());
    Ok(())
}

pub fn cmd_bellman(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let params = cfg.params()?;
    let moments = cfg.moments(params)?;
    let mut report = RunReport::new("bellman");
    echo_moments(&mut report, cfg)?;
    let x = moments.ratio(params);
    let b = bellman_value(params, moments)?;
    let c = if moments.is_trivial(params) { 1.0 } else { omega_p(params, x)?.c };
    report
        .scalar("x", x)
        .scalar("c", c)
        .scalar("B", b)
        .scalar("hp_residual", (hp_eval(params, c)? - x.min(1.0)).abs());
    Ok(finish(report, start))
}

pub fn cmd_extremal(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let params = cfg.params()?;
    let moments = cfg.moments(params)?;
    let cells = cfg.cells.unwrap_or(DEFAULT_CELLS);
    if cells < 2 {
        return Err(Error::Config(format!("cells must be >= 2, got {cells}")));
    }
    let mut report = RunReport::new("extremal");
    echo_moments(&mut report, cfg)?;
    report.input("cells", cells);

    let g0 = build_g0(params, moments)?;
    let b = bellman_value(params, moments)?;
    let g = discretize_g0(&g0, cells, moments, params)?;
    let phi = phi_functional(&g, params);
    let mut eigen = 0.0f64;
    for i in 0..100 {
        let t = 10f64.powf(-12.0 + 12.0 * i as f64 / 99.0);
        let scale = g0.c * g0.eval(t);
        eigen = eigen.max(eigen_identity_check(&g0, g0.c, t)? / scale);
    }
    report
        .scalar("c", g0.c)
        .scalar("k", g0.k)
        .scalar("e", g0.e)
        .scalar("B", b)
        .scalar("phi", phi)
        .scalar("phi_rel_gap", (b - phi) / b)
        .scalar("defect", defect(&g, g0.c, params)?.value())
        .scalar("integral", integral(&g))
        .scalar("p_moment", p_moment(&g, params))
        .scalar("eigen_identity_max_rel", eigen)
        .scalar("t_min", g.breakpoints()[1]);
    report.series.insert("g0".into(), step_series(&g));

    if cfg.kind.is_some() || cfg.ns.is_some() {
        let kind = cfg.kind.unwrap_or(SequenceKind::Truncation);
        let ns = cfg.ns.clone().unwrap_or_else(verify::truncation_schedule);
        report.input("kind", kind).input("ns", &ns);
        let points = sequence_series(kind, params, moments, &ns, cells)?;
        let mut s = Series::new(["n", "phi", "gap", "defect", "lp_dist"]);
        for pt in points {
            s.push(vec![pt.n as f64, pt.phi, pt.gap, pt.defect, pt.lp_dist]);
        }
        report.series.insert("sequence".into(), s);
    }
    Ok(finish(report, start))
}

/// `t,v` rows with right endpoints, as in the step-function CSV format.
pub fn step_series(g: &StepFunction) -> Series {
    let mut s = Series::new(["t", "v"]);
    for (_, t, v) in g.cells() {
        s.push(vec![t, v]);
    }
    s
}

pub fn ascent_config(cfg: &ExperimentConfig) -> Result<AscentConfig> {
    let d = AscentConfig::default();
    let ascent = AscentConfig {
        cells: cfg.cells.unwrap_or(d.cells),
        max_iters: cfg.max_iters.unwrap_or(d.max_iters),
        step_size: cfg.step_size.unwrap_or(d.step_size),
        tol_obj: cfg.tol_obj.unwrap_or(d.tol_obj),
        seed: cfg.seed.unwrap_or(d.seed),
    };
    ascent.validate()?;
    Ok(ascent)
}

pub fn cmd_optimize(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let params = cfg.params()?;
    let moments = cfg.moments(params)?;
    let ascent = ascent_config(cfg)?;
    let mut report = RunReport::new("optimize");
    echo_moments(&mut report, cfg)?;
    report
        .input("cells", ascent.cells)
        .input("seed", ascent.seed)
        .input("max_iters", ascent.max_iters);
    report
        .tolerance("step_size", ascent.step_size)
        .tolerance("tol_obj", ascent.tol_obj);

    let out = maximize(&ascent, params, moments)?;
    let last = *out.trace.records.last().expect("trace has the start point");
    report
        .scalar("B", out.bellman)
        .scalar("objective", last.objective)
        .scalar("ratio", last.objective / out.bellman)
        .scalar("lp_dist", last.lp_dist)
        .scalar("defect", last.defect)
        .scalar("iterations", (out.trace.records.len() - 1) as f64)
        .scalar("accepted", (out.trace.accepted().count() - 1) as f64)
        .scalar("converged", out.converged as u8 as f64)
        .scalar("max_candidate_objective", out.max_candidate_objective);

    let mut trace = Series::new(["iter", "objective", "defect", "lp_dist", "accepted"]);
    for r in &out.trace.records {
        trace.push(vec![r.iter as f64, r.objective, r.defect, r.lp_dist, r.accepted as u8 as f64]);
    }
    report.series.insert("trace".into(), trace);
    report.series.insert("final".into(), step_series(&out.best));
    Ok(finish(report, start))
}

/// Symmetrization sweep over seeded random leaf functions: `(lhs, rhs)` per
/// instance.
pub fn symmetrization_sweep(
    depth: u32,
    samples: usize,
    seed: u64,
    params: crate::bellman::PParams,
) -> Result<Vec<(f64, f64)>> {
    let tree = DyadicTree::new(depth)?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let phi = random_leaf_function(tree, &mut rng)?;
            symmetrization_check(&tree, &phi, params)
        })
        .collect()
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let params = cfg.params()?;
    let moments = cfg.moments(params)?;
    let schedule = cfg.a.clone().unwrap_or_else(|| A_SCHEDULE.to_vec());
    if let Some(a) = schedule.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::Config(format!("a must lie in (0, 1), got {a}")));
    }
    let cells = cfg.cells.unwrap_or(DEFAULT_SIMULATE_CELLS);
    if cells < 2 {
        return Err(Error::Config(format!("cells must be >= 2, got {cells}")));
    }
    let gamma = cfg.gamma.unwrap_or(1.0);
    let branching = cfg.branching.unwrap_or(1);
    let depth = cfg.depth.unwrap_or(DEFAULT_LEAF_DEPTH);
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = cfg.seed.unwrap_or(0);

    let mut report = RunReport::new("simulate");
    echo_moments(&mut report, cfg)?;
    report
        .input("a", &schedule)
        .input("cells", cells)
        .input("gamma", gamma)
        .input("branching", branching)
        .input("depth", depth)
        .input("samples", samples)
        .input("seed", seed);
    report.tolerance("order", ORDER_TOL);

    let g0 = build_g0(params, moments)?;
    let g = discretize_g0(&g0, cells, moments, params)?;
    let sweep = sandwich_sweep(&g, params, &schedule, gamma, branching)?;
    let rows = sweep_rows(&sweep);
    let mut table = Series::new(["a", "lower", "tree", "upper", "gap"]);
    for r in &rows {
        table.push(vec![r.a, r.lower, r.tree, r.upper, r.gap]);
    }
    report.series.insert("sandwich".into(), table);

    let mut identity = 0.0f64;
    for &a in &schedule {
        let alpha = AlphaTree::new(a)?.with_branching(branching)?;
        let phi_a = build_phi_a(&alpha, &g)?;
        for m in 0..=alpha.depth() + 1 {
            identity = identity.max(average_identity_check(&alpha, &phi_a, &g, m)?);
        }
    }
    report.scalar("average_identity_max", identity);
    report.scalar("bellman", bellman_value(params, moments)?);

    let pairs = symmetrization_sweep(depth, samples, seed, params)?;
    let violations = pairs.iter().filter(|(l, r)| *l > r + ORDER_TOL).count();
    let worst = pairs.iter().map(|(l, r)| l - r).fold(f64::NEG_INFINITY, f64::max);
    let mut sym = Series::new(["instance", "lhs", "rhs"]);
    for (i, (l, r)) in pairs.iter().enumerate() {
        sym.push(vec![i as f64, *l, *r]);
    }
    report.series.insert("symmetrization".into(), sym);
    report
        .scalar("symmetrization_violations", violations as f64)
        .scalar("symmetrization_max_excess", worst);

    let hand_tree = DyadicTree::new(2)?;
    let hand = LeafFunction::new(hand_tree, vec![4.0, 0.0, 0.0, 0.0])?;
    let (lhs, rhs) = symmetrization_check(&hand_tree, &hand, crate::bellman::PParams::new(2.0)?)?;
    report.scalar("hand_lhs", lhs).scalar("hand_rhs", rhs);

    report.checks.push(CheckResult {
        id: "sandwich_order".into(),
        name: "lower <= tree <= upper".into(),
        passed: sweep.iter().all(|s| s.is_ordered(ORDER_TOL)),
        detail: String::new(),
    });
    report.checks.push(CheckResult {
        id: "sandwich_gap".into(),
        name: "gap decreases along the schedule".into(),
        passed: strictly_decreasing(&rows.iter().map(|r| r.gap).collect::<Vec<_>>()),
        detail: String::new(),
    });
    report.checks.push(CheckResult {
        id: "symmetrization".into(),
        name: "lhs <= rhs on every instance".into(),
        passed: violations == 0,
        detail: format!("{violations} violations of {samples}"),
    });
    Ok(finish(report, start))
}

/// Runs the acceptance suite, optionally restricted by `cfg.only`.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let selection = verify::Selection::parse(cfg.only.as_deref())?;
    let mut report = verify::run(&selection)?;
    report.input("only", cfg.only.clone().unwrap_or_else(|| "all".into()));
    Ok(finish(report, start))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(p: f64, f: f64, big_f: f64) -> ExperimentConfig {
        ExperimentConfig { p: Some(p), f: Some(f), big_f: Some(big_f), ..Default::default() }
    }

    #[test]
    fn bellman_command_values() {
        let r = cmd_bellman(&cfg(2.0, 1.0, 1.0)).unwrap();
        assert_eq!(r.scalars["c"], 1.0);
        assert_eq!(r.scalars["B"], 1.0);
        let r = cmd_bellman(&cfg(2.0, 1.0, 2.0)).unwrap();
        assert!((r.scalars["c"] - 1.7071068).abs() < 1e-7);
        assert!((r.scalars["B"] - 5.8284271).abs() < 1e-7);
        let err = cmd_bellman(&cfg(2.0, 2.0, 1.0)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("infeasible: f^p > F"));
    }

    #[test]
    fn extremal_rejects_one_cell() {
        let c = ExperimentConfig { cells: Some(1), ..cfg(2.0, 1.0, 2.0) };
        assert!(matches!(cmd_extremal(&c), Err(Error::Config(_))));
    }

    #[test]
    fn extremal_trivial_case() {
        let c = ExperimentConfig { cells: Some(16), ..cfg(3.0, 2.0, 8.0) };
        let r = cmd_extremal(&c).unwrap();
        assert_eq!(r.scalars["c"], 1.0);
        assert!((r.scalars["phi"] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn optimize_trivial_case() {
        let c = ExperimentConfig { cells: Some(32), ..cfg(2.0, 1.0, 1.0) };
        let r = cmd_optimize(&c).unwrap();
        assert_eq!(r.scalars["iterations"], 0.0);
        assert!((r.scalars["objective"] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simulate_rejects_bad_a() {
        let c = ExperimentConfig { a: Some(vec![1.0]), ..Default::default() };
        assert!(matches!(cmd_simulate(&c), Err(Error::Config(_))));
    }

    #[test]
    fn simulate_small_run() {
        let c = ExperimentConfig {
            cells: Some(256),
            samples: Some(10),
            depth: Some(4),
            a: Some(vec![0.5, 0.2]),
            ..Default::default()
        };
        let r = cmd_simulate(&c).unwrap();
        assert!(r.all_passed(), "{:?}", r.checks);
        assert_eq!(r.scalars["hand_lhs"], 5.5);
        assert_eq!(r.scalars["hand_rhs"], 7.0);
        assert!(r.scalars["average_identity_max"] <= 1e-10);
    }
}
