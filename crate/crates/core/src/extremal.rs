//! The extremal function `g₀(t) = k t^(-1 + 1/c)` with `c = ω_p(f^p/F)`,
//! `k = f/c`, and factories for near-extremal sequences.
//!
//! `g₀` is an eigenfunction of the Hardy operator: `(1/t) ∫_0^t g₀ = c g₀(t)`.

use serde::{Deserialize, Serialize};

use crate::bellman::{bellman_value, eigenvalue, MomentPair, PParams};
use crate::error::{Error, Result};
use crate::monotone::{
    defect, geometric_grid, graded_grid, lp_distance, phi_functional, renormalize_moments, StepFunction,
    DEFAULT_T_MIN,
};

/// Share of `∫ g₀^p` allowed to fall inside the first grid cell.
pub const TAIL_P_FRACTION: f64 = 1e-8;

/// Resolution used by the sequence factories unless overridden.
pub const DEFAULT_CELLS: usize = 1 << 16;

/// `k t^e` on `(0, 1]`, together with the eigenvalue `c = 1/(1 + e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFunction {
    pub k: f64,
    pub e: f64,
    pub c: f64,
}

impl PowerLawFunction {
    pub fn eval(&self, t: f64) -> f64 {
        if self.e == 0.0 {
            self.k
        } else {
            self.k * t.powf(self.e)
        }
    }

    /// `∫_0^t k u^e du = k c t^(1/c)`.
    pub fn mass_to(&self, t: f64) -> f64 {
        self.k * self.c * t.powf(1.0 / self.c)
    }

    /// `∫_u^w k t^e dt`, accurate for narrow cells.
    pub fn mass_between(&self, u: f64, w: f64) -> f64 {
        if u <= 0.0 {
            return self.mass_to(w);
        }
        let s = 1.0 / self.c;
        self.k * self.c * u.powf(s) * (s * (w / u).ln()).exp_m1()
    }

    /// `∫_0^1 g^p = k^p / (1 + p e)`; infinite when `p e <= -1`.
    pub fn p_moment(&self, params: PParams) -> f64 {
        let denom = 1.0 + params.p() * self.e;
        if denom <= 0.0 {
            f64::INFINITY
        } else {
            self.k.powf(params.p()) / denom
        }
    }

    /// `∫_0^δ g^p = k^p δ^(1 + p e) / (1 + p e)`.
    pub fn tail_p_mass(&self, params: PParams, delta: f64) -> f64 {
        self.p_moment(params) * delta.powf(1.0 + params.p() * self.e)
    }

    pub fn is_constant(&self) -> bool {
        self.e == 0.0
    }

    /// Smallest grid breakpoint so that `(0, t_min]` carries at most
    /// [`TAIL_P_FRACTION`] of `∫ g^p`; never above [`DEFAULT_T_MIN`].
    pub fn grid_floor(&self, params: PParams) -> f64 {
        let decay = 1.0 + params.p() * self.e;
        if self.is_constant() || decay <= 0.0 {
            return DEFAULT_T_MIN;
        }
        TAIL_P_FRACTION
            .powf(1.0 / decay)
            .clamp(1e-290, DEFAULT_T_MIN)
    }

    /// Grid adapted to `g^p`: the p-mass per unit `ln t` grows like
    /// `t^(1 + p e)`, and the step-function residual of a cell of log-width
    /// `h` scales like `h^p`, so cells are graded with `κ = (1 + p e)/(p + 1)`.
    pub fn grid(&self, params: PParams, cells: usize) -> Result<Vec<f64>> {
        let decay = 1.0 + params.p() * self.e;
        if self.is_constant() || decay <= 0.0 {
            return geometric_grid(cells, DEFAULT_T_MIN);
        }
        graded_grid(cells, self.grid_floor(params), decay / (params.p() + 1.0))
    }
}

/// Closed-form extremal for feasible `(f, F)`.
pub fn build_g0(params: PParams, moments: MomentPair) -> Result<PowerLawFunction> {
    let c = eigenvalue(params, moments)?;
    if c == 1.0 {
        return Ok(PowerLawFunction {
            k: moments.f(),
            e: 0.0,
            c: 1.0,
        });
    }
    Ok(PowerLawFunction {
        k: moments.f() / c,
        e: -1.0 + 1.0 / c,
        c,
    })
}

/// `|(1/t) ∫_0^t g₀ - c g₀(t)|` in closed form.
pub fn eigen_identity_check(g0: &PowerLawFunction, c: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t = {t} outside (0, 1]")));
    }
    let average = g0.k * t.powf(g0.e + 1.0) / (g0.e + 1.0) / t;
    Ok((average - c * g0.eval(t)).abs())
}

/// Cell averages of `g₀` on a geometric grid, renormalized to `(f, F)`.
pub fn discretize_g0(
    g0: &PowerLawFunction,
    cells: usize,
    moments: MomentPair,
    params: PParams,
) -> Result<StepFunction> {
    if cells < 2 {
        return Err(Error::domain(format!("need at least 2 cells, got {cells}")));
    }
    discretize_g0_on(g0, g0.grid(params, cells)?, moments, params)
}

/// Cell averages of `g₀` on a caller-supplied partition, renormalized.
pub fn discretize_g0_on(
    g0: &PowerLawFunction,
    grid: Vec<f64>,
    moments: MomentPair,
    params: PParams,
) -> Result<StepFunction> {
    if g0.is_constant() {
        return StepFunction::constant_on(grid, g0.k);
    }
    let values = cell_averages(&grid, |u, w| g0.mass_between(u, w));
    let raw = StepFunction::new(grid, values)?;
    renormalize_moments(&raw, moments, params)
}

fn cell_averages(grid: &[f64], mass: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut values: Vec<f64> = grid
        .windows(2)
        .map(|w| mass(w[0], w[1]) / (w[1] - w[0]))
        .collect();
    // rounding in the averages must not break monotonicity
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            values[i] = values[i - 1];
        }
    }
    values
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    /// `min(g₀, g₀(1/n))`.
    Truncation,
    /// Cell averages of `g₀` on an `n`-cell grid.
    Mollification,
    /// `g₀` plus a zero-mean non-increasing step of height `1/n`.
    Perturbation,
}

impl std::str::FromStr for SequenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncation" => Ok(SequenceKind::Truncation),
            "mollification" => Ok(SequenceKind::Mollification),
            "perturbation" => Ok(SequenceKind::Perturbation),
            other => Err(Error::Config(format!("unknown sequence kind {other:?}"))),
        }
    }
}

/// One member `g_n` of a near-extremal family for `(p, f, F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSequenceSpec {
    pub kind: SequenceKind,
    pub n: usize,
    pub params: PParams,
    pub moments: MomentPair,
    /// Grid resolution for truncation and perturbation members.
    pub cells: usize,
}

impl ExtremalSequenceSpec {
    pub fn new(kind: SequenceKind, n: usize, params: PParams, moments: MomentPair) -> Self {
        ExtremalSequenceSpec {
            kind,
            n,
            params,
            moments,
            cells: DEFAULT_CELLS,
        }
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }
}

/// Builds `g_n`; every member has exact moments `(f, F)`.
pub fn make_sequence(spec: &ExtremalSequenceSpec) -> Result<StepFunction> {
    let (params, moments) = (spec.params, spec.moments);
    if spec.n < 1 {
        return Err(Error::domain("sequence index must be >= 1"));
    }
    let g0 = build_g0(params, moments)?;
    match spec.kind {
        SequenceKind::Truncation => {
            if g0.is_constant() {
                return discretize_g0(&g0, spec.cells, moments, params);
            }
            let cut = 1.0 / spec.n as f64;
            let height = g0.eval(cut);
            let grid = g0.grid(params, spec.cells)?;
            let values = cell_averages(&grid, |u, w| {
                if w <= cut {
                    height * (w - u)
                } else if u >= cut {
                    g0.mass_between(u, w)
                } else {
                    height * (cut - u) + g0.mass_between(cut, w)
                }
            });
            renormalize_moments(&StepFunction::new(grid, values)?, moments, params)
        }
        SequenceKind::Mollification => {
            if spec.n < 2 {
                return Err(Error::domain("mollification needs n >= 2 cells"));
            }
            discretize_g0(&g0, spec.n, moments, params)
        }
        SequenceKind::Perturbation => {
            let base = discretize_g0(&g0, spec.cells, moments, params)?;
            let height = 1.0 / spec.n as f64;
            let bumped: Vec<f64> = base
                .cells()
                .map(|(u, w, v)| {
                    let up = (0.5f64.min(w) - u).max(0.0);
                    let down = (w - 0.5f64.max(u)).max(0.0);
                    (v + height * (up - down) / (w - u)).max(0.0)
                })
                .collect();
            let raw = StepFunction::new(base.breakpoints().to_vec(), bumped)?;
            renormalize_moments(&raw, moments, params)
        }
    }
}

/// Diagnostics of one sequence member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequencePoint {
    pub n: usize,
    pub phi: f64,
    /// `B_p(f, F) - Φ_p(g_n)`.
    pub gap: f64,
    pub defect: f64,
    /// `∫ |g_n - g₀|^p` against `g₀` discretized at the same resolution.
    pub lp_dist: f64,
}

/// Evaluates a family along the schedule `ns`, members in parallel.
pub fn sequence_series(
    kind: SequenceKind,
    params: PParams,
    moments: MomentPair,
    ns: &[usize],
    cells: usize,
) -> Result<Vec<SequencePoint>> {
    use rayon::prelude::*;
    let g0 = build_g0(params, moments)?;
    let bellman = bellman_value(params, moments)?;
    let reference = discretize_g0(&g0, cells, moments, params)?;
    ns.par_iter()
        .map(|&n| {
            let spec = ExtremalSequenceSpec::new(kind, n, params, moments).with_cells(cells);
            let g = make_sequence(&spec)?;
            let phi = phi_functional(&g, params);
            let reference = if kind == SequenceKind::Mollification {
                discretize_g0(&g0, cells, moments, params)?
            } else {
                reference.clone()
            };
            Ok(SequencePoint {
                n,
                phi,
                gap: bellman - phi,
                defect: defect(&g, g0.c, params)?.value(),
                lp_dist: lp_distance(&g, &reference, params),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monotone::{integral, p_moment};

    fn p(p: f64) -> PParams {
        PParams::new(p).unwrap()
    }

    fn m(params: PParams, f: f64, big_f: f64) -> MomentPair {
        MomentPair::new(params, f, big_f).unwrap()
    }

    #[test]
    fn g0_trivial() {
        let g0 = build_g0(p(2.0), m(p(2.0), 1.0, 1.0)).unwrap();
        assert_eq!((g0.k, g0.e, g0.c), (1.0, 0.0, 1.0));
    }

    #[test]
    fn g0_closed_forms() {
        // quadratic-root oracle: c = 1 + sqrt(1 - x) for p = 2
        for (big_f, x) in [(2.0, 0.5), (1.25, 0.8)] {
            let params = p(2.0);
            let g0 = build_g0(params, m(params, 1.0, big_f)).unwrap();
            let c = 1.0 + (1.0f64 - x).sqrt();
            assert!((g0.c - c).abs() < 1e-13);
            assert!((g0.k - 1.0 / c).abs() < 1e-13);
            assert!((g0.e - (-1.0 + 1.0 / c)).abs() < 1e-13);
            assert!((g0.k * g0.c - 1.0).abs() < 1e-13);
            // ∫ g0^2 = k^2 c / (2 - c)
            assert!((g0.k * g0.k * g0.c / (2.0 - g0.c) - big_f).abs() < 1e-11);
            assert!((g0.p_moment(params) - big_f).abs() < 1e-11);
        }
        let g0 = build_g0(p(2.0), m(p(2.0), 1.0, 2.0)).unwrap();
        assert!((g0.k - 0.5857864).abs() < 1e-7);
        assert!((g0.e + 0.4142136).abs() < 1e-7);
    }

    #[test]
    fn eigen_identity() {
        let params = p(2.0);
        let g0 = build_g0(params, m(params, 1.0, 2.0)).unwrap();
        for t in [1.0, 0.5, 1e-3, 1e-6] {
            let r = eigen_identity_check(&g0, g0.c, t).unwrap();
            assert!(r <= 1e-12 * g0.eval(t), "t = {t}: {r}");
        }
        let flat = build_g0(params, m(params, 1.0, 1.0)).unwrap();
        assert_eq!(eigen_identity_check(&flat, 1.0, 0.5).unwrap(), 0.0);
        assert!(eigen_identity_check(&g0, g0.c, 0.0).is_err());
    }

    #[test]
    fn mass_between_is_consistent() {
        let params = p(3.0);
        let g0 = build_g0(params, m(params, 1.0, 2.0)).unwrap();
        let total: f64 = [0.0, 1e-6, 0.01, 0.3, 1.0]
            .windows(2)
            .map(|w| g0.mass_between(w[0], w[1]))
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn discretize_constant() {
        let params = p(2.0);
        let mp = m(params, 1.5, 2.25);
        let g0 = build_g0(params, mp).unwrap();
        let g = discretize_g0(&g0, 8, mp, params).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.5));
        assert!(discretize_g0(&g0, 1, mp, params).is_err());
    }

    #[test]
    fn discretize_hits_moments() {
        let params = p(2.0);
        let mp = m(params, 1.0, 2.0);
        let g0 = build_g0(params, mp).unwrap();
        let g = discretize_g0(&g0, 1024, mp, params).unwrap();
        assert!((integral(&g) - 1.0).abs() <= 1e-12);
        assert!((p_moment(&g, params) - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn truncation_trivial_case_is_constant() {
        let params = p(2.0);
        let spec = ExtremalSequenceSpec::new(SequenceKind::Truncation, 16, params, m(params, 1.0, 1.0))
            .with_cells(64);
        let g = make_sequence(&spec).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn every_kind_has_exact_moments() {
        let params = p(2.0);
        let mp = m(params, 1.0, 2.0);
        for kind in [
            SequenceKind::Truncation,
            SequenceKind::Mollification,
            SequenceKind::Perturbation,
        ] {
            for n in [16, 64, 1024] {
                let spec = ExtremalSequenceSpec::new(kind, n, params, mp).with_cells(2048);
                let g = make_sequence(&spec).unwrap();
                assert!((integral(&g) - 1.0).abs() <= 1e-12, "{kind:?} {n}");
                assert!((p_moment(&g, params) - 2.0).abs() <= 1e-12, "{kind:?} {n}");
            }
        }
    }

    #[test]
    fn sequence_kind_parsing() {
        assert_eq!("truncation".parse::<SequenceKind>().unwrap(), SequenceKind::Truncation);
        assert!("smoothing".parse::<SequenceKind>().is_err());
    }
}
