use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-increasing, nonnegative step function on `(0, 1]`.
///
/// Value `values[i]` is taken on the half-open cell
/// `(breakpoints[i], breakpoints[i + 1]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// Validating constructor. `breakpoints` must run strictly increasing from
    /// exactly 0 to exactly 1 and hold one more entry than `values`.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate(&breakpoints, &values)?;
        Ok(StepFunction {
            breakpoints,
            values,
        })
    }

    /// Builds from right endpoints `t_1 < ... < t_n = 1`, the CSV layout.
    pub fn from_right_endpoints(ends: &[f64], values: Vec<f64>) -> Result<Self> {
        let mut breakpoints = Vec::with_capacity(ends.len() + 1);
        breakpoints.push(0.0);
        breakpoints.extend_from_slice(ends);
        StepFunction::new(breakpoints, values)
    }

    pub fn constant(value: f64) -> Result<Self> {
        StepFunction::new(vec![0.0, 1.0], vec![value])
    }

    /// The constant `value` carried on an existing partition.
    pub fn constant_on(breakpoints: Vec<f64>, value: f64) -> Result<Self> {
        let n = breakpoints.len().saturating_sub(1);
        StepFunction::new(breakpoints, vec![value; n])
    }

    pub(crate) fn from_parts_unchecked(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert!(validate(&breakpoints, &values).is_ok());
        StepFunction {
            breakpoints,
            values,
        }
    }

    #[inline]
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of cells.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `(left, right, value)` per cell.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    /// Index of the cell `(t_{i-1}, t_i]` containing `t`, for `t` in `(0, 1]`.
    pub fn cell_index(&self, t: f64) -> usize {
        cell_index(&self.breakpoints, t)
    }

    /// `g(t)` for `t` in `(0, 1]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::domain(format!("t = {t} outside (0, 1]")));
        }
        Ok(self.values[self.cell_index(t)])
    }

    /// `λ g` for `λ >= 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("scale must be >= 0, got {lambda}")));
        }
        Ok(StepFunction::from_parts_unchecked(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v * lambda).collect(),
        ))
    }

    /// Writes the `t,v` CSV layout: one row per cell, keyed by its right endpoint.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["t", "v"])?;
        for (_, hi, v) in self.cells() {
            out.write_record([fmt_f64(hi), fmt_f64(v)])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let headers = input.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "v" {
            return Err(Error::InvalidStep(format!(
                "expected header `t,v`, got {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut ends = Vec::new();
        let mut values = Vec::new();
        for record in input.records() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidStep(format!("bad number {s:?}: {e}")))
            };
            ends.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        StepFunction::from_right_endpoints(&ends, values)
    }
}

pub(crate) fn cell_index(breakpoints: &[f64], t: f64) -> usize {
    // first i >= 1 with breakpoints[i] >= t, shifted to a cell index
    let i = breakpoints[1..].partition_point(|&b| b < t);
    i.min(breakpoints.len() - 2)
}

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn validate(breakpoints: &[f64], values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidStep("need at least one cell".into()));
    }
    if breakpoints.len() != values.len() + 1 {
        return Err(Error::InvalidStep(format!(
            "{} breakpoints for {} values",
            breakpoints.len(),
            values.len()
        )));
    }
    if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
        return Err(Error::InvalidStep(
            "breakpoints must start at 0 and end at 1".into(),
        ));
    }
    if let Some(w) = breakpoints.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidStep(format!(
            "breakpoints not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidStep(format!(
            "values must be finite and >= 0, got {v}"
        )));
    }
    if let Some(w) = values.windows(2).find(|w| w[0] < w[1]) {
        return Err(Error::InvalidStep(format!(
            "values must be non-increasing, got {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Prefix masses `C_i = Σ_{j<=i} v_j (t_j - t_{j-1})` of a step function,
/// i.e. the concave piecewise-linear `t ↦ ∫_0^t g`.
#[derive(Debug, Clone)]
pub struct CumulativeProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl CumulativeProfile {
    pub fn new(g: &StepFunction) -> Self {
        Self::from_slices(g.breakpoints(), g.values())
    }

    pub(crate) fn from_slices(breakpoints: &[f64], values: &[f64]) -> Self {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (w, v) in breakpoints.windows(2).zip(values) {
            acc += v * (w[1] - w[0]);
            prefix.push(acc);
        }
        CumulativeProfile {
            breakpoints: breakpoints.to_vec(),
            values: values.to_vec(),
            prefix,
        }
    }

    /// `C_0, ..., C_n`.
    #[inline]
    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// `∫_0^1 g`.
    #[inline]
    pub fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// `∫_0^t g` for `t` in `[0, 1]`.
    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return self.total();
        }
        let i = cell_index(&self.breakpoints, t);
        self.prefix[i] + self.values[i] * (t - self.breakpoints[i])
    }

    /// `a_i = C_{i-1} - v_i t_{i-1}` so that `Hg(t) = v_i + a_i / t` on cell `i`.
    #[inline]
    pub fn hardy_offset(&self, i: usize) -> f64 {
        self.prefix[i] - self.values[i] * self.breakpoints[i]
    }
}

/// Geometric partition `0 < t_1 < ... < t_n = 1` with `t_i = r^(n-i)` and
/// `t_1 = t_min`.
pub fn geometric_grid(cells: usize, t_min: f64) -> Result<Vec<f64>> {
    if cells < 2 {
        return Err(Error::domain(format!("need at least 2 cells, got {cells}")));
    }
    if !(t_min > 0.0 && t_min < 1.0) {
        return Err(Error::domain(format!("t_min must lie in (0, 1), got {t_min}")));
    }
    let n = cells;
    let log_min = t_min.ln();
    let mut grid = Vec::with_capacity(n + 1);
    grid.push(0.0);
    for i in 1..n {
        grid.push((log_min * (n - i) as f64 / (n - 1) as f64).exp());
    }
    grid.push(1.0);
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain(format!(
            "{cells} cells cannot resolve a geometric grid down to {t_min}"
        )));
    }
    Ok(grid)
}

/// Power-graded partition: `t_i^κ` is uniform between `t_min^κ` and 1 for
/// `i = 1..n`. As `κ → 0` this tends to the geometric grid; positive `κ`
/// spends more cells where `t` is large.
pub fn graded_grid(cells: usize, t_min: f64, kappa: f64) -> Result<Vec<f64>> {
    if cells < 2 {
        return Err(Error::domain(format!("need at least 2 cells, got {cells}")));
    }
    if !(t_min > 0.0 && t_min < 1.0) {
        return Err(Error::domain(format!("t_min must lie in (0, 1), got {t_min}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("grading exponent must be > 0, got {kappa}")));
    }
    let u_min = t_min.powf(kappa);
    let n = cells;
    let mut grid = Vec::with_capacity(n + 1);
    grid.push(0.0);
    grid.push(t_min);
    for i in 2..n {
        let u = u_min + (1.0 - u_min) * (i - 1) as f64 / (n - 1) as f64;
        grid.push(u.powf(1.0 / kappa));
    }
    grid.push(1.0);
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain(format!(
            "{cells} cells cannot resolve a graded grid down to {t_min}"
        )));
    }
    Ok(grid)
}

/// Uniform partition with `cells` equal cells.
pub fn uniform_grid(cells: usize) -> Result<Vec<f64>> {
    if cells == 0 {
        return Err(Error::domain("need at least 1 cell"));
    }
    let mut grid: Vec<f64> = (0..cells).map(|i| i as f64 / cells as f64).collect();
    grid.push(1.0);
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split() -> StepFunction {
        StepFunction::new(vec![0.0, 0.5, 1.0], vec![1.5, 0.5]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(StepFunction::new(vec![0.0, 1.0], vec![]).is_err());
        assert!(StepFunction::new(vec![0.1, 1.0], vec![1.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.9], vec![1.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.5, 0.5, 1.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.5, 1.0], vec![0.5, 1.5]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![-1.0]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![f64::NAN]).is_err());
        assert!(StepFunction::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.0]).is_ok());
    }

    #[test]
    fn cell_lookup_uses_right_closed_cells() {
        let g = split();
        assert_eq!(g.eval(0.5).unwrap(), 1.5);
        assert_eq!(g.eval(0.5000001).unwrap(), 0.5);
        assert_eq!(g.eval(1.0).unwrap(), 0.5);
        assert_eq!(g.eval(1e-300).unwrap(), 1.5);
        assert!(g.eval(0.0).is_err());
    }

    #[test]
    fn profile() {
        let c = CumulativeProfile::new(&split());
        assert_eq!(c.prefix(), &[0.0, 0.75, 1.0]);
        assert_eq!(c.at(0.75), 0.875);
        assert_eq!(c.hardy_offset(0), 0.0);
        assert_eq!(c.hardy_offset(1), 0.5);
    }

    #[test]
    fn csv_round_trip() {
        let g = StepFunction::new(vec![0.0, 0.1, 0.3, 1.0], vec![3.0, 1.0 / 3.0, 0.0]).unwrap();
        let text = g.to_csv_string();
        assert!(text.starts_with("t,v\n"));
        assert_eq!(text.lines().count(), 4);
        let back = StepFunction::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(StepFunction::read_csv("x,y\n1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn geometric_grid_shape() {
        let grid = geometric_grid(16, 1e-8).unwrap();
        assert_eq!(grid.len(), 17);
        assert_eq!(grid[0], 0.0);
        assert!((grid[1] - 1e-8).abs() < 1e-20);
        assert_eq!(grid[16], 1.0);
        let ratios: Vec<f64> = grid[1..].windows(2).map(|w| w[1] / w[0]).collect();
        for r in &ratios {
            assert!((r - ratios[0]).abs() < 1e-12 * ratios[0]);
        }
        assert!(geometric_grid(1, 1e-8).is_err());
    }

    #[test]
    fn graded_grid_shape() {
        let grid = graded_grid(100, 1e-30, 0.1).unwrap();
        assert_eq!(grid.len(), 101);
        assert_eq!(grid[1], 1e-30);
        assert_eq!(grid[100], 1.0);
        let u: Vec<f64> = grid[1..].iter().map(|t| t.powf(0.1)).collect();
        let step = u[1] - u[0];
        for w in u.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-12);
        }
        assert!(graded_grid(10, 1e-3, 0.0).is_err());
    }
}
