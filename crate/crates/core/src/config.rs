//! Experiment configuration: a JSON file mirroring the command-line flags,
//! with flags taking precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bellman::{MomentPair, PParams};
use crate::error::{Error, Result};
use crate::extremal::SequenceKind;

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "HBL_OUT";
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, rename = "F", skip_serializing_if = "Option::is_none")]
    pub big_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    /// Sandwich schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    /// Leaf depth of the random symmetrization instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branching: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_obj: Option<f64>,
    /// Extremal-sequence family and indices for `extremal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SequenceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Fields set in `flags` win; the rest come from `self`.
    pub fn overlay(self, flags: ExperimentConfig) -> Self {
        ExperimentConfig {
            p: flags.p.or(self.p),
            f: flags.f.or(self.f),
            big_f: flags.big_f.or(self.big_f),
            cells: flags.cells.or(self.cells),
            a: flags.a.or(self.a),
            depth: flags.depth.or(self.depth),
            seed: flags.seed.or(self.seed),
            samples: flags.samples.or(self.samples),
            gamma: flags.gamma.or(self.gamma),
            branching: flags.branching.or(self.branching),
            max_iters: flags.max_iters.or(self.max_iters),
            step_size: flags.step_size.or(self.step_size),
            tol_obj: flags.tol_obj.or(self.tol_obj),
            kind: flags.kind.or(self.kind),
            ns: flags.ns.or(self.ns),
            out: flags.out.or(self.out),
            only: flags.only.or(self.only),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
            _ => Ok(()),
        };
        positive("step_size", self.step_size)?;
        positive("tol_obj", self.tol_obj)?;
        positive("f", self.f)?;
        positive("F", self.big_f)?;
        if let Some(p) = self.p {
            PParams::new(p).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(a) = &self.a {
            if a.is_empty() {
                return Err(Error::Config("empty a schedule".into()));
            }
            if let Some(x) = a.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
                return Err(Error::Config(format!("a must lie in (0, 1), got {x}")));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!("gamma must lie in (0, 1], got {g}")));
            }
        }
        if self.branching == Some(0) {
            return Err(Error::Config("branching must be >= 1".into()));
        }
        if self.samples == Some(0) {
            return Err(Error::Config("samples must be >= 1".into()));
        }
        Ok(())
    }

    /// `p` defaults to 2.
    pub fn params(&self) -> Result<PParams> {
        PParams::new(self.p.unwrap_or(2.0))
    }

    /// `(f, F)` defaults to `(1, 2)`.
    pub fn moments(&self, params: PParams) -> Result<MomentPair> {
        MomentPair::new(params, self.f.unwrap_or(1.0), self.big_f.unwrap_or(2.0))
    }

    /// `$HBL_OUT`, else `out`, else `./out`.
    pub fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overlays() {
        let file = ExperimentConfig::from_json_str(r#"{"p": 3, "F": 2.5, "seed": 4, "a": [0.5, 0.1]}"#).unwrap();
        assert_eq!(file.big_f, Some(2.5));
        let flags = ExperimentConfig { p: Some(2.0), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.p, Some(2.0));
        assert_eq!(merged.seed, Some(4));
        assert_eq!(merged.a, Some(vec![0.5, 0.1]));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            ExperimentConfig::from_json_str(r#"{"q": 1}"#),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_json_str(r#"{"seed": "x"}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"a": [1.0]}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"tol_obj": 0}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"p": 1}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"kind": "truncation"}"#).is_ok());
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::default();
        let params = cfg.params().unwrap();
        assert_eq!(params.p(), 2.0);
        let m = cfg.moments(params).unwrap();
        assert_eq!((m.f(), m.big_f()), (1.0, 2.0));
    }
}
