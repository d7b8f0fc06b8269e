//! The resolved experiment description that every output file embeds.
//!
//! A config is what a subcommand's flags become once every default is
//! filled in: concrete dimension list, concrete start weights, concrete
//! time grid.  Feeding the embedded config back through
//! [`crate::commands::execute`] reproduces the output byte for byte, so
//! any result file doubles as a replay script.

use serde::{Deserialize, Serialize};

/// Which experiment a config describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandTag {
    /// Exact distance curve from one start weight.
    Profile,
    /// Pointwise-worst distance curve over a grid of start weights.
    Worst,
    /// Epsilon-mixing times read off an exact curve.
    MixingTime,
    /// Closed-form lower-bound certificates at alpha-indexed times.
    Bounds,
    /// Monte Carlo coalescence tails of a coupling.
    Couple,
    /// Monte Carlo refresh-count statistics against closed-form moments.
    Coupon,
    /// Entrywise comparison of the two kernel constructions.
    Equiv,
    /// Cutoff-scale quantities under a dimension-dependent bias schedule.
    ThetaN,
    /// The cross-check suite; exits nonzero on any failing check.
    Verify,
}

/// Bias parameter: one constant, or a schedule evaluated at each n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "kebab-case")]
pub enum ThetaSpec {
    /// The same bias at every dimension.
    Constant {
        /// The bias value, in (0, 1].
        value: f64,
    },
    /// theta_n = 1/n.
    Reciprocal,
    /// theta_n = n^{-1/2}.
    InverseSqrt,
}

impl ThetaSpec {
    /// The bias this spec assigns to dimension n.
    pub fn at(&self, n: usize) -> f64 {
        match self {
            ThetaSpec::Constant { value } => *value,
            ThetaSpec::Reciprocal => 1.0 / n as f64,
            ThetaSpec::InverseSqrt => 1.0 / (n as f64).sqrt(),
        }
    }
}

/// How the evaluation times of a run are laid out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TGrid {
    /// An automatically shaped grid from 0 up to a horizon: geometric
    /// ramp, dense window around the predicted cutoff, coarse tail.
    UpTo {
        /// The horizon, inclusive.
        t_max: u64,
    },
    /// Exactly these times.
    Explicit {
        /// The times, in the order given.
        times: Vec<u64>,
    },
    /// The command derives its times from other fields (alpha offsets,
    /// check definitions) and takes no time grid of its own.
    Derived,
}

/// Output serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FormatTag {
    /// One table per file: a `# config = ...` comment line, a header
    /// row, then data rows.  LF line endings, floats with 17 significant
    /// digits.
    #[default]
    Csv,
    /// The same table as a JSON object with `config`, `columns`, `rows`.
    Json,
}

/// Which coupling the `couple` command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoupleMode {
    /// Shared-randomness coupling of two full chains from the extreme
    /// corner pair.
    Coordinatewise,
    /// Independence coupling of two projected copies on the lattice over
    /// one base weight.
    Independence,
}

/// Verification depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyLevel {
    /// Small-size subset, under a minute.
    Quick,
    /// Every check group at full size.
    Full,
}

/// A fully resolved experiment description.
///
/// Fields not used by a command keep their neutral defaults and are
/// still serialized, so the embedded form is the same shape for every
/// command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    /// The experiment to run.
    pub command: CommandTag,
    /// Cube dimensions, one entry for single-dimension commands.
    pub n: Vec<usize>,
    /// Bias constant or schedule.
    pub theta: ThetaSpec,
    /// Start or base weights; meaning depends on the command.
    #[serde(default)]
    pub k: Vec<usize>,
    /// Distance thresholds for mixing-time queries.
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Evaluation-time layout.
    pub t_grid: TGrid,
    /// Alpha offsets for bound certificates and schedule experiments.
    #[serde(default)]
    pub alpha: Vec<f64>,
    /// Monte Carlo replicates per estimate.
    pub replicates: usize,
    /// Master seed; replicate i draws from stream i of this seed.
    pub seed: u64,
    /// Coupling variant, `couple` only.
    #[serde(default)]
    pub mode: Option<CoupleMode>,
    /// Start the second projected copy from a stationary draw instead of
    /// the far corner, `couple --mode independence` only.
    #[serde(default)]
    pub stationary_start: bool,
    /// Verification depth, `verify` only.
    #[serde(default)]
    pub level: Option<VerifyLevel>,
    /// Output serialization.
    pub format: FormatTag,
    /// Output path; absent means stdout.
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    /// A neutral config for `command`; callers fill in what they need.
    pub fn base(command: CommandTag) -> Self {
        Self {
            command,
            n: Vec::new(),
            theta: ThetaSpec::Constant { value: 1.0 },
            k: Vec::new(),
            eps: Vec::new(),
            t_grid: TGrid::Derived,
            alpha: Vec::new(),
            replicates: 0,
            seed: 0,
            mode: None,
            stationary_start: false,
            level: None,
            format: FormatTag::Csv,
            out: None,
        }
    }

    /// Compact single-line JSON form, as embedded in outputs.
    pub fn to_json(&self) -> crate::error::Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses the compact JSON form back.
    pub fn from_json(s: &str) -> crate::error::Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_preserves_every_field() {
        let mut cfg = ExperimentConfig::base(CommandTag::Couple);
        cfg.n = vec![128];
        cfg.theta = ThetaSpec::Constant { value: 0.5 };
        cfg.k = vec![64];
        cfg.t_grid = TGrid::Explicit { times: vec![100, 200, 400] };
        cfg.replicates = 500;
        cfg.seed = 42;
        cfg.mode = Some(CoupleMode::Independence);
        cfg.stationary_start = true;
        cfg.out = Some("/tmp/x.csv".into());
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn schedule_tags_serialize_kebab_case() {
        let json = serde_json::to_string(&ThetaSpec::InverseSqrt).unwrap();
        assert!(json.contains("inverse-sqrt"), "{json}");
        let json = serde_json::to_string(&ThetaSpec::Constant { value: 0.25 }).unwrap();
        assert!(json.contains("constant"), "{json}");
    }

    #[test]
    fn schedules_evaluate_correctly() {
        assert_eq!(ThetaSpec::Constant { value: 0.3 }.at(100), 0.3);
        assert_eq!(ThetaSpec::Reciprocal.at(256), 1.0 / 256.0);
        assert_eq!(ThetaSpec::InverseSqrt.at(256), 1.0 / 16.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let cfg = ExperimentConfig::base(CommandTag::Equiv);
        let mut v: serde_json::Value = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }
}
