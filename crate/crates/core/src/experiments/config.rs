//! Experiment configuration: JSON file, command-line overrides, defaults.
//!
//! Precedence is flag > file > default. Unknown keys in the file are errors.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::channel::FadingModel;

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EcVsRate,
    VarianceRatioVsRate,
    MomentsVsRate,
    EcVsRateThetas,
    EcVsInverseMu,
    EcVsRateDeadline,
    QueueValidate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::EcVsRate,
        ExperimentKind::VarianceRatioVsRate,
        ExperimentKind::MomentsVsRate,
        ExperimentKind::EcVsRateThetas,
        ExperimentKind::EcVsInverseMu,
        ExperimentKind::EcVsRateDeadline,
        ExperimentKind::QueueValidate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::EcVsRate => "ec_vs_rate",
            ExperimentKind::VarianceRatioVsRate => "variance_ratio_vs_rate",
            ExperimentKind::MomentsVsRate => "moments_vs_rate",
            ExperimentKind::EcVsRateThetas => "ec_vs_rate_thetas",
            ExperimentKind::EcVsInverseMu => "ec_vs_inverse_mu",
            ExperimentKind::EcVsRateDeadline => "ec_vs_rate_deadline",
            ExperimentKind::QueueValidate => "queue_validate",
        }
    }

    /// QoS exponents used when the configuration does not give any.
    pub fn default_thetas(&self) -> Vec<f64> {
        match self {
            ExperimentKind::EcVsRate
            | ExperimentKind::VarianceRatioVsRate
            | ExperimentKind::MomentsVsRate => vec![0.01],
            ExperimentKind::EcVsRateThetas | ExperimentKind::EcVsInverseMu => {
                vec![0.001, 0.01, 0.1]
            }
            ExperimentKind::EcVsRateDeadline => vec![0.1],
            ExperimentKind::QueueValidate => vec![0.05],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(ExperimentError::Config(format!(
                "unknown format '{s}' (expected csv or json)"
            ))),
        }
    }
}

/// A HARQ round limit: a positive block count or unbounded (`"inf"` in JSON).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeadlineSpec {
    Bounded(u64),
    Unbounded,
}

impl DeadlineSpec {
    pub fn as_option(&self) -> Option<u64> {
        match *self {
            DeadlineSpec::Bounded(n) => Some(n),
            DeadlineSpec::Unbounded => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DeadlineSpec::Bounded(n) => n.to_string(),
            DeadlineSpec::Unbounded => "inf".to_string(),
        }
    }
}

impl Serialize for DeadlineSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            DeadlineSpec::Bounded(n) => s.serialize_u64(n),
            DeadlineSpec::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for DeadlineSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Blocks(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Blocks(0) => Err(de::Error::custom("deadline must be at least 1 block")),
            Raw::Blocks(n) => Ok(DeadlineSpec::Bounded(n)),
            Raw::Word(w) if w == "inf" || w == "unbounded" => Ok(DeadlineSpec::Unbounded),
            Raw::Word(w) => Err(de::Error::custom(format!(
                "deadline must be a positive integer or \"inf\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    /// `start + i·step` for every `i` with the value not past `stop`.
    pub fn points(&self) -> Vec<f64> {
        let slack = self.step * 1e-9;
        (0..)
            .map(|i| self.start + i as f64 * self.step)
            .take_while(|&x| x <= self.stop + slack)
            .collect()
    }

    fn validate(&self, what: &str) -> Result<(), ExperimentError> {
        let ok = self.start.is_finite()
            && self.stop.is_finite()
            && self.step.is_finite()
            && self.step > 0.0
            && self.stop >= self.start;
        if !ok {
            return Err(ExperimentError::Config(format!(
                "{what}: need finite start <= stop and step > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Parameters of the queue self-consistency run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QueueSettings {
    /// Message rate `R` (bits/s/Hz).
    pub rate: f64,
    /// Blocks simulated per trial.
    pub horizon: u64,
    pub trials: usize,
    /// Samples used to estimate `μ₁`, `σ²` for the arrival rate.
    pub moment_trials: usize,
    /// Overflow thresholds (bits).
    pub tau_grid: Grid,
}

impl Default for QueueSettings {
    fn default() -> Self {
        QueueSettings {
            rate: 3.0,
            horizon: 4_000_000,
            trials: 32,
            moment_trials: 2_000_000,
            tau_grid: Grid {
                start: 3.0,
                stop: 180.0,
                step: 3.0,
            },
        }
    }
}

fn deserialize_thetas<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub snr_db: f64,
    /// QoS exponents; `None` picks the experiment's default.
    #[serde(deserialize_with = "deserialize_thetas")]
    pub theta: Option<Vec<f64>>,
    pub rate_grid: Grid,
    pub deadlines: Vec<DeadlineSpec>,
    pub model: FadingModel,
    pub seed: u64,
    /// Monte-Carlo trials per effective-capacity estimate.
    pub trials: usize,
    /// Horizon `t` in blocks for Monte-Carlo estimates.
    pub horizon: u64,
    /// Samples of `T` per moment estimate.
    pub moment_trials: usize,
    /// Re-estimate at `2t` and warn if the two differ by 0.5% or more.
    pub check_convergence: bool,
    pub queue: QueueSettings,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::EcVsRate,
            snr_db: 6.0,
            theta: None,
            rate_grid: Grid {
                start: 0.25,
                stop: 12.0,
                step: 0.25,
            },
            deadlines: vec![
                DeadlineSpec::Bounded(2),
                DeadlineSpec::Bounded(4),
                DeadlineSpec::Bounded(6),
                DeadlineSpec::Unbounded,
            ],
            model: FadingModel::default(),
            seed: 1,
            trials: crate::renewal::DEFAULT_TRIALS,
            horizon: crate::renewal::DEFAULT_HORIZON,
            moment_trials: 100_000,
            check_convergence: true,
            queue: QueueSettings::default(),
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub snr_db: Option<f64>,
    pub theta: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub trials: Option<usize>,
    pub horizon: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| ExperimentError::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn apply(mut self, o: Overrides) -> Result<Self, ExperimentError> {
        if let Some(v) = o.experiment {
            self.experiment = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.snr_db {
            self.snr_db = v;
        }
        if let Some(v) = o.theta {
            self.theta = Some(v);
        }
        if let Some(v) = o.output {
            self.output = Some(v);
        }
        if let Some(v) = o.format {
            self.format = v;
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = o.horizon {
            self.horizon = v;
        }
        self.validate()?;
        Ok(self)
    }

    /// QoS exponents in effect for this run.
    pub fn thetas(&self) -> Vec<f64> {
        self.theta
            .clone()
            .unwrap_or_else(|| self.experiment.default_thetas())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let err = |m: String| Err(ExperimentError::Config(m));
        if !self.snr_db.is_finite() {
            return err(format!("snr_db must be finite, got {}", self.snr_db));
        }
        self.rate_grid.validate("rate_grid")?;
        if self.rate_grid.start <= 0.0 {
            return err("rate_grid must start above 0".into());
        }
        let thetas = self.thetas();
        if thetas.is_empty() {
            return err("theta list is empty".into());
        }
        if let Some(t) = thetas.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return err(format!("theta must be >= 0, got {t}"));
        }
        if self.experiment == ExperimentKind::EcVsRate && thetas.len() != 1 {
            return err("ec_vs_rate takes exactly one theta".into());
        }
        if matches!(
            self.experiment,
            ExperimentKind::EcVsRate
                | ExperimentKind::EcVsRateDeadline
                | ExperimentKind::QueueValidate
        ) && thetas.contains(&0.0)
        {
            return err(format!("{} needs theta > 0", self.experiment));
        }
        if self.trials < 100 {
            return err(format!("trials must be >= 100, got {}", self.trials));
        }
        if self.moment_trials < 2 {
            return err("moment_trials must be >= 2".into());
        }
        if self.horizon < 2 {
            return err("horizon must be >= 2".into());
        }
        if self.experiment == ExperimentKind::EcVsRateDeadline && self.deadlines.is_empty() {
            return err("deadline experiment needs at least one deadline".into());
        }
        let q = &self.queue;
        q.tau_grid.validate("queue.tau_grid")?;
        if !(q.rate.is_finite() && q.rate > 0.0)
            || q.trials == 0
            || q.horizon < 10
            || q.moment_trials < 2
        {
            return err(format!("invalid queue settings: {q:?}"));
        }
        self.model
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Parses a comma-separated list of QoS exponents.
pub fn parse_theta_list(s: &str) -> Result<Vec<f64>, ExperimentError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| ExperimentError::Config(format!("bad theta value '{p}'")))
        })
        .collect()
}
