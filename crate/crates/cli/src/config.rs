//! Experiment configuration: JSON documents tagged with a schema version.

use std::fmt;
use std::path::Path;

use minentlab::discretize::Metric;
use minentlab::learning::{Loss, Score};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::spec::{ChannelSpec, StateSpec};

pub const SCHEMA: &str = "minentlab/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Discretize,
    Minent,
    SingletFraction,
    Verify,
    Simulate,
    ExactLearning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyTarget {
    Classical,
    Qfano,
    Prop2,
    Prop3,
    Dephasing,
    Thm1,
    Thm2,
}

impl VerifyTarget {
    pub fn name(self) -> &'static str {
        match self {
            VerifyTarget::Classical => "classical",
            VerifyTarget::Qfano => "qfano",
            VerifyTarget::Prop2 => "prop2",
            VerifyTarget::Prop3 => "prop3",
            VerifyTarget::Dephasing => "dephasing",
            VerifyTarget::Thm1 => "thm1",
            VerifyTarget::Thm2 => "thm2",
        }
    }

    /// Suites registered for this target, each drawn from a seeded generator.
    pub fn suites(self) -> &'static [&'static str] {
        match self {
            VerifyTarget::Classical => &["random-tables"],
            VerifyTarget::Qfano => &["random-pairs"],
            VerifyTarget::Prop2 | VerifyTarget::Prop3 => &["random-tasks"],
            VerifyTarget::Dephasing => &["random-states"],
            VerifyTarget::Thm1 | VerifyTarget::Thm2 => &["channel-family"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Per-coordinate closed intervals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Points per coordinate of a uniform grid over `bounds`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    /// Explicit candidate points, used instead of a grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_metric")]
    pub metric: Metric,
}

fn default_metric() -> Metric {
    Metric::Euclidean
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    /// `likelihood[w][b]`, one row per cell of the greedy partition.
    pub likelihood: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    pub loss: Loss,
    pub score: Score,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactConfig {
    pub bits: usize,
    /// Truth tables as bit strings, input `x` at position `x`.
    pub concepts: Vec<String>,
    pub queries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_x: Option<Vec<f64>>,
    #[serde(default)]
    pub coherent: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<VerifyTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

impl ExperimentConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            command,
            target: None,
            suite: None,
            n: None,
            seed: None,
            tol: None,
            space: None,
            epsilon: None,
            channel: None,
            partition_size: None,
            state: None,
            table: None,
            task: None,
            exact: None,
            samples: None,
            batches: None,
            estimator: None,
            output: None,
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form. Output
    /// settings are excluded, so the same experiment hashes identically
    /// wherever it is written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serialises");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    /// True when the run draws from the random generator.
    pub fn is_randomized(&self) -> bool {
        let random_channel = self
            .channel
            .as_deref()
            .is_some_and(|c| matches!(c.parse::<ChannelSpec>(), Ok(ChannelSpec::Random { .. })));
        self.suite.is_some() || random_channel || self.command == CommandKind::Simulate
    }
}

/// A problem with one field of a configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Parses a configuration document; structural problems come back as a
/// single diagnostic naming the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "$".to_string() } else { path };
        vec![Diagnostic::new(field, e.into_inner().to_string())]
    })
}

pub fn validate_config(path: &Path) -> std::io::Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)?;
    Ok(match parse_config(&text) {
        Ok(cfg) => check(&cfg),
        Err(diags) => diags,
    })
}

fn positive(value: Option<f64>, field: &str, out: &mut Vec<Diagnostic>) {
    if let Some(v) = value {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Diagnostic::new(field, format!("must be positive, got {v}")));
        }
    }
}

fn require<T>(value: &Option<T>, field: &str, why: &str, out: &mut Vec<Diagnostic>) {
    if value.is_none() {
        out.push(Diagnostic::new(field, format!("required {why}")));
    }
}

/// Semantic checks on a parsed configuration.
pub fn check(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if cfg.schema != SCHEMA {
        out.push(Diagnostic::new("schema", format!("expected \"{SCHEMA}\", got \"{}\"", cfg.schema)));
    }
    positive(cfg.epsilon, "epsilon", &mut out);
    positive(cfg.tol, "tol", &mut out);
    for (field, v) in [("n", cfg.n), ("samples", cfg.samples), ("batches", cfg.batches), ("partition_size", cfg.partition_size)] {
        if v == Some(0) {
            out.push(Diagnostic::new(field, "must be at least 1"));
        }
    }
    if let Some(space) = &cfg.space {
        check_space(space, &mut out);
    }
    if let Some(c) = &cfg.channel {
        if let Err(e) = c.parse::<ChannelSpec>() {
            out.push(Diagnostic::new("channel", e));
        }
    }
    if let Some(s) = &cfg.state {
        if let Err(e) = s.build() {
            out.push(Diagnostic::new("state", e.to_string()));
        }
    }
    if cfg.is_randomized() && cfg.seed.is_none() {
        out.push(Diagnostic::new("seed", "required for randomized runs"));
    }
    if cfg.target.is_some() && cfg.command != CommandKind::Verify {
        out.push(Diagnostic::new("target", "only meaningful for verify"));
    }
    match cfg.command {
        CommandKind::Discretize => require(&cfg.epsilon, "epsilon", "to discretize", &mut out),
        CommandKind::Minent | CommandKind::SingletFraction => require(&cfg.state, "state", "for this command", &mut out),
        CommandKind::Verify => check_verify(cfg, &mut out),
        CommandKind::Simulate => {
            require(&cfg.epsilon, "epsilon", "to build the partition", &mut out);
            require(&cfg.task, "task", "for simulate", &mut out);
        }
        CommandKind::ExactLearning => require(&cfg.exact, "exact", "for exact-learning", &mut out),
    }
    if let Some(task) = &cfg.task {
        if let Some(p) = &task.prior {
            if p.len() != task.likelihood.len() {
                out.push(Diagnostic::new("task.prior", "needs one entry per likelihood row"));
            }
        }
    }
    if let Some(exact) = &cfg.exact {
        for (i, c) in exact.concepts.iter().enumerate() {
            if c.len() != 1 << exact.bits.min(8) || c.chars().any(|ch| ch != '0' && ch != '1') {
                out.push(Diagnostic::new(
                    format!("exact.concepts[{i}]"),
                    format!("must be a bit string of length 2^{}", exact.bits),
                ));
            }
        }
    }
    out
}

fn check_space(space: &SpaceConfig, out: &mut Vec<Diagnostic>) {
    match (&space.points, &space.bounds, &space.counts) {
        (Some(points), _, None) => {
            if points.is_empty() {
                out.push(Diagnostic::new("space.points", "must not be empty"));
            }
        }
        (None, Some(bounds), Some(counts)) => {
            if bounds.len() != counts.len() {
                out.push(Diagnostic::new("space.counts", "needs one count per bound"));
            }
            if bounds.iter().any(|(lo, hi)| !(hi >= lo)) {
                out.push(Diagnostic::new("space.bounds", "every interval needs lo ≤ hi"));
            }
            if counts.contains(&0) {
                out.push(Diagnostic::new("space.counts", "counts must be positive"));
            }
        }
        _ => out.push(Diagnostic::new("space", "give either points or bounds with counts")),
    }
}

fn check_verify(cfg: &ExperimentConfig, out: &mut Vec<Diagnostic>) {
    let Some(target) = cfg.target else {
        out.push(Diagnostic::new("target", "required for verify"));
        return;
    };
    if let Some(suite) = &cfg.suite {
        if !target.suites().contains(&suite.as_str()) {
            out.push(Diagnostic::new(
                "suite",
                format!(
                    "unknown suite \"{suite}\" for {}; registered: {}",
                    target.name(),
                    target.suites().join(", ")
                ),
            ));
        }
        return;
    }
    match target {
        VerifyTarget::Classical => require(&cfg.table, "table", "without a suite", out),
        VerifyTarget::Qfano => require(&cfg.suite, "suite", "for qfano", out),
        VerifyTarget::Prop2 | VerifyTarget::Prop3 => {
            require(&cfg.task, "task", "without a suite", out);
            require(&cfg.epsilon, "epsilon", "without a suite", out);
        }
        VerifyTarget::Dephasing => require(&cfg.state, "state", "without a suite", out),
        VerifyTarget::Thm1 | VerifyTarget::Thm2 => {
            require(&cfg.partition_size, "partition_size", "without a suite", out);
            require(&cfg.channel, "channel", "without a suite", out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verify_classical() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(CommandKind::Verify);
        cfg.target = Some(VerifyTarget::Classical);
        cfg.suite = Some("random-tables".into());
        cfg.n = Some(10);
        cfg.seed = Some(7);
        cfg
    }

    #[test]
    fn valid_config_has_no_diagnostics() {
        assert!(check(&verify_classical()).is_empty());
    }

    #[test]
    fn missing_seed_on_randomized_suite() {
        let mut cfg = verify_classical();
        cfg.seed = None;
        assert_eq!(check(&cfg), vec![Diagnostic::new("seed", "required for randomized runs")]);
    }

    #[test]
    fn nonpositive_epsilon() {
        let mut cfg = ExperimentConfig::new(CommandKind::Discretize);
        cfg.epsilon = Some(0.0);
        let diags = check(&cfg);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].field, "epsilon");
    }

    #[test]
    fn structural_errors_name_the_field() {
        let err = parse_config(r#"{"schema": "minentlab/1", "command": "verify", "space": {"counts": "x"}}"#).unwrap_err();
        assert_eq!(err[0].field, "space.counts");
        let err = parse_config(r#"{"schema": "minentlab/1", "command": "verify", "bogus": 1}"#).unwrap_err();
        assert!(err[0].message.contains("bogus"));
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = verify_classical();
        let mut b = a.clone();
        b.output = Some(OutputConfig {
            path: Some("x.jsonl".into()),
            format: Some(Format::Csv),
        });
        assert_eq!(a.hash(), b.hash());
        b.seed = Some(8);
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_suite_is_reported() {
        let mut cfg = verify_classical();
        cfg.suite = Some("random-pairs".into());
        assert_eq!(check(&cfg)[0].field, "suite");
    }
}
