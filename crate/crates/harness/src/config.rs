//! Pipeline configuration: TOML file + CLI overrides, with every table
//! variant available as a named preset.

use std::path::{Path, PathBuf};

use gazepriv_core::classify::{IdtParams, IkfParams};
use gazepriv_core::privacy::{Embedder, EnsembleEmbedder, VelocityStatsEmbedder};
use gazepriv_core::privatize::ExpParam;
use gazepriv_core::ScreenBounds;
use regex::Regex;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("unknown preset `{0}` (available: {1})")]
    UnknownPreset(String, String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Filename convention; needs named groups `subject`, `session`, `task`.
    pub filename_pattern: Option<String>,
    pub bounds: Option<BoundsSpec>,
    /// Single-operator mode; mutually exclusive with `variants`.
    pub privatizer: Option<PrivatizerSpec>,
    /// Multi-row table mode.
    pub variants: Option<Vec<VariantSpec>>,
    pub classifier: Option<ClassifierConfig>,
    #[serde(default)]
    pub embedder: EmbedderSpec,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub interaction: InteractionSpec,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Declarative operator choice: `op` name plus its parameters.
///
/// Deserialized by hand: internally tagged serde enums ignore
/// `deny_unknown_fields`, and most parameters here have defaults, so a
/// misspelled key would otherwise be dropped silently.
#[derive(Debug, Clone, PartialEq)]
pub enum PrivatizerSpec {
    Identity,
    Median3,
    Downsample { m: usize },
    Gaussian { variance: f64 },
    Lwma { window: usize },
    Targeted { radius: f64, epsilon: f64, param: ExpParam },
    Fir { fc_hz: f64, taps: usize },
    Kalman { q: f64, r: f64 },
}

impl<'de> Deserialize<'de> for PrivatizerSpec {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error;

        let table = toml::Table::deserialize(deserializer)?;
        let op = table
            .get("op")
            .and_then(toml::Value::as_str)
            .ok_or_else(|| D::Error::custom("privatizer needs an `op` string"))?
            .to_string();
        let allowed: &[&str] = match op.as_str() {
            "identity" | "median3" => &[],
            "downsample" => &["m"],
            "gaussian" => &["variance"],
            "lwma" => &["window"],
            "targeted" => &["radius", "epsilon", "param"],
            "fir" => &["fc_hz", "taps"],
            "kalman" => &["q", "r"],
            other => {
                return Err(D::Error::custom(format!(
                    "unknown op \"{other}\"; expected one of identity, median3, \
                     downsample, gaussian, lwma, targeted, fir, kalman"
                )));
            }
        };
        for key in table.keys() {
            if key != "op" && !allowed.contains(&key.as_str()) {
                return Err(D::Error::custom(format!(
                    "op = \"{op}\" does not take a `{key}` parameter"
                )));
            }
        }

        let float = |key: &str| -> Result<f64, D::Error> {
            match table.get(key) {
                Some(toml::Value::Float(f)) => Ok(*f),
                Some(toml::Value::Integer(i)) => Ok(*i as f64),
                Some(_) => Err(D::Error::custom(format!(
                    "op = \"{op}\": `{key}` must be a number"
                ))),
                None => Err(D::Error::custom(format!("op = \"{op}\" requires `{key}`"))),
            }
        };
        let count = |key: &str| -> Result<usize, D::Error> {
            match table.get(key) {
                Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
                Some(_) => Err(D::Error::custom(format!(
                    "op = \"{op}\": `{key}` must be a non-negative integer"
                ))),
                None => Err(D::Error::custom(format!("op = \"{op}\" requires `{key}`"))),
            }
        };
        let float_or = |key: &str, default: f64| -> Result<f64, D::Error> {
            if table.contains_key(key) { float(key) } else { Ok(default) }
        };

        Ok(match op.as_str() {
            "identity" => Self::Identity,
            "median3" => Self::Median3,
            "downsample" => Self::Downsample { m: count("m")? },
            "gaussian" => Self::Gaussian { variance: float("variance")? },
            "lwma" => Self::Lwma { window: count("window")? },
            "targeted" => Self::Targeted {
                radius: float_or("radius", default_radius())?,
                epsilon: float_or("epsilon", default_epsilon())?,
                param: match table.get("param") {
                    None => ExpParam::Scale,
                    Some(toml::Value::String(s)) if s == "scale" => ExpParam::Scale,
                    Some(toml::Value::String(s)) if s == "rate" => ExpParam::Rate,
                    Some(_) => {
                        return Err(D::Error::custom(
                            "op = \"targeted\": `param` must be \"scale\" or \"rate\"",
                        ));
                    }
                },
            },
            "fir" => Self::Fir { fc_hz: float("fc_hz")?, taps: count("taps")? },
            "kalman" => Self::Kalman {
                q: float_or("q", default_kalman_q())?,
                r: float_or("r", default_kalman_r())?,
            },
            _ => unreachable!(),
        })
    }
}

fn default_radius() -> f64 {
    1.5
}
fn default_epsilon() -> f64 {
    0.5
}
fn default_kalman_q() -> f64 {
    gazepriv_core::privatize::KalmanSmoother::DEFAULT_Q
}
fn default_kalman_r() -> f64 {
    gazepriv_core::privatize::KalmanSmoother::DEFAULT_R
}

impl PrivatizerSpec {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Self::Gaussian { .. } | Self::Targeted { .. })
    }

    /// Report group when the variant does not override it.
    pub fn approach_label(&self) -> String {
        match self {
            Self::Identity => "Baseline",
            Self::Median3 => "Median Filter",
            Self::Downsample { .. } => "Temporal Sampling (Hz)",
            Self::Gaussian { .. } => "Gaussian Noise",
            Self::Lwma { .. } => "Smoothing (window)",
            Self::Targeted { .. } => "Targeted Noise Injection",
            Self::Fir { .. } => "Causal FIR (cutoff/taps)",
            Self::Kalman { .. } => "Kalman Filter",
        }
        .to_string()
    }

    /// Report variant cell when the variant does not override it.
    pub fn variant_label(&self) -> String {
        match self {
            Self::Identity => "Raw data".to_string(),
            Self::Median3 => "3-sample".to_string(),
            Self::Downsample { m } => format!("M={m}"),
            Self::Gaussian { variance } => format!("var={variance}"),
            Self::Lwma { window } => format!("{window}"),
            Self::Targeted { .. } => "2D Laplace".to_string(),
            Self::Fir { fc_hz, taps } => format!("{fc_hz}/{taps}"),
            Self::Kalman { .. } => "-".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    /// Variant cell in the report; defaults per operator.
    pub name: Option<String>,
    /// Approach cell in the report; defaults per operator.
    pub approach: Option<String>,
    pub privatizer: PrivatizerSpec,
}

/// Which classifiers drive the interaction simulation. Omitting the section
/// enables both with their defaults; listing only one disables the other.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub idt: Option<IdtSpec>,
    pub ikf: Option<IkfSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct IdtSpec {
    pub dispersion_threshold_dva: Option<f64>,
    pub min_duration_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct IkfSpec {
    pub chi_square: Option<f64>,
    pub window: Option<usize>,
    pub deviation: Option<f64>,
}

impl IdtSpec {
    pub fn params(&self) -> IdtParams {
        let d = IdtParams::default();
        IdtParams {
            dispersion_threshold_dva: self.dispersion_threshold_dva.unwrap_or(d.dispersion_threshold_dva),
            min_duration_ms: self.min_duration_ms.unwrap_or(d.min_duration_ms),
        }
    }
}

impl IkfSpec {
    pub fn params(&self) -> IkfParams {
        let d = IkfParams::default();
        IkfParams {
            chi_square: self.chi_square.unwrap_or(d.chi_square),
            window: self.window.unwrap_or(d.window),
            deviation: self.deviation.unwrap_or(d.deviation),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderSpec {
    #[default]
    VelocityStats,
    /// Concatenation of named members ("velocity_stats" is the only kind).
    Ensemble { members: Vec<String> },
}

impl EmbedderSpec {
    pub fn build(&self) -> Result<Box<dyn Embedder>, ConfigError> {
        match self {
            Self::VelocityStats => Ok(Box::new(VelocityStatsEmbedder)),
            Self::Ensemble { members } => {
                if members.is_empty() {
                    return Err(ConfigError::Invalid("ensemble embedder needs members".into()));
                }
                let mut built: Vec<Box<dyn Embedder>> = Vec::new();
                for m in members {
                    match m.as_str() {
                        "velocity_stats" => built.push(Box::new(VelocityStatsEmbedder)),
                        other => {
                            return Err(ConfigError::Invalid(format!(
                                "unknown embedder kind `{other}`"
                            )))
                        }
                    }
                }
                Ok(Box::new(EnsembleEmbedder::new(built)))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub enroll_session: String,
    pub auth_session: String,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { enroll_session: "1".to_string(), auth_session: "2".to_string() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub dwell_ms: f64,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        Self { dwell_ms: 100.0 }
    }
}

pub const DEFAULT_FILENAME_PATTERN: &str =
    r"^S(?P<subject>[0-9A-Za-z]+)_(?P<session>[0-9A-Za-z]+)_(?P<task>[0-9A-Za-z-]+)\.csv$";

/// Config after preset/flag merging and validation; what the pipeline runs.
#[derive(Debug)]
pub struct ResolvedConfig {
    pub dataset_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub bounds: ScreenBounds,
    pub variants: Vec<ResolvedVariant>,
    pub idt: Option<IdtParams>,
    pub ikf: Option<IkfParams>,
    pub embedder: EmbedderSpec,
    pub split: SplitSpec,
    pub dwell_ms: f64,
    pub filename_regex: Regex,
}

#[derive(Debug, Clone)]
pub struct ResolvedVariant {
    pub approach: String,
    pub name: String,
    pub privatizer: PrivatizerSpec,
}

/// Flag-level overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub dataset_path: Option<PathBuf>,
}

pub const DATA_ROOT_ENV: &str = "GAZEPRIV_DATA_ROOT";

pub fn load_config_file(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    toml::from_str(&text)
        .map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source: Box::new(source) })
}

pub const PRESETS: &[(&str, &str)] = &[
    ("baseline", include_str!("../presets/baseline.toml")),
    ("median3", include_str!("../presets/median3.toml")),
    ("downsample500", include_str!("../presets/downsample500.toml")),
    ("downsample250", include_str!("../presets/downsample250.toml")),
    ("downsample100", include_str!("../presets/downsample100.toml")),
    ("downsample90", include_str!("../presets/downsample90.toml")),
    ("downsample50", include_str!("../presets/downsample50.toml")),
    ("gaussian025", include_str!("../presets/gaussian025.toml")),
    ("gaussian05", include_str!("../presets/gaussian05.toml")),
    ("gaussian1", include_str!("../presets/gaussian1.toml")),
    ("gaussian2", include_str!("../presets/gaussian2.toml")),
    ("lwma50", include_str!("../presets/lwma50.toml")),
    ("lwma100", include_str!("../presets/lwma100.toml")),
    ("lwma200", include_str!("../presets/lwma200.toml")),
    ("targeted", include_str!("../presets/targeted.toml")),
    ("fir79", include_str!("../presets/fir79.toml")),
    ("fir49", include_str!("../presets/fir49.toml")),
    ("fir29", include_str!("../presets/fir29.toml")),
    ("kalman", include_str!("../presets/kalman.toml")),
    ("all", include_str!("../presets/all.toml")),
];

pub fn load_preset(name: &str) -> Result<PipelineConfig, ConfigError> {
    for (n, text) in PRESETS {
        if *n == name {
            return toml::from_str(text).map_err(|source| ConfigError::Parse {
                path: PathBuf::from(format!("<preset {name}>")),
                source: Box::new(source),
            });
        }
    }
    let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
    Err(ConfigError::UnknownPreset(name.to_string(), names.join(", ")))
}

pub fn resolve(cfg: PipelineConfig, over: &Overrides) -> Result<ResolvedConfig, ConfigError> {
    let variants: Vec<ResolvedVariant> = match (&cfg.privatizer, &cfg.variants) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "`privatizer` and `variants` are mutually exclusive".into(),
            ))
        }
        (Some(p), None) => vec![ResolvedVariant {
            approach: p.approach_label(),
            name: p.variant_label(),
            privatizer: p.clone(),
        }],
        (None, Some(vs)) => {
            if vs.is_empty() {
                return Err(ConfigError::Invalid("`variants` must not be empty".into()));
            }
            vs.iter()
                .map(|v| ResolvedVariant {
                    approach: v.approach.clone().unwrap_or_else(|| v.privatizer.approach_label()),
                    name: v.name.clone().unwrap_or_else(|| v.privatizer.variant_label()),
                    privatizer: v.privatizer.clone(),
                })
                .collect()
        }
        (None, None) => vec![ResolvedVariant {
            approach: "Baseline".to_string(),
            name: "Raw data".to_string(),
            privatizer: PrivatizerSpec::Identity,
        }],
    };

    let stochastic = variants.iter().any(|v| v.privatizer.is_stochastic());
    let seed = match over.seed.or(cfg.seed) {
        Some(s) => s,
        None if stochastic => {
            return Err(ConfigError::Invalid(
                "a seed is required when a stochastic operator is configured".into(),
            ))
        }
        None => 0,
    };

    // Fail fast on bad operator parameters (validated at 1 kHz, the rate the
    // privacy windowing is defined for).
    for v in &variants {
        crate::ops::build_privatizer(&v.privatizer, 0, 1000.0)
            .map_err(|e| ConfigError::Invalid(format!("variant `{}`: {e}", v.name)))?;
    }

    let bounds = match cfg.bounds {
        Some(b) => ScreenBounds::new(b.x_min, b.x_max, b.y_min, b.y_max)
            .map_err(|_| ConfigError::Invalid("bounds must satisfy min < max".into()))?,
        None => ScreenBounds::default(),
    };

    let (idt, ikf) = match &cfg.classifier {
        None => (Some(IdtParams::default()), Some(IkfParams::default())),
        Some(c) => {
            if c.idt.is_none() && c.ikf.is_none() {
                return Err(ConfigError::Invalid(
                    "classifier section must enable idt, ikf, or both".into(),
                ));
            }
            (c.idt.map(|s| s.params()), c.ikf.map(|s| s.params()))
        }
    };
    if let Some(p) = &idt {
        if !(p.dispersion_threshold_dva > 0.0) || !(p.min_duration_ms > 0.0) {
            return Err(ConfigError::Invalid("idt parameters must be positive".into()));
        }
    }
    if let Some(p) = &ikf {
        if !(p.chi_square > 0.0) || p.window < 1 || !(p.deviation > 0.0) {
            return Err(ConfigError::Invalid("ikf parameters must be positive".into()));
        }
    }

    let dwell_ms = cfg.interaction.dwell_ms;
    if !(dwell_ms > 0.0) {
        return Err(ConfigError::Invalid("interaction.dwell_ms must be positive".into()));
    }
    if cfg.split.enroll_session == cfg.split.auth_session {
        return Err(ConfigError::Invalid(
            "split.enroll_session and split.auth_session must differ".into(),
        ));
    }
    cfg.embedder.build()?;

    let pattern = cfg.filename_pattern.as_deref().unwrap_or(DEFAULT_FILENAME_PATTERN);
    let filename_regex = Regex::new(pattern)
        .map_err(|e| ConfigError::Invalid(format!("filename_pattern: {e}")))?;
    for group in ["subject", "session", "task"] {
        if !filename_regex.capture_names().flatten().any(|n| n == group) {
            return Err(ConfigError::Invalid(format!(
                "filename_pattern must define a named group `{group}`"
            )));
        }
    }

    let dataset_path = over
        .dataset_path
        .clone()
        .or_else(|| cfg.dataset_path.clone())
        .or_else(|| std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from));

    Ok(ResolvedConfig {
        dataset_path,
        output_dir: cfg.output_dir.unwrap_or_else(|| PathBuf::from("gazepriv-out")),
        seed,
        workers: over.workers.or(cfg.workers).unwrap_or(0),
        bounds,
        variants,
        idt,
        ikf,
        embedder: cfg.embedder,
        split: cfg.split,
        dwell_ms,
        filename_regex,
    })
}
