//! Run configuration: one flat TOML file, every key overridable by a flag.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use ideograph_core::encode::EncodeOptions;
use ideograph_core::extract::{ExtractOptions, SubmissionFilter};
use ideograph_core::irt::{BlocAnchors, IrtConfig, Quadrature};
use ideograph_core::{EncodingMode, Paradigm, PromptMode, TemporalWindow};
use serde::{Deserialize, Serialize};

use crate::gateway::RetryPolicy;
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    Grid,
    GaussHermite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub votes: Option<PathBuf>,
    pub out: PathBuf,
    /// Response cache; `<out>/cache` when unset.
    pub cache_dir: Option<PathBuf>,

    pub window_start: String,
    pub window_end: String,
    /// Subgraph paradigm for context; none means plain prompts.
    pub paradigm: Option<Paradigm>,
    pub encoding: EncodingMode,
    pub sample_n: Option<usize>,
    pub seed: u64,
    pub submission_filter: SubmissionFilter,
    pub speech_budget: usize,

    pub mode: PromptMode,
    pub k: usize,
    pub fewshot_seed: u64,
    pub example_context: bool,
    /// Name of the prediction set; derived from the settings when unset.
    pub method: Option<String>,

    pub provider: String,
    pub model: String,
    pub summarizer_provider: Option<String>,
    pub summarizer_model: Option<String>,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    /// CSV `bloc,score` for the bloc-mean stub.
    pub bloc_table: Option<PathBuf>,
    pub retry_limit: usize,
    pub retry_base_ms: u64,
    pub max_in_flight: usize,
    pub jobs: usize,

    pub irt_quadrature: QuadratureKind,
    pub irt_points: usize,
    pub irt_max_iter: usize,
    pub irt_tol: f64,
    pub irt_a_cap: f64,
    pub irt_min_responses: usize,
    pub irt_accelerate: bool,
    pub allow_unconverged: bool,
    pub left_anchor: String,
    pub right_anchor: String,

    /// Method that improvement percentages are computed against.
    pub reference: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        let window = TemporalWindow::default();
        let irt = IrtConfig::default();
        let anchors = BlocAnchors::default();
        Self {
            nodes: None,
            edges: None,
            records: None,
            votes: None,
            out: PathBuf::from("out"),
            cache_dir: None,
            window_start: window.start().to_string(),
            window_end: window.end().to_string(),
            paradigm: None,
            encoding: EncodingMode::RawGraph,
            sample_n: None,
            seed: 0,
            submission_filter: SubmissionFilter::InWindow,
            speech_budget: EncodeOptions::default().speech_budget,
            mode: PromptMode::ZeroShot,
            k: 3,
            fewshot_seed: 0,
            example_context: false,
            method: None,
            provider: "fixed:5".into(),
            model: "default".into(),
            summarizer_provider: None,
            summarizer_model: None,
            endpoint: None,
            api_key_env: None,
            timeout_secs: 120,
            bloc_table: None,
            retry_limit: RetryPolicy::default().retry_limit,
            retry_base_ms: RetryPolicy::default().base_delay.as_millis() as u64,
            max_in_flight: 4,
            jobs: 1,
            irt_quadrature: QuadratureKind::Grid,
            irt_points: 61,
            irt_max_iter: irt.max_iter,
            irt_tol: irt.tol,
            irt_a_cap: irt.a_cap,
            irt_min_responses: irt.min_responses,
            irt_accelerate: irt.accelerate,
            allow_unconverged: false,
            left_anchor: anchors.left,
            right_anchor: anchors.right,
            reference: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&io::read_text(path)?).with_context(|| format!("config {}", path.display()))
    }

    pub fn window(&self) -> Result<TemporalWindow> {
        TemporalWindow::parse(&self.window_start, &self.window_end)
            .with_context(|| format!("window {}..{}", self.window_start, self.window_end))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| self.out.join("cache"))
    }

    pub fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            submission_filter: self.submission_filter,
        }
    }

    pub fn encode_options(&self) -> EncodeOptions {
        EncodeOptions {
            speech_budget: self.speech_budget,
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            retry_limit: self.retry_limit,
            base_delay: Duration::from_millis(self.retry_base_ms),
        }
    }

    pub fn irt_config(&self) -> IrtConfig {
        let quadrature = match self.irt_quadrature {
            QuadratureKind::Grid => Quadrature::Grid {
                points: self.irt_points,
                lo: -6.0,
                hi: 6.0,
            },
            QuadratureKind::GaussHermite => Quadrature::GaussHermite {
                points: self.irt_points,
            },
        };
        IrtConfig {
            quadrature,
            max_iter: self.irt_max_iter,
            tol: self.irt_tol,
            a_cap: self.irt_a_cap,
            min_responses: self.irt_min_responses,
            mirror: false,
            accelerate: self.irt_accelerate,
        }
    }

    pub fn anchors(&self) -> BlocAnchors {
        BlocAnchors {
            left: self.left_anchor.clone(),
            right: self.right_anchor.clone(),
        }
    }

    /// Prediction-set name: the configured method, or mode plus paradigm and
    /// encoding, e.g. `few-mp-r`.
    pub fn method_name(&self) -> String {
        if let Some(m) = &self.method {
            return m.clone();
        }
        match self.paradigm {
            None => self.mode.slug().to_string(),
            Some(p) => format!("{}-{}-{}", self.mode.slug(), p.slug(), self.encoding.slug()),
        }
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        match value {
            Some(p) if p.exists() => Ok(p),
            Some(p) => bail!("{key}: {} does not exist", p.display()),
            None => bail!(
                "{key} is not configured (set it in the config file or pass --{})",
                key.replace('_', "-")
            ),
        }
    }

    /// The settings that determine outputs, with locations, parallelism,
    /// retry and timeout settings reset to their defaults.
    pub fn semantic(&self) -> Config {
        let d = Config::default();
        Config {
            out: PathBuf::new(),
            cache_dir: None,
            jobs: d.jobs,
            max_in_flight: d.max_in_flight,
            retry_limit: d.retry_limit,
            retry_base_ms: d.retry_base_ms,
            timeout_secs: d.timeout_secs,
            ..self.clone()
        }
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.semantic()).expect("config serializes");
        io::sha256_hex(&json)
    }
}

/// Reads a `bloc,score` table.
pub fn read_bloc_table(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening bloc table {}", path.display()))?;
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<(String, f64)>() {
        let (bloc, score) = row.with_context(|| format!("bloc table {}", path.display()))?;
        out.insert(bloc, score);
    }
    Ok(out)
}
