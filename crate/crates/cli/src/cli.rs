//! Command-line definition. Flags override keys of the config file.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use ideograph_core::extract::SubmissionFilter;
use ideograph_core::{BaselineKind, EncodingMode, Paradigm, PromptMode};

use crate::config::Config;
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(
    name = "ideograph",
    version,
    about = "Graph-augmented ideology prediction pipeline"
)]
pub struct Cli {
    /// Flat TOML config file; flags take precedence over its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the graph dump and print node and edge counts.
    Ingest,
    /// Extract one subgraph per MP (all paradigms unless --paradigm is set).
    Extract,
    /// Encode extracted subgraphs into prompt contexts.
    Encode,
    /// Predict every MP through the configured provider.
    Predict,
    /// Mean baselines.
    Baseline {
        /// gm, pm or pbm.
        #[arg(long)]
        kind: BaselineKind,
        /// Leave each MP out of the means it is predicted with.
        #[arg(long)]
        loo: bool,
    },
    /// Fit the 2PL IRT model to a roll-call matrix and write ground truth.
    Irt,
    /// Score prediction files against ground truth.
    Evaluate {
        /// Prediction files; defaults to every file in <out>/predictions.
        predictions: Vec<PathBuf>,
        /// Records CSV with ground truth; defaults to the configured records.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Print the comparison table of the stored reports.
    Report,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub nodes: Option<PathBuf>,
    #[arg(long, global = true)]
    pub edges: Option<PathBuf>,
    #[arg(long, global = true)]
    pub records: Option<PathBuf>,
    #[arg(long, global = true)]
    pub votes: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub window_start: Option<String>,
    #[arg(long, global = true)]
    pub window_end: Option<String>,
    /// sp, mp, pr or none.
    #[arg(long, global = true)]
    pub paradigm: Option<String>,
    /// s (summarization) or r (raw graph).
    #[arg(long, global = true)]
    pub encoding: Option<EncodingMode>,
    /// Triplets kept per subgraph; 0 keeps all.
    #[arg(long, global = true)]
    pub sample_n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub submission_filter: Option<SubmissionFilter>,
    #[arg(long, global = true)]
    pub speech_budget: Option<usize>,
    /// zero or few.
    #[arg(long, global = true)]
    pub mode: Option<PromptMode>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub fewshot_seed: Option<u64>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub example_context: Option<bool>,
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long, global = true)]
    pub provider: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub summarizer_provider: Option<String>,
    #[arg(long, global = true)]
    pub summarizer_model: Option<String>,
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    #[arg(long, global = true)]
    pub api_key_env: Option<String>,
    #[arg(long, global = true)]
    pub timeout_secs: Option<u64>,
    #[arg(long, global = true)]
    pub bloc_table: Option<PathBuf>,
    #[arg(long, global = true)]
    pub retry_limit: Option<usize>,
    #[arg(long, global = true)]
    pub retry_base_ms: Option<u64>,
    #[arg(long, global = true)]
    pub max_in_flight: Option<usize>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub irt_max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub irt_tol: Option<f64>,
    #[arg(long, global = true)]
    pub irt_min_responses: Option<usize>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub allow_unconverged: Option<bool>,
    #[arg(long, global = true)]
    pub reference: Option<String>,
}

fn parse_paradigm(s: &str) -> Result<Option<Paradigm>> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    match s.parse() {
        Ok(p) => Ok(Some(p)),
        Err(e) => bail!("{e}"),
    }
}

impl Overrides {
    pub fn apply(&self, cfg: &mut Config) -> Result<()> {
        macro_rules! set {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        macro_rules! set_some {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$field { cfg.$field = Some(v.clone()); })*
            };
        }
        set!(
            out,
            window_start,
            window_end,
            encoding,
            seed,
            submission_filter,
            speech_budget,
            mode,
            k,
            fewshot_seed,
            example_context,
            provider,
            model,
            timeout_secs,
            retry_limit,
            retry_base_ms,
            max_in_flight,
            jobs,
            irt_max_iter,
            irt_tol,
            irt_min_responses,
            allow_unconverged,
        );
        set_some!(
            nodes,
            edges,
            records,
            votes,
            cache_dir,
            method,
            summarizer_provider,
            summarizer_model,
            endpoint,
            api_key_env,
            bloc_table,
            reference,
        );
        if let Some(p) = &self.paradigm {
            cfg.paradigm = parse_paradigm(p)?;
        }
        if let Some(n) = self.sample_n {
            cfg.sample_n = (n > 0).then_some(n);
        }
        Ok(())
    }
}

impl Cli {
    pub fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        self.overrides.apply(&mut cfg)?;
        if cfg.jobs == 0 || cfg.max_in_flight == 0 {
            bail!("jobs and max_in_flight must be at least 1");
        }
        cfg.window()?;
        Ok(cfg)
    }

    pub fn run(&self, out: &mut dyn Write) -> Result<()> {
        let cfg = self.config()?;
        match &self.command {
            Command::Ingest => pipeline::ingest(&cfg, out).map(drop),
            Command::Extract => pipeline::extract(&cfg, out).map(drop),
            Command::Encode => pipeline::encode(&cfg, out).map(drop),
            Command::Predict => pipeline::predict(&cfg, out).map(drop),
            Command::Baseline { kind, loo } => pipeline::baseline(&cfg, *kind, *loo, out).map(drop),
            Command::Irt => pipeline::irt(&cfg, out).map(drop),
            Command::Evaluate { predictions, truth } => {
                pipeline::evaluate(&cfg, predictions, truth.as_deref(), out).map(drop)
            }
            Command::Report => pipeline::report(&cfg, out).map(drop),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("ideograph").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "paradigm = \"sp\"\nk = 5\nseed = 3\n").unwrap();
        let cli = parse(&[
            "predict",
            "--config",
            path.to_str().unwrap(),
            "--paradigm",
            "mp",
            "--encoding",
            "s",
            "--mode",
            "few",
            "--sample-n",
            "10",
            "--jobs",
            "4",
            "--out",
            "o",
        ]);
        let cfg = cli.config().unwrap();
        assert_eq!(cfg.paradigm, Some(Paradigm::MpCentric));
        assert_eq!(cfg.encoding, EncodingMode::Summarization);
        assert_eq!(cfg.mode, PromptMode::FewShot);
        assert_eq!(
            (cfg.k, cfg.seed, cfg.sample_n, cfg.jobs),
            (5, 3, Some(10), 4)
        );
        assert_eq!(cfg.out, PathBuf::from("o"));
    }

    #[test]
    fn paradigm_none_and_bad_values() {
        let cfg = parse(&["predict", "--paradigm", "none"]).config().unwrap();
        assert_eq!(cfg.paradigm, None);
        assert!(parse(&["predict", "--paradigm", "xx"]).config().is_err());
        assert!(Cli::try_parse_from(["ideograph", "predict", "--encoding", "q"]).is_err());
        assert!(parse(&["predict", "--jobs", "0"]).config().is_err());
    }

    #[test]
    fn baseline_kind_parses() {
        let cli = parse(&["baseline", "--kind", "pbm", "--loo"]);
        match cli.command {
            Command::Baseline { kind, loo } => {
                assert_eq!(kind, BaselineKind::PartyBlocMean);
                assert!(loo);
            }
            other => panic!("{other:?}"),
        }
    }
}
