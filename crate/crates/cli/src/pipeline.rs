//! Commands. Each reads its inputs from files, writes its outputs under the
//! output directory together with a run manifest, and reports to `log`.
//!
//! Layout of the output directory:
//!
//! ```text
//! ingest/summary.json
//! subgraphs/<paradigm>/<uid>.json, settings.json, skipped.json
//! contexts/<paradigm>-<encoding>/<uid>.json
//! predictions/<method>.json
//! irt/fit.json, irt/records_scored.csv
//! reports/<method>.json, comparison.txt, bloc_errors.csv, improvement.csv
//! reports/scatter/<method>.csv
//! manifests/<command>.manifest.json
//! cache/<digest>.json
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use ideograph_core::baseline::{self, BaselineError};
use ideograph_core::encode::{self, SummarizeError};
use ideograph_core::eval::{self, EvalReport};
use ideograph_core::extract::{self, SubmissionFilter};
use ideograph_core::irt::{self, IrtFit};
use ideograph_core::prompt::{self, PredictError};
use ideograph_core::{
    BaselineKind, EncodedContext, EncodingMode, MpRecord, Paradigm, PredictionSet, PromptMode,
    PromptSpec, Subgraph, TemporalWindow,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{self, Config};
use crate::gateway::{Gateway, Provider, ResponseCache};
use crate::io;
use crate::manifest::RunManifest;
use crate::providers::{self, ProviderContext};

/// File name for a uid; anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn uid_file(uid: &str) -> String {
    let stem: String = uid
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{stem}.json")
}

/// Per-target seed: the first eight bytes of SHA-256(seed ‖ uid).
pub fn derive_seed(seed: u64, uid: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(uid.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

/// Applies `f` to every item on up to `jobs` threads and returns the results
/// in input order. Stops handing out work after the first error.
pub fn par_try_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let worker = || {
        let mut done = Vec::new();
        while !failed.load(Ordering::SeqCst) {
            let i = next.fetch_add(1, Ordering::SeqCst);
            if i >= items.len() {
                break;
            }
            let r = f(&items[i]);
            if r.is_err() {
                failed.store(true, Ordering::SeqCst);
            }
            done.push((i, r));
        }
        done
    };
    let mut all: Vec<(usize, Result<R>)> = if jobs == 1 {
        worker()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..jobs).map(|_| s.spawn(worker)).collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    };
    all.sort_by_key(|(i, _)| *i);
    all.into_iter().map(|(_, r)| r).collect()
}

fn clear_json(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        for path in io::json_files(dir)? {
            fs::remove_file(&path).with_context(|| format!("removing {}", path.display()))?;
        }
    }
    Ok(())
}

fn load_records(cfg: &Config) -> Result<Vec<MpRecord>> {
    io::read_records(cfg.require(&cfg.records, "records")?)
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub labels: BTreeMap<String, usize>,
    pub relations: BTreeMap<String, usize>,
}

pub fn ingest(cfg: &Config, out: &mut dyn Write) -> Result<GraphSummary> {
    let nodes = cfg.require(&cfg.nodes, "nodes")?;
    let edges = cfg.require(&cfg.edges, "edges")?;
    let graph = io::load_graph(nodes, edges)?;
    let summary = GraphSummary {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        labels: graph.label_counts(),
        relations: graph.relation_counts(),
    };
    writeln!(out, "nodes: {}", summary.nodes)?;
    for (label, n) in &summary.labels {
        writeln!(out, "  {label}: {n}")?;
    }
    writeln!(out, "edges: {}", summary.edges)?;
    for (rel, n) in &summary.relations {
        writeln!(out, "  {rel}: {n}")?;
    }
    io::write_json(&cfg.out.join("ingest").join("summary.json"), &summary)?;
    RunManifest::new("ingest", cfg, &[nodes, edges])?.write(&cfg.out)?;
    Ok(summary)
}

// ---------------------------------------------------------------- extract

/// Settings a subgraph directory was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSettings {
    pub paradigm: Paradigm,
    pub window: TemporalWindow,
    pub submission_filter: SubmissionFilter,
    pub sample_n: Option<usize>,
    pub seed: u64,
}

impl ExtractSettings {
    pub fn from_config(cfg: &Config, paradigm: Paradigm) -> Result<Self> {
        Ok(Self {
            paradigm,
            window: cfg.window()?,
            submission_filter: cfg.submission_filter,
            sample_n: cfg.sample_n,
            seed: cfg.seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub uid: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractSummary {
    pub paradigm: Paradigm,
    pub written: usize,
    pub skipped: Vec<Skipped>,
}

pub fn subgraph_dir(cfg: &Config, paradigm: Paradigm) -> PathBuf {
    cfg.out.join("subgraphs").join(paradigm.slug())
}

/// Extracts one subgraph per record, for the configured paradigm or for all
/// three when none is configured.
pub fn extract(cfg: &Config, out: &mut dyn Write) -> Result<Vec<ExtractSummary>> {
    let nodes = cfg.require(&cfg.nodes, "nodes")?;
    let edges = cfg.require(&cfg.edges, "edges")?;
    let records_path = cfg.require(&cfg.records, "records")?;
    let graph = io::load_graph(nodes, edges)?;
    let records = io::read_records(records_path)?;
    let paradigms = match cfg.paradigm {
        Some(p) => vec![p],
        None => Paradigm::ALL.to_vec(),
    };
    let mut summaries = Vec::new();
    for paradigm in paradigms {
        let settings = ExtractSettings::from_config(cfg, paradigm)?;
        let dir = subgraph_dir(cfg, paradigm);
        clear_json(&dir)?;
        let results = par_try_map(&records, cfg.jobs, |r| {
            match extract::extract(
                &graph,
                paradigm,
                &r.uid,
                settings.window,
                cfg.extract_options(),
            ) {
                Ok(sg) => {
                    let sg = match settings.sample_n {
                        Some(n) => extract::sample_triplets(&sg, n, settings.seed),
                        None => sg,
                    };
                    io::write_json(&dir.join(uid_file(&r.uid)), &sg)?;
                    Ok(None)
                }
                Err(e @ ideograph_core::graph::GraphError::PersonNotFound(_)) => {
                    Ok(Some(Skipped {
                        uid: r.uid.clone(),
                        reason: e.to_string(),
                    }))
                }
                Err(e) => Err(anyhow!(e).context(format!("extracting {}", r.uid))),
            }
        })?;
        let skipped: Vec<Skipped> = results.into_iter().flatten().collect();
        io::write_json(&dir.join("settings.json"), &settings)?;
        io::write_json(&dir.join("skipped.json"), &skipped)?;
        let summary = ExtractSummary {
            paradigm,
            written: records.len() - skipped.len(),
            skipped,
        };
        writeln!(
            out,
            "{}: {} subgraphs, {} skipped",
            paradigm.slug(),
            summary.written,
            summary.skipped.len()
        )?;
        for s in &summary.skipped {
            log::warn!("{}: skipped {}: {}", paradigm.slug(), s.uid, s.reason);
        }
        summaries.push(summary);
    }
    RunManifest::new("extract", cfg, &[nodes, edges, records_path])?.write(&cfg.out)?;
    Ok(summaries)
}

// ---------------------------------------------------------------- gateways

pub fn provider_context(cfg: &Config, records: &[MpRecord]) -> Result<ProviderContext> {
    let bloc_table = match &cfg.bloc_table {
        Some(path) => Some(config::read_bloc_table(path)?),
        None => None,
    };
    Ok(ProviderContext {
        records: records.to_vec(),
        bloc_table,
        endpoint: cfg.endpoint.clone(),
        api_key_env: cfg.api_key_env.clone(),
        timeout: Duration::from_secs(cfg.timeout_secs),
    })
}

pub fn gateway(cfg: &Config, provider: Arc<dyn Provider>) -> Gateway {
    Gateway::new(
        provider,
        Some(ResponseCache::new(cfg.cache_dir())),
        cfg.retry_policy(),
        cfg.max_in_flight,
    )
}

fn summarizer(cfg: &Config, records: &[MpRecord]) -> Result<Gateway> {
    let spec = cfg.summarizer_provider.as_deref().unwrap_or(&cfg.provider);
    let provider = providers::from_spec(spec, &provider_context(cfg, records)?)?;
    Ok(gateway(cfg, provider))
}

// ---------------------------------------------------------------- encode

/// What an encoded context depends on besides the subgraph itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextKey {
    pub extract: ExtractSettings,
    pub encoding: EncodingMode,
    pub speech_budget: usize,
    /// Summarizer provider id and model; empty for raw rendering.
    pub summarizer: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredContext {
    pub key: ContextKey,
    pub context: EncodedContext,
}

/// Encodes subgraph files into contexts, reusing stored contexts whose key
/// matches.
pub struct Encoder<'a> {
    cfg: &'a Config,
    paradigm: Paradigm,
    key: ContextKey,
    summarizer: Option<Gateway>,
    subgraphs: PathBuf,
    contexts: PathBuf,
}

impl<'a> Encoder<'a> {
    pub fn new(cfg: &'a Config, paradigm: Paradigm, records: &[MpRecord]) -> Result<Self> {
        let subgraphs = subgraph_dir(cfg, paradigm);
        let settings_path = subgraphs.join("settings.json");
        if !settings_path.exists() {
            bail!(
                "no subgraphs for paradigm {} in {}; run extract first",
                paradigm.slug(),
                subgraphs.display()
            );
        }
        let stored: ExtractSettings = io::read_json(&settings_path)?;
        let wanted = ExtractSettings::from_config(cfg, paradigm)?;
        if stored != wanted {
            bail!(
                "subgraphs in {} were extracted with different settings ({stored:?}); run extract again",
                subgraphs.display()
            );
        }
        let summarizer = match cfg.encoding {
            EncodingMode::Summarization => Some(summarizer(cfg, records)?),
            EncodingMode::RawGraph => None,
        };
        let key = ContextKey {
            extract: wanted,
            encoding: cfg.encoding,
            speech_budget: cfg.speech_budget,
            summarizer: summarizer.as_ref().map(|g| {
                (
                    g.provider_id(),
                    cfg.summarizer_model
                        .clone()
                        .unwrap_or_else(|| cfg.model.clone()),
                )
            }),
        };
        let contexts =
            cfg.out
                .join("contexts")
                .join(format!("{}-{}", paradigm.slug(), cfg.encoding.slug()));
        Ok(Self {
            cfg,
            paradigm,
            key,
            summarizer,
            subgraphs,
            contexts,
        })
    }

    pub fn paradigm(&self) -> Paradigm {
        self.paradigm
    }

    /// The context for `record`, or `None` when it has no subgraph (the MP
    /// was skipped at extraction).
    pub fn context(&self, record: &MpRecord) -> Result<Option<EncodedContext>> {
        let file = uid_file(&record.uid);
        let stored_path = self.contexts.join(&file);
        if stored_path.exists() {
            let stored: StoredContext = io::read_json(&stored_path)?;
            if stored.key == self.key {
                return Ok(Some(stored.context));
            }
        }
        let sg_path = self.subgraphs.join(&file);
        if !sg_path.exists() {
            return Ok(None);
        }
        let sg: Subgraph = io::read_json(&sg_path)?;
        let opts = self.cfg.encode_options();
        let context = match &self.summarizer {
            None => encode::render_raw(&sg, record, &opts),
            Some(gw) => {
                let (_, model) = self.key.summarizer.as_ref().expect("summarizer key");
                encode::summarize(&sg, gw, model, &opts)
                    .map_err(|e| match e {
                        SummarizeError::Backend(e) => anyhow!(e),
                        other => anyhow!(other.to_string()),
                    })
                    .with_context(|| format!("summarizing {}", record.uid))?
            }
        };
        io::write_json(
            &stored_path,
            &StoredContext {
                key: self.key.clone(),
                context: context.clone(),
            },
        )?;
        Ok(Some(context))
    }
}

/// Encodes every record's subgraph for the configured paradigm.
pub fn encode(cfg: &Config, out: &mut dyn Write) -> Result<usize> {
    let paradigm = cfg
        .paradigm
        .ok_or_else(|| anyhow!("encode needs a paradigm (--paradigm sp|mp|pr)"))?;
    let records_path = cfg.require(&cfg.records, "records")?;
    let records = io::read_records(records_path)?;
    let encoder = Encoder::new(cfg, paradigm, &records)?;
    let encoded = par_try_map(&records, cfg.jobs, |r| encoder.context(r))?;
    let n = encoded.iter().filter(|c| c.is_some()).count();
    writeln!(
        out,
        "{}-{}: {n} contexts, {} without subgraph",
        paradigm.slug(),
        cfg.encoding.slug(),
        records.len() - n
    )?;
    RunManifest::new("encode", cfg, &[records_path])?.write(&cfg.out)?;
    Ok(n)
}

// ---------------------------------------------------------------- predict

#[derive(Debug, Clone, PartialEq)]
enum Outcome {
    Score(f64),
    Excluded(String),
}

pub fn prediction_path(cfg: &Config, method: &str) -> PathBuf {
    cfg.out.join("predictions").join(format!("{method}.json"))
}

/// Predicts every record with the configured provider.
pub fn predict(cfg: &Config, out: &mut dyn Write) -> Result<PredictionSet> {
    let records = load_records(cfg)?;
    let provider = providers::from_spec(&cfg.provider, &provider_context(cfg, &records)?)?;
    predict_with(cfg, provider, out)
}

/// [`predict`] with an explicit provider.
pub fn predict_with(
    cfg: &Config,
    provider: Arc<dyn Provider>,
    out: &mut dyn Write,
) -> Result<PredictionSet> {
    let records_path = cfg.require(&cfg.records, "records")?;
    let records = io::read_records(records_path)?;
    let encoder = match cfg.paradigm {
        Some(p) => Some(Encoder::new(cfg, p, &records)?),
        None => None,
    };
    let gw = gateway(cfg, provider);
    let method = cfg.method_name();

    let outcomes = par_try_map(&records, cfg.jobs, |target| {
        let context = match &encoder {
            None => None,
            Some(enc) => match enc.context(target)? {
                Some(c) => Some(c),
                None => {
                    return Ok(Outcome::Excluded(format!(
                        "no {} subgraph",
                        enc.paradigm().slug()
                    )))
                }
            },
        };
        let mut spec = match cfg.mode {
            PromptMode::ZeroShot => PromptSpec::zero_shot(target.clone()),
            PromptMode::FewShot => {
                let seed = derive_seed(cfg.fewshot_seed, &target.uid);
                let examples = prompt::select_examples(&records, cfg.k, seed, &target.uid)?;
                PromptSpec::few_shot(target.clone(), examples)
            }
        }
        .with_context(context);
        if let (true, Some(enc)) = (cfg.example_context, &encoder) {
            for ex in &spec.examples {
                if let Some(c) = enc.context(ex)? {
                    spec.example_contexts.insert(ex.uid.clone(), c);
                }
            }
        }
        match prompt::predict(&spec, &gw, &cfg.model) {
            Ok(score) => Ok(Outcome::Score(score)),
            Err(PredictError::Parse(e)) => Ok(Outcome::Excluded(e.to_string())),
            Err(PredictError::Backend(e)) => {
                Err(anyhow!(e).context(format!("predicting {}", target.uid)))
            }
            Err(PredictError::Prompt(e)) => {
                Err(anyhow!(e).context(format!("prompt for {}", target.uid)))
            }
        }
    })?;

    let mut set = PredictionSet::new(&method);
    for (record, outcome) in records.iter().zip(outcomes) {
        match outcome {
            Outcome::Score(s) => {
                set.entries.insert(record.uid.clone(), s);
            }
            Outcome::Excluded(reason) => {
                log::warn!("{method}: excluded {}: {reason}", record.uid);
                set.exclude(&record.uid, reason);
            }
        }
    }
    io::write_json(&prediction_path(cfg, &method), &set)?;
    writeln!(
        out,
        "{method}: {} predictions, {} excluded ({} provider calls, {} cache hits)",
        set.entries.len(),
        set.excluded.len(),
        gw.provider_calls(),
        gw.cache_hits()
    )?;
    let mut inputs: Vec<&Path> = vec![records_path];
    if let Some(p) = &cfg.bloc_table {
        inputs.push(p);
    }
    RunManifest::new("predict", cfg, &inputs)?.write(&cfg.out)?;
    Ok(set)
}

// ---------------------------------------------------------------- baseline

/// Fits the baseline on all scored records (or leave-one-out) and predicts
/// every record.
pub fn baseline(
    cfg: &Config,
    kind: BaselineKind,
    loo: bool,
    out: &mut dyn Write,
) -> Result<PredictionSet> {
    let records_path = cfg.require(&cfg.records, "records")?;
    let records = io::read_records(records_path)?;
    let method = match (&cfg.method, loo) {
        (Some(m), _) => m.clone(),
        (None, false) => kind.slug().to_string(),
        (None, true) => format!("{}-loo", kind.slug()),
    };
    let mut set = PredictionSet::new(&method);
    let predictions: Vec<(String, Result<f64, BaselineError>)> = if loo {
        baseline::predict_leave_one_out(&records, kind)
    } else {
        let model = baseline::fit(&records, kind)?;
        records
            .iter()
            .map(|r| (r.uid.clone(), model.predict(r)))
            .collect()
    };
    for (uid, pred) in predictions {
        match pred {
            Ok(p) => {
                set.entries.insert(uid, p);
            }
            Err(e) => set.exclude(&uid, e.to_string()),
        }
    }
    io::write_json(&prediction_path(cfg, &method), &set)?;
    writeln!(
        out,
        "{method}: {} predictions, {} excluded",
        set.entries.len(),
        set.excluded.len()
    )?;
    RunManifest::new(&format!("baseline {method}"), cfg, &[records_path])?.write(&cfg.out)?;
    Ok(set)
}

// ---------------------------------------------------------------- irt

/// Fits the 2PL model to the vote matrix and, when it converged, writes the
/// records with their rescaled scores as ground truth.
pub fn irt(cfg: &Config, out: &mut dyn Write) -> Result<IrtFit> {
    let votes_path = cfg.require(&cfg.votes, "votes")?;
    let records_path = cfg.require(&cfg.records, "records")?;
    let votes = io::read_votes(votes_path)?;
    let records = io::read_records(records_path)?;
    let mut fit = irt::fit_2pl(&votes, &cfg.irt_config())?;
    let dir = cfg.out.join("irt");
    for id in &fit.screening.dropped_items {
        log::warn!("vote {id} dropped by screening");
    }
    for id in &fit.screening.dropped_persons {
        log::warn!("person {id} dropped by screening");
    }
    writeln!(
        out,
        "{} persons x {} votes; {} after {} EM updates, log-likelihood {:.6}",
        fit.persons.len(),
        fit.items.len(),
        if fit.converged {
            "converged"
        } else {
            "NOT converged"
        },
        fit.iterations,
        fit.log_likelihood
    )?;
    RunManifest::new("irt", cfg, &[votes_path, records_path])?.write(&cfg.out)?;
    if !fit.converged {
        io::write_json(&dir.join("fit.json"), &fit)?;
        if cfg.allow_unconverged {
            writeln!(out, "no scores written: the fit did not converge")?;
            return Ok(fit);
        }
        bail!(
            "IRT fit did not converge within {} EM updates (pass --allow-unconverged to keep the fit anyway)",
            cfg.irt_max_iter
        );
    }
    fit.rescaled = irt::rescale_scores(&fit, &records, &cfg.anchors())?;
    io::write_json(&dir.join("fit.json"), &fit)?;
    let scored: Vec<MpRecord> = records
        .iter()
        .map(|r| MpRecord {
            ground_truth: fit.rescaled.get(&r.uid).copied(),
            ..r.clone()
        })
        .collect();
    io::write_atomic(&dir.join("records_scored.csv"), &io::records_csv(&scored)?)?;
    writeln!(out, "{} scores written", fit.rescaled.len())?;
    Ok(fit)
}

// ---------------------------------------------------------------- evaluate

/// Evaluates prediction files (all of `predictions/` when none are given)
/// against the records, writing reports and plot data.
pub fn evaluate(
    cfg: &Config,
    prediction_files: &[PathBuf],
    truth: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Vec<EvalReport>> {
    let truth_path = match truth {
        Some(p) => p,
        None => cfg.require(&cfg.records, "records")?,
    };
    let records = io::read_records(truth_path)?;
    let files = if prediction_files.is_empty() {
        io::json_files(&cfg.out.join("predictions"))?
    } else {
        prediction_files.to_vec()
    };
    if files.is_empty() {
        bail!("no prediction files to evaluate");
    }
    let sets = files
        .iter()
        .map(|p| io::read_json(p))
        .collect::<Result<Vec<PredictionSet>>>()?;
    let mut names: Vec<&str> = sets.iter().map(|s| s.method.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        bail!("two prediction files share the method name {:?}", w[0]);
    }
    if let Some(reference) = &cfg.reference {
        if names.binary_search(&reference.as_str()).is_err() {
            bail!("reference method {reference:?} is not among the evaluated files");
        }
    }
    let dir = cfg.out.join("reports");
    clear_json(&dir)?;
    clear_csv(&dir.join("scatter"))?;

    let mut reports = Vec::new();
    let mut bloc_csv = String::from("method,bloc,error\n");
    for (path, set) in files.iter().zip(&sets) {
        let report = eval::evaluate(set, &records)
            .with_context(|| format!("evaluating {}", path.display()))?;
        for (bloc, errors) in &report.per_bloc {
            for e in errors {
                let _ = writeln!(
                    bloc_csv,
                    "{},{},{e}",
                    eval::csv_field(&set.method),
                    eval::csv_field(bloc)
                );
            }
        }
        let scatter = eval::scatter_data(set, &records);
        io::write_atomic(
            &dir.join("scatter").join(format!("{}.csv", set.method)),
            scatter.to_csv().as_bytes(),
        )?;
        io::write_json(&dir.join(format!("{}.json", set.method)), &report)?;
        reports.push(report);
    }

    let table = eval::render_table(&reports);
    io::write_atomic(&dir.join("comparison.txt"), table.as_bytes())?;
    io::write_atomic(&dir.join("bloc_errors.csv"), bloc_csv.as_bytes())?;
    write!(out, "{table}")?;

    if let Some(reference) = &cfg.reference {
        let base = reports
            .iter()
            .find(|r| &r.method == reference)
            .expect("reference checked above");
        let mut csv = String::from("method,reference,reference_rmse,rmse,improvement_percent\n");
        for r in reports.iter().filter(|r| &r.method != reference) {
            let pct = match eval::improvement_report(base, r) {
                Ok(p) => p,
                Err(e) => {
                    log::warn!("no improvement for {} against {reference}: {e}", r.method);
                    continue;
                }
            };
            let _ = writeln!(
                csv,
                "{},{},{},{},{pct}",
                eval::csv_field(&r.method),
                eval::csv_field(reference),
                base.rmse,
                r.rmse
            );
            writeln!(
                out,
                "{}: RMSE improvement over {reference} {pct:.2}%",
                r.method
            )?;
        }
        io::write_atomic(&dir.join("improvement.csv"), csv.as_bytes())?;
    }

    let mut inputs: Vec<&Path> = vec![truth_path];
    inputs.extend(files.iter().map(PathBuf::as_path));
    RunManifest::new("evaluate", cfg, &inputs)?.write(&cfg.out)?;
    Ok(reports)
}

fn clear_csv(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "csv") {
                fs::remove_file(&path)?;
            }
        }
    }
    Ok(())
}

/// Prints the comparison table for the stored reports.
pub fn report(cfg: &Config, out: &mut dyn Write) -> Result<Vec<EvalReport>> {
    let dir = cfg.out.join("reports");
    let files = io::json_files(&dir)?;
    if files.is_empty() {
        bail!("no reports in {}; run evaluate first", dir.display());
    }
    let reports = files
        .iter()
        .map(|p| io::read_json(p))
        .collect::<Result<Vec<EvalReport>>>()?;
    write!(out, "{}", eval::render_table(&reports))?;
    for r in &reports {
        if r.exclusions > 0 {
            writeln!(out, "{}: {} MPs excluded", r.method, r.exclusions)?;
        }
    }
    Ok(reports)
}
