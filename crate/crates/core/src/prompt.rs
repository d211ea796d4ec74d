//! Prediction prompts (zero-shot and few-shot) and few-shot example
//! selection.
//!
//! Templates are bundled text assets containing `{placeholder}` markers. The
//! asset text is used verbatim; only placeholders are substituted, and graph
//! context, when present, is inserted as a block headed
//! `MP background information:` right before the target's `Name:` line.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{parse_score, ChatBackend, ChatRequest, NoNumberFound};
use crate::encode::EncodedContext;
use crate::record::MpRecord;

pub const ZERO_SHOT_TEMPLATE: &str = include_str!("../assets/prompts/zero_shot.txt");
pub const FEW_SHOT_TEMPLATE: &str = include_str!("../assets/prompts/few_shot.txt");

pub const CONTEXT_HEADER: &str = "MP background information:";

const TARGET_LINE_PREFIX: &str = "Name: {MP Name}";
const EXAMPLE_LINE_PREFIX: &str = "Name: {example MP name}";
const EXAMPLE_REPEAT_MARKER: &str = "...";

/// Template asset text without its final line terminator.
pub fn load_template(asset: &str) -> String {
    asset.strip_suffix('\n').unwrap_or(asset).into()
}

/// Single-pass substitution of `{key}` markers. Unknown markers are kept, and
/// substituted values are never rescanned.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let key = &after[..close];
                match values.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push('{');
                        out.push_str(key);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptMode {
    #[serde(rename = "zero")]
    ZeroShot,
    #[serde(rename = "few")]
    FewShot,
}

impl PromptMode {
    pub fn slug(self) -> &'static str {
        match self {
            PromptMode::ZeroShot => "zero",
            PromptMode::FewShot => "few",
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::ZeroShot => "zero-shot",
            PromptMode::FewShot => "few-shot",
        })
    }
}

impl FromStr for PromptMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "zero-shot" => Ok(PromptMode::ZeroShot),
            "few" | "few-shot" => Ok(PromptMode::FewShot),
            other => Err(format!(
                "unknown prompt mode {other:?}; expected zero or few"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub mode: PromptMode,
    pub examples: Vec<MpRecord>,
    pub context: Option<EncodedContext>,
    /// Optional graph context for in-context examples, keyed by uid.
    pub example_contexts: BTreeMap<String, EncodedContext>,
    pub target: MpRecord,
}

impl PromptSpec {
    pub fn zero_shot(target: MpRecord) -> Self {
        Self {
            mode: PromptMode::ZeroShot,
            examples: Vec::new(),
            context: None,
            example_contexts: BTreeMap::new(),
            target,
        }
    }

    pub fn few_shot(target: MpRecord, examples: Vec<MpRecord>) -> Self {
        Self {
            mode: PromptMode::FewShot,
            examples,
            ..Self::zero_shot(target)
        }
    }

    pub fn with_context(mut self, context: Option<EncodedContext>) -> Self {
        self.context = context;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("record {uid:?} is missing its {field}")]
    MissingField { uid: String, field: &'static str },
    #[error("few-shot prompt needs at least one example")]
    NoExamples,
    #[error("target {0:?} appears among its own few-shot examples")]
    TargetAmongExamples(String),
    #[error("few-shot example {0:?} has no ground-truth score")]
    ExampleWithoutScore(String),
    #[error("need {needed} eligible examples, only {available} available")]
    InsufficientExamples { needed: usize, available: usize },
}

fn require(r: &MpRecord) -> Result<(), PromptError> {
    for (field, value) in [("name", &r.name), ("party", &r.party), ("bloc", &r.bloc)] {
        if value.trim().is_empty() {
            return Err(PromptError::MissingField {
                uid: r.uid.clone(),
                field,
            });
        }
    }
    Ok(())
}

fn context_block(ctx: &EncodedContext) -> String {
    format!("{CONTEXT_HEADER}\n{}\n\n", ctx.text)
}

/// Renders the full prompt for `spec`.
pub fn build_prompt(spec: &PromptSpec) -> Result<String, PromptError> {
    require(&spec.target)?;
    let template = match spec.mode {
        PromptMode::ZeroShot => load_template(ZERO_SHOT_TEMPLATE),
        PromptMode::FewShot => {
            if spec.examples.is_empty() {
                return Err(PromptError::NoExamples);
            }
            load_template(FEW_SHOT_TEMPLATE)
        }
    };
    let target = &spec.target;
    let target_values = [
        ("MP Name", target.name.as_str()),
        ("MP Party", target.party.as_str()),
        ("MP Party Block", target.bloc.as_str()),
        ("MP Party Bloc", target.bloc.as_str()),
    ];

    let mut out = String::with_capacity(template.len() + 256);
    let mut lines = template.split('\n').peekable();
    let mut first = true;
    while let Some(line) = lines.next() {
        if !first {
            out.push('\n');
        }
        first = false;
        if spec.mode == PromptMode::FewShot && line.starts_with(EXAMPLE_LINE_PREFIX) {
            if lines.peek() == Some(&EXAMPLE_REPEAT_MARKER) {
                lines.next();
            }
            let rendered = example_lines(spec, line)?;
            out.push_str(&rendered);
        } else if line.starts_with(TARGET_LINE_PREFIX) {
            if let Some(ctx) = &spec.context {
                out.push_str(&context_block(ctx));
            }
            out.push_str(&fill(line, &target_values));
        } else {
            out.push_str(line);
        }
    }
    Ok(out)
}

fn example_lines(spec: &PromptSpec, line_template: &str) -> Result<String, PromptError> {
    let mut lines = Vec::with_capacity(spec.examples.len());
    for ex in &spec.examples {
        require(ex)?;
        if ex.uid == spec.target.uid {
            return Err(PromptError::TargetAmongExamples(ex.uid.clone()));
        }
        let score = ex
            .ground_truth
            .ok_or_else(|| PromptError::ExampleWithoutScore(ex.uid.clone()))?;
        let score = format!("{score:.1}");
        let mut rendered = String::new();
        if let Some(ctx) = spec.example_contexts.get(&ex.uid) {
            rendered.push_str(&context_block(ctx));
        }
        rendered.push_str(&fill(
            line_template,
            &[
                ("example MP name", ex.name.as_str()),
                ("example MP party", ex.party.as_str()),
                ("example MP party bloc", ex.bloc.as_str()),
                ("example MP ideology score", score.as_str()),
            ],
        ));
        lines.push(rendered);
    }
    Ok(lines.join("\n"))
}

/// Draws `k` few-shot examples uniformly without replacement from the
/// records that carry a ground-truth score, excluding `exclude`. Eligible
/// records are ordered by uid before sampling, and the result is returned in
/// uid order.
pub fn select_examples(
    records: &[MpRecord],
    k: usize,
    seed: u64,
    exclude: &str,
) -> Result<Vec<MpRecord>, PromptError> {
    let mut eligible: Vec<&MpRecord> = records
        .iter()
        .filter(|r| r.ground_truth.is_some() && r.uid != exclude)
        .collect();
    if eligible.len() < k {
        return Err(PromptError::InsufficientExamples {
            needed: k,
            available: eligible.len(),
        });
    }
    eligible.sort_by(|a, b| a.uid.cmp(&b.uid));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, eligible.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| eligible[i].clone()).collect())
}

#[derive(Debug, Error)]
pub enum PredictError<E> {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("completion failed: {0}")]
    Backend(E),
    #[error(transparent)]
    Parse(#[from] NoNumberFound),
}

/// Builds the prompt, asks the backend once and parses a score in `[0, 10]`.
pub fn predict<B: ChatBackend>(
    spec: &PromptSpec,
    backend: &B,
    model: &str,
) -> Result<f64, PredictError<B::Error>> {
    let prompt = build_prompt(spec)?;
    let response = backend
        .complete(&ChatRequest::user(model, prompt))
        .map_err(PredictError::Backend)?;
    Ok(parse_score(&response.text, 0.0, 10.0)?)
}
