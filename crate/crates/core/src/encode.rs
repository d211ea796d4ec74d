//! Context encodings for a retrieved subgraph.
//!
//! * Summarization: every triplet becomes one English sentence, and the
//!   sentences are handed to an LLM with a fixed summarization prompt.
//! * Raw graph: the subgraph is rendered as canonical, pretty-printed JSON
//!   with one `{type, rel, properties}` element per triplet.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{ChatBackend, ChatRequest};
use crate::extract::{Paradigm, Subgraph, Triplet};
use crate::graph::{Node, Properties, Value};
use crate::prompt::{fill, load_template};
use crate::record::MpRecord;

pub const RELATION_PHRASES: &str = include_str!("../assets/relation_phrases.tsv");
pub const SUMMARIZE_TEMPLATE: &str = include_str!("../assets/prompts/summarize.txt");

pub const EMPTY_CONTEXT_SENTENCE: &str = "No graph context available.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingMode {
    #[serde(rename = "s")]
    Summarization,
    #[serde(rename = "r")]
    RawGraph,
}

impl EncodingMode {
    pub fn slug(self) -> &'static str {
        match self {
            EncodingMode::Summarization => "s",
            EncodingMode::RawGraph => "r",
        }
    }
}

impl fmt::Display for EncodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingMode::Summarization => "S",
            EncodingMode::RawGraph => "R",
        })
    }
}

impl FromStr for EncodingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "s" | "summary" | "summarization" => Ok(EncodingMode::Summarization),
            "r" | "raw" => Ok(EncodingMode::RawGraph),
            other => Err(format!("unknown encoding {other:?}; expected s or r")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedContext {
    pub mode: EncodingMode,
    pub text: String,
    pub char_count: usize,
    pub source_paradigm: Paradigm,
}

impl EncodedContext {
    pub fn new(mode: EncodingMode, text: String, source_paradigm: Paradigm) -> Self {
        Self {
            mode,
            char_count: text.chars().count(),
            text,
            source_paradigm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Per-property character budget for string properties of `Speech` nodes.
    pub speech_budget: usize,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            speech_budget: 1500,
        }
    }
}

/// Relation name to verb phrase, loaded from the bundled table.
#[derive(Debug, Clone)]
pub struct RelationPhrases {
    phrases: BTreeMap<String, String>,
}

impl RelationPhrases {
    pub fn parse(table: &str) -> Self {
        let phrases = table
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('\t'))
            .map(|(rel, phrase)| (rel.trim().to_string(), phrase.trim().to_string()))
            .collect();
        Self { phrases }
    }

    pub fn bundled() -> Self {
        Self::parse(RELATION_PHRASES)
    }

    /// Phrase for `relation`, or the relation name itself when unknown.
    pub fn phrase<'a>(&'a self, relation: &'a str) -> &'a str {
        self.phrases
            .get(relation)
            .map(String::as_str)
            .unwrap_or(relation)
    }
}

fn truncate_chars(s: &str, budget: usize) -> &str {
    match s.char_indices().nth(budget) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}

/// Node properties as they enter a prompt: nulls dropped, string values of
/// `Speech` nodes cut to the speech budget.
pub fn prompt_properties(node: &Node, options: &EncodeOptions) -> Properties {
    node.properties
        .iter()
        .filter(|(_, v)| !matches!(v, Value::Null))
        .map(|(k, v)| {
            let v = match v {
                Value::Str(s) if node.label == "Speech" => {
                    Value::Str(truncate_chars(s, options.speech_budget).into())
                }
                other => other.clone(),
            };
            (k.clone(), v)
        })
        .collect()
}

const NAME_KEYS: &[&str] = &["name", "title"];

/// Human-readable name of a node and the property keys it consumed.
fn display_name(node: &Node) -> (String, Vec<&'static str>) {
    for key in NAME_KEYS {
        if let Some(v) = node.property(key) {
            return (v.render(), alloc::vec![*key]);
        }
    }
    match (
        node.str_property("first_name"),
        node.str_property("last_name"),
    ) {
        (Some(f), Some(l)) => (format!("{f} {l}"), alloc::vec!["first_name", "last_name"]),
        (None, Some(l)) => (l.into(), alloc::vec!["last_name"]),
        _ => (node.id.to_string(), Vec::new()),
    }
}

/// Display name of the center person.
pub fn person_name(person: &Node) -> String {
    match (
        person.str_property("first_name"),
        person.str_property("last_name"),
    ) {
        (Some(f), Some(l)) => format!("{f} {l}"),
        _ => person
            .str_property("name")
            .or_else(|| person.str_property("uid"))
            .unwrap_or(person.id.as_str())
            .into(),
    }
}

fn describe(node: &Node, options: &EncodeOptions) -> String {
    let (name, used) = display_name(node);
    let rest: Vec<String> = prompt_properties(node, options)
        .iter()
        .filter(|(k, _)| !used.contains(&k.as_str()))
        .map(|(k, v)| format!("{k}: {}", v.render()))
        .collect();
    if rest.is_empty() {
        format!("{} '{}'", node.label, name)
    } else {
        format!("{} '{}' ({})", node.label, name, rest.join(", "))
    }
}

fn sentence(
    center: &str,
    t: &Triplet,
    phrases: &RelationPhrases,
    options: &EncodeOptions,
) -> String {
    let far = describe(&t.far_node, options);
    match &t.via_node {
        None => format!("{center} {} {far}.", phrases.phrase(&t.relation)),
        Some(via) => {
            let (via_name, _) = display_name(via);
            format!(
                "{center} shares {} '{via_name}' with {far}, which {} it.",
                via.label,
                phrases.phrase(&t.relation)
            )
        }
    }
}

/// One sentence per triplet, newline separated, in subgraph order.
pub fn serialize_triplets(subgraph: &Subgraph, options: &EncodeOptions) -> String {
    serialize_triplets_with(subgraph, &RelationPhrases::bundled(), options)
}

pub fn serialize_triplets_with(
    subgraph: &Subgraph,
    phrases: &RelationPhrases,
    options: &EncodeOptions,
) -> String {
    if subgraph.triplets.is_empty() {
        return EMPTY_CONTEXT_SENTENCE.into();
    }
    let center = person_name(&subgraph.center);
    subgraph
        .triplets
        .iter()
        .map(|t| sentence(&center, t, phrases, options))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The summarization prompt with `{mp_context}` filled by the serialized
/// triplets.
pub fn summarize_prompt(subgraph: &Subgraph, options: &EncodeOptions) -> String {
    let context = serialize_triplets(subgraph, options);
    fill(
        &load_template(SUMMARIZE_TEMPLATE),
        &[("mp_context", &context)],
    )
}

#[derive(Debug, Error)]
pub enum SummarizeError<E> {
    #[error("summarizer failed: {0}")]
    Backend(E),
    #[error("summarizer returned an empty completion")]
    EmptyCompletion,
}

/// Summarizes the subgraph with one chat completion.
pub fn summarize<B: ChatBackend>(
    subgraph: &Subgraph,
    backend: &B,
    model: &str,
    options: &EncodeOptions,
) -> Result<EncodedContext, SummarizeError<B::Error>> {
    let request = ChatRequest::user(model, summarize_prompt(subgraph, options));
    let response = backend
        .complete(&request)
        .map_err(SummarizeError::Backend)?;
    let text = response.text.trim().to_string();
    if text.is_empty() {
        return Err(SummarizeError::EmptyCompletion);
    }
    Ok(EncodedContext::new(
        EncodingMode::Summarization,
        text,
        subgraph.paradigm,
    ))
}

/// Person properties reported in raw renderings, in output order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonInfo {
    pub date_birth: Value,
    pub uid: Value,
    pub gender: Value,
    pub last_name: Value,
    pub first_name: Value,
}

impl PersonInfo {
    pub fn from_node(person: &Node) -> Self {
        let get = |k: &str| person.property(k).cloned().unwrap_or(Value::Null);
        Self {
            date_birth: get("date_birth"),
            uid: get("uid"),
            gender: get("gender"),
            last_name: get("last_name"),
            first_name: get("first_name"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawVia {
    #[serde(rename = "type")]
    pub label: String,
    pub properties: Properties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawElement {
    #[serde(rename = "type")]
    pub label: String,
    pub rel: String,
    pub properties: Properties,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<RawVia>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub csv_uid: String,
    pub original_label: Option<String>,
    pub person_info: PersonInfo,
    pub graph_context: Vec<RawElement>,
}

impl RawDocument {
    pub fn build(subgraph: &Subgraph, mp: &MpRecord, options: &EncodeOptions) -> Self {
        let graph_context = subgraph
            .triplets
            .iter()
            .map(|t| RawElement {
                label: t.far_node.label.clone(),
                rel: t.relation.clone(),
                properties: prompt_properties(&t.far_node, options),
                via: t.via_node.as_ref().map(|v| RawVia {
                    label: v.label.clone(),
                    properties: prompt_properties(v, options),
                }),
            })
            .collect();
        Self {
            csv_uid: mp.uid.clone(),
            original_label: None,
            person_info: PersonInfo::from_node(&subgraph.center),
            graph_context,
        }
    }
}

/// Canonical text of a raw rendering: a one-element JSON array, two-space
/// indentation, fixed field order, properties sorted by key.
pub fn render_raw_text(doc: &RawDocument) -> String {
    serde_json::to_string_pretty(&[doc]).expect("raw documents always serialize")
}

pub fn render_raw(subgraph: &Subgraph, mp: &MpRecord, options: &EncodeOptions) -> EncodedContext {
    let doc = RawDocument::build(subgraph, mp, options);
    EncodedContext::new(
        EncodingMode::RawGraph,
        render_raw_text(&doc),
        subgraph.paradigm,
    )
}

pub fn parse_raw(text: &str) -> Result<Vec<RawDocument>, serde_json::Error> {
    serde_json::from_str(text)
}
