//! Core algorithms for graph-augmented ideology prediction of legislators.
//!
//! The crate is `no_std` (it only needs `alloc`) and performs no IO. File
//! formats, the LLM gateway and the command line live in the `ideograph`
//! companion crate.
//!
//! Pipeline pieces, bottom-up:
//!
//! - [`graph`]: immutable typed property graph loaded from line-delimited dumps.
//! - [`extract`]: speech-, MP- and pursuit-centric subgraph extraction with
//!   legislative-period temporal predicates, plus seeded triplet sampling.
//! - [`encode`]: triplet-to-sentence serialization, summarization prompts and
//!   raw structured rendering of subgraphs.
//! - [`chat`] and [`prompt`]: chat request types, score parsing, zero-shot and
//!   few-shot prediction prompts.
//! - [`baseline`]: global, party and party-bloc mean predictors.
//! - [`irt`]: two-parameter logistic IRT fitted by marginal maximum likelihood
//!   (EM over quadrature), used to produce vote-based ground truth.
//! - [`eval`]: regression and rank metrics, per-bloc errors and reports.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod chat;
pub mod encode;
pub mod eval;
pub mod extract;
pub mod graph;
pub mod irt;
mod math;
pub mod prompt;
pub mod record;
pub mod time;

pub use baseline::{BaselineKind, BaselineModel};
pub use chat::{parse_score, ChatBackend, ChatRequest, ChatResponse, Message, Role};
pub use encode::{EncodedContext, EncodingMode};
pub use eval::{EvalReport, PredictionSet};
pub use extract::{Paradigm, Subgraph, Triplet};
pub use graph::{Edge, Node, NodeId, PropertyGraph, Value};
pub use irt::{IrtConfig, IrtFit, IrtParams, VoteMatrix};
pub use prompt::{PromptMode, PromptSpec};
pub use record::MpRecord;
pub use time::TemporalWindow;
