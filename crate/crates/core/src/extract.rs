//! Person-centred subgraph extraction.
//!
//! Three retrieval patterns are supported, each anchored on a `Person` node
//! and restricted to a [`TemporalWindow`]:
//!
//! - speech-centric: speeches whose `[time_start, time_end]` interval overlaps
//!   the window;
//! - MP-centric: 1-hop institutional neighbours (chamber, committees, party,
//!   parliamentary group, canton, location). Chamber edges must be
//!   `ELECTED_TO` with `date_election` inside the window; committee
//!   memberships must be fully contained in it; everything else is kept;
//! - pursuit-centric: pursuits linked to the person that were submitted
//!   inside the window, plus their other sponsors and co-sponsors (2 hops).
//!
//! Missing or null dates fail the predicate that needs them.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{name_set, Direction, GraphError, Node, PropertyGraph, Value};
use crate::time::{parse_datetime, TemporalWindow};

/// Neighbour labels kept by the MP-centric pattern. Both the spaced and the
/// camel-case spelling of the parliamentary group label are accepted, and
/// `City` is treated as a location.
pub const MP_CENTRIC_LABELS: &[&str] = &[
    "Chamber",
    "Committee",
    "Party",
    "Canton",
    "Location",
    "City",
    "ParliamentaryGroup",
    "Parliamentary Group",
];

pub const PURSUIT_CO_RELATIONS: &[&str] = &["SPONSORS", "COSPONSORS"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    #[serde(rename = "sp")]
    SpeechCentric,
    #[serde(rename = "mp")]
    MpCentric,
    #[serde(rename = "pr")]
    PursuitCentric,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [
        Paradigm::SpeechCentric,
        Paradigm::MpCentric,
        Paradigm::PursuitCentric,
    ];

    /// Lower-case short name used in flags and file paths.
    pub fn slug(self) -> &'static str {
        match self {
            Paradigm::SpeechCentric => "sp",
            Paradigm::MpCentric => "mp",
            Paradigm::PursuitCentric => "pr",
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Paradigm::SpeechCentric => "SP",
            Paradigm::MpCentric => "MP",
            Paradigm::PursuitCentric => "PR",
        })
    }
}

impl FromStr for Paradigm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sp" | "speech" => Ok(Paradigm::SpeechCentric),
            "mp" => Ok(Paradigm::MpCentric),
            "pr" | "pursuit" => Ok(Paradigm::PursuitCentric),
            other => Err(alloc::format!(
                "unknown paradigm {other:?}; expected sp, mp or pr"
            )),
        }
    }
}

/// How pursuits without an in-window `SUBMITTED_TO` edge are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubmissionFilter {
    /// Keep only pursuits with at least one submission dated in the window.
    #[default]
    InWindow,
    /// Keep every linked pursuit (pure optional-match reading).
    Ignore,
}

impl FromStr for SubmissionFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "in-window" => Ok(SubmissionFilter::InWindow),
            "ignore" => Ok(SubmissionFilter::Ignore),
            other => Err(alloc::format!(
                "unknown submission filter {other:?}; expected in-window or ignore"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    pub submission_filter: SubmissionFilter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub relation: String,
    /// Direction of the edge as seen from the center (hop 1) or from the via
    /// pursuit (hop 2).
    pub direction: Direction,
    pub hop: u8,
    pub far_node: Node,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via_node: Option<Node>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    pub center: Node,
    pub paradigm: Paradigm,
    pub window: TemporalWindow,
    pub triplets: Vec<Triplet>,
}

impl Subgraph {
    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

fn datetime_of(node: &Node, key: &str) -> Option<chrono::NaiveDateTime> {
    node.property(key)
        .and_then(Value::as_str)
        .and_then(parse_datetime)
}

fn hop1(relation: &str, direction: Direction, far: &Node) -> Triplet {
    Triplet {
        relation: relation.into(),
        direction,
        hop: 1,
        far_node: far.clone(),
        via_node: None,
    }
}

pub fn extract(
    graph: &PropertyGraph,
    paradigm: Paradigm,
    uid: &str,
    window: TemporalWindow,
    options: ExtractOptions,
) -> Result<Subgraph, GraphError> {
    match paradigm {
        Paradigm::SpeechCentric => extract_speech_centric(graph, uid, window),
        Paradigm::MpCentric => extract_mp_centric(graph, uid, window),
        Paradigm::PursuitCentric => extract_pursuit_centric(graph, uid, window, options),
    }
}

/// Speeches linked to the person whose delivery interval overlaps the window.
pub fn extract_speech_centric(
    graph: &PropertyGraph,
    uid: &str,
    window: TemporalWindow,
) -> Result<Subgraph, GraphError> {
    let person = graph.find_person(uid)?;
    let speeches = graph.neighbors(&person.id, None, Some(&name_set(["Speech"])))?;
    let triplets = speeches
        .into_iter()
        .filter(|n| {
            match (
                datetime_of(n.node, "time_start"),
                datetime_of(n.node, "time_end"),
            ) {
                (Some(from), Some(to)) => window.overlaps(from, to),
                _ => false,
            }
        })
        .map(|n| hop1(&n.edge.relation, n.direction, n.node))
        .collect();
    Ok(Subgraph {
        center: person.clone(),
        paradigm: Paradigm::SpeechCentric,
        window,
        triplets,
    })
}

/// Institutional 1-hop neighbourhood of the person.
pub fn extract_mp_centric(
    graph: &PropertyGraph,
    uid: &str,
    window: TemporalWindow,
) -> Result<Subgraph, GraphError> {
    let person = graph.find_person(uid)?;
    let labels = name_set(MP_CENTRIC_LABELS.iter().copied());
    let mut seen = BTreeSet::new();
    let mut triplets = Vec::new();
    for n in graph.neighbors(&person.id, None, Some(&labels))? {
        let keep = match n.node.label.as_str() {
            "Chamber" => {
                n.edge.relation == "ELECTED_TO"
                    && n.edge
                        .date("date_election")
                        .is_some_and(|d| window.contains_date(d))
            }
            "Committee" => {
                n.edge
                    .date("date_joining")
                    .is_some_and(|d| d >= window.start())
                    && n.edge
                        .date("date_leaving")
                        .is_some_and(|d| d <= window.end())
            }
            _ => true,
        };
        // rows are distinct over (relation, neighbour)
        if keep && seen.insert((n.edge.relation.clone(), n.node.id.clone())) {
            triplets.push(hop1(&n.edge.relation, n.direction, n.node));
        }
    }
    Ok(Subgraph {
        center: person.clone(),
        paradigm: Paradigm::MpCentric,
        window,
        triplets,
    })
}

/// Pursuits of the person and the other sponsors of those pursuits.
pub fn extract_pursuit_centric(
    graph: &PropertyGraph,
    uid: &str,
    window: TemporalWindow,
    options: ExtractOptions,
) -> Result<Subgraph, GraphError> {
    let person = graph.find_person(uid)?;
    let submitted = name_set(["SUBMITTED_TO"]);
    let co = name_set(PURSUIT_CO_RELATIONS.iter().copied());

    let mut hop1_seen = BTreeSet::new();
    let mut triplets = Vec::new();
    let mut pursuits: Vec<&Node> = Vec::new();
    for n in graph.neighbors(&person.id, None, Some(&name_set(["Pursuit"])))? {
        let retained = match options.submission_filter {
            SubmissionFilter::Ignore => true,
            SubmissionFilter::InWindow => graph
                .neighbors(&n.node.id, Some(&submitted), None)?
                .iter()
                .any(|s| {
                    s.direction == Direction::Outgoing
                        && s.edge.date("date").is_some_and(|d| window.contains_date(d))
                }),
        };
        if !retained || !hop1_seen.insert((n.edge.relation.clone(), n.node.id.clone())) {
            continue;
        }
        triplets.push(hop1(&n.edge.relation, n.direction, n.node));
        if !pursuits.iter().any(|p| p.id == n.node.id) {
            pursuits.push(n.node);
        }
    }

    pursuits.sort_by(|a, b| a.id.cmp(&b.id));
    for pursuit in pursuits {
        let mut seen = BTreeSet::new();
        for m in graph.neighbors(&pursuit.id, Some(&co), None)? {
            if m.node.id == person.id || !seen.insert((m.edge.relation.clone(), m.node.id.clone()))
            {
                continue;
            }
            triplets.push(Triplet {
                relation: m.edge.relation.clone(),
                direction: m.direction,
                hop: 2,
                far_node: m.node.clone(),
                via_node: Some(pursuit.clone()),
            });
        }
    }
    Ok(Subgraph {
        center: person.clone(),
        paradigm: Paradigm::PursuitCentric,
        window,
        triplets,
    })
}

/// Uniform random subset of `n` triplets drawn without replacement from a
/// ChaCha8 stream seeded with `seed`. Survivors keep their original order.
/// Subgraphs with at most `n` triplets are returned unchanged.
pub fn sample_triplets(subgraph: &Subgraph, n: usize, seed: u64) -> Subgraph {
    let len = subgraph.triplets.len();
    if len <= n {
        return subgraph.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, len, n).into_vec();
    picked.sort_unstable();
    Subgraph {
        triplets: picked
            .into_iter()
            .map(|i| subgraph.triplets[i].clone())
            .collect(),
        ..subgraph.clone()
    }
}
