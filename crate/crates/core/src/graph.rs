//! Immutable in-memory property graph of parliamentary entities.
//!
//! Graphs are built once from a line-delimited dump (one JSON record per
//! line, nodes and edges in separate files) and never mutated afterwards, so
//! a loaded [`PropertyGraph`] can be shared freely between threads.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{parse_date, parse_datetime};

/// Edge and node properties that must hold ISO-8601 calendar dates.
pub const DATE_KEYS: &[&str] = &["date_election", "date_joining", "date_leaving", "date"];
/// Properties that must hold ISO-8601 datetimes.
pub const DATETIME_KEYS: &[&str] = &["time_start", "time_end"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// Scalar property value. Dates and datetimes are kept as their ISO-8601
/// strings and parsed where a predicate needs them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Text form used for display and for the `(label, property=value)` index.
    pub fn render(&self) -> String {
        match self {
            Value::Null => "null".to_owned(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Float(x) => format!("{x}"),
            Value::Str(s) => s.clone(),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

pub type Properties = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    #[serde(default)]
    pub properties: Properties,
}

impl Node {
    pub fn property(&self, key: &str) -> Option<&Value> {
        self.properties
            .get(key)
            .filter(|v| !matches!(v, Value::Null))
    }

    pub fn str_property(&self, key: &str) -> Option<&str> {
        self.property(key).and_then(Value::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub relation: String,
    #[serde(default)]
    pub properties: Properties,
}

impl Edge {
    pub fn property(&self, key: &str) -> Option<&Value> {
        self.properties
            .get(key)
            .filter(|v| !matches!(v, Value::Null))
    }

    /// Date-valued property; absent, null or unparseable values yield `None`.
    pub fn date(&self, key: &str) -> Option<chrono::NaiveDate> {
        self.property(key)
            .and_then(Value::as_str)
            .and_then(parse_date)
    }
}

/// Which dump file a load error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFile {
    Nodes,
    Edges,
}

impl fmt::Display for DumpFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DumpFile::Nodes => "nodes",
            DumpFile::Edges => "edges",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("{file} file line {line}: malformed record: {message}")]
    Malformed {
        file: DumpFile,
        line: usize,
        message: String,
    },
    #[error("nodes file line {line}: duplicate node id {id}")]
    DuplicateNode { line: usize, id: NodeId },
    #[error("edges file line {line}: edge endpoint {id} is not a loaded node")]
    DanglingEndpoint { line: usize, id: NodeId },
    #[error("{file} file line {line}: property {key} is not an ISO-8601 date: {value}")]
    BadDate {
        file: DumpFile,
        line: usize,
        key: String,
        value: String,
    },
    #[error("no Person node with uid {0:?}")]
    PersonNotFound(String),
    #[error("{count} Person nodes share uid {uid:?}; the dump is corrupt")]
    AmbiguousPerson { uid: String, count: usize },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
}

/// Direction of an incident edge relative to the node it was queried from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// One incident edge together with the node at its far end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<'g> {
    pub edge: &'g Edge,
    pub node: &'g Node,
    pub direction: Direction,
}

#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    by_id: BTreeMap<NodeId, usize>,
    by_label: BTreeMap<String, Vec<usize>>,
    // (label, property, rendered value) -> node indices
    by_property: BTreeMap<(String, String, String), Vec<usize>>,
    // node index -> relation -> incident edge indices
    adjacency: Vec<BTreeMap<String, Vec<usize>>>,
}

fn check_dates(props: &Properties, file: DumpFile, line: usize) -> Result<(), GraphError> {
    for (key, value) in props {
        let is_date = DATE_KEYS.contains(&key.as_str());
        let is_datetime = DATETIME_KEYS.contains(&key.as_str());
        if !is_date && !is_datetime {
            continue;
        }
        let ok = match value {
            Value::Null => true,
            Value::Str(s) if is_date => parse_date(s).is_some(),
            Value::Str(s) => parse_datetime(s).is_some(),
            _ => false,
        };
        if !ok {
            return Err(GraphError::BadDate {
                file,
                line,
                key: key.clone(),
                value: value.render(),
            });
        }
    }
    Ok(())
}

impl PropertyGraph {
    /// Builds a graph from dump text: one JSON record per line, blank lines
    /// ignored. Line numbers in errors are 1-based.
    pub fn from_jsonl(nodes: &str, edges: &str) -> Result<Self, GraphError> {
        let mut node_records = Vec::new();
        for (idx, line) in nodes.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let node: Node = serde_json::from_str(line).map_err(|e| GraphError::Malformed {
                file: DumpFile::Nodes,
                line: idx + 1,
                message: e.to_string(),
            })?;
            node_records.push((idx + 1, node));
        }
        let mut edge_records = Vec::new();
        for (idx, line) in edges.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let edge: Edge = serde_json::from_str(line).map_err(|e| GraphError::Malformed {
                file: DumpFile::Edges,
                line: idx + 1,
                message: e.to_string(),
            })?;
            edge_records.push((idx + 1, edge));
        }
        Self::build(node_records, edge_records)
    }

    /// Builds a graph from in-memory records; positions stand in for line
    /// numbers in errors.
    pub fn from_records(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        Self::build(
            nodes
                .into_iter()
                .enumerate()
                .map(|(i, n)| (i + 1, n))
                .collect(),
            edges
                .into_iter()
                .enumerate()
                .map(|(i, e)| (i + 1, e))
                .collect(),
        )
    }

    fn build(nodes: Vec<(usize, Node)>, edges: Vec<(usize, Edge)>) -> Result<Self, GraphError> {
        let mut g = PropertyGraph::default();
        for (line, node) in nodes {
            if node.label.is_empty() {
                return Err(GraphError::Malformed {
                    file: DumpFile::Nodes,
                    line,
                    message: "empty label".into(),
                });
            }
            if node.label == "Person" && node.str_property("uid").is_none() {
                return Err(GraphError::Malformed {
                    file: DumpFile::Nodes,
                    line,
                    message: format!("Person node {} has no uid property", node.id),
                });
            }
            check_dates(&node.properties, DumpFile::Nodes, line)?;
            if g.by_id.contains_key(&node.id) {
                return Err(GraphError::DuplicateNode { line, id: node.id });
            }
            let idx = g.nodes.len();
            g.by_id.insert(node.id.clone(), idx);
            g.by_label.entry(node.label.clone()).or_default().push(idx);
            for (key, value) in &node.properties {
                if matches!(value, Value::Null) {
                    continue;
                }
                g.by_property
                    .entry((node.label.clone(), key.clone(), value.render()))
                    .or_default()
                    .push(idx);
            }
            g.nodes.push(node);
            g.adjacency.push(BTreeMap::new());
        }
        for (line, edge) in edges {
            if edge.relation.is_empty() {
                return Err(GraphError::Malformed {
                    file: DumpFile::Edges,
                    line,
                    message: "empty relation".into(),
                });
            }
            check_dates(&edge.properties, DumpFile::Edges, line)?;
            let s = *g
                .by_id
                .get(&edge.source)
                .ok_or_else(|| GraphError::DanglingEndpoint {
                    line,
                    id: edge.source.clone(),
                })?;
            let t = *g
                .by_id
                .get(&edge.target)
                .ok_or_else(|| GraphError::DanglingEndpoint {
                    line,
                    id: edge.target.clone(),
                })?;
            let eidx = g.edges.len();
            g.adjacency[s]
                .entry(edge.relation.clone())
                .or_default()
                .push(eidx);
            if t != s {
                g.adjacency[t]
                    .entry(edge.relation.clone())
                    .or_default()
                    .push(eidx);
            }
            g.edges.push(edge);
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes in load order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Edges in load order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.by_id.get(id).map(|&i| &self.nodes[i])
    }

    pub fn nodes_with_label<'g>(&'g self, label: &str) -> impl Iterator<Item = &'g Node> + 'g {
        self.by_label
            .get(label)
            .into_iter()
            .flatten()
            .map(move |&i| &self.nodes[i])
    }

    /// Nodes with `label` whose property `key` renders to `value`.
    pub fn nodes_with_property<'g>(
        &'g self,
        label: &str,
        key: &str,
        value: &str,
    ) -> impl Iterator<Item = &'g Node> + 'g {
        self.by_property
            .get(&(label.to_owned(), key.to_owned(), value.to_owned()))
            .into_iter()
            .flatten()
            .map(move |&i| &self.nodes[i])
    }

    /// Node count per label, sorted by label.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        self.by_label
            .iter()
            .map(|(k, v)| (k.clone(), v.len()))
            .collect()
    }

    /// Edge count per relation, sorted by relation.
    pub fn relation_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.edges {
            *counts.entry(e.relation.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// The unique `Person` node whose `uid` property equals `uid`.
    pub fn find_person(&self, uid: &str) -> Result<&Node, GraphError> {
        let mut hits = self.nodes_with_property("Person", "uid", uid);
        let first = hits
            .next()
            .ok_or_else(|| GraphError::PersonNotFound(uid.to_owned()))?;
        let extra = hits.count();
        if extra > 0 {
            return Err(GraphError::AmbiguousPerson {
                uid: uid.to_owned(),
                count: extra + 1,
            });
        }
        Ok(first)
    }

    /// Every incident edge of `id` (either direction) that passes the filters,
    /// ordered by relation name, then far-node label, then far-node id, then
    /// load order.
    pub fn neighbors(
        &self,
        id: &NodeId,
        relation_filter: Option<&BTreeSet<String>>,
        label_filter: Option<&BTreeSet<String>>,
    ) -> Result<Vec<Neighbor<'_>>, GraphError> {
        let &idx = self
            .by_id
            .get(id)
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
        let mut out: Vec<(usize, Neighbor<'_>)> = Vec::new();
        for (relation, edge_ids) in &self.adjacency[idx] {
            if relation_filter.is_some_and(|f| !f.contains(relation)) {
                continue;
            }
            for &eidx in edge_ids {
                let edge = &self.edges[eidx];
                let (far, direction) = if edge.source == *id {
                    (&edge.target, Direction::Outgoing)
                } else {
                    (&edge.source, Direction::Incoming)
                };
                let node = &self.nodes[self.by_id[far]];
                if label_filter.is_some_and(|f| !f.contains(&node.label)) {
                    continue;
                }
                out.push((
                    eidx,
                    Neighbor {
                        edge,
                        node,
                        direction,
                    },
                ));
            }
        }
        out.sort_by(|(ea, a), (eb, b)| {
            a.edge
                .relation
                .cmp(&b.edge.relation)
                .then_with(|| a.node.label.cmp(&b.node.label))
                .then_with(|| a.node.id.cmp(&b.node.id))
                .then_with(|| ea.cmp(eb))
        });
        Ok(out.into_iter().map(|(_, n)| n).collect())
    }
}

/// Builds a filter set from string literals.
pub fn name_set<'a>(names: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    names.into_iter().map(ToOwned::to_owned).collect()
}
