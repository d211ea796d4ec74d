//! Brute-force reference for the three extraction patterns. Works directly on
//! the raw dump lines with `serde_json::Value` and a linear scan over every
//! edge; it shares no code with the graph store or the extractors.

use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde_json::Value;

pub struct RawDump {
    pub nodes: Vec<Value>,
    pub edges: Vec<Value>,
}

/// (hop, relation, far node id, via node id)
pub type Row = (u8, String, String, Option<String>);

impl RawDump {
    pub fn parse(nodes: &str, edges: &str) -> Self {
        let parse = |text: &str| {
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).expect("fixture line"))
                .collect()
        };
        Self {
            nodes: parse(nodes),
            edges: parse(edges),
        }
    }

    fn node(&self, id: &str) -> &Value {
        self.nodes
            .iter()
            .find(|n| n["id"] == id)
            .expect("node exists")
    }

    fn label(&self, id: &str) -> String {
        self.node(id)["label"].as_str().unwrap().to_string()
    }

    pub fn person_uids(&self) -> Vec<String> {
        self.nodes
            .iter()
            .filter(|n| n["label"] == "Person")
            .map(|n| n["properties"]["uid"].as_str().unwrap().to_string())
            .collect()
    }

    fn person_id(&self, uid: &str) -> String {
        self.nodes
            .iter()
            .find(|n| n["label"] == "Person" && n["properties"]["uid"] == uid)
            .map(|n| n["id"].as_str().unwrap().to_string())
            .expect("person exists")
    }

    /// (edge index, edge, far id) for every edge touching `id`.
    fn incident(&self, id: &str) -> Vec<(usize, &Value, String)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            let (s, t) = (e["source"].as_str().unwrap(), e["target"].as_str().unwrap());
            if s == id {
                out.push((i, e, t.to_string()));
            } else if t == id {
                out.push((i, e, s.to_string()));
            }
        }
        out
    }

    /// Number of edges touching `id` (self-loops count once).
    pub fn degree(&self, id: &str) -> usize {
        self.incident(id).len()
    }

    fn sort_rows(&self, rows: &mut [(usize, Row)]) {
        rows.sort_by(|(ia, a), (ib, b)| {
            (&a.1, self.label(&a.2), &a.2, ia).cmp(&(&b.1, self.label(&b.2), &b.2, ib))
        });
    }

    pub fn speech_centric(&self, uid: &str) -> Vec<Row> {
        let pid = self.person_id(uid);
        let lo = NaiveDateTime::parse_from_str("2015-11-30T00:00:00", "%Y-%m-%dT%H:%M:%S").unwrap();
        let hi = NaiveDateTime::parse_from_str("2019-12-01T23:59:59", "%Y-%m-%dT%H:%M:%S").unwrap();
        let mut rows = Vec::new();
        for (i, e, far) in self.incident(&pid) {
            if self.label(&far) != "Speech" {
                continue;
            }
            let props = &self.node(&far)["properties"];
            let (Some(start), Some(end)) = (dt(&props["time_start"]), dt(&props["time_end"]))
            else {
                continue;
            };
            if end >= lo && start <= hi {
                rows.push((i, (1, rel(e), far, None)));
            }
        }
        self.sort_rows(&mut rows);
        rows.into_iter().map(|r| r.1).collect()
    }

    pub fn mp_centric(&self, uid: &str) -> Vec<Row> {
        let pid = self.person_id(uid);
        let (lo, hi) = window();
        let labels = [
            "Chamber",
            "Committee",
            "Party",
            "Canton",
            "Location",
            "City",
            "ParliamentaryGroup",
            "Parliamentary Group",
        ];
        let mut rows = Vec::new();
        for (i, e, far) in self.incident(&pid) {
            let label = self.label(&far);
            if !labels.contains(&label.as_str()) {
                continue;
            }
            let p = &e["properties"];
            let keep = match label.as_str() {
                "Chamber" => {
                    rel(e) == "ELECTED_TO"
                        && date(&p["date_election"]).is_some_and(|d| d >= lo && d <= hi)
                }
                "Committee" => {
                    date(&p["date_joining"]).is_some_and(|d| d >= lo)
                        && date(&p["date_leaving"]).is_some_and(|d| d <= hi)
                }
                _ => true,
            };
            if keep {
                rows.push((i, (1, rel(e), far, None)));
            }
        }
        self.sort_rows(&mut rows);
        let mut seen = BTreeSet::new();
        rows.into_iter()
            .map(|r| r.1)
            .filter(|r| seen.insert((r.1.clone(), r.2.clone())))
            .collect()
    }

    pub fn pursuit_centric(&self, uid: &str, require_submission: bool) -> Vec<Row> {
        let pid = self.person_id(uid);
        let (lo, hi) = window();
        let submitted_in_window = |pursuit: &str| {
            self.edges.iter().any(|e| {
                e["source"] == pursuit
                    && e["relation"] == "SUBMITTED_TO"
                    && date(&e["properties"]["date"]).is_some_and(|d| d >= lo && d <= hi)
            })
        };
        let mut first = Vec::new();
        for (i, e, far) in self.incident(&pid) {
            if self.label(&far) == "Pursuit" && (!require_submission || submitted_in_window(&far)) {
                first.push((i, (1, rel(e), far, None)));
            }
        }
        self.sort_rows(&mut first);
        let mut seen = BTreeSet::new();
        let first: Vec<Row> = first
            .into_iter()
            .map(|r| r.1)
            .filter(|r| seen.insert((r.1.clone(), r.2.clone())))
            .collect();

        let pursuits: BTreeSet<String> = first.iter().map(|r| r.2.clone()).collect();
        let mut out = first;
        for k in pursuits {
            let mut second = Vec::new();
            for (i, e, far) in self.incident(&k) {
                let r = rel(e);
                if (r == "SPONSORS" || r == "COSPONSORS") && far != pid {
                    second.push((i, (2, r, far, Some(k.clone()))));
                }
            }
            self.sort_rows(&mut second);
            let mut seen = BTreeSet::new();
            out.extend(
                second
                    .into_iter()
                    .map(|r| r.1)
                    .filter(|r| seen.insert((r.1.clone(), r.2.clone()))),
            );
        }
        out
    }
}

fn rel(e: &Value) -> String {
    e["relation"].as_str().unwrap().to_string()
}

fn window() -> (NaiveDate, NaiveDate) {
    (
        NaiveDate::from_ymd_opt(2015, 11, 30).unwrap(),
        NaiveDate::from_ymd_opt(2019, 12, 1).unwrap(),
    )
}

fn date(v: &Value) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(v.as_str()?, "%Y-%m-%d").ok()
}

fn dt(v: &Value) -> Option<NaiveDateTime> {
    let s = v.as_str()?;
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.naive_utc())
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S"))
        .ok()
}
