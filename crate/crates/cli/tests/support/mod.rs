#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use ideograph::config::Config;
use ideograph::gateway::{Provider, ProviderError, Reply};
use ideograph_core::{ChatRequest, MpRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[path = "../../../core/tests/support/fixtures.rs"]
pub mod fixtures;

pub fn toy_config(out: &Path) -> Config {
    let dir = fixtures::fixture_dir("toy");
    Config {
        nodes: Some(dir.join("nodes.jsonl")),
        edges: Some(dir.join("edges.jsonl")),
        records: Some(dir.join("records.csv")),
        votes: Some(dir.join("votes.csv")),
        out: out.to_path_buf(),
        retry_base_ms: 1,
        ..Config::default()
    }
}

/// Bloc centres of the synthetic cohort.
pub const COHORT_BLOCS: &[(&str, &[&str], f64)] = &[
    ("Greens", &["GPS"], 9.0),
    ("Social Democrats", &["SP"], 8.0),
    ("Center", &["CVP", "EVP"], 5.2),
    ("Liberals", &["FDP", "LDP"], 3.6),
    ("SVP", &["SVP", "EDU"], 1.5),
];

/// `n` MPs spread round-robin over the blocs; truth is the bloc centre plus
/// N(0, 0.7) noise, clamped to [0, 10].
pub fn cohort(n: usize, seed: u64) -> Vec<MpRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.7).unwrap();
    (0..n)
        .map(|i| {
            let (bloc, parties, centre) = COHORT_BLOCS[i % COHORT_BLOCS.len()];
            let party = parties[rng.random_range(0..parties.len())];
            let truth: f64 = (centre + noise.sample(&mut rng)).clamp(0.0, 10.0);
            let truth = (truth * 100.0).round() / 100.0;
            MpRecord::new(
                &format!("{}", 1000 + i),
                &format!("Member {i:02}"),
                party,
                bloc,
                Some(truth),
            )
        })
        .collect()
}

pub fn write_records(dir: &Path, records: &[MpRecord]) -> PathBuf {
    let path = dir.join("records.csv");
    let mut csv = String::from("uid,name,party,bloc,ground_truth\n");
    for r in records {
        let score = r.ground_truth.map(|g| g.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{score}\n",
            r.uid, r.name, r.party, r.bloc
        ));
    }
    std::fs::write(&path, csv).unwrap();
    path
}

pub fn cohort_config(dir: &Path, records: &[MpRecord]) -> Config {
    Config {
        records: Some(write_records(dir, records)),
        out: dir.join("out"),
        retry_base_ms: 1,
        ..Config::default()
    }
}

/// Mean ground truth per bloc, by plain summation.
pub fn bloc_mean_oracle(records: &[MpRecord]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        if let Some(g) = r.ground_truth {
            let e = acc.entry(r.bloc.clone()).or_default();
            e.0 += g;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect()
}

/// Answers a fixed text and keeps every prompt it was sent.
pub struct Recording {
    pub answer: String,
    pub prompts: Mutex<Vec<String>>,
}

impl Recording {
    pub fn new(answer: &str) -> Self {
        Self {
            answer: answer.into(),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        let mut p = self.prompts.lock().unwrap().clone();
        p.sort();
        p
    }
}

impl Provider for Recording {
    fn id(&self) -> String {
        format!("recording:{}", self.answer)
    }

    fn call(&self, request: &ChatRequest) -> Result<Reply, ProviderError> {
        self.prompts
            .lock()
            .unwrap()
            .push(request.last_user_content().to_string());
        Ok(Reply::text(self.answer.clone()))
    }
}

/// Every file under `root` except the response cache, as relative path →
/// bytes.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let rel = path
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .replace('\\', "/");
            if rel == "cache" {
                continue;
            }
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}
