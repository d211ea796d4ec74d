//! File formats: graph dumps, MP record and vote CSVs, JSON artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ideograph_core::{MpRecord, PropertyGraph, VoteMatrix};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_graph(nodes: &Path, edges: &Path) -> Result<PropertyGraph> {
    let graph =
        PropertyGraph::from_jsonl(&read_text(nodes)?, &read_text(edges)?).with_context(|| {
            format!(
                "loading graph from {} and {}",
                nodes.display(),
                edges.display()
            )
        })?;
    Ok(graph)
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    uid: String,
    name: String,
    party: String,
    bloc: String,
    ground_truth: Option<f64>,
}

/// Reads `uid,name,party,bloc,ground_truth`; an empty score means unscored.
pub fn read_records(path: &Path) -> Result<Vec<MpRecord>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening records {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RecordRow>().enumerate() {
        let row = row.with_context(|| format!("{}: record {}", path.display(), i + 1))?;
        let record = MpRecord::new(&row.uid, &row.name, &row.party, &row.bloc, row.ground_truth);
        record
            .validate()
            .with_context(|| format!("{}: record {}", path.display(), i + 1))?;
        out.push(record);
    }
    let mut uids: Vec<&str> = out.iter().map(|r| r.uid.as_str()).collect();
    uids.sort_unstable();
    if let Some(w) = uids.windows(2).find(|w| w[0] == w[1]) {
        bail!("{}: duplicate uid {}", path.display(), w[0]);
    }
    Ok(out)
}

pub fn records_csv(records: &[MpRecord]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        writer.serialize(RecordRow {
            uid: r.uid.clone(),
            name: r.name.clone(),
            party: r.party.clone(),
            bloc: r.bloc.clone(),
            ground_truth: r.ground_truth,
        })?;
    }
    Ok(writer.into_inner()?)
}

/// Reads a roll-call matrix: first column `uid`, one column per vote, cells
/// `1`, `0`, or `NA`/empty for missing.
pub fn read_votes(path: &Path) -> Result<VoteMatrix> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening votes {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("uid") {
        bail!("{}: first column must be uid", path.display());
    }
    let items: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut persons = Vec::new();
    let mut cells = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        persons.push(row[0].to_string());
        for (j, cell) in row.iter().skip(1).enumerate() {
            cells.push(match cell.trim() {
                "1" => Some(true),
                "0" => Some(false),
                "" | "NA" => None,
                other => bail!(
                    "{}: row {}, vote {}: unexpected cell {other:?}",
                    path.display(),
                    i + 2,
                    items[j]
                ),
            });
        }
    }
    Ok(VoteMatrix::new(persons, items, cells)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json(value)?)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, creating parent directories as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Sorted `*.json` files directly inside `dir`.
pub fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
