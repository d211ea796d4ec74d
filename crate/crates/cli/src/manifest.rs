//! Run manifests: the settings, template digests, seeds and input digests of
//! a command, without timestamps.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use ideograph_core::encode::{RELATION_PHRASES, SUMMARIZE_TEMPLATE};
use ideograph_core::prompt::{FEW_SHOT_TEMPLATE, ZERO_SHOT_TEMPLATE};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub template_hash: String,
    pub templates: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    /// Input path → SHA-256 of its bytes. Inputs inside the output
    /// directory are named relative to it, as `<out>/...`.
    pub inputs: BTreeMap<String, String>,
    pub config: Config,
}

pub fn template_hashes() -> BTreeMap<String, String> {
    [
        ("zero_shot", ZERO_SHOT_TEMPLATE),
        ("few_shot", FEW_SHOT_TEMPLATE),
        ("summarize", SUMMARIZE_TEMPLATE),
        ("relation_phrases", RELATION_PHRASES),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), io::sha256_hex(v.as_bytes())))
    .collect()
}

impl RunManifest {
    pub fn new(command: &str, config: &Config, inputs: &[&Path]) -> Result<Self> {
        let templates = template_hashes();
        let joined: String = templates.values().map(String::as_str).collect();
        let mut digests = BTreeMap::new();
        for path in inputs {
            let name = match path.strip_prefix(&config.out) {
                Ok(rel) if !config.out.as_os_str().is_empty() => {
                    format!("<out>/{}", rel.display())
                }
                _ => path.display().to_string(),
            };
            digests.insert(name, io::sha256_file(path)?);
        }
        Ok(Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            template_hash: io::sha256_hex(joined.as_bytes()),
            templates,
            seeds: [("seed", config.seed), ("fewshot_seed", config.fewshot_seed)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            inputs: digests,
            config: config.semantic(),
        })
    }

    /// Writes `<out>/manifests/<command>.manifest.json`.
    pub fn write(&self, out: &Path) -> Result<()> {
        let name = self.command.replace(' ', "-");
        io::write_json(
            &out.join("manifests").join(format!("{name}.manifest.json")),
            self,
        )
    }
}
