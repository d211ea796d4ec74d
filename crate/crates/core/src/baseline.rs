//! Naive predictors: global mean, party mean and party-bloc mean.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::mean;
use crate::record::MpRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "gm")]
    GlobalMean,
    #[serde(rename = "pm")]
    PartyMean,
    #[serde(rename = "pbm")]
    PartyBlocMean,
}

impl BaselineKind {
    pub fn slug(self) -> &'static str {
        match self {
            BaselineKind::GlobalMean => "gm",
            BaselineKind::PartyMean => "pm",
            BaselineKind::PartyBlocMean => "pbm",
        }
    }

    fn group(self, r: &MpRecord) -> Option<&str> {
        match self {
            BaselineKind::GlobalMean => None,
            BaselineKind::PartyMean => Some(&r.party),
            BaselineKind::PartyBlocMean => Some(&r.bloc),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::GlobalMean => "GM",
            BaselineKind::PartyMean => "PM",
            BaselineKind::PartyBlocMean => "PBM",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gm" => Ok(BaselineKind::GlobalMean),
            "pm" => Ok(BaselineKind::PartyMean),
            "pbm" => Ok(BaselineKind::PartyBlocMean),
            other => Err(format!(
                "unknown baseline {other:?}; expected gm, pm or pbm"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("no records with ground truth to fit on")]
    Empty,
    #[error("record {uid:?} has no {field}")]
    MissingGroup { uid: String, field: &'static str },
    #[error("group {0:?} was not seen during fitting")]
    UnseenGroup(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub global_mean: f64,
    pub group_means: BTreeMap<String, f64>,
}

fn field_name(kind: BaselineKind) -> &'static str {
    match kind {
        BaselineKind::PartyMean => "party",
        _ => "bloc",
    }
}

/// Fits arithmetic means over the records that carry ground truth. Sums are
/// accumulated in record order.
pub fn fit(records: &[MpRecord], kind: BaselineKind) -> Result<BaselineModel, BaselineError> {
    let scored: Vec<(&MpRecord, f64)> = records
        .iter()
        .filter_map(|r| r.ground_truth.map(|t| (r, t)))
        .collect();
    let global_mean = mean(scored.iter().map(|(_, t)| *t)).ok_or(BaselineError::Empty)?;
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    if kind != BaselineKind::GlobalMean {
        for (r, t) in &scored {
            let key = kind.group(r).unwrap_or_default();
            if key.is_empty() {
                return Err(BaselineError::MissingGroup {
                    uid: r.uid.clone(),
                    field: field_name(kind),
                });
            }
            groups.entry(key.into()).or_default().push(*t);
        }
    }
    let group_means = groups
        .into_iter()
        .map(|(k, v)| (k, mean(v).expect("groups are non-empty")))
        .collect();
    Ok(BaselineModel {
        kind,
        global_mean,
        group_means,
    })
}

impl BaselineModel {
    pub fn predict(&self, record: &MpRecord) -> Result<f64, BaselineError> {
        match self.kind.group(record) {
            None => Ok(self.global_mean),
            Some(key) => self
                .group_means
                .get(key)
                .copied()
                .ok_or_else(|| BaselineError::UnseenGroup(key.into())),
        }
    }
}

/// Leave-one-out predictions: each scored record is predicted by a model fit
/// on all other records. Records whose group has no other member get an
/// `UnseenGroup` error.
pub fn predict_leave_one_out(
    records: &[MpRecord],
    kind: BaselineKind,
) -> Vec<(String, Result<f64, BaselineError>)> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.ground_truth.is_some())
        .map(|(i, r)| {
            let rest: Vec<MpRecord> = records
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| o.clone())
                .collect();
            let pred = fit(&rest, kind).and_then(|m| m.predict(r));
            (r.uid.clone(), pred)
        })
        .collect()
}
