use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One legislator: identity, party, party bloc and (optionally) the
/// vote-based ideology score on the 0 (right) to 10 (left) scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpRecord {
    pub uid: String,
    pub name: String,
    pub party: String,
    pub bloc: String,
    #[serde(default)]
    pub ground_truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("record {uid:?}: ground truth {value} outside [0, 10]")]
    ScoreOutOfRange { uid: String, value: f64 },
    #[error("record with empty uid")]
    EmptyUid,
}

impl MpRecord {
    pub fn new(uid: &str, name: &str, party: &str, bloc: &str, ground_truth: Option<f64>) -> Self {
        Self {
            uid: uid.into(),
            name: name.into(),
            party: party.into(),
            bloc: bloc.into(),
            ground_truth,
        }
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        if self.uid.is_empty() {
            return Err(RecordError::EmptyUid);
        }
        match self.ground_truth {
            Some(v) if !(0.0..=10.0).contains(&v) => Err(RecordError::ScoreOutOfRange {
                uid: self.uid.clone(),
                value: v,
            }),
            _ => Ok(()),
        }
    }
}
