//! Regression and rank metrics, per-bloc error breakdowns and method
//! comparison tables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{abs, mean, pearson, sqrt};
use crate::record::MpRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("prediction and truth lengths differ ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("metrics need at least {needed} pairs, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("rank correlation undefined: one side has zero rank variance")]
    ZeroVariance,
    #[error("baseline RMSE is zero; improvement is undefined")]
    ZeroBaseline,
    #[error("reports cover different MP counts ({base} vs {augmented})")]
    DifferentSets { base: usize, augmented: usize },
    #[error("uid {0:?} is both predicted and excluded")]
    Conflict(String),
    #[error("prediction for {uid:?} is {value}, outside [0, 10]")]
    OutOfRange { uid: String, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
}

fn check_pairs(pred: &[f64], truth: &[f64], needed: usize) -> Result<(), EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.len() < needed {
        return Err(EvalError::TooFew {
            needed,
            got: pred.len(),
        });
    }
    Ok(())
}

pub fn regression_metrics(pred: &[f64], truth: &[f64]) -> Result<RegressionMetrics, EvalError> {
    check_pairs(pred, truth, 1)?;
    let n = pred.len() as f64;
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let e = p - t;
        abs_sum += abs(e);
        sq_sum += e * e;
    }
    let mse = sq_sum / n;
    Ok(RegressionMetrics {
        mae: abs_sum / n,
        mse,
        rmse: sqrt(mse),
    })
}

/// 1-based ranks; tied values share the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of average ranks.
pub fn spearman_rho(pred: &[f64], truth: &[f64]) -> Result<f64, EvalError> {
    check_pairs(pred, truth, 2)?;
    pearson(&average_ranks(pred), &average_ranks(truth)).ok_or(EvalError::ZeroVariance)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Exclusion {
    pub uid: String,
    pub reason: String,
}

/// Predictions of one method, keyed by uid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub method: String,
    pub entries: BTreeMap<String, f64>,
    #[serde(default)]
    pub excluded: Vec<Exclusion>,
}

impl PredictionSet {
    pub fn new(method: &str) -> Self {
        Self {
            method: method.into(),
            entries: BTreeMap::new(),
            excluded: Vec::new(),
        }
    }

    pub fn exclude(&mut self, uid: &str, reason: impl Into<String>) {
        self.excluded.push(Exclusion {
            uid: uid.into(),
            reason: reason.into(),
        });
        self.excluded.sort();
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        for (uid, &value) in &self.entries {
            if !(0.0..=10.0).contains(&value) {
                return Err(EvalError::OutOfRange {
                    uid: uid.clone(),
                    value,
                });
            }
        }
        match self
            .excluded
            .iter()
            .find(|e| self.entries.contains_key(&e.uid))
        {
            Some(e) => Err(EvalError::Conflict(e.uid.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// `None` when either side has no rank variance, e.g. a constant
    /// predictor.
    pub spearman: Option<f64>,
    /// Matched (prediction, truth) pairs.
    pub n: usize,
    /// Signed errors (prediction - truth) per bloc, in uid order.
    pub per_bloc: BTreeMap<String, Vec<f64>>,
    /// Scored MPs without a usable prediction.
    pub exclusions: usize,
}

/// Records that carry ground truth, in uid order.
fn scored(records: &[MpRecord]) -> Vec<(&MpRecord, f64)> {
    let mut out: Vec<_> = records
        .iter()
        .filter_map(|r| r.ground_truth.map(|t| (r, t)))
        .collect();
    out.sort_by(|a, b| a.0.uid.cmp(&b.0.uid));
    out
}

/// Matched pairs (record, truth, prediction) in uid order.
fn matched<'r>(preds: &PredictionSet, records: &'r [MpRecord]) -> Vec<(&'r MpRecord, f64, f64)> {
    scored(records)
        .into_iter()
        .filter_map(|(r, t)| preds.entries.get(&r.uid).map(|&p| (r, t, p)))
        .collect()
}

/// Signed errors (prediction minus truth) per bloc, in uid order. Every bloc
/// with a scored record has an entry, empty when none of its MPs has a
/// prediction.
pub fn per_bloc_errors(preds: &PredictionSet, records: &[MpRecord]) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (r, _) in scored(records) {
        out.entry(r.bloc.clone()).or_default();
    }
    for (r, t, p) in matched(preds, records) {
        out.entry(r.bloc.clone()).or_default().push(p - t);
    }
    out
}

/// Scores `preds` against the ground truth carried by `records`. MPs without a
/// prediction are excluded pairwise and counted.
pub fn evaluate(preds: &PredictionSet, records: &[MpRecord]) -> Result<EvalReport, EvalError> {
    preds.validate()?;
    let pairs = matched(preds, records);
    let pred: Vec<f64> = pairs.iter().map(|(_, _, p)| *p).collect();
    let truth: Vec<f64> = pairs.iter().map(|(_, t, _)| *t).collect();
    let m = regression_metrics(&pred, &truth)?;
    let spearman = match spearman_rho(&pred, &truth) {
        Ok(rho) => Some(rho),
        Err(EvalError::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        method: preds.method.clone(),
        mae: m.mae,
        mse: m.mse,
        rmse: m.rmse,
        spearman,
        n: pairs.len(),
        per_bloc: per_bloc_errors(preds, records),
        exclusions: scored(records).len() - pairs.len(),
    })
}

/// Percent RMSE reduction of `augmented` relative to `base`.
pub fn improvement_report(base: &EvalReport, augmented: &EvalReport) -> Result<f64, EvalError> {
    if base.n != augmented.n {
        return Err(EvalError::DifferentSets {
            base: base.n,
            augmented: augmented.n,
        });
    }
    improvement_percent(base.rmse, augmented.rmse)
}

pub fn improvement_percent(base_rmse: f64, augmented_rmse: f64) -> Result<f64, EvalError> {
    if base_rmse == 0.0 {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(100.0 * (base_rmse - augmented_rmse) / base_rmse)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub uid: String,
    pub bloc: String,
    pub truth: f64,
    pub prediction: f64,
}

/// Within-bloc average of truth and prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub bloc: String,
    pub truth: f64,
    pub prediction: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterTable {
    pub points: Vec<ScatterPoint>,
    pub centroids: Vec<Centroid>,
}

impl ScatterTable {
    /// Flat CSV: one `point` row per MP, then one `centroid` row per bloc.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,uid,bloc,truth,prediction\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "point,{},{},{},{}",
                csv_field(&p.uid),
                csv_field(&p.bloc),
                p.truth,
                p.prediction
            );
        }
        for c in &self.centroids {
            let _ = writeln!(
                out,
                "centroid,,{},{},{}",
                csv_field(&c.bloc),
                c.truth,
                c.prediction
            );
        }
        out
    }
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.into()
    }
}

pub fn scatter_data(preds: &PredictionSet, records: &[MpRecord]) -> ScatterTable {
    let points: Vec<ScatterPoint> = matched(preds, records)
        .into_iter()
        .map(|(r, t, p)| ScatterPoint {
            uid: r.uid.clone(),
            bloc: r.bloc.clone(),
            truth: t,
            prediction: p,
        })
        .collect();
    let mut groups: BTreeMap<&str, Vec<&ScatterPoint>> = BTreeMap::new();
    for p in &points {
        groups.entry(&p.bloc).or_default().push(p);
    }
    let centroids = groups
        .into_iter()
        .map(|(bloc, ps)| Centroid {
            bloc: bloc.into(),
            truth: mean(ps.iter().map(|p| p.truth)).expect("non-empty group"),
            prediction: mean(ps.iter().map(|p| p.prediction)).expect("non-empty group"),
            n: ps.len(),
        })
        .collect();
    ScatterTable { points, centroids }
}

/// Rounds to `decimals` places, ties to even.
pub fn round_half_even(x: f64, decimals: u32) -> f64 {
    let scale = libm::pow(10.0, decimals as f64);
    let scaled = x * scale;
    let floor = libm::floor(scaled);
    let diff = scaled - floor;
    let round_up = diff > 0.5 || (diff == 0.5 && libm::fmod(floor, 2.0) != 0.0);
    let rounded = if round_up { floor + 1.0 } else { floor };
    rounded / scale
}

/// Text comparison table with one row per method: MAE, MSE, RMSE, rank
/// correlation (two decimals, ties to even), matched pairs and exclusions.
pub fn render_table(reports: &[EvalReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.method.chars().count())
        .chain(core::iter::once(6))
        .max()
        .unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>5}  {:>5}",
        "Method", "MAE", "MSE", "RMSE", "RC", "n", "excl"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6.2}  {:>6.2}  {:>6.2}  {:>6}  {:>5}  {:>5}",
            r.method,
            round_half_even(r.mae, 2),
            round_half_even(r.mse, 2),
            round_half_even(r.rmse, 2),
            match r.spearman {
                Some(rho) => format!("{:.2}", round_half_even(rho, 2)),
                None => "n/a".into(),
            },
            r.n,
            r.exclusions
        );
    }
    out
}
