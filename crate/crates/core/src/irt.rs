//! One-dimensional two-parameter logistic IRT for roll-call votes.
//!
//! The probability that person `i` votes Yes on item `j` is
//! `logistic(a_j * (theta_i - b_j))`. Item parameters are estimated by
//! marginal maximum likelihood with EM: the latent trait is integrated out
//! over a quadrature rule for a standard-normal prior (which also fixes the
//! scale), the E-step computes each person's posterior weights over the
//! nodes, and the M-step fits each item by a weighted logistic regression on
//! the resulting expected counts. Person scores are posterior means (EAP).
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{abs, exp, ln, log_logistic, log_sum_exp, logistic, mean, probit, sqrt};
use crate::record::MpRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrtError {
    #[error("vote matrix has {cells} cells, expected {persons} x {items}")]
    Shape {
        persons: usize,
        items: usize,
        cells: usize,
    },
    #[error("no persons or no items left after screening")]
    Degenerate,
    #[error("fit did not converge; rescaling requires a converged fit")]
    NotConverged,
    #[error("neither anchor bloc ({left:?}, {right:?}) is present")]
    MissingAnchors { left: String, right: String },
    #[error("all latent traits are equal; cannot rescale")]
    FlatScale,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

/// Persons x items matrix of Yes (`Some(true)`), No (`Some(false)`) and
/// missing (`None`) responses, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteMatrix {
    persons: Vec<String>,
    items: Vec<String>,
    cells: Vec<Option<bool>>,
}

impl VoteMatrix {
    pub fn new(
        persons: Vec<String>,
        items: Vec<String>,
        cells: Vec<Option<bool>>,
    ) -> Result<Self, IrtError> {
        if cells.len() != persons.len() * items.len() {
            return Err(IrtError::Shape {
                persons: persons.len(),
                items: items.len(),
                cells: cells.len(),
            });
        }
        Ok(Self {
            persons,
            items,
            cells,
        })
    }

    pub fn persons(&self) -> &[String] {
        &self.persons
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn get(&self, person: usize, item: usize) -> Option<bool> {
        self.cells[person * self.items.len() + item]
    }

    pub fn row(&self, person: usize) -> &[Option<bool>] {
        let k = self.items.len();
        &self.cells[person * k..(person + 1) * k]
    }

    fn item_counts(&self, item: usize) -> (usize, usize) {
        let (mut yes, mut no) = (0, 0);
        for p in 0..self.persons.len() {
            match self.get(p, item) {
                Some(true) => yes += 1,
                Some(false) => no += 1,
                None => {}
            }
        }
        (yes, no)
    }

    fn select(&self, persons: &[usize], items: &[usize]) -> Self {
        let mut cells = Vec::with_capacity(persons.len() * items.len());
        for &p in persons {
            for &i in items {
                cells.push(self.get(p, i));
            }
        }
        Self {
            persons: persons.iter().map(|&p| self.persons[p].clone()).collect(),
            items: items.iter().map(|&i| self.items[i].clone()).collect(),
            cells,
        }
    }
}

/// What screening removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Screening {
    pub dropped_items: Vec<String>,
    pub dropped_persons: Vec<String>,
}

/// Repeatedly drops items lacking either a Yes or a No and persons with fewer
/// than `min_responses` non-missing cells, until both conditions hold.
pub fn screen(votes: &VoteMatrix, min_responses: usize) -> (VoteMatrix, Screening) {
    let mut current = votes.clone();
    let mut screening = Screening::default();
    loop {
        let keep_items: Vec<usize> = (0..current.items.len())
            .filter(|&i| {
                let (yes, no) = current.item_counts(i);
                yes > 0 && no > 0
            })
            .collect();
        let keep_persons: Vec<usize> = (0..current.persons.len())
            .filter(|&p| {
                keep_items
                    .iter()
                    .filter(|&&i| current.get(p, i).is_some())
                    .count()
                    >= min_responses
            })
            .collect();
        if keep_items.len() == current.items.len() && keep_persons.len() == current.persons.len() {
            return (current, screening);
        }
        for (i, id) in current.items.iter().enumerate() {
            if !keep_items.contains(&i) {
                log::warn!("dropping vote {id}: no variation among responses");
                screening.dropped_items.push(id.clone());
            }
        }
        for (p, id) in current.persons.iter().enumerate() {
            if !keep_persons.contains(&p) {
                log::warn!("dropping person {id}: fewer than {min_responses} responses");
                screening.dropped_persons.push(id.clone());
            }
        }
        current = current.select(&keep_persons, &keep_items);
    }
}

/// Quadrature for the standard-normal latent prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Quadrature {
    /// Equally spaced nodes on `[lo, hi]` weighted by the normal density.
    Grid { points: usize, lo: f64, hi: f64 },
    /// Gauss-Hermite nodes rescaled to the standard normal.
    GaussHermite { points: usize },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Grid {
            points: 61,
            lo: -6.0,
            hi: 6.0,
        }
    }
}

/// Nodes and weights; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn rule(&self) -> Result<QuadratureRule, IrtError> {
        match *self {
            Quadrature::Grid { points, lo, hi } => {
                if points < 2 || lo.partial_cmp(&hi) != Some(core::cmp::Ordering::Less) {
                    return Err(IrtError::Config("grid needs >= 2 points and lo < hi"));
                }
                let step = (hi - lo) / (points - 1) as f64;
                let nodes: Vec<f64> = (0..points).map(|k| lo + step * k as f64).collect();
                let dens: Vec<f64> = nodes.iter().map(|x| exp(-0.5 * x * x)).collect();
                let total: f64 = dens.iter().sum();
                Ok(QuadratureRule {
                    weights: dens.iter().map(|d| d / total).collect(),
                    nodes,
                })
            }
            Quadrature::GaussHermite { points } => {
                if points < 1 {
                    return Err(IrtError::Config("Gauss-Hermite needs >= 1 point"));
                }
                Ok(gauss_hermite_normal(points))
            }
        }
    }
}

/// Gauss-Hermite rule for weight `exp(-x^2)` by Newton iteration on the
/// orthonormal Hermite recurrence, mapped to the standard normal
/// (`theta = sqrt(2) x`, `w / sqrt(pi)`).
fn gauss_hermite_normal(n: usize) -> QuadratureRule {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => sqrt(2.0 * nf + 1.0) - 1.85575 * libm::pow(2.0 * nf + 1.0, -1.0 / 6.0),
            1 => z - 1.14 * libm::pow(nf, 0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * sqrt(2.0 / (jf + 1.0)) * p2 - sqrt(jf / (jf + 1.0)) * p3;
            }
            pp = sqrt(2.0 * nf) * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if abs(z - z1) <= 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let sqrt_pi = sqrt(core::f64::consts::PI);
    let mut pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(&w)
        .map(|(xi, wi)| (core::f64::consts::SQRT_2 * xi, wi / sqrt_pi))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrtConfig {
    pub quadrature: Quadrature,
    pub max_iter: usize,
    /// Convergence threshold on the largest absolute change of any slope or
    /// intercept between EM iterations.
    pub tol: f64,
    /// Bound on |a|.
    pub a_cap: f64,
    pub min_responses: usize,
    /// Start from negated discriminations (selects the mirrored solution).
    pub mirror: bool,
    /// SQUAREM extrapolation between EM updates, with a fallback to the plain
    /// update whenever the extrapolated point has lower likelihood.
    #[serde(default = "default_accelerate")]
    pub accelerate: bool,
}

fn default_accelerate() -> bool {
    true
}

impl Default for IrtConfig {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::default(),
            max_iter: 500,
            tol: 1e-4,
            a_cap: 25.0,
            min_responses: 20,
            mirror: false,
            accelerate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrtParams {
    /// Per-item discrimination.
    pub a: Vec<f64>,
    /// Per-item difficulty.
    pub b: Vec<f64>,
    /// Per-person latent trait.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrtFit {
    pub persons: Vec<String>,
    pub items: Vec<String>,
    pub params: IrtParams,
    /// Posterior standard deviation of each person's trait.
    pub theta_sd: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Marginal log-likelihood at the start of every iteration, followed by
    /// the value at the final parameters.
    pub trace: Vec<f64>,
    pub screening: Screening,
    /// Scores on the 0 (right) to 10 (left) scale, filled by rescaling.
    #[serde(default)]
    pub rescaled: BTreeMap<String, f64>,
}

pub fn response_probability(theta: f64, a: f64, b: f64) -> f64 {
    logistic(a * (theta - b))
}

/// Expected counts for one item at each quadrature node: `n` persons who
/// answered and `r` of them answering Yes, both posterior-weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemCounts {
    pub n: Vec<f64>,
    pub r: Vec<f64>,
}

/// M-step objective for one item: expected complete-data log-likelihood.
pub fn expected_item_loglik(a: f64, b: f64, nodes: &[f64], counts: &ItemCounts) -> f64 {
    loglik_slope_intercept(a, -a * b, nodes, counts)
}

/// Gradient of [`expected_item_loglik`] with respect to `(a, b)`.
pub fn expected_item_gradient(a: f64, b: f64, nodes: &[f64], counts: &ItemCounts) -> [f64; 2] {
    let (mut ga, mut gb) = (0.0, 0.0);
    for (q, &t) in nodes.iter().enumerate() {
        let resid = counts.r[q] - counts.n[q] * response_probability(t, a, b);
        ga += resid * (t - b);
        gb -= resid * a;
    }
    [ga, gb]
}

fn loglik_slope_intercept(a: f64, d: f64, nodes: &[f64], counts: &ItemCounts) -> f64 {
    let mut ll = 0.0;
    for (q, &t) in nodes.iter().enumerate() {
        let z = a * t + d;
        let (r, n) = (counts.r[q], counts.n[q]);
        if r > 0.0 {
            ll += r * log_logistic(z);
        }
        if n - r > 0.0 {
            ll += (n - r) * log_logistic(-z);
        }
    }
    ll
}

/// Maximizes the item objective over `(a, d)` with damped Newton steps,
/// `|a| <= a_cap`. Only improving steps are accepted.
fn m_step_item(a0: f64, d0: f64, nodes: &[f64], counts: &ItemCounts, a_cap: f64) -> (f64, f64) {
    let (mut a, mut d) = (a0, d0);
    let mut current = loglik_slope_intercept(a, d, nodes, counts);
    for _ in 0..50 {
        let (mut ga, mut gd) = (0.0, 0.0);
        let (mut haa, mut had, mut hdd) = (0.0, 0.0, 0.0);
        for (q, &t) in nodes.iter().enumerate() {
            let p = logistic(a * t + d);
            let resid = counts.r[q] - counts.n[q] * p;
            let w = counts.n[q] * p * (1.0 - p);
            ga += resid * t;
            gd += resid;
            haa += w * t * t;
            had += w * t;
            hdd += w;
        }
        haa += 1e-9;
        hdd += 1e-9;
        let det = haa * hdd - had * had;
        if !(det > 0.0) {
            break;
        }
        let step_a = (hdd * ga - had * gd) / det;
        let step_d = (haa * gd - had * ga) / det;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let na = (a + scale * step_a).clamp(-a_cap, a_cap);
            let nd = d + scale * step_d;
            let ll = loglik_slope_intercept(na, nd, nodes, counts);
            if ll >= current {
                let moved = abs(na - a).max(abs(nd - d));
                a = na;
                d = nd;
                current = ll;
                accepted = moved > 0.0;
                if moved < 1e-10 {
                    return (a, d);
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (a, d)
}

struct EStep {
    log_likelihood: f64,
    counts: Vec<ItemCounts>,
    theta: Vec<f64>,
    theta_sd: Vec<f64>,
}

fn e_step(votes: &VoteMatrix, rule: &QuadratureRule, a: &[f64], d: &[f64]) -> EStep {
    let q = rule.nodes.len();
    let k = votes.items.len();
    let mut log_yes = vec![0.0; k * q];
    let mut log_no = vec![0.0; k * q];
    for j in 0..k {
        for (m, &t) in rule.nodes.iter().enumerate() {
            let z = a[j] * t + d[j];
            log_yes[j * q + m] = log_logistic(z);
            log_no[j * q + m] = log_logistic(-z);
        }
    }
    let log_prior: Vec<f64> = rule.weights.iter().map(|&w| ln(w)).collect();
    let mut counts: Vec<ItemCounts> = (0..k)
        .map(|_| ItemCounts {
            n: vec![0.0; q],
            r: vec![0.0; q],
        })
        .collect();
    let mut total = 0.0;
    let mut theta = Vec::with_capacity(votes.persons.len());
    let mut theta_sd = Vec::with_capacity(votes.persons.len());
    let mut post = vec![0.0; q];
    for p in 0..votes.persons.len() {
        post.copy_from_slice(&log_prior);
        for (j, cell) in votes.row(p).iter().enumerate() {
            let table = match cell {
                Some(true) => &log_yes,
                Some(false) => &log_no,
                None => continue,
            };
            for (slot, lp) in post.iter_mut().zip(&table[j * q..(j + 1) * q]) {
                *slot += lp;
            }
        }
        let marginal = log_sum_exp(&post);
        total += marginal;
        for slot in post.iter_mut() {
            *slot = exp(*slot - marginal);
        }
        let m1: f64 = post.iter().zip(&rule.nodes).map(|(w, t)| w * t).sum();
        let m2: f64 = post.iter().zip(&rule.nodes).map(|(w, t)| w * t * t).sum();
        theta.push(m1);
        theta_sd.push(sqrt((m2 - m1 * m1).max(0.0)));
        for (j, cell) in votes.row(p).iter().enumerate() {
            let Some(yes) = cell else { continue };
            let c = &mut counts[j];
            for (m, w) in post.iter().enumerate() {
                c.n[m] += w;
                if *yes {
                    c.r[m] += w;
                }
            }
        }
    }
    EStep {
        log_likelihood: total,
        counts,
        theta,
        theta_sd,
    }
}

/// Starting values: standardized Yes-share per person, `b` from the probit of
/// each item's Yes rate, `|a| = 1` signed by the item's correlation with the
/// standardized row score (negated when `mirror` is set).
fn initial_values(votes: &VoteMatrix, mirror: bool) -> (Vec<f64>, Vec<f64>) {
    let n = votes.persons.len();
    let k = votes.items.len();
    let row_score: Vec<f64> = (0..n)
        .map(|p| {
            let row = votes.row(p);
            let answered = row.iter().filter(|c| c.is_some()).count().max(1);
            row.iter().filter(|c| **c == Some(true)).count() as f64 / answered as f64
        })
        .collect();
    let mu = mean(row_score.iter().copied()).unwrap_or(0.0);
    let sd = sqrt(mean(row_score.iter().map(|s| (s - mu) * (s - mu))).unwrap_or(0.0));
    let z: Vec<f64> = row_score
        .iter()
        .map(|s| if sd > 0.0 { (s - mu) / sd } else { 0.0 })
        .collect();
    let flip = if mirror { -1.0 } else { 1.0 };
    let mut a = Vec::with_capacity(k);
    let mut d = Vec::with_capacity(k);
    for j in 0..k {
        let (yes, no) = votes.item_counts(j);
        let rate = yes as f64 / (yes + no).max(1) as f64;
        let b = -probit(rate);
        let cov: f64 = (0..n)
            .filter_map(|p| {
                votes
                    .get(p, j)
                    .map(|y| (if y { 1.0 } else { 0.0 } - rate) * z[p])
            })
            .sum();
        let aj = flip * if cov < 0.0 { -1.0 } else { 1.0 };
        a.push(aj);
        d.push(-aj * b);
    }
    (a, d)
}

/// One SQUAREM extrapolation from `p0` through two EM updates `p1`, `p2`.
/// The step length is halved towards the plain double update until the
/// likelihood is at least that of `p1`, falling back to `p2`.
fn squarem_step(
    votes: &VoteMatrix,
    rule: &QuadratureRule,
    a: [&[f64]; 3],
    d: [&[f64]; 3],
    floor: f64,
    a_cap: f64,
) -> (Vec<f64>, Vec<f64>, EStep) {
    let k = a[0].len();
    let r: Vec<f64> = (0..k)
        .flat_map(|j| [a[1][j] - a[0][j], d[1][j] - d[0][j]])
        .collect();
    let v: Vec<f64> = (0..k)
        .flat_map(|j| {
            [
                a[2][j] - 2.0 * a[1][j] + a[0][j],
                d[2][j] - 2.0 * d[1][j] + d[0][j],
            ]
        })
        .collect();
    let norm = |x: &[f64]| sqrt(x.iter().map(|y| y * y).sum());
    let (nr, nv) = (norm(&r), norm(&v));
    let mut alpha = if nv > 0.0 { (-nr / nv).min(-1.0) } else { -1.0 };
    loop {
        if alpha >= -1.0 {
            let e = e_step(votes, rule, a[2], d[2]);
            return (a[2].to_vec(), d[2].to_vec(), e);
        }
        let mut na = Vec::with_capacity(k);
        let mut nd = Vec::with_capacity(k);
        for j in 0..k {
            let (ra, rd) = (r[2 * j], r[2 * j + 1]);
            let (va, vd) = (v[2 * j], v[2 * j + 1]);
            na.push((a[0][j] - 2.0 * alpha * ra + alpha * alpha * va).clamp(-a_cap, a_cap));
            nd.push(d[0][j] - 2.0 * alpha * rd + alpha * alpha * vd);
        }
        if na.iter().chain(&nd).all(|x| x.is_finite()) {
            let e = e_step(votes, rule, &na, &nd);
            if e.log_likelihood >= floor {
                return (na, nd, e);
            }
        }
        alpha = (alpha - 1.0) / 2.0;
        if alpha > -1.0 + 1e-3 {
            alpha = -1.0;
        }
    }
}

/// Fits the 2PL model by MML-EM. Items and persons violating the screening
/// rules are dropped first and listed in the result.
pub fn fit_2pl(votes: &VoteMatrix, config: &IrtConfig) -> Result<IrtFit, IrtError> {
    if !(config.a_cap > 0.0) || !(config.tol > 0.0) {
        return Err(IrtError::Config("a_cap and tol must be positive"));
    }
    let rule = config.quadrature.rule()?;
    let (votes, screening) = screen(votes, config.min_responses);
    if votes.persons.is_empty() || votes.items.is_empty() {
        return Err(IrtError::Degenerate);
    }
    let (mut a, mut d) = initial_values(&votes, config.mirror);
    for aj in a.iter_mut() {
        *aj = aj.clamp(-config.a_cap, config.a_cap);
    }
    let em = |a: &[f64], d: &[f64], e: &EStep| -> (Vec<f64>, Vec<f64>, f64) {
        let mut na = Vec::with_capacity(a.len());
        let mut nd = Vec::with_capacity(d.len());
        let mut change: f64 = 0.0;
        for (j, counts) in e.counts.iter().enumerate() {
            let (aj, dj) = m_step_item(a[j], d[j], &rule.nodes, counts, config.a_cap);
            change = change.max(abs(aj - a[j])).max(abs(dj - d[j]));
            na.push(aj);
            nd.push(dj);
        }
        (na, nd, change)
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut current = e_step(&votes, &rule, &a, &d);
    while iterations < config.max_iter {
        trace.push(current.log_likelihood);
        let (a1, d1, change) = em(&a, &d, &current);
        iterations += 1;
        if change < config.tol {
            a = a1;
            d = d1;
            converged = true;
            break;
        }
        let e1 = e_step(&votes, &rule, &a1, &d1);
        if !config.accelerate || iterations >= config.max_iter {
            (a, d, current) = (a1, d1, e1);
            continue;
        }
        let (a2, d2, _) = em(&a1, &d1, &e1);
        iterations += 1;
        let (next_a, next_d, next_e) = squarem_step(
            &votes,
            &rule,
            [&a, &a1, &a2],
            [&d, &d1, &d2],
            e1.log_likelihood,
            config.a_cap,
        );
        a = next_a;
        d = next_d;
        current = next_e;
    }
    let last = e_step(&votes, &rule, &a, &d);
    trace.push(last.log_likelihood);
    if !converged {
        log::warn!("2PL fit stopped after {iterations} iterations without converging");
    }
    let b = a.iter().zip(&d).map(|(aj, dj)| -dj / aj).collect();
    Ok(IrtFit {
        persons: votes.persons.clone(),
        items: votes.items.clone(),
        params: IrtParams {
            a,
            b,
            theta: last.theta,
        },
        theta_sd: last.theta_sd,
        log_likelihood: last.log_likelihood,
        iterations,
        converged,
        trace,
        screening,
        rescaled: BTreeMap::new(),
    })
}

/// Blocs that fix the orientation of the rescaled scale: the left anchor
/// must end up with the higher mean score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlocAnchors {
    pub left: String,
    pub right: String,
}

impl Default for BlocAnchors {
    fn default() -> Self {
        Self {
            left: "Social Democrats".into(),
            right: "SVP".into(),
        }
    }
}

/// Maps EAP traits onto `[0, 10]` (0 = right, 10 = left): the sign is chosen
/// so the left anchor bloc's mean exceeds the right anchor bloc's, then
/// min-max scaled. With only one anchor present it is compared against all
/// other fitted persons.
pub fn rescale_scores(
    fit: &IrtFit,
    records: &[MpRecord],
    anchors: &BlocAnchors,
) -> Result<BTreeMap<String, f64>, IrtError> {
    if !fit.converged {
        return Err(IrtError::NotConverged);
    }
    let bloc_of: BTreeMap<&str, &str> = records
        .iter()
        .map(|r| (r.uid.as_str(), r.bloc.as_str()))
        .collect();
    let theta = &fit.params.theta;
    let group_mean = |pred: &dyn Fn(Option<&str>) -> bool| {
        mean(
            fit.persons
                .iter()
                .zip(theta)
                .filter(|(uid, _)| pred(bloc_of.get(uid.as_str()).copied()))
                .map(|(_, t)| *t),
        )
    };
    let left = group_mean(&|b| b == Some(anchors.left.as_str()));
    let right = group_mean(&|b| b == Some(anchors.right.as_str()));
    let (hi, lo) = match (left, right) {
        (Some(l), Some(r)) => (l, r),
        (Some(l), None) => (
            l,
            group_mean(&|b| b != Some(anchors.left.as_str())).unwrap_or(l),
        ),
        (None, Some(r)) => (
            group_mean(&|b| b != Some(anchors.right.as_str())).unwrap_or(r),
            r,
        ),
        (None, None) => {
            return Err(IrtError::MissingAnchors {
                left: anchors.left.clone(),
                right: anchors.right.clone(),
            })
        }
    };
    let sign = if hi >= lo { 1.0 } else { -1.0 };
    let oriented: Vec<f64> = theta.iter().map(|t| sign * t).collect();
    let min = oriented.iter().copied().fold(f64::INFINITY, f64::min);
    let max = oriented.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(IrtError::FlatScale);
    }
    Ok(fit
        .persons
        .iter()
        .zip(&oriented)
        .map(|(uid, t)| {
            (
                uid.clone(),
                (10.0 * ((t - min) / (max - min))).clamp(0.0, 10.0),
            )
        })
        .collect())
}

/// Draws every cell as Bernoulli(response_probability) from a ChaCha8 stream
/// seeded with `seed`. Persons are named `p0000..`, items `v0000..`.
pub fn simulate_responses(params: &IrtParams, seed: u64) -> VoteMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = params.a.len();
    let mut cells = Vec::with_capacity(params.theta.len() * k);
    for &t in &params.theta {
        for j in 0..k {
            let p = response_probability(t, params.a[j], params.b[j]);
            cells.push(Some(rng.random::<f64>() < p));
        }
    }
    VoteMatrix {
        persons: (0..params.theta.len())
            .map(|i| alloc::format!("p{i:04}"))
            .collect(),
        items: (0..k).map(|j| alloc::format!("v{j:04}")).collect(),
        cells,
    }
}

/// Random parameters: `a ~ LogNormal(0, a_log_sd)`, `b ~ N(0, 1)`,
/// `theta ~ N(0, 1)`.
pub fn simulate_params(persons: usize, items: usize, a_log_sd: f64, seed: u64) -> IrtParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lognormal = LogNormal::new(0.0, a_log_sd).expect("finite sd");
    let a = (0..items).map(|_| lognormal.sample(&mut rng)).collect();
    let b = (0..items)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let theta = (0..persons)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    IrtParams { a, b, theta }
}
