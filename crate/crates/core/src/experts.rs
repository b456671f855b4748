//! Decision-stump experts trained offline on the whole dataset.
//!
//! Each stump looks at one feature. Candidate thresholds are `probes` evenly
//! spaced points on `[min, max]` of that feature (both endpoints included);
//! both polarities are tried and the pair with the lowest training error is
//! kept, ties going to the smaller threshold and then to polarity `+1`.
//!
//! Note that training on the full dataset means the experts have seen every
//! example the online learners will later be scored on.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::types::{Label, SparseVector};

pub const DEFAULT_PROBES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub dim_index: usize,
    pub threshold: f64,
    pub polarity: Label,
}

impl DecisionStump {
    pub fn predict(&self, x: &SparseVector) -> Label {
        stump_predict(self, x)
    }
}

/// `polarity` when `x[dim] >= threshold`, otherwise the opposite label.
pub fn stump_predict(s: &DecisionStump, x: &SparseVector) -> Label {
    if x.get(s.dim_index) >= s.threshold {
        s.polarity
    } else {
        s.polarity.flip()
    }
}

/// Fraction of `d` misclassified by `s`.
pub fn training_error(s: &DecisionStump, d: &Dataset) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    let wrong = d
        .examples
        .iter()
        .filter(|e| stump_predict(s, &e.features) != e.label)
        .count();
    wrong as f64 / d.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertPool {
    stumps: Vec<DecisionStump>,
}

impl ExpertPool {
    pub fn new(stumps: Vec<DecisionStump>) -> Result<Self> {
        if stumps.is_empty() {
            return Err(Error::Experts("pool must contain at least one expert".into()));
        }
        let mut seen = HashSet::new();
        for s in &stumps {
            if !seen.insert(s.dim_index) {
                return Err(Error::Experts(format!(
                    "dimension {} used by more than one stump",
                    s.dim_index
                )));
            }
        }
        Ok(Self { stumps })
    }

    pub fn stumps(&self) -> &[DecisionStump] {
        &self.stumps
    }

    pub fn len(&self) -> usize {
        self.stumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stumps.is_empty()
    }

    pub fn predict_into(&self, x: &SparseVector, out: &mut Vec<Label>) {
        out.clear();
        out.extend(self.stumps.iter().map(|s| stump_predict(s, x)));
    }

    pub fn predict_all(&self, x: &SparseVector) -> Vec<Label> {
        let mut out = Vec::with_capacity(self.len());
        self.predict_into(x, &mut out);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let pool: ExpertPool = serde_json::from_str(s)?;
        Self::new(pool.stumps)
    }
}

/// Evenly spaced probe thresholds on `[lo, hi]`, endpoints included.
pub fn probe_thresholds(lo: f64, hi: f64, probes: usize) -> Vec<f64> {
    let last = probes - 1;
    (0..probes)
        .map(|k| {
            if k == last {
                hi
            } else {
                lo + (hi - lo) * (k as f64 / last as f64)
            }
        })
        .collect()
}

fn column(d: &Dataset, dim: usize) -> Vec<(f64, Label)> {
    d.examples
        .iter()
        .map(|e| (e.features.get(dim), e.label))
        .collect()
}

fn range_of(col: &[(f64, Label)]) -> (f64, f64) {
    col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(v, _)| {
        (lo.min(v), hi.max(v))
    })
}

/// Best stump on a single feature, with its training error count.
/// Returns `None` when the feature is constant over `d`.
pub fn train_stump_on_dim(
    d: &Dataset,
    dim: usize,
    probes: usize,
) -> Option<(DecisionStump, usize)> {
    let mut col = column(d, dim);
    let (lo, hi) = range_of(&col);
    if !(hi > lo) {
        return None;
    }
    col.sort_by(|a, b| a.0.total_cmp(&b.0));
    // pos_below[k] / neg_below[k]: label counts among the k smallest values.
    let n = col.len();
    let mut pos_below = Vec::with_capacity(n + 1);
    let mut neg_below = Vec::with_capacity(n + 1);
    pos_below.push(0usize);
    neg_below.push(0usize);
    for &(_, label) in &col {
        let (p, q) = (*pos_below.last().unwrap(), *neg_below.last().unwrap());
        match label {
            Label::Pos => {
                pos_below.push(p + 1);
                neg_below.push(q);
            }
            Label::Neg => {
                pos_below.push(p);
                neg_below.push(q + 1);
            }
        }
    }
    let neg_total = neg_below[n];

    let mut best: Option<(DecisionStump, usize)> = None;
    for threshold in probe_thresholds(lo, hi, probes) {
        let k = col.partition_point(|&(v, _)| v < threshold);
        // Polarity +1 predicts Pos for x >= threshold.
        let err_pos = pos_below[k] + (neg_total - neg_below[k]);
        let err_neg = n - err_pos;
        for (polarity, err) in [(Label::Pos, err_pos), (Label::Neg, err_neg)] {
            if best.as_ref().is_none_or(|(_, e)| err < *e) {
                best = Some((
                    DecisionStump {
                        dim_index: dim,
                        threshold,
                        polarity,
                    },
                    err,
                ));
            }
        }
    }
    best
}

/// Trains `p` stumps on distinct, uniformly chosen (seeded) dimensions.
/// Constant dimensions are skipped and another dimension is drawn instead.
pub fn train_stumps(d: &Dataset, p: usize, probes: usize, seed: u64) -> Result<ExpertPool> {
    train_stumps_with(d, p, probes, seed, exec::PARALLEL_AVAILABLE)
}

pub fn train_stumps_with(
    d: &Dataset,
    p: usize,
    probes: usize,
    seed: u64,
    parallel: bool,
) -> Result<ExpertPool> {
    if p == 0 {
        return Err(Error::Experts("need at least one expert".into()));
    }
    if p > d.dim {
        return Err(Error::Experts(format!(
            "{p} experts requested but the data has only {} dimensions",
            d.dim
        )));
    }
    if probes < 2 {
        return Err(Error::Experts(format!("need at least 2 probes, got {probes}")));
    }
    if d.count_label(Label::Pos) == 0 || d.count_label(Label::Neg) == 0 {
        return Err(Error::Experts("training data must contain both classes".into()));
    }

    let mut order: Vec<usize> = (0..d.dim).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen = Vec::with_capacity(p);
    for dim in order {
        let (lo, hi) = range_of(&column(d, dim));
        if hi > lo {
            chosen.push(dim);
            if chosen.len() == p {
                break;
            }
        }
    }
    if chosen.len() < p {
        return Err(Error::Experts(format!(
            "only {} non-constant dimensions, {p} experts requested",
            chosen.len()
        )));
    }

    let stumps = exec::map_slice(parallel, &chosen, |_, &dim| {
        train_stump_on_dim(d, dim, probes)
            .map(|(s, _)| s)
            .expect("dimension checked non-constant")
    });
    ExpertPool::new(stumps)
}
