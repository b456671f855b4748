//! Weighted-majority family over a shared pool of experts.
//!
//! Every agent keeps one weight per expert, initialized to 1. A round is:
//! vote with the previous weights, multiply the weight of every mistaken
//! expert by `alpha`, then replace each weight with the mean of the
//! penalized weights over the agent's neighborhood. Imitation uses the
//! geometric mean, averaging uses the arithmetic mean, and isolated agents
//! skip the merge (classic single-agent weighted majority).
//!
//! Weights are never renormalized, so for very long runs the weights of bad
//! experts can underflow to zero.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::experts::ExpertPool;
use crate::topology::Topology;
use crate::types::{Label, LabeledExample};

/// How penalized weights are combined across a neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeRule {
    /// No communication; each agent keeps its own penalized weights.
    Isolated,
    /// Geometric mean (imitation).
    Geometric,
    /// Arithmetic mean (averaging).
    Arithmetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwmConfig {
    pub alpha: f64,
    pub n_agents: usize,
    pub pool: ExpertPool,
    pub randomized: bool,
}

impl DwmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.n_agents == 0 {
            return Err(Error::Config("need at least one agent".into()));
        }
        Ok(())
    }
}

/// `N x P` expert weights, row `i` belonging to agent `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwmWeights {
    n_agents: usize,
    n_experts: usize,
    w: Vec<f64>,
}

impl DwmWeights {
    pub fn new(n_agents: usize, n_experts: usize) -> Self {
        Self {
            n_agents,
            n_experts,
            w: vec![1.0; n_agents * n_experts],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_agents = rows.len();
        let n_experts = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_experts) {
            return Err(Error::LengthMismatch {
                expected: n_experts,
                got: bad.len(),
            });
        }
        Ok(Self {
            n_agents,
            n_experts,
            w: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_experts(&self) -> usize {
        self.n_experts
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n_experts..(i + 1) * self.n_experts]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.w.chunks(self.n_experts.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// `+1` when the weight behind `+1` is at least the weight behind `-1`.
pub fn vote(weights: &[f64], predictions: &[Label]) -> Label {
    debug_assert_eq!(weights.len(), predictions.len());
    let (mut pos, mut neg) = (0.0, 0.0);
    for (w, p) in weights.iter().zip(predictions) {
        match p {
            Label::Pos => pos += w,
            Label::Neg => neg += w,
        }
    }
    Label::from_sign(pos >= neg)
}

pub fn penalize_in_place(weights: &mut [f64], predictions: &[Label], label: Label, alpha: f64) {
    for (w, p) in weights.iter_mut().zip(predictions) {
        if *p != label {
            *w *= alpha;
        }
    }
}

pub fn penalize(weights: &[f64], predictions: &[Label], label: Label, alpha: f64) -> Vec<f64> {
    let mut out = weights.to_vec();
    penalize_in_place(&mut out, predictions, label, alpha);
    out
}

/// Geometric mean computed from log-differences against the first value,
/// which makes a singleton (or a list of equal values) come back unchanged.
pub fn geometric_mean<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut it = values.into_iter();
    let first = it.next().expect("geometric mean of an empty set");
    if first == 0.0 {
        return 0.0;
    }
    let l0 = first.ln();
    let (mut acc, mut n) = (0.0, 1usize);
    for v in it {
        acc += v.ln() - l0;
        n += 1;
    }
    first * (acc / n as f64).exp()
}

/// Arithmetic mean as `first + mean(v - first)`; exact for equal values.
pub fn arithmetic_mean<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut it = values.into_iter();
    let first = it.next().expect("arithmetic mean of an empty set");
    let (mut acc, mut n) = (0.0, 1usize);
    for v in it {
        acc += v - first;
        n += 1;
    }
    first + acc / n as f64
}

fn merge_with(
    penalized: &DwmWeights,
    topology: &Topology,
    rule: MergeRule,
    parallel: bool,
) -> Result<DwmWeights> {
    let n = penalized.n_agents;
    if topology.n_agents() != n {
        return Err(Error::LengthMismatch {
            expected: topology.n_agents(),
            got: n,
        });
    }
    if rule == MergeRule::Isolated {
        return Ok(penalized.clone());
    }
    let neighborhoods = (0..n)
        .map(|i| topology.neighborhood(i))
        .collect::<Result<Vec<_>>>()?;
    let p = penalized.n_experts;
    let rows = exec::map_range(parallel, n, |i| {
        let nb = &neighborhoods[i];
        (0..p)
            .map(|e| {
                let column = nb.iter().map(|&j| penalized.w[j * p + e]);
                match rule {
                    MergeRule::Geometric => geometric_mean(column),
                    MergeRule::Arithmetic => arithmetic_mean(column),
                    MergeRule::Isolated => unreachable!(),
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(DwmWeights {
        n_agents: n,
        n_experts: p,
        w: rows.into_iter().flatten().collect(),
    })
}

/// Imitation merge: geometric mean over each agent's neighborhood.
pub fn dwm_i_merge(penalized: &DwmWeights, topology: &Topology) -> Result<DwmWeights> {
    merge_with(penalized, topology, MergeRule::Geometric, false)
}

/// Averaging merge: arithmetic mean over each agent's neighborhood.
pub fn dwm_a_merge(penalized: &DwmWeights, topology: &Topology) -> Result<DwmWeights> {
    merge_with(penalized, topology, MergeRule::Arithmetic, false)
}

/// Draws expert `p` with probability `w_p / sum(w)`.
pub fn rwm_choose<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (p, &w) in weights.iter().enumerate() {
        if u < w {
            return p;
        }
        u -= w;
    }
    // u landed on the upper edge through rounding
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Probability that a draw from `rwm_choose` picks a mistaken expert.
pub fn expected_mistake(weights: &[f64], predictions: &[Label], label: Label) -> f64 {
    let total: f64 = weights.iter().sum();
    let wrong: f64 = weights
        .iter()
        .zip(predictions)
        .filter(|(_, p)| **p != label)
        .map(|(w, _)| w)
        .sum();
    wrong / total
}

/// Per-agent generator: one ChaCha stream per agent under the master seed,
/// so adding agents never changes the draws of existing ones.
pub fn agent_rng(master_seed: u64, agent: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(agent as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwmRound {
    pub predictions: Vec<Label>,
    pub mistakes: Vec<bool>,
    /// Probability of a mistake under the randomized rule; equals the
    /// mistake flag for the deterministic vote.
    pub expected_mistakes: Vec<f64>,
    /// `expert_predictions[i][p]`: advice of expert `p` on agent `i`'s example.
    pub expert_predictions: Vec<Vec<Label>>,
    pub weights: DwmWeights,
}

/// One synchronous round: predict with the previous weights, penalize, merge.
///
/// `rngs` must hold one generator per agent when `cfg.randomized` is set and
/// is ignored otherwise.
pub fn dwm_round(
    state: &DwmWeights,
    examples: &[&LabeledExample],
    cfg: &DwmConfig,
    topology: &Topology,
    rule: MergeRule,
    rngs: &mut [ChaCha8Rng],
    parallel: bool,
) -> Result<DwmRound> {
    let n = state.n_agents;
    if examples.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: examples.len(),
        });
    }
    if state.n_experts != cfg.pool.len() {
        return Err(Error::LengthMismatch {
            expected: cfg.pool.len(),
            got: state.n_experts,
        });
    }
    if cfg.randomized && rngs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rngs.len(),
        });
    }

    struct Local {
        prediction: Label,
        expected: f64,
        advice: Vec<Label>,
        penalized: Vec<f64>,
    }

    let local_step = |i: usize, rng: Option<&mut ChaCha8Rng>| {
        let ex = examples[i];
        let row = state.row(i);
        let advice = cfg.pool.predict_all(&ex.features);
        let (prediction, expected) = match rng {
            Some(rng) => {
                let p = rwm_choose(row, rng);
                (advice[p], expected_mistake(row, &advice, ex.label))
            }
            None => {
                let pred = vote(row, &advice);
                (pred, if pred != ex.label { 1.0 } else { 0.0 })
            }
        };
        let penalized = penalize(row, &advice, ex.label, cfg.alpha);
        Local {
            prediction,
            expected,
            advice,
            penalized,
        }
    };

    let locals: Vec<Local> = if cfg.randomized {
        exec::map_mut(parallel, rngs, |i, rng| local_step(i, Some(rng)))
    } else {
        exec::map_range(parallel, n, |i| local_step(i, None))
    };

    // barrier: every agent has penalized before anyone merges
    let penalized = DwmWeights {
        n_agents: n,
        n_experts: state.n_experts,
        w: locals.iter().flat_map(|l| l.penalized.iter().copied()).collect(),
    };
    let weights = merge_with(&penalized, topology, rule, parallel)?;

    let mut out = DwmRound {
        predictions: Vec::with_capacity(n),
        mistakes: Vec::with_capacity(n),
        expected_mistakes: Vec::with_capacity(n),
        expert_predictions: Vec::with_capacity(n),
        weights,
    };
    for (local, ex) in locals.into_iter().zip(examples) {
        out.mistakes.push(local.prediction != ex.label);
        out.predictions.push(local.prediction);
        out.expected_mistakes.push(local.expected);
        out.expert_predictions.push(local.advice);
    }
    Ok(out)
}

/// Textbook single-agent weighted majority, kept deliberately separate from
/// the distributed code path so it can serve as a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Wma {
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub mistakes: u64,
}

impl Wma {
    pub fn new(n_experts: usize, alpha: f64) -> Self {
        Self {
            weights: vec![1.0; n_experts],
            alpha,
            mistakes: 0,
        }
    }

    pub fn predict(&self, advice: &[Label]) -> Label {
        let mut pos = 0.0;
        let mut neg = 0.0;
        for p in 0..self.weights.len() {
            if advice[p] == Label::Pos {
                pos += self.weights[p];
            } else {
                neg += self.weights[p];
            }
        }
        if pos >= neg {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    /// Predicts, records a mistake if any, and penalizes wrong experts.
    pub fn step(&mut self, advice: &[Label], label: Label) -> Label {
        let pred = self.predict(advice);
        if pred != label {
            self.mistakes += 1;
        }
        for p in 0..self.weights.len() {
            if advice[p] != label {
                self.weights[p] *= self.alpha;
            }
        }
        pred
    }
}
