//! Round-synchronous multi-agent simulator.
//!
//! Every round each agent predicts on its next example with the parameters
//! left by the previous merge, computes its local update, and then (after
//! all agents are done) replaces its parameters with a merge over its
//! neighborhood. Per-agent work may run on the rayon pool; merges reduce in
//! ascending agent order, so parallel and sequential runs agree bit for bit.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{partition_indices, Dataset, PartitionPlan, PartitionStrategy};
use crate::dwm::{agent_rng, dwm_round, DwmConfig, DwmWeights, MergeRule};
use crate::error::{Error, Result};
use crate::exec;
use crate::omd::{eta, OmdConfig, OmdVariant};
use crate::topology::Topology;
use crate::types::{Label, LabeledExample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Wma,
    Rwm,
    DwmI,
    DwmA,
    Drwm,
    Ogd,
    Eg,
    Dogd,
    Doeg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Wma,
        Algorithm::Rwm,
        Algorithm::DwmI,
        Algorithm::DwmA,
        Algorithm::Drwm,
        Algorithm::Ogd,
        Algorithm::Eg,
        Algorithm::Dogd,
        Algorithm::Doeg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Wma => "wma",
            Algorithm::Rwm => "rwm",
            Algorithm::DwmI => "dwm-i",
            Algorithm::DwmA => "dwm-a",
            Algorithm::Drwm => "drwm",
            Algorithm::Ogd => "ogd",
            Algorithm::Eg => "eg",
            Algorithm::Dogd => "dogd",
            Algorithm::Doeg => "doeg",
        }
    }

    pub fn is_weighted_majority(self) -> bool {
        matches!(
            self,
            Algorithm::Wma | Algorithm::Rwm | Algorithm::DwmI | Algorithm::DwmA | Algorithm::Drwm
        )
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Algorithm::Rwm | Algorithm::Drwm)
    }

    /// Whether agents communicate. The single-agent algorithms run every
    /// agent in isolation when `N > 1`.
    pub fn is_distributed(self) -> bool {
        matches!(
            self,
            Algorithm::DwmI | Algorithm::DwmA | Algorithm::Drwm | Algorithm::Dogd | Algorithm::Doeg
        )
    }

    pub fn merge_rule(self) -> MergeRule {
        match self {
            Algorithm::DwmI | Algorithm::Drwm | Algorithm::Doeg => MergeRule::Geometric,
            Algorithm::DwmA | Algorithm::Dogd => MergeRule::Arithmetic,
            _ => MergeRule::Isolated,
        }
    }

    pub fn omd_variant(self) -> Option<OmdVariant> {
        match self {
            Algorithm::Ogd | Algorithm::Dogd => Some(OmdVariant::Ogd),
            Algorithm::Eg | Algorithm::Doeg => Some(OmdVariant::Eg),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlgorithmConfig {
    Dwm(DwmConfig),
    Omd(OmdConfig),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    pub topology: Topology,
    pub n_rounds: usize,
    pub dataset: Arc<Dataset>,
    pub partition: PartitionStrategy,
    pub config: AlgorithmConfig,
    /// Master seed for the per-agent generators of the randomized rules.
    pub seed: u64,
    pub parallel: bool,
    /// Keep every agent's parameters after every round.
    pub record_params: bool,
}

impl ExperimentSpec {
    /// Round-robin partition, parallel when available, no parameter history.
    pub fn new(
        algorithm: Algorithm,
        topology: Topology,
        n_rounds: usize,
        dataset: Arc<Dataset>,
        config: AlgorithmConfig,
        seed: u64,
    ) -> Self {
        Self {
            algorithm,
            topology,
            n_rounds,
            dataset,
            partition: PartitionStrategy::RoundRobin,
            config,
            seed,
            parallel: exec::PARALLEL_AVAILABLE,
            record_params: false,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.topology.n_agents()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_agents();
        if self.n_rounds == 0 {
            return Err(Error::Config("need at least one round".into()));
        }
        match (&self.config, self.algorithm.omd_variant()) {
            (AlgorithmConfig::Dwm(cfg), None) => {
                cfg.validate()?;
                if cfg.n_agents != n {
                    return Err(Error::Config(format!(
                        "config is for {} agents, topology has {n}",
                        cfg.n_agents
                    )));
                }
                if cfg.randomized != self.algorithm.is_randomized() {
                    return Err(Error::Config(format!(
                        "`randomized` does not match algorithm {}",
                        self.algorithm
                    )));
                }
                if cfg.pool.is_empty() {
                    return Err(Error::Config("empty expert pool".into()));
                }
            }
            (AlgorithmConfig::Omd(cfg), Some(variant)) => {
                cfg.validate()?;
                if cfg.n_agents != n {
                    return Err(Error::Config(format!(
                        "config is for {} agents, topology has {n}",
                        cfg.n_agents
                    )));
                }
                if cfg.variant != variant {
                    return Err(Error::Config(format!(
                        "config variant {:?} does not match algorithm {}",
                        cfg.variant, self.algorithm
                    )));
                }
            }
            _ => {
                return Err(Error::Config(format!(
                    "configuration family does not match algorithm {}",
                    self.algorithm
                )))
            }
        }
        Ok(())
    }

    /// Example indices of each agent's stream, truncated to `n_rounds`.
    pub fn streams(&self) -> Result<Vec<Vec<usize>>> {
        let plan = PartitionPlan::new(self.partition, self.n_agents());
        let mut streams = partition_indices(self.dataset.len(), &plan)?;
        for (agent, s) in streams.iter_mut().enumerate() {
            if s.len() < self.n_rounds {
                return Err(Error::StreamExhausted {
                    agent,
                    available: s.len(),
                    required: self.n_rounds,
                });
            }
            s.truncate(self.n_rounds);
        }
        Ok(streams)
    }

    fn round_examples<'a>(&'a self, streams: &[Vec<usize>], t: usize) -> Vec<&'a LabeledExample> {
        streams
            .iter()
            .map(|s| &self.dataset.examples[s[t]])
            .collect()
    }
}

/// Expert instrumentation of a weighted-majority run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertMetrics {
    /// `round_mistakes[t][p]`: agents on which expert `p` erred in round `t`.
    pub round_mistakes: Vec<Vec<u64>>,
    /// Mistakes of each expert over all agents and rounds.
    pub totals: Vec<u64>,
    /// `agent_totals[i][p]`: mistakes of expert `p` on agent `i`'s stream.
    pub agent_totals: Vec<Vec<u64>>,
    /// Expert with the fewest total mistakes (lowest index on ties).
    pub best_expert: usize,
    pub m_star: u64,
    /// Per-round mistakes of `best_expert`; sums to `m_star`.
    pub m_star_series: Vec<u64>,
    /// Per-round minimum over experts; a different expert may win each round.
    pub round_min_series: Vec<u64>,
}

/// Gradient and geometry instrumentation of a mirror-descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientMetrics {
    /// `||sum_j g_j^t||_*` per round.
    pub aggregate_norms: Vec<f64>,
    /// Largest individual `||g_i^t||_*`.
    pub max_grad_norm: f64,
    /// Largest `psi(w_i^t, w_j^t)` over rounds and ordered agent pairs.
    pub max_pairwise_divergence: f64,
    /// Largest `psi(w_i^t, w^1)` against the common starting point.
    pub max_start_divergence: f64,
    /// Largest componentwise gap between any two agents in any round.
    pub max_param_spread: f64,
    pub initial_params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub algorithm: Algorithm,
    pub n_agents: usize,
    pub n_rounds: usize,
    /// All per-round tables are indexed `[round][agent]`.
    pub predictions: Vec<Vec<Label>>,
    pub mistakes: Vec<Vec<bool>>,
    /// Objective value for mirror descent; mistake probability for the
    /// weighted-majority rules (0/1 for the deterministic vote).
    pub losses: Vec<Vec<f64>>,
    pub cum_mistakes: Vec<Vec<u64>>,
    pub cum_losses: Vec<Vec<f64>>,
    pub experts: Option<ExpertMetrics>,
    pub gradients: Option<GradientMetrics>,
    pub final_params: Vec<Vec<f64>>,
    /// `param_history[t][i]` after the merge of round `t`, when recorded.
    pub param_history: Option<Vec<Vec<Vec<f64>>>>,
}

impl Metrics {
    fn new(spec: &ExperimentSpec) -> Self {
        let t = spec.n_rounds;
        Self {
            algorithm: spec.algorithm,
            n_agents: spec.n_agents(),
            n_rounds: t,
            predictions: Vec::with_capacity(t),
            mistakes: Vec::with_capacity(t),
            losses: Vec::with_capacity(t),
            cum_mistakes: Vec::with_capacity(t),
            cum_losses: Vec::with_capacity(t),
            experts: None,
            gradients: None,
            final_params: Vec::new(),
            param_history: spec.record_params.then(Vec::new),
        }
    }

    fn push_round(&mut self, predictions: Vec<Label>, mistakes: Vec<bool>, losses: Vec<f64>) {
        let (mut cm, mut cl) = match (self.cum_mistakes.last(), self.cum_losses.last()) {
            (Some(m), Some(l)) => (m.clone(), l.clone()),
            _ => (vec![0; self.n_agents], vec![0.0; self.n_agents]),
        };
        for i in 0..self.n_agents {
            cm[i] += u64::from(mistakes[i]);
            cl[i] += losses[i];
        }
        self.predictions.push(predictions);
        self.mistakes.push(mistakes);
        self.losses.push(losses);
        self.cum_mistakes.push(cm);
        self.cum_losses.push(cl);
    }

    /// `M_i` after the last round.
    pub fn final_mistakes(&self) -> Vec<u64> {
        self.cum_mistakes
            .last()
            .cloned()
            .unwrap_or_else(|| vec![0; self.n_agents])
    }

    pub fn final_losses(&self) -> Vec<f64> {
        self.cum_losses
            .last()
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n_agents])
    }

    pub fn total_mistakes(&self) -> u64 {
        self.final_mistakes().iter().sum()
    }

    /// Per-agent per-round losses, indexed `[agent][round]`.
    pub fn losses_by_agent(&self) -> Vec<Vec<f64>> {
        (0..self.n_agents)
            .map(|i| self.losses.iter().map(|r| r[i]).collect())
            .collect()
    }

    /// Mean of the agents' final parameters.
    pub fn averaged_final_params(&self) -> Vec<f64> {
        let n = self.final_params.len() as f64;
        let d = self.final_params.first().map_or(0, Vec::len);
        (0..d)
            .map(|k| self.final_params.iter().map(|p| p[k]).sum::<f64>() / n)
            .collect()
    }

    /// Equality that also distinguishes `0.0` from `-0.0` and NaN payloads.
    pub fn bit_identical(&self, other: &Metrics) -> bool {
        self.algorithm == other.algorithm
            && self.n_agents == other.n_agents
            && self.n_rounds == other.n_rounds
            && self.predictions == other.predictions
            && self.mistakes == other.mistakes
            && self.cum_mistakes == other.cum_mistakes
            && self.experts == other.experts
            && self.float_bits() == other.float_bits()
    }

    fn float_bits(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut put = |v: &[f64]| out.extend(v.iter().map(|x| x.to_bits()));
        for r in self.losses.iter().chain(&self.cum_losses).chain(&self.final_params) {
            put(r);
        }
        if let Some(h) = &self.param_history {
            for r in h.iter().flatten() {
                put(r);
            }
        }
        if let Some(g) = &self.gradients {
            put(&g.aggregate_norms);
            put(&[
                g.max_grad_norm,
                g.max_pairwise_divergence,
                g.max_start_divergence,
                g.max_param_spread,
            ]);
            put(&g.initial_params);
        }
        out
    }
}

/// Runs the experiment. The result is a pure function of `spec`.
pub fn run(spec: &ExperimentSpec) -> Result<Metrics> {
    spec.validate()?;
    let streams = spec.streams()?;
    match &spec.config {
        AlgorithmConfig::Dwm(cfg) => run_dwm(spec, cfg, &streams),
        AlgorithmConfig::Omd(cfg) => run_omd(spec, cfg, &streams),
    }
}

/// Runs independent experiments, fanned out over the pool when `parallel`.
pub fn run_many(specs: &[ExperimentSpec], parallel: bool) -> Vec<Result<Metrics>> {
    exec::map_slice(parallel, specs, |_, s| run(s))
}

fn run_dwm(spec: &ExperimentSpec, cfg: &DwmConfig, streams: &[Vec<usize>]) -> Result<Metrics> {
    let n = spec.n_agents();
    let p = cfg.pool.len();
    let rule = spec.algorithm.merge_rule();
    let mut weights = DwmWeights::new(n, p);
    let mut rngs: Vec<ChaCha8Rng> = if cfg.randomized {
        (0..n).map(|i| agent_rng(spec.seed, i)).collect()
    } else {
        Vec::new()
    };
    let mut metrics = Metrics::new(spec);
    let mut round_mistakes = Vec::with_capacity(spec.n_rounds);
    let mut agent_totals = vec![vec![0u64; p]; n];

    for t in 0..spec.n_rounds {
        let examples = spec.round_examples(streams, t);
        let round = dwm_round(
            &weights,
            &examples,
            cfg,
            &spec.topology,
            rule,
            &mut rngs,
            spec.parallel,
        )?;
        let counts: Vec<u64> = (0..p)
            .map(|e| {
                round
                    .expert_predictions
                    .iter()
                    .zip(&examples)
                    .filter(|(adv, ex)| adv[e] != ex.label)
                    .count() as u64
            })
            .collect();
        round_mistakes.push(counts);
        for ((totals, adv), ex) in agent_totals.iter_mut().zip(&round.expert_predictions).zip(&examples) {
            for (tot, a) in totals.iter_mut().zip(adv) {
                *tot += u64::from(*a != ex.label);
            }
        }
        metrics.push_round(round.predictions, round.mistakes, round.expected_mistakes);
        weights = round.weights;
        if let Some(h) = metrics.param_history.as_mut() {
            h.push(weights.rows().map(<[f64]>::to_vec).collect());
        }
    }

    let totals: Vec<u64> = (0..p)
        .map(|e| round_mistakes.iter().map(|r| r[e]).sum())
        .collect();
    let (best_expert, m_star) = totals
        .iter()
        .copied()
        .enumerate()
        .min_by_key(|&(e, m)| (m, e))
        .unwrap_or((0, 0));
    metrics.experts = Some(ExpertMetrics {
        m_star_series: round_mistakes.iter().map(|r| r[best_expert]).collect(),
        round_min_series: round_mistakes
            .iter()
            .map(|r| r.iter().copied().min().unwrap_or(0))
            .collect(),
        round_mistakes,
        totals,
        agent_totals,
        best_expert,
        m_star,
    });
    metrics.final_params = weights.rows().map(<[f64]>::to_vec).collect();
    Ok(metrics)
}

fn run_omd(spec: &ExperimentSpec, cfg: &OmdConfig, streams: &[Vec<usize>]) -> Result<Metrics> {
    let n = spec.n_agents();
    let dim = spec.dataset.dim;
    let neighborhoods: Vec<Vec<usize>> = if spec.algorithm.is_distributed() {
        (0..n)
            .map(|i| spec.topology.neighborhood(i))
            .collect::<Result<_>>()?
    } else {
        (0..n).map(|i| vec![i]).collect()
    };
    let start = cfg.initial_params(dim);
    let mut params = vec![start.clone(); n];
    let mut metrics = Metrics::new(spec);
    let mut geo = GradientMetrics {
        aggregate_norms: Vec::with_capacity(spec.n_rounds),
        max_grad_norm: 0.0,
        max_pairwise_divergence: 0.0,
        max_start_divergence: 0.0,
        max_param_spread: 0.0,
        initial_params: start.clone(),
    };
    track_geometry(cfg, &params, &start, &mut geo);

    for t in 0..spec.n_rounds {
        let examples = spec.round_examples(streams, t);
        let locals = exec::map_range(spec.parallel, n, |i| {
            let ex = examples[i];
            let w = &params[i];
            (cfg.predict(w, &ex.features), cfg.loss(w, ex), cfg.gradient(w, ex))
        });

        let len = start.len();
        let mut agg = vec![0.0; len];
        for (_, _, g) in &locals {
            for (a, v) in agg.iter_mut().zip(g) {
                *a += v;
            }
            geo.max_grad_norm = geo.max_grad_norm.max(cfg.dual_norm(g));
        }
        geo.aggregate_norms.push(cfg.dual_norm(&agg));

        // barrier: all gradients exist before any merge
        let step = eta(t + 1);
        let merged = exec::map_range(spec.parallel, n, |i| {
            let nb: Vec<(&[f64], &[f64])> = neighborhoods[i]
                .iter()
                .map(|&j| (params[j].as_slice(), locals[j].2.as_slice()))
                .collect();
            cfg.update(&nb, step)
        });
        params = merged.into_iter().collect::<Result<_>>()?;
        track_geometry(cfg, &params, &start, &mut geo);

        let mut predictions = Vec::with_capacity(n);
        let mut mistakes = Vec::with_capacity(n);
        let mut losses = Vec::with_capacity(n);
        for ((pred, loss, _), ex) in locals.into_iter().zip(&examples) {
            mistakes.push(pred != ex.label);
            predictions.push(pred);
            losses.push(loss);
        }
        metrics.push_round(predictions, mistakes, losses);
        if let Some(h) = metrics.param_history.as_mut() {
            h.push(params.clone());
        }
    }

    metrics.gradients = Some(geo);
    metrics.final_params = params;
    Ok(metrics)
}

fn track_geometry(cfg: &OmdConfig, params: &[Vec<f64>], start: &[f64], geo: &mut GradientMetrics) {
    for (i, wi) in params.iter().enumerate() {
        geo.max_start_divergence = geo.max_start_divergence.max(cfg.divergence(wi, start));
        for (j, wj) in params.iter().enumerate() {
            if i == j {
                continue;
            }
            geo.max_pairwise_divergence = geo.max_pairwise_divergence.max(cfg.divergence(wi, wj));
            let spread = wi
                .iter()
                .zip(wj)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            geo.max_param_spread = geo.max_param_spread.max(spread);
        }
    }
}

/// `sum_t f_i^t(w)` over each agent's stream for a fixed parameter vector.
pub fn comparator_losses(spec: &ExperimentSpec, w: &[f64]) -> Result<Vec<f64>> {
    let cfg = match &spec.config {
        AlgorithmConfig::Omd(cfg) => cfg,
        AlgorithmConfig::Dwm(_) => {
            return Err(Error::Config(
                "comparator losses are defined for mirror descent runs".into(),
            ))
        }
    };
    let streams = spec.streams()?;
    Ok(streams
        .iter()
        .map(|s| {
            s.iter()
                .map(|&k| cfg.loss(w, &spec.dataset.examples[k]))
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub rounds: usize,
    pub agents: usize,
    pub checks: usize,
}

/// Recomputes every derived series of `m` and reports the first mismatch.
pub fn replay_check(m: &Metrics) -> Result<ReplayReport> {
    let fail = |msg: String| Err(Error::Replay(msg));
    let n = m.n_agents;
    let mut checks = 0;
    for (name, len) in [
        ("predictions", m.predictions.len()),
        ("mistakes", m.mistakes.len()),
        ("losses", m.losses.len()),
        ("cum_mistakes", m.cum_mistakes.len()),
        ("cum_losses", m.cum_losses.len()),
    ] {
        if len != m.n_rounds {
            return fail(format!("{name} has {len} rounds, expected {}", m.n_rounds));
        }
    }
    let mut cm = vec![0u64; n];
    let mut cl = vec![0.0f64; n];
    for t in 0..m.n_rounds {
        if m.mistakes[t].len() != n || m.losses[t].len() != n {
            return fail(format!("round {}: wrong number of agents", t + 1));
        }
        for i in 0..n {
            cm[i] += u64::from(m.mistakes[t][i]);
            cl[i] += m.losses[t][i];
            if m.cum_mistakes[t][i] != cm[i] {
                return fail(format!(
                    "round {}, agent {i}: cum_mistakes {} but prefix sum is {}",
                    t + 1,
                    m.cum_mistakes[t][i],
                    cm[i]
                ));
            }
            if m.cum_losses[t][i].to_bits() != cl[i].to_bits() {
                return fail(format!(
                    "round {}, agent {i}: cum_loss {} but prefix sum is {}",
                    t + 1,
                    m.cum_losses[t][i],
                    cl[i]
                ));
            }
            checks += 2;
        }
    }
    if let Some(e) = &m.experts {
        if e.m_star_series.len() != m.n_rounds || e.round_min_series.len() != m.n_rounds {
            return fail("expert series length differs from round count".into());
        }
        for t in 0..m.n_rounds {
            for (name, v) in [("m*^t", e.m_star_series[t]), ("per-round minimum", e.round_min_series[t])] {
                if v > n as u64 {
                    return fail(format!("round {}: {name} = {v} exceeds N = {n}", t + 1));
                }
            }
            if e.round_mistakes[t].iter().copied().min() != Some(e.round_min_series[t]) {
                return fail(format!("round {}: per-round minimum disagrees", t + 1));
            }
            if e.round_mistakes[t][e.best_expert] != e.m_star_series[t] {
                return fail(format!("round {}: m*^t disagrees with expert table", t + 1));
            }
            checks += 4;
        }
        for (p, &total) in e.totals.iter().enumerate() {
            let sum: u64 = e.round_mistakes.iter().map(|r| r[p]).sum();
            if sum != total {
                return fail(format!("expert {p}: total {total} but rounds sum to {sum}"));
            }
            let by_agent: u64 = e.agent_totals.iter().map(|a| a[p]).sum();
            if by_agent != total {
                return fail(format!("expert {p}: total {total} but agents sum to {by_agent}"));
            }
        }
        if e.totals.iter().copied().min() != Some(e.m_star) {
            return fail(format!("m* = {} is not the smallest expert total", e.m_star));
        }
        let series: u64 = e.m_star_series.iter().sum();
        if series > e.m_star {
            return fail(format!("sum of m*^t = {series} exceeds m* = {}", e.m_star));
        }
        let mins: u64 = e.round_min_series.iter().sum();
        if mins > e.m_star {
            return fail(format!("sum of per-round minima {mins} exceeds m* = {}", e.m_star));
        }
        checks += e.totals.len() + 3;
    }
    Ok(ReplayReport {
        rounds: m.n_rounds,
        agents: n,
        checks,
    })
}
