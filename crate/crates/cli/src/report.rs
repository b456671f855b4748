use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::Result;
use ddol::bounds::{self, domd_avg_regret_bound, dwm_a_bound, dwm_i_bound, dwm_social_bound};
use ddol::sim::{comparator_losses, Algorithm, ExperimentSpec, Metrics};
use ddol::{AlgorithmConfig, OmdConfig};
use serde::Serialize;

/// Writes `round,agent,mistake,cum_mistakes,loss,cum_loss`, one row per
/// agent per round, rounds 1-based.
pub fn write_csv(path: &Path, m: &Metrics) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["round", "agent", "mistake", "cum_mistakes", "loss", "cum_loss"])?;
    for t in 0..m.n_rounds {
        for i in 0..m.n_agents {
            w.write_record([
                (t + 1).to_string(),
                i.to_string(),
                u8::from(m.mistakes[t][i]).to_string(),
                m.cum_mistakes[t][i].to_string(),
                m.losses[t][i].to_string(),
                m.cum_losses[t][i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub n_agents: usize,
    pub rounds: usize,
    pub topology: String,
    pub complete_graph: bool,
    pub final_mistakes: Vec<u64>,
    pub total_mistakes: u64,
    pub final_losses: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experts: Option<ExpertSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret: Option<RegretSummary>,
    /// Per agent; `null` where no deterministic bound applies.
    pub bound_satisfied: Option<Vec<bool>>,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Serialize)]
pub struct ExpertSummary {
    pub n_experts: usize,
    pub alpha: f64,
    pub best_expert: usize,
    pub m_star: u64,
    pub m_star_series_sum: u64,
    pub m_star_series_max: u64,
    pub round_min_series_sum: u64,
    /// Own best-expert mistakes of each agent's stream.
    pub agent_m_star: Vec<u64>,
    pub dwm_i_bound: f64,
    pub dwm_social_bound: f64,
    pub dwm_a_bound: f64,
    /// Bound each agent is checked against.
    pub agent_bounds: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct RegretSummary {
    pub diam_bound: f64,
    pub grad_bound: f64,
    pub strong_convexity: f64,
    pub avg_regret_zero_comparator: f64,
    pub avg_regret_final_average: f64,
    pub avg_regret_bound: f64,
    pub social_regret_optimistic: f64,
    pub social_regret_pessimistic: f64,
    pub single_agent_regret: f64,
    /// `null` off complete graphs, where the bound is not claimed.
    pub bound_satisfied: Option<bool>,
}

/// Per-round inputs behind the bound values, for external recomputation.
#[derive(Debug, Serialize)]
pub struct BoundInputsDump<'a> {
    pub n_agents: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_star_series: Option<&'a [u64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round_min_series: Option<&'a [u64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate_norms: Option<&'a [f64]>,
}

pub fn summarize(
    spec: &ExperimentSpec,
    m: &Metrics,
    strong_convexity: Option<f64>,
    wall_clock_secs: f64,
) -> Result<RunSummary> {
    let n = m.n_agents;
    let complete = spec.topology.is_complete();
    let mut summary = RunSummary {
        n_agents: n,
        rounds: m.n_rounds,
        topology: spec.topology.kind().to_string(),
        complete_graph: complete,
        final_mistakes: m.final_mistakes(),
        total_mistakes: m.total_mistakes(),
        final_losses: m.final_losses(),
        experts: None,
        regret: None,
        bound_satisfied: None,
        wall_clock_secs,
    };
    match &spec.config {
        AlgorithmConfig::Dwm(cfg) => {
            let e = m.experts.as_ref().expect("weighted-majority metrics");
            let p = cfg.pool.len();
            let alpha = cfg.alpha;
            let agent_m_star: Vec<u64> = e
                .agent_totals
                .iter()
                .map(|t| t.iter().copied().min().unwrap_or(0))
                .collect();
            let i_bound = dwm_i_bound(e.m_star, n, p, alpha);
            let a_bound = dwm_a_bound(&e.m_star_series, n, p, alpha);
            let agent_bounds: Vec<f64> = match spec.algorithm {
                Algorithm::DwmI => vec![i_bound; n],
                Algorithm::DwmA => vec![a_bound; n],
                Algorithm::Wma => agent_m_star
                    .iter()
                    .map(|&m| dwm_i_bound(m, 1, p, alpha))
                    .collect(),
                _ => Vec::new(),
            };
            // merged bounds are only claimed on complete graphs
            let applies = !agent_bounds.is_empty() && (complete || spec.algorithm == Algorithm::Wma);
            if applies {
                summary.bound_satisfied = Some(
                    summary
                        .final_mistakes
                        .iter()
                        .zip(&agent_bounds)
                        .map(|(&mi, &b)| mi as f64 <= b)
                        .collect(),
                );
            }
            summary.experts = Some(ExpertSummary {
                n_experts: p,
                alpha,
                best_expert: e.best_expert,
                m_star: e.m_star,
                m_star_series_sum: e.m_star_series.iter().sum(),
                m_star_series_max: e.m_star_series.iter().copied().max().unwrap_or(0),
                round_min_series_sum: e.round_min_series.iter().sum(),
                agent_m_star,
                dwm_i_bound: i_bound,
                dwm_social_bound: dwm_social_bound(e.m_star, n, p, alpha),
                dwm_a_bound: a_bound,
                agent_bounds,
            });
        }
        AlgorithmConfig::Omd(cfg) => {
            summary.regret = Some(regret_summary(spec, cfg, m, strong_convexity, complete)?);
        }
    }
    Ok(summary)
}

fn regret_summary(
    spec: &ExperimentSpec,
    cfg: &OmdConfig,
    m: &Metrics,
    strong_convexity: Option<f64>,
    complete: bool,
) -> Result<RegretSummary> {
    let n = m.n_agents;
    let t = m.n_rounds;
    let g = m.gradients.as_ref().expect("mirror-descent metrics");
    let a = strong_convexity.unwrap_or_else(|| cfg.strong_convexity());
    let losses = m.final_losses();
    let avg_regret = |cmp: Vec<f64>| {
        losses.iter().zip(&cmp).map(|(l, c)| l - c).sum::<f64>() / n as f64
    };
    let zero = avg_regret(comparator_losses(spec, &g.initial_params)?);
    let final_avg = avg_regret(comparator_losses(spec, &m.averaged_final_params())?);
    let diam = g.max_pairwise_divergence.max(g.max_start_divergence);
    let bound = domd_avg_regret_bound(diam, a, &g.aggregate_norms, n);
    let grad = g.max_grad_norm;
    Ok(RegretSummary {
        diam_bound: diam,
        grad_bound: grad,
        strong_convexity: a,
        avg_regret_zero_comparator: zero,
        avg_regret_final_average: final_avg,
        avg_regret_bound: bound,
        social_regret_optimistic: bounds::social_regret_optimistic(n, diam, grad, a, t),
        social_regret_pessimistic: bounds::social_regret_pessimistic(n, diam, grad, a, t),
        single_agent_regret: bounds::single_agent_regret(n, diam, grad, a, t),
        bound_satisfied: complete.then_some(zero <= bound),
    })
}

pub fn bound_inputs(m: &Metrics) -> BoundInputsDump<'_> {
    BoundInputsDump {
        n_agents: m.n_agents,
        m_star_series: m.experts.as_ref().map(|e| e.m_star_series.as_slice()),
        round_min_series: m.experts.as_ref().map(|e| e.round_min_series.as_slice()),
        aggregate_norms: m.gradients.as_ref().map(|g| g.aggregate_norms.as_slice()),
    }
}
