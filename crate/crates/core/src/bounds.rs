//! Closed-form mistake and regret bounds. All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn denom(alpha: f64) -> f64 {
    (2.0 / (1.0 + alpha)).ln()
}

/// Per-agent mistake bound for geometric merging:
/// `(m*/N ln(1/alpha) + ln P) / ln(2/(1+alpha))`.
pub fn dwm_i_bound(m_star: u64, n: usize, p: usize, alpha: f64) -> f64 {
    (m_star as f64 / n as f64 * (1.0 / alpha).ln() + (p as f64).ln()) / denom(alpha)
}

/// Summed mistake bound over all agents:
/// `(m* ln(1/alpha) + N ln P) / ln(2/(1+alpha))`.
pub fn dwm_social_bound(m_star: u64, n: usize, p: usize, alpha: f64) -> f64 {
    (m_star as f64 * (1.0 / alpha).ln() + n as f64 * (p as f64).ln()) / denom(alpha)
}

/// Per-agent mistake bound for arithmetic merging, driven by the per-round
/// best-expert mistake counts `m*^t`:
/// `(sum_t (1-alpha) m*^t / (N - (1-alpha) m*^t) + ln P) / ln(2/(1+alpha))`.
pub fn dwm_a_bound(m_star_series: &[u64], n: usize, p: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let sum: f64 = m_star_series
        .iter()
        .map(|&m| {
            let x = (1.0 - alpha) * m as f64;
            x / (nf - x)
        })
        .sum();
    (sum + (p as f64).ln()) / denom(alpha)
}

/// `N (1/(1-alpha) - 1/ln(1/alpha))`, the per-round threshold on `m*^t`
/// below which the arithmetic-merge bound is the tighter one. Only
/// meaningful for `alpha < 1/2`.
pub fn dwm_a_condition(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Config(format!(
            "threshold is defined for alpha in (0, 1/2), got {alpha}"
        )));
    }
    Ok(n as f64 * (1.0 / (1.0 - alpha) - 1.0 / (1.0 / alpha).ln()))
}

/// Average individual regret bound for distributed mirror descent with
/// `eta_t = 1/sqrt(t)`:
/// `diam sqrt(T) + 1/(2 a N^2) sum_t ||sum_j g_j^t||_*^2 / sqrt(t)`,
/// where `agg_norms[t-1] = ||sum_j g_j^t||_*` and `T = agg_norms.len()`.
pub fn domd_avg_regret_bound(diam: f64, a: f64, agg_norms: &[f64], n: usize) -> f64 {
    let t = agg_norms.len() as f64;
    let nf = n as f64;
    let sum: f64 = agg_norms
        .iter()
        .enumerate()
        .map(|(k, g)| g * g / ((k + 1) as f64).sqrt())
        .sum();
    diam * t.sqrt() + sum / (2.0 * a * nf * nf)
}

/// Social regret when the agents' gradients are mutually orthogonal:
/// `(N D^2 + G^2/a) sqrt(T)`.
pub fn social_regret_optimistic(n: usize, diam: f64, grad: f64, a: f64, t: usize) -> f64 {
    (n as f64 * diam * diam + grad * grad / a) * (t as f64).sqrt()
}

/// Social regret when the agents' gradients are aligned:
/// `(N D^2 + N G^2/a) sqrt(T)`.
pub fn social_regret_pessimistic(n: usize, diam: f64, grad: f64, a: f64, t: usize) -> f64 {
    let nf = n as f64;
    (nf * diam * diam + nf * grad * grad / a) * (t as f64).sqrt()
}

/// Regret of one learner processing all `N T` samples:
/// `(D^2 sqrt(N) + G^2 sqrt(N)/a) sqrt(T)`.
pub fn single_agent_regret(n: usize, diam: f64, grad: f64, a: f64, t: usize) -> f64 {
    let rn = (n as f64).sqrt();
    (diam * diam * rn + grad * grad * rn / a) * (t as f64).sqrt()
}

/// Instrumented inputs for the bound evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub m_star: u64,
    pub m_star_series: Vec<u64>,
    pub n_agents: usize,
    pub n_experts: usize,
    pub alpha: f64,
    pub diam_bound: f64,
    pub grad_bound: f64,
    pub strong_convexity: f64,
    pub horizon: usize,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.n_experts == 0 {
            return Err(Error::Config("N and P must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if !(self.strong_convexity > 0.0) {
            return Err(Error::Config("strong convexity must be > 0".into()));
        }
        if let Some((t, m)) = self
            .m_star_series
            .iter()
            .enumerate()
            .find(|(_, m)| **m > self.n_agents as u64)
        {
            return Err(Error::Config(format!(
                "m*^t = {m} at round {} exceeds N = {}",
                t + 1,
                self.n_agents
            )));
        }
        let total: u64 = self.m_star_series.iter().sum();
        if total > self.m_star {
            return Err(Error::Config(format!(
                "per-round series sums to {total}, above m* = {}",
                self.m_star
            )));
        }
        Ok(())
    }

    pub fn dwm_i(&self) -> f64 {
        dwm_i_bound(self.m_star, self.n_agents, self.n_experts, self.alpha)
    }

    pub fn dwm_social(&self) -> f64 {
        dwm_social_bound(self.m_star, self.n_agents, self.n_experts, self.alpha)
    }

    pub fn dwm_a(&self) -> f64 {
        dwm_a_bound(&self.m_star_series, self.n_agents, self.n_experts, self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    // ln via the atanh series, independent of the libm implementation
    fn ln_series(x: f64) -> f64 {
        let y = (x - 1.0) / (x + 1.0);
        let y2 = y * y;
        let mut term = y;
        let mut sum = 0.0;
        let mut k = 1.0;
        while term.abs() > 1e-20 {
            sum += term / k;
            term *= y2;
            k += 2.0;
        }
        2.0 * sum
    }

    #[test]
    fn coefficient_at_half() {
        let c = (1.0 / 0.5f64).ln() / (2.0 / 1.5f64).ln();
        assert!((c - 2.4094).abs() < 1e-4);
        let slope = dwm_i_bound(4, 4, 1, 0.5) - dwm_i_bound(0, 4, 1, 0.5);
        assert!((slope - c).abs() < 1e-12);
    }

    #[test]
    fn dwm_i_examples() {
        let b = dwm_i_bound(0, 3, 4, 0.9);
        assert_eq!(b, 4f64.ln() / (2.0 / 1.9f64).ln());

        let b = dwm_i_bound(100, 4, 4, 0.5);
        let oracle = (25.0 * ln_series(2.0) + ln_series(4.0)) / ln_series(4.0 / 3.0);
        assert!((b - oracle).abs() < 1e-12, "{b} vs {oracle}");
        // ln P / ln(4/3) = (ln 2 / ln(4/3)) log2 P, so the rounded form
        // 2.41 (m*/N + log P) carries a base-2 log on P
        let rough = 2.41 * (25.0 + 4f64.log2());
        assert!((b - rough).abs() / rough < 1e-3);
        assert!((b - 65.05).abs() < 0.01);
    }

    #[test]
    fn social_examples() {
        let (a, p) = (0.7, 8);
        assert_eq!(
            dwm_social_bound(13, 1, p, a),
            (13.0 * (1.0 / a).ln() + (p as f64).ln()) / (2.0 / (1.0 + a)).ln()
        );
        let step = dwm_social_bound(50, 3, p, a) - dwm_social_bound(50, 2, p, a);
        assert!((step - (p as f64).ln() / (2.0 / (1.0 + a)).ln()).abs() < 1e-12);
        let s = dwm_social_bound(100, 4, 4, 0.5);
        assert!((s - 4.0 * dwm_i_bound(100, 4, 4, 0.5)).abs() < 1e-10);
    }

    #[test]
    fn dwm_a_examples() {
        assert_eq!(dwm_a_bound(&[0, 0, 0], 4, 4, 0.9), dwm_i_bound(0, 4, 4, 0.9));
        let b = dwm_a_bound(&[5], 5, 1, 0.5);
        assert!((b - 1.0 / (4.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn condition_examples() {
        assert!(dwm_a_condition(0.5, 4).is_err());
        assert!(dwm_a_condition(0.7, 4).is_err());
        let a = 0.3;
        assert!((dwm_a_condition(a, 6).unwrap() - 2.0 * dwm_a_condition(a, 3).unwrap()).abs() < 1e-12);
        let near = dwm_a_condition(0.5 - 1e-9, 1).unwrap();
        assert!((near - (2.0 - 1.0 / std::f64::consts::LN_2)).abs() < 1e-6);
    }

    #[test]
    fn regret_bound_examples() {
        assert_eq!(domd_avg_regret_bound(3.0, 1.0, &[0.0; 100], 2), 30.0);

        let (g, a, t) = (2.0, 0.5, 400usize);
        let b = domd_avg_regret_bound(1.0, a, &vec![g; t], 1);
        let sum_inv: f64 = (1..=t).map(|k| 1.0 / (k as f64).sqrt()).sum();
        assert!((b - (20.0 + g * g / (2.0 * a) * sum_inv)).abs() < 1e-9);
        assert!(sum_inv <= 2.0 * (t as f64).sqrt());
        assert!(b <= 20.0 + g * g / a * 20.0);

        // orthonormal gradients scaled by G: ||sum g_j||_2^2 = N G^2
        let n = 4;
        let g = 1.5f64;
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|k| if j == k { g } else { 0.0 }).collect())
            .collect();
        let agg: f64 = (0..n)
            .map(|k| basis.iter().map(|v| v[k]).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt();
        let b = domd_avg_regret_bound(0.0, 1.0, &vec![agg; t], n);
        let expect = g * g / (2.0 * n as f64) * sum_inv;
        assert!((b - expect).abs() < 1e-9);
    }

    #[test]
    fn separate_expressions() {
        assert_eq!(social_regret_optimistic(2, 1.0, 2.0, 1.0, 4), 12.0);
        assert_eq!(social_regret_pessimistic(2, 1.0, 2.0, 1.0, 4), 20.0);
        assert_eq!(single_agent_regret(4, 1.0, 1.0, 1.0, 9), 12.0);
    }

    #[test]
    fn inputs_validate() {
        let mut inp = BoundInputs {
            m_star: 3,
            m_star_series: vec![1, 0, 2],
            n_agents: 2,
            n_experts: 4,
            alpha: 0.9,
            diam_bound: 0.0,
            grad_bound: 0.0,
            strong_convexity: 1.0,
            horizon: 3,
        };
        assert!(inp.validate().is_ok());
        inp.m_star_series = vec![3, 0, 0];
        assert!(inp.validate().is_err());
        inp.m_star_series = vec![2, 2, 0];
        assert!(inp.validate().is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_m_star(m in 0u64..10_000, n in 1usize..16, p in 1usize..64, a in 0.01f64..0.99) {
            prop_assert!(dwm_i_bound(m + 1, n, p, a) > dwm_i_bound(m, n, p, a));
            prop_assert!(dwm_social_bound(m + 1, n, p, a) > dwm_social_bound(m, n, p, a));
        }

        #[test]
        fn monotone_in_series(series in proptest::collection::vec(0u64..4, 1..50), k in 0usize..50, a in 0.01f64..0.99) {
            let k = k % series.len();
            prop_assume!(series[k] < 4);
            let mut up = series.clone();
            up[k] += 1;
            prop_assert!(dwm_a_bound(&up, 4, 4, a) > dwm_a_bound(&series, 4, 4, a));
        }

        #[test]
        fn monotone_in_gradients(norms in proptest::collection::vec(0.0f64..10.0, 1..50), k in 0usize..50, bump in 0.01f64..5.0) {
            let k = k % norms.len();
            let mut up = norms.clone();
            up[k] += bump;
            prop_assert!(domd_avg_regret_bound(1.0, 1.0, &up, 3) > domd_avg_regret_bound(1.0, 1.0, &norms, 3));
        }
    }
}
