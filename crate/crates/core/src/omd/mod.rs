//! Online mirror descent for binary classification with hinge losses.
//!
//! Two instantiations are provided. Gradient descent (squared Euclidean
//! proximity) merges neighbors arithmetically; exponentiated gradient
//! (unnormalized relative entropy) merges them geometrically and then
//! rescales onto the l1 ball of radius `S`. Exponentiated gradient keeps a
//! strictly positive stacked vector `(w+, w-)` and predicts with `w+ - w-`.

pub mod prox;

use serde::{Deserialize, Serialize};

use crate::dwm::{arithmetic_mean, geometric_mean};
use crate::error::{Error, Result};
use crate::types::{Label, LabeledExample, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmdVariant {
    /// Gradient descent on the L2-regularized, `C`-scaled hinge loss.
    Ogd,
    /// Exponentiated gradient on the plain hinge loss over `||w||_1 <= S`.
    Eg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmdConfig {
    pub variant: OmdVariant,
    /// Hinge scale of the gradient-descent objective.
    pub c: f64,
    /// l1 radius of the exponentiated-gradient feasible set.
    pub s: f64,
    pub n_agents: usize,
    /// Whether the gradient-descent subgradient includes the `w` term of
    /// the regularizer (and the `C` scale on the hinge part).
    pub include_regularizer: bool,
}

impl OmdConfig {
    pub fn new(variant: OmdVariant, c: f64, s: f64, n_agents: usize) -> Self {
        Self {
            variant,
            c,
            s,
            n_agents,
            include_regularizer: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.s > 0.0) {
            return Err(Error::Config(format!("S must be > 0, got {}", self.s)));
        }
        if self.n_agents == 0 {
            return Err(Error::Config("need at least one agent".into()));
        }
        Ok(())
    }

    /// Length of the per-agent parameter vector for feature dimension `dim`.
    pub fn param_len(&self, dim: usize) -> usize {
        match self.variant {
            OmdVariant::Ogd => dim,
            OmdVariant::Eg => 2 * dim,
        }
    }

    /// Starting point: zero for gradient descent; `w+ = w- = 1` for
    /// exponentiated gradient, rescaled onto the l1 ball when `2D > S`.
    pub fn initial_params(&self, dim: usize) -> Vec<f64> {
        match self.variant {
            OmdVariant::Ogd => vec![0.0; dim],
            OmdVariant::Eg => {
                let mut w = vec![1.0; 2 * dim];
                normalize_l1(&mut w, self.s);
                w
            }
        }
    }

    /// Loss of the configured objective at `params` (stacked for EG).
    pub fn loss(&self, params: &[f64], ex: &LabeledExample) -> f64 {
        match self.variant {
            OmdVariant::Ogd => ogd_loss(params, ex, self.c),
            OmdVariant::Eg => hinge_loss(&eg_effective(params), ex),
        }
    }

    /// Subgradient in parameter space (stacked `(g, -g)` for EG).
    pub fn gradient(&self, params: &[f64], ex: &LabeledExample) -> Vec<f64> {
        match self.variant {
            OmdVariant::Ogd => hinge_subgradient(params, ex, self.c, self.include_regularizer),
            OmdVariant::Eg => {
                let g = hinge_subgradient(&eg_effective(params), ex, self.c, false);
                eg_stacked_gradient(&g)
            }
        }
    }

    pub fn predict(&self, params: &[f64], x: &SparseVector) -> Label {
        match self.variant {
            OmdVariant::Ogd => omd_predict(params, x),
            OmdVariant::Eg => omd_predict(&eg_effective(params), x),
        }
    }

    /// Neighborhood merge for this variant.
    pub fn update(&self, neighbors: &[(&[f64], &[f64])], eta: f64) -> Result<Vec<f64>> {
        match self.variant {
            OmdVariant::Ogd => dogd_update(neighbors, eta),
            OmdVariant::Eg => doeg_update(neighbors, eta, self.s),
        }
    }

    /// Proximity function of this variant, `psi(u, v)`.
    pub fn divergence(&self, u: &[f64], v: &[f64]) -> f64 {
        match self.variant {
            OmdVariant::Ogd => euclidean_divergence(u, v),
            OmdVariant::Eg => entropy_divergence(u, v),
        }
    }

    /// Norm dual to the one the proximity function is strongly convex in.
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        match self.variant {
            OmdVariant::Ogd => l2_norm(g),
            OmdVariant::Eg => linf_norm(g),
        }
    }

    /// Strong-convexity modulus of the distance generator: 1 for the
    /// squared Euclidean norm; `1/S` for negative entropy w.r.t. l1 on the
    /// ball of radius `S`.
    pub fn strong_convexity(&self) -> f64 {
        match self.variant {
            OmdVariant::Ogd => 1.0,
            OmdVariant::Eg => 1.0 / self.s,
        }
    }
}

/// Step size `1 / sqrt(t)` for the global round index `t >= 1`.
pub fn eta(t: usize) -> f64 {
    1.0 / (t as f64).sqrt()
}

/// Positive/negative halves of the exponentiated-gradient state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgState {
    pub w_plus: Vec<f64>,
    pub w_minus: Vec<f64>,
}

impl EgState {
    pub fn from_stacked(stacked: &[f64]) -> Self {
        let d = stacked.len() / 2;
        Self {
            w_plus: stacked[..d].to_vec(),
            w_minus: stacked[d..].to_vec(),
        }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.w_plus.iter().chain(&self.w_minus).copied().collect()
    }

    pub fn effective(&self) -> Vec<f64> {
        self.w_plus
            .iter()
            .zip(&self.w_minus)
            .map(|(p, m)| p - m)
            .collect()
    }
}

/// `w+ - w-` from a stacked `(w+, w-)` vector.
pub fn eg_effective(stacked: &[f64]) -> Vec<f64> {
    let d = stacked.len() / 2;
    (0..d).map(|i| stacked[i] - stacked[d + i]).collect()
}

/// Gradient w.r.t. `(w+, w-)` given the gradient `g` w.r.t. `w = w+ - w-`.
pub fn eg_stacked_gradient(g: &[f64]) -> Vec<f64> {
    g.iter().copied().chain(g.iter().map(|x| -x)).collect()
}

fn margin(w: &[f64], ex: &LabeledExample) -> f64 {
    ex.label.as_f64() * ex.features.dot(w)
}

pub fn hinge_loss(w: &[f64], ex: &LabeledExample) -> f64 {
    (1.0 - margin(w, ex)).max(0.0)
}

/// `C * max(0, 1 - l<w, x>) + ||w||^2 / 2`.
pub fn ogd_loss(w: &[f64], ex: &LabeledExample, c: f64) -> f64 {
    c * hinge_loss(w, ex) + 0.5 * w.iter().map(|x| x * x).sum::<f64>()
}

/// `-l x` where the hinge is active, zero elsewhere. With
/// `include_regularizer` the hinge part is scaled by `C` and `w` is added.
pub fn hinge_subgradient(
    w: &[f64],
    ex: &LabeledExample,
    c: f64,
    include_regularizer: bool,
) -> Vec<f64> {
    let mut g = if include_regularizer {
        w.to_vec()
    } else {
        vec![0.0; w.len()]
    };
    if 1.0 - margin(w, ex) > 0.0 {
        let scale = if include_regularizer { c } else { 1.0 };
        let l = ex.label.as_f64();
        for &(i, v) in ex.features.entries() {
            if i < g.len() {
                g[i] -= scale * l * v;
            }
        }
    }
    g
}

fn check_neighbors(neighbors: &[(&[f64], &[f64])]) -> Result<usize> {
    let (w0, _) = neighbors
        .first()
        .ok_or_else(|| Error::Config("empty neighborhood".into()))?;
    let d = w0.len();
    for (w, g) in neighbors {
        for len in [w.len(), g.len()] {
            if len != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: len,
                });
            }
        }
    }
    Ok(d)
}

/// `(1/N_i) * sum_j (w_j - eta * g_j)`, reduced in neighbor order.
pub fn dogd_update(neighbors: &[(&[f64], &[f64])], eta: f64) -> Result<Vec<f64>> {
    let d = check_neighbors(neighbors)?;
    Ok((0..d)
        .map(|k| arithmetic_mean(neighbors.iter().map(|(w, g)| w[k] - eta * g[k])))
        .collect())
}

/// Componentwise `(prod_j w_j * exp(-eta * g_j))^(1/N_i)` in log space,
/// followed by rescaling to `||w||_1 = s` when the l1 norm exceeds `s`.
/// Pass `f64::INFINITY` for an unconstrained update.
pub fn doeg_update(neighbors: &[(&[f64], &[f64])], eta: f64, s: f64) -> Result<Vec<f64>> {
    let d = check_neighbors(neighbors)?;
    for (w, _) in neighbors {
        if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveWeight { index, value });
        }
    }
    let mut out: Vec<f64> = (0..d)
        .map(|k| geometric_mean(neighbors.iter().map(|(w, g)| w[k] * (-eta * g[k]).exp())))
        .collect();
    normalize_l1(&mut out, s);
    Ok(out)
}

/// Rescales a positive vector onto `||w||_1 = s` if it lies outside.
pub fn normalize_l1(w: &mut [f64], s: f64) {
    let norm: f64 = w.iter().map(|x| x.abs()).sum();
    if norm > s {
        for x in w.iter_mut() {
            *x = s * *x / norm;
        }
    }
}

/// Sign of `<w, x>`, with `+1` on an exact zero.
pub fn omd_predict(w: &[f64], x: &SparseVector) -> Label {
    Label::from_sign(x.dot(w) >= 0.0)
}

/// `||u - v||^2 / 2`.
pub fn euclidean_divergence(u: &[f64], v: &[f64]) -> f64 {
    0.5 * u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Unnormalized relative entropy `sum u ln(u/v) - u + v` for positive vectors.
pub fn entropy_divergence(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| {
            let t = if a > 0.0 { a * (a / b).ln() } else { 0.0 };
            t - a + b
        })
        .sum()
}

pub fn l2_norm(g: &[f64]) -> f64 {
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn linf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regret {
    pub individual: Vec<f64>,
    pub social: f64,
    pub average: f64,
}

/// Individual, social and average regret from per-agent per-round losses
/// and each agent's total comparator loss.
pub fn regret_accounting(losses: &[Vec<f64>], comparator: &[f64]) -> Result<Regret> {
    if losses.len() != comparator.len() {
        return Err(Error::LengthMismatch {
            expected: losses.len(),
            got: comparator.len(),
        });
    }
    if losses.is_empty() {
        return Err(Error::Config("regret of zero agents".into()));
    }
    let individual: Vec<f64> = losses
        .iter()
        .zip(comparator)
        .map(|(l, c)| l.iter().sum::<f64>() - c)
        .collect();
    let social: f64 = individual.iter().sum();
    Ok(Regret {
        average: social / individual.len() as f64,
        individual,
        social,
    })
}
