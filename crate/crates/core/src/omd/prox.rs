//! Brute-force minimizer of the neighborhood prox objective
//!
//! `F(z) = sum_j [ eta <g_j, z - w_j> + psi(z, w_j) ]`
//!
//! by projected gradient descent with a backtracking step. It is slow and
//! meant for small instances, as an independent check on the closed-form
//! updates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    /// `||z - w||^2 / 2`
    Euclidean,
    /// `sum z ln(z/w) - z + w` over the positive orthant.
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibleSet {
    Unconstrained,
    /// `{ z : ||z||_1 <= radius }` (intersected with `z > 0` for entropy).
    L1Ball(f64),
}

pub const MAX_DIM: usize = 8;
pub const MAX_NEIGHBORS: usize = 8;
pub const TOLERANCE: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 2_000_000;
const FLOOR: f64 = 1e-12;

struct Problem<'a> {
    neighbors: &'a [(Vec<f64>, Vec<f64>)],
    eta: f64,
    divergence: Divergence,
    set: FeasibleSet,
}

impl Problem<'_> {
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; z.len()];
        for (w, gj) in self.neighbors {
            for k in 0..z.len() {
                g[k] += self.eta * gj[k]
                    + match self.divergence {
                        Divergence::Euclidean => z[k] - w[k],
                        Divergence::Entropy => z[k].ln() - w[k].ln(),
                    };
            }
        }
        g
    }

    fn project(&self, z: &mut [f64]) {
        match (self.divergence, self.set) {
            (Divergence::Euclidean, FeasibleSet::Unconstrained) => {}
            (Divergence::Euclidean, FeasibleSet::L1Ball(r)) => project_l1_ball(z, r),
            (Divergence::Entropy, FeasibleSet::Unconstrained) => {
                for v in z.iter_mut() {
                    *v = v.max(FLOOR);
                }
            }
            (Divergence::Entropy, FeasibleSet::L1Ball(r)) => project_floored_simplex(z, r, FLOOR),
        }
    }
}

/// Euclidean projection of a signed vector onto `||z||_1 <= r`.
pub fn project_l1_ball(z: &mut [f64], r: f64) {
    if z.iter().map(|v| v.abs()).sum::<f64>() <= r {
        return;
    }
    let mut mag: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    let tau = simplex_threshold(&mag, r);
    for (v, m) in z.iter_mut().zip(mag.iter_mut()) {
        *v = v.signum() * (*m - tau).max(0.0);
    }
}

/// Euclidean projection onto `{ z >= floor, sum z <= r }`.
pub fn project_floored_simplex(z: &mut [f64], r: f64, floor: f64) {
    for v in z.iter_mut() {
        *v = v.max(floor);
    }
    if z.iter().sum::<f64>() <= r {
        return;
    }
    let shifted: Vec<f64> = z.iter().map(|v| v - floor).collect();
    let budget = r - floor * z.len() as f64;
    let tau = simplex_threshold(&shifted, budget);
    for (v, s) in z.iter_mut().zip(&shifted) {
        *v = floor + (s - tau).max(0.0);
    }
}

// tau >= 0 with sum max(u_k - tau, 0) = budget, for u >= 0 summing above budget
fn simplex_threshold(u: &[f64], budget: f64) -> f64 {
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - budget) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        }
    }
    tau.max(0.0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes the prox objective over `set`; stops when the gradient mapping
/// norm falls to [`TOLERANCE`].
pub fn bregman_prox_oracle(
    neighbors: &[(Vec<f64>, Vec<f64>)],
    eta: f64,
    divergence: Divergence,
    set: FeasibleSet,
) -> Result<Vec<f64>> {
    let (w0, _) = neighbors
        .first()
        .ok_or_else(|| Error::Config("empty neighborhood".into()))?;
    let d = w0.len();
    if d > MAX_DIM || neighbors.len() > MAX_NEIGHBORS {
        return Err(Error::Config(format!(
            "prox oracle is limited to D <= {MAX_DIM} and N_i <= {MAX_NEIGHBORS}"
        )));
    }
    for (w, g) in neighbors {
        for len in [w.len(), g.len()] {
            if len != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: len,
                });
            }
        }
        if divergence == Divergence::Entropy {
            if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
    }
    let problem = Problem {
        neighbors,
        eta,
        divergence,
        set,
    };

    let mut z = w0.clone();
    problem.project(&mut z);
    let mut grad = problem.gradient(&z);
    let mut step = 1.0 / neighbors.len() as f64;
    let mut residual = f64::INFINITY;

    for _ in 0..MAX_ITERATIONS {
        // shrink until the local Lipschitz estimate of the gradient fits the step
        let (next, next_grad) = loop {
            let mut cand: Vec<f64> = z.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
            problem.project(&mut cand);
            let cand_grad = problem.gradient(&cand);
            let dz: Vec<f64> = cand.iter().zip(&z).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = cand_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let moved = norm(&dz);
            if moved == 0.0 || step * norm(&dg) <= moved || step < 1e-300 {
                break (cand, cand_grad);
            }
            step *= 0.5;
        };
        residual = next
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / step;
        z = next;
        grad = next_grad;
        if residual <= TOLERANCE {
            return Ok(z);
        }
        step *= 1.25;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_give_centroid() {
        let nb = vec![
            (vec![1.0, 2.0], vec![0.0, 0.0]),
            (vec![3.0, -2.0], vec![0.0, 0.0]),
            (vec![2.0, 3.0], vec![0.0, 0.0]),
        ];
        let z = bregman_prox_oracle(&nb, 1.0, Divergence::Euclidean, FeasibleSet::Unconstrained)
            .unwrap();
        assert!((z[0] - 2.0).abs() < 1e-9 && (z[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn entropy_zero_gradients_give_geometric_mean() {
        let nb = vec![(vec![1.0, 4.0], vec![0.0, 0.0]), (vec![4.0, 1.0], vec![0.0, 0.0])];
        let z = bregman_prox_oracle(&nb, 1.0, Divergence::Entropy, FeasibleSet::Unconstrained)
            .unwrap();
        assert!((z[0] - 2.0).abs() < 1e-8 && (z[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn simplex_projection() {
        let mut z = vec![3.0, 1.0];
        project_floored_simplex(&mut z, 2.0, 0.0);
        assert!((z[0] - 2.0).abs() < 1e-15 && z[1].abs() < 1e-15);
        let mut z = vec![2.0, -2.0];
        project_l1_ball(&mut z, 2.0);
        assert_eq!(z, vec![1.0, -1.0]);
        let mut z = vec![0.5, 0.5];
        project_floored_simplex(&mut z, 2.0, 0.0);
        assert_eq!(z, vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_oversized_and_bad_input() {
        let big = vec![(vec![1.0; 9], vec![0.0; 9])];
        assert!(bregman_prox_oracle(&big, 1.0, Divergence::Euclidean, FeasibleSet::Unconstrained)
            .is_err());
        let neg = vec![(vec![1.0, -1.0], vec![0.0, 0.0])];
        assert!(bregman_prox_oracle(&neg, 1.0, Divergence::Entropy, FeasibleSet::Unconstrained)
            .is_err());
    }
}
