//! Domain types shared by every algorithm: sparse feature vectors,
//! binary labels, labeled examples and per-agent state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Validates ordering, bounds and finiteness. Explicit zeros are dropped.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        let mut prev: Option<usize> = None;
        for &(idx, value) in &entries {
            if idx >= dim {
                return Err(Error::SparseVector(format!(
                    "index {idx} out of range for dimension {dim}"
                )));
            }
            if let Some(p) = prev {
                if idx <= p {
                    return Err(Error::SparseVector(format!(
                        "index {idx} does not increase after {p}"
                    )));
                }
            }
            if !value.is_finite() {
                return Err(Error::SparseVector(format!(
                    "non-finite value at index {idx}"
                )));
            }
            prev = Some(idx);
        }
        let entries = entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        Ok(Self { dim, entries })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        Self {
            dim: values.len(),
            entries,
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Value at `idx`; absent entries read as zero.
    pub fn get(&self, idx: usize) -> f64 {
        match self.entries.binary_search_by_key(&idx, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Inner product with a dense vector. Entries beyond `dense.len()` are ignored.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .filter(|&&(i, _)| i < dense.len())
            .map(|&(i, v)| v * dense[i])
            .sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// Same entries, reinterpreted in a (larger) ambient dimension.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if let Some(&(last, _)) = self.entries.last() {
            if last >= dim {
                return Err(Error::SparseVector(format!(
                    "index {last} out of range for dimension {dim}"
                )));
            }
        }
        self.dim = dim;
        Ok(self)
    }
}

/// Binary class label, serialized as `1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        l.value()
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        Label::try_from(i64::from(v))
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::Config(format!("label {other} is not in {{-1, +1}}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: SparseVector,
    pub label: Label,
}

impl LabeledExample {
    pub fn new(features: SparseVector, label: Label) -> Self {
        Self { features, label }
    }
}

/// Per-agent learner state between synchronization points.
///
/// `params` holds expert weights (length P) for weighted majority, model
/// weights (length D) for gradient descent, or the stacked `(w+, w-)` pair
/// (length 2D) for exponentiated gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub params: Vec<f64>,
    pub mistakes: u64,
    pub loss: f64,
}

impl AgentState {
    pub fn new(id: usize, params: Vec<f64>) -> Self {
        Self {
            id,
            params,
            mistakes: 0,
            loss: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_rejects_bad_order() {
        assert!(SparseVector::new(4, vec![(2, 1.0), (1, 1.0)]).is_err());
        assert!(SparseVector::new(4, vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::new(2, vec![(2, 1.0)]).is_err());
        assert!(SparseVector::new(2, vec![(0, f64::NAN)]).is_err());
    }

    #[test]
    fn sparse_drops_zeros_and_reads_absent_as_zero() {
        let v = SparseVector::new(5, vec![(0, 0.0), (2, 3.0), (4, -1.0)]).unwrap();
        assert_eq!(v.nnz(), 2);
        assert_eq!(v.get(0), 0.0);
        assert_eq!(v.get(2), 3.0);
        assert_eq!(v.get(3), 0.0);
        assert_eq!(v.dot(&[1.0, 1.0, 2.0, 1.0, 1.0]), 5.0);
        assert_eq!(v.to_dense(), vec![0.0, 0.0, 3.0, 0.0, -1.0]);
    }

    #[test]
    fn label_values() {
        assert_eq!(Label::Pos.value(), 1);
        assert_eq!(Label::Neg.as_f64(), -1.0);
        assert_eq!(Label::Pos.flip(), Label::Neg);
        assert!(Label::try_from(0i64).is_err());
        assert_eq!(serde_json::to_string(&Label::Neg).unwrap(), "-1");
    }
}
