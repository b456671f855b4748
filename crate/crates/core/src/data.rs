//! Datasets: LIBSVM parsing and serialization, synthetic streams with a
//! hidden separating hyperplane, and partitioning across agents.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LineError, Result};
use crate::types::{Label, LabeledExample, SparseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub dim: usize,
}

impl Dataset {
    /// Builds a dataset, lifting every feature vector to the common dimension.
    pub fn new(examples: Vec<LabeledExample>, dim: usize) -> Result<Self> {
        let examples = examples
            .into_iter()
            .map(|ex| {
                let label = ex.label;
                ex.features
                    .with_dim(dim)
                    .map(|features| LabeledExample { features, label })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { examples, dim })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.examples.iter().filter(|e| e.label == label).count()
    }

    pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        parse_libsvm(BufReader::new(file))
    }

    /// Writes the dataset in LIBSVM format with 1-based indices.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for ex in &self.examples {
            out.push_str(match ex.label {
                Label::Pos => "+1",
                Label::Neg => "-1",
            });
            for &(idx, val) in ex.features.entries() {
                // f64 Display is the shortest representation that round-trips.
                let _ = write!(out, " {}:{}", idx + 1, val);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses LIBSVM text. Blank lines and `#` comments are skipped; label `0`
/// is read as `-1`; indices are 1-based on input and 0-based in the result.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut examples = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        if content.trim().is_empty() {
            continue;
        }
        let (label, entries) =
            parse_line(content).map_err(|kind| Error::Parse { line: lineno, kind })?;
        if let Some(&(last, _)) = entries.last() {
            dim = dim.max(last + 1);
        }
        examples.push((label, entries));
    }
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let examples = examples
        .into_iter()
        .map(|(label, entries)| {
            SparseVector::new(dim, entries).map(|features| LabeledExample { features, label })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { examples, dim })
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

fn parse_line(content: &str) -> std::result::Result<(Label, Vec<(usize, f64)>), LineError> {
    let mut tokens = content.split_whitespace();
    let label_tok = tokens.next().ok_or(LineError::MissingLabel)?;
    let label = match label_tok.parse::<f64>() {
        Ok(v) if v == 1.0 => Label::Pos,
        Ok(v) if v == -1.0 || v == 0.0 => Label::Neg,
        _ => return Err(LineError::InvalidLabel(label_tok.to_string())),
    };
    let mut entries = Vec::new();
    let mut previous: Option<usize> = None;
    for tok in tokens {
        let (idx_str, val_str) = tok
            .split_once(':')
            .ok_or_else(|| LineError::MissingColon(tok.to_string()))?;
        let index: usize = idx_str
            .parse()
            .map_err(|_| LineError::InvalidIndex(tok.to_string()))?;
        if index == 0 {
            return Err(LineError::ZeroIndex);
        }
        let value: f64 = val_str
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| LineError::InvalidValue(tok.to_string()))?;
        if let Some(p) = previous {
            if index <= p {
                return Err(LineError::NonIncreasingIndex { previous: p, index });
            }
        }
        previous = Some(index);
        if value != 0.0 {
            entries.push((index - 1, value));
        }
    }
    Ok((label, entries))
}

/// How a dataset is dealt out to agent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy")]
pub enum PartitionStrategy {
    /// Example `k` goes to agent `k mod N`.
    RoundRobin,
    /// Consecutive blocks; the first `n mod N` agents get one extra example.
    ContiguousBlocks,
    /// Seeded permutation, then round-robin.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub strategy: PartitionStrategy,
    pub n_agents: usize,
}

impl PartitionPlan {
    pub fn new(strategy: PartitionStrategy, n_agents: usize) -> Self {
        Self { strategy, n_agents }
    }

    pub fn round_robin(n_agents: usize) -> Self {
        Self::new(PartitionStrategy::RoundRobin, n_agents)
    }
}

/// Example indices assigned to each agent, in stream order.
pub fn partition_indices(len: usize, plan: &PartitionPlan) -> Result<Vec<Vec<usize>>> {
    let n = plan.n_agents;
    if n == 0 || n > len {
        return Err(Error::NotEnoughExamples {
            examples: len,
            agents: n,
        });
    }
    let deal = |order: Vec<usize>| {
        let mut streams = vec![Vec::with_capacity(len / n + 1); n];
        for (k, idx) in order.into_iter().enumerate() {
            streams[k % n].push(idx);
        }
        streams
    };
    let streams = match plan.strategy {
        PartitionStrategy::RoundRobin => deal((0..len).collect()),
        PartitionStrategy::Shuffled { seed } => {
            let mut order: Vec<usize> = (0..len).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            deal(order)
        }
        PartitionStrategy::ContiguousBlocks => {
            let base = len / n;
            let extra = len % n;
            let mut start = 0;
            (0..n)
                .map(|i| {
                    let size = base + usize::from(i < extra);
                    let block = (start..start + size).collect();
                    start += size;
                    block
                })
                .collect()
        }
    };
    Ok(streams)
}

pub fn partition(dataset: &Dataset, plan: &PartitionPlan) -> Result<Vec<Vec<LabeledExample>>> {
    Ok(partition_indices(dataset.len(), plan)?
        .into_iter()
        .map(|stream| {
            stream
                .into_iter()
                .map(|k| dataset.examples[k].clone())
                .collect()
        })
        .collect())
}

/// Replay manifest for a synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub dim: usize,
    pub margin: f64,
    pub noise_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A synthetic dataset plus the ground truth used to build it.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Unit normal of the hidden hyperplane through the origin.
    pub normal: Vec<f64>,
    /// Labels before noise flips.
    pub clean_labels: Vec<Label>,
}

/// Draws points uniformly from `[-1, 1]^dim`, then pushes each one away from
/// the hidden hyperplane by `margin` along the normal so that every clean
/// point satisfies `|<normal, x>| >= margin`. Labels are flipped
/// independently with probability `noise_rate`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    if !(spec.margin > 0.0 && spec.margin.is_finite()) {
        return Err(Error::Config(format!("margin must be > 0, got {}", spec.margin)));
    }
    if !(0.0..1.0).contains(&spec.noise_rate) {
        return Err(Error::Config(format!(
            "noise_rate must be in [0, 1), got {}",
            spec.noise_rate
        )));
    }
    if spec.dim == 0 || spec.n == 0 {
        return Err(Error::Config("synthetic data needs n >= 1 and dim >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = loop {
        let v: Vec<f64> = (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };
    let mut examples = Vec::with_capacity(spec.n);
    let mut clean_labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut x: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let z: f64 = x.iter().zip(&normal).map(|(a, b)| a * b).sum();
        let positive = z >= 0.0;
        let target = if positive {
            spec.margin + z.abs()
        } else {
            -(spec.margin + z.abs())
        };
        for (xi, ui) in x.iter_mut().zip(&normal) {
            *xi += (target - z) * ui;
        }
        let clean = Label::from_sign(positive);
        let flipped: bool = rng.random::<f64>() < spec.noise_rate;
        let label = if flipped { clean.flip() } else { clean };
        clean_labels.push(clean);
        examples.push(LabeledExample::new(SparseVector::from_dense(&x), label));
    }
    Ok(Synthetic {
        dataset: Dataset {
            examples,
            dim: spec.dim,
        },
        normal,
        clean_labels,
    })
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    generate_synthetic(spec).map(|s| s.dataset)
}
