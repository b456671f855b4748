use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use ddol::{Algorithm, PartitionStrategy, SyntheticSpec, TopologyKind};

#[derive(Debug, Parser)]
#[command(name = "ddol", version, about = "Run distributed online learning experiments")]
pub struct Cli {
    /// wma | rwm | dwm-i | dwm-a | drwm | ogd | eg | dogd | doeg
    #[arg(long, value_parser = parse_algorithm)]
    pub algo: Algorithm,

    /// Comma-separated agent counts; one run per value.
    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = clap::value_parser!(usize))]
    pub agents: Vec<usize>,

    #[arg(long, value_enum, default_value_t = TopologyArg::Complete)]
    pub topology: TopologyArg,

    /// LIBSVM file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,

    /// Synthetic stream `n,dim,margin,noise`, generated with --seed.
    #[arg(long, value_parser = parse_synthetic)]
    pub synthetic: Option<SyntheticArg>,

    /// Penalty factor of the weighted-majority rules.
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,

    /// Hinge scale for gradient descent (defaults known for cod-rna and covtype).
    #[arg(long = "C")]
    pub c: Option<f64>,

    /// l1 radius for exponentiated gradient (defaults known for cod-rna and covtype).
    #[arg(long = "S")]
    pub s: Option<f64>,

    /// Number of decision-stump experts.
    #[arg(long, default_value_t = 4)]
    pub experts: usize,

    /// Evenly spaced thresholds probed per stump.
    #[arg(long, default_value_t = 200)]
    pub probes: usize,

    /// Rounds per agent; defaults to the most every sweep value can afford.
    #[arg(long)]
    pub rounds: Option<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = PartitionArg::RoundRobin)]
    pub partition: PartitionArg,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Spread per-agent work over threads (results are identical either way).
    #[arg(long)]
    pub parallel: bool,

    /// Also write the per-round bound inputs of every run.
    #[arg(long)]
    pub emit_bounds: bool,

    /// Strong-convexity modulus for the regret bound (default 1 for
    /// gradient descent, 1/S for exponentiated gradient).
    #[arg(long)]
    pub strong_convexity: Option<f64>,

    /// Subgradient of the gradient-descent objective without the
    /// regularizer term.
    #[arg(long)]
    pub no_regularizer_gradient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Complete,
    Ring,
    Star,
}

impl From<TopologyArg> for TopologyKind {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Complete => TopologyKind::Complete,
            TopologyArg::Ring => TopologyKind::Ring,
            TopologyArg::Star => TopologyKind::Star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionArg {
    RoundRobin,
    Contiguous,
    Shuffled,
}

impl PartitionArg {
    pub fn strategy(self, seed: u64) -> PartitionStrategy {
        match self {
            PartitionArg::RoundRobin => PartitionStrategy::RoundRobin,
            PartitionArg::Contiguous => PartitionStrategy::ContiguousBlocks,
            PartitionArg::Shuffled => PartitionStrategy::Shuffled { seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticArg {
    pub n: usize,
    pub dim: usize,
    pub margin: f64,
    pub noise_rate: f64,
}

impl SyntheticArg {
    pub fn spec(self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n: self.n,
            dim: self.dim,
            margin: self.margin,
            noise_rate: self.noise_rate,
            seed,
        }
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: ddol::Error| e.to_string())
}

fn parse_synthetic(s: &str) -> Result<SyntheticArg, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, dim, margin, noise] = parts.as_slice() else {
        return Err(format!("expected n,dim,margin,noise, got `{s}`"));
    };
    let arg = SyntheticArg {
        n: n.parse().map_err(|_| format!("bad n `{n}`"))?,
        dim: dim.parse().map_err(|_| format!("bad dim `{dim}`"))?,
        margin: margin.parse().map_err(|_| format!("bad margin `{margin}`"))?,
        noise_rate: noise.parse().map_err(|_| format!("bad noise `{noise}`"))?,
    };
    if arg.n == 0 || arg.dim == 0 {
        return Err("n and dim must be positive".into());
    }
    if !(arg.margin > 0.0) {
        return Err("margin must be > 0".into());
    }
    if !(0.0..1.0).contains(&arg.noise_rate) {
        return Err("noise must lie in [0, 1)".into());
    }
    Ok(arg)
}

/// C and S used for the well-known datasets when not given explicitly.
pub fn known_defaults(path: &std::path::Path) -> Option<(f64, f64)> {
    let name = path.file_name()?.to_string_lossy().to_ascii_lowercase();
    if name.contains("cod-rna") || name.contains("cod_rna") || name.contains("codrna") {
        Some((1e-2, 1e4))
    } else if name.contains("covtype") {
        Some((1e4, 1e4))
    } else {
        None
    }
}
