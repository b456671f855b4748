//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ddol::bounds::{domd_avg_regret_bound, dwm_a_bound, dwm_a_condition, dwm_i_bound};
use ddol::data::{gen_synthetic, parse_libsvm_str, SyntheticSpec};
use ddol::dwm::Wma;
use ddol::error::Error;
use ddol::exec::PARALLEL_AVAILABLE;
use ddol::experts::{train_stumps, ExpertPool};
use ddol::omd::prox::{bregman_prox_oracle, Divergence, FeasibleSet};
use ddol::omd::{doeg_update, dogd_update, OmdConfig};
use ddol::sim::{comparator_losses, replay_check, run, Algorithm, AlgorithmConfig, ExperimentSpec};
use ddol::types::{Label, LabeledExample, SparseVector};
use ddol::{Dataset, DwmConfig, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: &str, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "{} {id} {name}: {} [{:.2}s of {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", over budget" }
    );
    pass
}

fn synthetic(n: usize, dim: usize, margin: f64, noise_rate: f64, seed: u64) -> Arc<Dataset> {
    Arc::new(
        gen_synthetic(&SyntheticSpec {
            n,
            dim,
            margin,
            noise_rate,
            seed,
        })
        .unwrap(),
    )
}

fn dwm_spec(
    algo: Algorithm,
    data: &Arc<Dataset>,
    pool: &ExpertPool,
    n: usize,
    rounds: usize,
    alpha: f64,
    seed: u64,
) -> ExperimentSpec {
    let cfg = DwmConfig {
        alpha,
        n_agents: n,
        pool: pool.clone(),
        randomized: algo.is_randomized(),
    };
    ExperimentSpec::new(
        algo,
        Topology::complete(n).unwrap(),
        rounds,
        Arc::clone(data),
        AlgorithmConfig::Dwm(cfg),
        seed,
    )
}

fn omd_spec(algo: Algorithm, data: &Arc<Dataset>, topology: Topology, rounds: usize, c: f64, s: f64) -> ExperimentSpec {
    let n = topology.n_agents();
    let cfg = OmdConfig::new(algo.omd_variant().unwrap(), c, s, n);
    ExperimentSpec::new(algo, topology, rounds, Arc::clone(data), AlgorithmConfig::Omd(cfg), 0)
}

fn single_agent_reduction() -> Outcome {
    let mut mismatches = 0;
    for seed in 0..100u64 {
        let data = synthetic(1000, 4, 0.5, 0.1, seed);
        let pool = train_stumps(&data, 4, 200, seed).unwrap();
        for algo in [Algorithm::DwmI, Algorithm::DwmA] {
            let mut spec = dwm_spec(algo, &data, &pool, 1, 1000, 0.9, seed);
            spec.record_params = true;
            let m = run(&spec).unwrap();
            let history = m.param_history.as_ref().unwrap();
            let mut wma = Wma::new(pool.len(), 0.9);
            for (t, ex) in data.examples.iter().enumerate() {
                let pred = wma.step(&pool.predict_all(&ex.features), ex.label);
                let same_weights = history[t][0]
                    .iter()
                    .zip(&wma.weights)
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                if pred != m.predictions[t][0] || !same_weights {
                    mismatches += 1;
                    break;
                }
            }
            if m.final_mistakes()[0] != wma.mistakes {
                mismatches += 1;
            }
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("200 runs, {mismatches} diverging from the reference"),
    }
}

struct Suite {
    runs: usize,
    violations: usize,
    worst_ratio: f64,
    ordering_failures: usize,
    ordering_runs: usize,
    min_series_violations: usize,
    ordering_failures_by_n: Vec<(usize, usize)>,
}

fn mistake_suite(algo: Algorithm) -> Suite {
    const ROUNDS: usize = 300;
    let mut suite = Suite {
        runs: 0,
        violations: 0,
        worst_ratio: 0.0,
        ordering_failures: 0,
        ordering_runs: 0,
        min_series_violations: 0,
        ordering_failures_by_n: vec![(1, 0), (2, 0), (4, 0), (8, 0)],
    };
    for seed in 0..100u64 {
        let data = synthetic(8 * ROUNDS, 16, 0.3, 0.1, 1000 + seed);
        for p in [4usize, 16] {
            let pool = train_stumps(&data, p, 200, seed).unwrap();
            for alpha in [0.5, 0.9] {
                for (k, n) in [1usize, 2, 4, 8].into_iter().enumerate() {
                    let m = run(&dwm_spec(algo, &data, &pool, n, ROUNDS, alpha, seed)).unwrap();
                    replay_check(&m).unwrap();
                    let e = m.experts.as_ref().unwrap();
                    let i_bound = dwm_i_bound(e.m_star, n, p, alpha);
                    let a_bound = dwm_a_bound(&e.m_star_series, n, p, alpha);
                    let min_bound = dwm_a_bound(&e.round_min_series, n, p, alpha);
                    let bound = if algo == Algorithm::DwmA { a_bound } else { i_bound };
                    for &mi in &m.final_mistakes() {
                        suite.runs += 1;
                        if mi as f64 > bound {
                            suite.violations += 1;
                        }
                        if algo == Algorithm::DwmA && mi as f64 > min_bound {
                            suite.min_series_violations += 1;
                        }
                        suite.worst_ratio = suite.worst_ratio.max(mi as f64 / bound);
                    }
                    if alpha >= 0.5 {
                        suite.ordering_runs += 1;
                        if a_bound > i_bound {
                            suite.ordering_failures += 1;
                            suite.ordering_failures_by_n[k].1 += 1;
                        }
                    }
                }
            }
        }
    }
    suite
}

fn imitation_dominance() -> Outcome {
    let s = mistake_suite(Algorithm::DwmI);
    Outcome {
        pass: s.violations == 0,
        detail: format!(
            "{} agent results, {} above the bound, max M_i/bound = {:.3}",
            s.runs, s.violations, s.worst_ratio
        ),
    }
}

fn averaging_dominance() -> Outcome {
    let s = mistake_suite(Algorithm::DwmA);
    let by_n: Vec<String> = s
        .ordering_failures_by_n
        .iter()
        .map(|(n, f)| format!("N={n}:{f}"))
        .collect();
    Outcome {
        pass: s.violations == 0 && s.ordering_failures == 0,
        detail: format!(
            "{} agent results, {} above the bound (max ratio {:.3}); ordering violated on {}/{} runs ({}); \
             per-round-minimum series would give {} violations",
            s.runs,
            s.violations,
            s.worst_ratio,
            s.ordering_failures,
            s.ordering_runs,
            by_n.join(" "),
            s.min_series_violations
        ),
    }
}

fn constants() -> Outcome {
    let coef = dwm_i_bound(1, 1, 1, 0.5) - dwm_i_bound(0, 1, 1, 0.5);
    let coef_ok = (coef - 2.4094).abs() <= 1e-4;
    const GRID: usize = 10_000;
    let (mut inf, mut arg) = (f64::INFINITY, 0.0);
    for k in 1..=GRID {
        let alpha = 0.5 * k as f64 / (GRID + 1) as f64;
        let v = dwm_a_condition(alpha, 1).unwrap();
        if v < inf {
            inf = v;
            arg = alpha;
        }
    }
    Outcome {
        pass: coef_ok && inf >= 0.81,
        detail: format!(
            "coefficient {coef:.6} (target 2.4094 +- 1e-4); threshold/N infimum {inf:.4} at alpha {arg:.5} (target >= 0.81)"
        ),
    }
}

fn prox_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut worst_gd, mut worst_eg) = (0.0f64, 0.0f64);
    let mut errors = 0;
    for _ in 0..50 {
        for entropy in [false, true] {
            let d = rng.random_range(1..=5);
            let n = rng.random_range(1..=4);
            let nb: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
                .map(|_| {
                    (
                        (0..d).map(|_| rng.random_range(0.1..2.0)).collect(),
                        (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    )
                })
                .collect();
            let eta = if rng.random::<bool>() { 1.0 } else { 0.1 };
            let refs: Vec<(&[f64], &[f64])> =
                nb.iter().map(|(w, g)| (w.as_slice(), g.as_slice())).collect();
            let (closed, div) = if entropy {
                (doeg_update(&refs, eta, f64::INFINITY).unwrap(), Divergence::Entropy)
            } else {
                (dogd_update(&refs, eta).unwrap(), Divergence::Euclidean)
            };
            match bregman_prox_oracle(&nb, eta, div, FeasibleSet::Unconstrained) {
                Ok(z) => {
                    let gap = closed.iter().zip(&z).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    if entropy {
                        worst_eg = worst_eg.max(gap);
                    } else {
                        worst_gd = worst_gd.max(gap);
                    }
                }
                Err(_) => errors += 1,
            }
        }
    }
    Outcome {
        pass: errors == 0 && worst_gd <= 1e-6 && worst_eg <= 1e-6,
        detail: format!(
            "50+50 instances, max gap gradient {worst_gd:.2e}, exponentiated {worst_eg:.2e}, oracle failures {errors}"
        ),
    }
}

fn consensus() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2usize, 4, 8] {
        let data = synthetic(n * 1000, 8, 0.3, 0.05, n as u64);
        for (algo, c, s) in [(Algorithm::Dogd, 1.0, 1e4), (Algorithm::Doeg, 1.0, 1e4), (Algorithm::Doeg, 1.0, 4.0)] {
            let m = run(&omd_spec(algo, &data, Topology::complete(n).unwrap(), 1000, c, s)).unwrap();
            worst = worst.max(m.gradients.unwrap().max_param_spread);
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max pairwise parameter difference {worst:e}"),
    }
}

fn regret_dominance() -> Outcome {
    let mut violations = 0;
    let mut lines = Vec::new();
    for t in [1_000usize, 10_000] {
        for n in [1usize, 4] {
            let data = synthetic(n * t, 8, 0.5, 0.0, 7 + t as u64);
            for (algo, c, s) in [(Algorithm::Dogd, 1.0, 1e4), (Algorithm::Doeg, 1.0, 100.0)] {
                let spec = omd_spec(algo, &data, Topology::complete(n).unwrap(), t, c, s);
                let m = run(&spec).unwrap();
                let AlgorithmConfig::Omd(cfg) = &spec.config else { unreachable!() };
                let g = m.gradients.as_ref().unwrap();
                let zero_cmp = comparator_losses(&spec, &g.initial_params).unwrap();
                let avg_cmp = comparator_losses(&spec, &m.averaged_final_params()).unwrap();
                let losses = m.final_losses();
                let avg = |cmp: &[f64]| {
                    losses.iter().zip(cmp).map(|(l, c)| l - c).sum::<f64>() / n as f64
                };
                let diam = g.max_pairwise_divergence.max(g.max_start_divergence);
                let bound = domd_avg_regret_bound(diam, cfg.strong_convexity(), &g.aggregate_norms, n);
                let regret = avg(&zero_cmp);
                if regret > bound {
                    violations += 1;
                }
                lines.push(format!(
                    "{algo} T={t} N={n}: {regret:.1} <= {bound:.1} (vs final average {:.1})",
                    avg(&avg_cmp)
                ));
            }
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations; {}", lines.join("; ")),
    }
}

struct Trend {
    per_agent: Vec<(Algorithm, [f64; 3])>,
    social_n4: f64,
    single_full: f64,
}

fn trend_runs() -> Trend {
    const N_EXAMPLES: usize = 12_000;
    const BUDGET: usize = 3_000;
    const SEEDS: u64 = 20;
    let mut per_agent = vec![(Algorithm::DwmI, [0.0; 3]), (Algorithm::DwmA, [0.0; 3])];
    let (mut social_n4, mut single_full) = (0.0, 0.0);
    for seed in 0..SEEDS {
        let data = synthetic(N_EXAMPLES, 4, 0.5, 0.05, 500 + seed);
        let pool = train_stumps(&data, 4, 200, seed).unwrap();
        for (algo, acc) in per_agent.iter_mut() {
            for (k, n) in [1usize, 2, 4].into_iter().enumerate() {
                let m = run(&dwm_spec(*algo, &data, &pool, n, BUDGET, 0.9, seed)).unwrap();
                let mean = m.total_mistakes() as f64 / n as f64;
                acc[k] += mean / SEEDS as f64;
                if *algo == Algorithm::DwmI && n == 4 {
                    social_n4 += m.total_mistakes() as f64 / SEEDS as f64;
                }
            }
        }
        let m = run(&dwm_spec(Algorithm::DwmI, &data, &pool, 1, N_EXAMPLES, 0.9, seed)).unwrap();
        single_full += m.total_mistakes() as f64 / SEEDS as f64;
    }
    Trend {
        per_agent,
        social_n4,
        single_full,
    }
}

fn trend(t: &Trend) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (algo, m) in &t.per_agent {
        let ratio = m[2] / m[0];
        let monotone = m[1] <= m[0] && m[2] <= m[1];
        pass &= monotone && ratio <= 0.7;
        parts.push(format!(
            "{algo} M_i at N=1,2,4: {:.1}, {:.1}, {:.1} (N=4/N=1 = {ratio:.3}, target <= 0.7)",
            m[0], m[1], m[2]
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn parity(t: &Trend) -> Outcome {
    let ratio = t.social_n4 / t.single_full;
    Outcome {
        pass: ratio <= 1.25,
        detail: format!(
            "sum M_i at N=4 = {:.1}, single agent on all samples = {:.1}, ratio {ratio:.3} (target <= 1.25)",
            t.social_n4, t.single_full
        ),
    }
}

fn parallel_equivalence() -> Outcome {
    if !PARALLEL_AVAILABLE {
        return Outcome {
            pass: false,
            detail: "built without the `parallel` feature".into(),
        };
    }
    let mut compared = 0;
    let mut diverged = Vec::new();
    for n in [2usize, 4, 8] {
        let data = synthetic(n * 1000, 8, 0.3, 0.1, 40 + n as u64);
        let pool = train_stumps(&data, 4, 200, n as u64).unwrap();
        for algo in Algorithm::ALL {
            for topology in [Topology::complete(n).unwrap(), Topology::ring(n).unwrap()] {
                let mut spec = if algo.is_weighted_majority() {
                    let mut s = dwm_spec(algo, &data, &pool, n, 1000, 0.9, 99);
                    s.topology = topology;
                    s
                } else {
                    omd_spec(algo, &data, topology, 1000, 1.0, 50.0)
                };
                spec.record_params = true;
                spec.parallel = true;
                let a = run(&spec).unwrap();
                spec.parallel = false;
                let b = run(&spec).unwrap();
                compared += 1;
                if !a.bit_identical(&b) {
                    diverged.push(format!("{algo}/N={n}/{}", spec.topology.kind()));
                }
            }
        }
    }
    Outcome {
        pass: diverged.is_empty(),
        detail: format!("{compared} spec pairs compared, diverging: {diverged:?}"),
    }
}

fn parser_robustness() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10u64 {
        let dense = gen_synthetic(&SyntheticSpec {
            n: 200,
            dim: 6,
            margin: 0.2,
            noise_rate: 0.1,
            seed,
        })
        .unwrap();
        let sparse = {
            let dim = 30;
            let examples = (0..150)
                .map(|_| {
                    let mut entries = Vec::new();
                    for k in 0..dim - 1 {
                        if rng.random::<f64>() < 0.2 {
                            entries.push((k, rng.random_range(-1e3..1e3)));
                        }
                    }
                    entries.push((dim - 1, 1.0 / 3.0));
                    LabeledExample::new(
                        SparseVector::new(dim, entries).unwrap(),
                        Label::from_sign(rng.random()),
                    )
                })
                .collect();
            Dataset::new(examples, dim).unwrap()
        };
        for d in [dense, sparse] {
            let once = parse_libsvm_str(&d.to_libsvm()).unwrap();
            let twice = parse_libsvm_str(&once.to_libsvm()).unwrap();
            if once != d || twice != once || once.to_libsvm() != d.to_libsvm() {
                failures.push(format!("round trip seed {seed}"));
            }
        }
    }
    let corpus: [(&str, usize); 10] = [
        ("+1 1:1\n+1 3:1 2:1\n", 2),
        ("+1 1:1\n\n2 1:1\n", 3),
        ("+1 1:1\n-1 1:1\n+1 1-1\n", 3),
        ("# header\n+1 0:1\n", 2),
        ("+1 a:1\n", 1),
        ("+1 1:x\n", 1),
        ("+1 1:1\n+1 1:1\n-1 2:nan\n", 3),
        ("+1 1:1\n:1\n", 2),
        ("+1 2:1 2:3\n", 1),
        ("+1 1:1\n-1 1:1\n-1 1:1\n+1 -3:1\n", 4),
    ];
    for (k, (text, line)) in corpus.iter().enumerate() {
        match parse_libsvm_str(text) {
            Err(Error::Parse { line: got, .. }) if got == *line => {}
            other => failures.push(format!("case {}: {:?}", k + 1, other.map(|d| d.len()))),
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("20 round trips, 10 malformed inputs; failures: {failures:?}"),
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut all = true;
    all &= check("C1", "single-agent reduction", secs(5), single_agent_reduction);
    all &= check("C2", "imitation mistake bound", secs(60), imitation_dominance);
    all &= check("C3", "averaging mistake bound and ordering", secs(60), averaging_dominance);
    all &= check("C4", "constants", secs(1), constants);
    all &= check("C5", "closed form vs prox oracle", secs(30), prox_equivalence);
    all &= check("C6", "complete-graph consensus", secs(10), consensus);
    all &= check("C7", "regret bound", secs(60), regret_dominance);
    let mut trend_data = None;
    all &= check("C8", "agent-count trend", secs(60), || {
        let t = trend_runs();
        let o = trend(&t);
        trend_data = Some(t);
        o
    });
    let trend_data = trend_data.expect("trend runs");
    all &= check("C9", "social mistake parity", secs(60), || parity(&trend_data));
    all &= check("C10", "parallel equals sequential", secs(30), parallel_equivalence);
    all &= check("C11", "parser robustness", secs(1), parser_robustness);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
