//! Worst-case decision benchmark: every rule targets the probed endpoint and
//! is triggered by a label the request carries, so every rule is evaluated
//! and matches.

use std::fmt::Write;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::compiler::{compile, CompiledPolicy};
use crate::labels::LabelSet;
use crate::logic::Term;
use crate::policy::{Decision, Effect, FlowRule, PolicyAst, ServiceDecl};

use super::{decide, measure_peak, DecisionRequest};

pub const BENCH_TARGET: &str = "https://sink.example/ingest";

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub rules: Vec<usize>,
    pub labels: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_rules: usize,
    pub n_labels: usize,
    pub mean_us: f64,
    pub p95_us: f64,
    /// Peak incremental heap bytes of one decision; 0 without the counting
    /// allocator.
    pub mem_bytes: usize,
}

/// `n` rules, each with its own service on `http[s]?://.+`, all triggered
/// by `raw`.
pub fn worst_case_policy(n: usize) -> CompiledPolicy {
    let mut ast = PolicyAst::default();
    for i in 0..n {
        let id = format!("svc{i}");
        ast.services.push(ServiceDecl::new(&id, "http[s]?://.+"));
        ast.rules.push(FlowRule {
            name: format!("rule{i}"),
            target: id,
            trigger_labels: vec![Term::atom("raw")],
            decision: Decision {
                effect: Effect::Drop,
                obligations: Vec::new(),
            },
        });
    }
    compile(&ast)
}

/// `raw` plus `n - 1` distinct random labels.
fn labels(n: usize, rng: &mut StdRng) -> LabelSet {
    let mut set = LabelSet::new();
    set.insert(Term::atom("raw"));
    while set.len() < n.max(1) {
        let v: u32 = rng.gen();
        set.insert(Term::compound("tag", vec![Term::int(i64::from(v))]));
    }
    set
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// One row per `(rules, labels)` combination, rules-major.
pub fn bench_decide(cfg: &BenchConfig) -> Vec<BenchRow> {
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let trials = cfg.trials.max(1);
    let mut rows = Vec::new();
    for &n_rules in &cfg.rules {
        let policy = worst_case_policy(n_rules);
        for &n_labels in &cfg.labels {
            let set = labels(n_labels, &mut rng);
            let req = DecisionRequest::new(BENCH_TARGET, &set);
            // warm up regex caches and the allocator
            for _ in 0..3 {
                std::hint::black_box(decide(&policy, &req));
            }
            let mut times = Vec::with_capacity(trials);
            let mut mem = 0usize;
            for _ in 0..trials {
                let start = Instant::now();
                let r = decide(&policy, &req);
                times.push(start.elapsed().as_secs_f64() * 1e6);
                drop(std::hint::black_box(r));
            }
            let (_, peak) = measure_peak(|| std::hint::black_box(decide(&policy, &req)));
            if let Some(p) = peak {
                mem = p;
            }
            times.sort_by(f64::total_cmp);
            rows.push(BenchRow {
                n_rules,
                n_labels,
                mean_us: times.iter().sum::<f64>() / times.len() as f64,
                p95_us: percentile(&times, 0.95),
                mem_bytes: mem,
            });
        }
    }
    rows
}

pub fn format_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n_rules,n_labels,mean_us,p95_us,mem_bytes\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.3},{:.3},{}",
            r.n_rules, r.n_labels, r.mean_us, r.p95_us, r.mem_bytes
        );
    }
    out
}

/// Ordinary least squares `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}
