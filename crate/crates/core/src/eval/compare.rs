use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problems::{ProblemSet, ProblemSetMeta};
use crate::circuit::Assignment;
use crate::error::{Error, Result};
use crate::mmap::{brute_force_mmap, hill_climb, max_approx, ml_approx, seq_approx, MmapProblem, MmapSolution};
use crate::neural::{predict_mmap, LabeledExample, MlpModel};
use crate::sampler::substream;

/// Anything that maps an MMAP problem to a scored query assignment.
pub trait Solver: Sync {
    fn name(&self) -> String;
    fn solve(&self, p: &MmapProblem) -> Result<MmapSolution>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Max,
    Ml,
    Seq,
    BruteForce,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Baseline::Max),
            "ml" => Ok(Baseline::Ml),
            "seq" => Ok(Baseline::Seq),
            "bruteforce" => Ok(Baseline::BruteForce),
            other => Err(Error::Parse(format!("unknown baseline `{other}`"))),
        }
    }
}

impl Solver for Baseline {
    fn name(&self) -> String {
        match self {
            Baseline::Max => "max",
            Baseline::Ml => "ml",
            Baseline::Seq => "seq",
            Baseline::BruteForce => "bruteforce",
        }
        .to_string()
    }

    fn solve(&self, p: &MmapProblem) -> Result<MmapSolution> {
        match self {
            Baseline::Max => max_approx(p),
            Baseline::Ml => ml_approx(p),
            Baseline::Seq => seq_approx(p),
            Baseline::BruteForce => brute_force_mmap(p),
        }
    }
}

/// Uniformly random assignment to the query variables.
pub fn random_query<R: Rng>(p: &MmapProblem, rng: &mut R) -> Assignment {
    Assignment::from_pairs(p.partition.query().iter().map(|&v| (v, rng.gen::<bool>())))
}

/// Hill climbing from a random start derived from `seed` and the evidence,
/// so the same problem always gets the same run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HillClimbSolver {
    pub iters: usize,
    pub seed: u64,
}

impl Solver for HillClimbSolver {
    fn name(&self) -> String {
        "hillclimb".into()
    }

    fn solve(&self, p: &MmapProblem) -> Result<MmapSolution> {
        let bits = p.evidence_bits();
        let key = bits.iter().fold(0u64, |h, &b| h.rotate_left(1) ^ u64::from(b));
        let mut rng = substream(self.seed, key);
        let init = random_query(p, &mut rng);
        hill_climb(p, &init, self.iters, rng.gen())
    }
}

pub struct SsmpSolver {
    pub model: MlpModel,
}

impl Solver for SsmpSolver {
    fn name(&self) -> String {
        "ssmp".into()
    }

    fn solve(&self, p: &MmapProblem) -> Result<MmapSolution> {
        predict_mmap(&self.model, p)
    }
}

/// Per-method results, one entry per problem in problem-set order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// Mean over finite scores; `None` when every score was `-inf`.
    pub mean_ll: Option<f64>,
    pub std_ll: Option<f64>,
    /// Problems left out of the mean because their score is `-inf`.
    pub excluded: usize,
    pub mean_time_secs: f64,
    /// `None` encodes a score of `-inf`.
    pub scores: Vec<Option<f64>>,
    pub times_secs: Vec<f64>,
    pub errors: Vec<Option<String>>,
}

impl MethodReport {
    pub fn score(&self, i: usize) -> f64 {
        self.scores[i].unwrap_or(f64::NEG_INFINITY)
    }

    /// Mean log-likelihood with `-inf` standing in for an empty mean.
    pub fn mean_or_neg_inf(&self) -> f64 {
        self.mean_ll.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    #[serde(flatten)]
    pub problems: ProblemSetMeta,
    pub n_problems: usize,
    pub timing_reps: usize,
    /// Scores are rounded to this grid before contingency comparisons.
    pub tie_resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: ReportMeta,
    pub methods: Vec<MethodReport>,
}

pub const TIMING_REPS: usize = 5;
pub const TIE_RESOLUTION: f64 = 1e-9;

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort_unstable();
    xs[xs.len() / 2]
}

pub fn compare(methods: &[&dyn Solver], ps: &ProblemSet) -> Result<EvalReport> {
    compare_with(methods, ps, TIMING_REPS)
}

/// Run every method on every problem. Solver errors become `-inf` scores
/// with the message kept; they never abort the sweep.
pub fn compare_with(methods: &[&dyn Solver], ps: &ProblemSet, timing_reps: usize) -> Result<EvalReport> {
    if methods.is_empty() {
        return Err(Error::InvalidSpec("no methods to compare".into()));
    }
    let reps = timing_reps.max(1);
    // problems in parallel, methods on one problem sequentially
    let cells: Vec<Vec<(f64, Duration, Option<String>)>> = ps
        .problems
        .par_iter()
        .map(|p| {
            methods
                .iter()
                .map(|m| {
                    let mut times = Vec::with_capacity(reps);
                    let mut outcome = None;
                    for _ in 0..reps {
                        let start = Instant::now();
                        let r = m.solve(p);
                        times.push(start.elapsed());
                        outcome = Some(r);
                    }
                    let t = median(times);
                    match outcome.expect("at least one repetition") {
                        Ok(s) => (s.log_score, t, None),
                        Err(e) => (f64::NEG_INFINITY, t, Some(e.to_string())),
                    }
                })
                .collect()
        })
        .collect();

    let reports = methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let scores: Vec<f64> = cells.iter().map(|row| row[k].0).collect();
            let times: Vec<f64> = cells.iter().map(|row| row[k].1.as_secs_f64()).collect();
            let finite: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
            let (mean, std) = mean_std(&finite);
            MethodReport {
                method: m.name(),
                mean_ll: mean,
                std_ll: std,
                excluded: scores.len() - finite.len(),
                mean_time_secs: if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 },
                scores: scores.iter().map(|&s| s.is_finite().then_some(s)).collect(),
                times_secs: times,
                errors: cells.iter().map(|row| row[k].2.clone()).collect(),
            }
        })
        .collect();
    Ok(EvalReport {
        meta: ReportMeta {
            problems: ps.meta.clone(),
            n_problems: ps.len(),
            timing_reps: reps,
            tie_resolution: TIE_RESOLUTION,
        },
        methods: reports,
    })
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Signed percentage difference `100 * (a - b) / |b|`.
pub fn percent_diff(ll_a: f64, ll_b: f64) -> Result<f64> {
    if ll_b == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok(100.0 * (ll_a - ll_b) / ll_b.abs())
}

/// Hill-climbing labels for supervised training: a seeded random start per
/// problem, then `iters` rounds; the label is the best assignment found.
pub fn label_with_hill_climb(ps: &ProblemSet, iters: usize, seed: u64) -> Result<Vec<LabeledExample>> {
    ps.problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let init = random_query(p, &mut rng);
            let best = hill_climb(p, &init, iters, rng.gen())?;
            Ok(LabeledExample {
                evidence: p.evidence_bits(),
                label: best.q.bits(p.partition.query()),
            })
        })
        .collect()
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.methods.iter().map(|m| m.method.len()).max().unwrap_or(6).max(6);
        writeln!(
            f,
            "{:<width$}  {:>12}  {:>10}  {:>8}  {:>12}",
            "method", "mean LL", "std", "excluded", "mean time"
        )?;
        for m in &self.methods {
            let opt = |x: Option<f64>| x.map_or("-inf".to_string(), crate::display::sig6);
            writeln!(
                f,
                "{:<width$}  {:>12}  {:>10}  {:>8}  {:>11}s",
                m.method,
                opt(m.mean_ll),
                m.std_ll.map_or("-".to_string(), crate::display::sig6),
                m.excluded,
                crate::display::sig6(m.mean_time_secs)
            )?;
        }
        Ok(())
    }
}
