use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MmapProblem, MmapSolution};
use crate::circuit::Assignment;
use crate::error::{Error, Result};

/// Best-ever and current scores after each round of a hill-climbing run.
#[derive(Debug, Clone)]
pub struct HillClimbTrace {
    pub solution: MmapSolution,
    pub best_scores: Vec<f64>,
    pub current_scores: Vec<f64>,
}

/// Stochastic hill climbing over single-bit flips of the query assignment.
///
/// Each round scores all `M` flips of the current assignment and takes the
/// best one if it strictly improves (ties go to the lower variable index).
/// When no flip improves, a uniformly random bit is flipped instead. The best
/// assignment seen so far is returned.
pub fn hill_climb(p: &MmapProblem, init: &Assignment, iters: usize, seed: u64) -> Result<MmapSolution> {
    hill_climb_trace(p, init, iters, seed).map(|t| t.solution)
}

pub fn hill_climb_trace(p: &MmapProblem, init: &Assignment, iters: usize, seed: u64) -> Result<HillClimbTrace> {
    let start = Instant::now();
    let mut vars = p.partition.query().to_vec();
    vars.sort_unstable();
    if !init.vars().eq(vars.iter().copied()) {
        return Err(Error::InvalidSpec("initial assignment must cover exactly the query variables".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = init.clone();
    let mut current_score = p.score(&current)?;
    let mut best = current.clone();
    let mut best_score = current_score;
    let mut best_scores = Vec::with_capacity(iters);
    let mut current_scores = Vec::with_capacity(iters);

    for _ in 0..iters {
        let mut step: Option<(f64, usize)> = None;
        for &v in &vars {
            let mut cand = current.clone();
            cand.set(v, !current.get(v).expect("init covers the query"));
            let s = p.score(&cand)?;
            if s > current_score && step.is_none_or(|(b, _)| s > b) {
                step = Some((s, v));
            }
        }
        let (v, s) = match step {
            Some((s, v)) => (v, s),
            None => {
                let v = vars[rng.gen_range(0..vars.len())];
                let mut cand = current.clone();
                cand.set(v, !current.get(v).expect("init covers the query"));
                (v, p.score(&cand)?)
            }
        };
        current.set(v, !current.get(v).expect("init covers the query"));
        current_score = s;
        if current_score > best_score {
            best_score = current_score;
            best = current.clone();
        }
        best_scores.push(best_score);
        current_scores.push(current_score);
    }

    Ok(HillClimbTrace {
        solution: MmapSolution {
            q: best,
            log_score: best_score,
            method: "hillclimb".to_string(),
            elapsed: start.elapsed(),
        },
        best_scores,
        current_scores,
    })
}
