//! Train on hill-climbing labels with MSE and MAE regression and compare
//! with the self-supervised network trained on the same evidence.

use std::sync::Arc;

use pcmmap::circuit::random_circuit;
use pcmmap::eval::{compare_with, generate_problems, label_with_hill_climb, problems_from_dataset, Baseline, ProblemMode, SsmpSolver};
use pcmmap::neural::{train_ssmp, train_supervised, SupervisedLoss, TrainConfig};
use pcmmap::sampler::generate_dataset;

fn main() -> pcmmap::Result<()> {
    let c = Arc::new(random_circuit(20, 2, 3, 3)?);
    let test = generate_problems(Arc::clone(&c), 0.4, ProblemMode::Mmap, 100, 77)?;
    let part = Arc::clone(test.partition().expect("non-empty set"));
    let data = generate_dataset(&c, &part, 1000, 3)?;

    let cfg = TrainConfig {
        epochs: 15,
        learning_rate: 3e-3,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let train_set = problems_from_dataset(Arc::clone(&c), Arc::clone(&part), &data)?;
    let labels = label_with_hill_climb(&train_set, 200, 5)?;

    let (ssmp, _) = train_ssmp(&c, &part, &data, &cfg)?;
    let (mse, _) = train_supervised(&c, &part, &labels, SupervisedLoss::Mse, &cfg)?;
    let (mae, _) = train_supervised(&c, &part, &labels, SupervisedLoss::Mae, &cfg)?;

    let named = |model, name: &str| NamedSolver {
        inner: SsmpSolver { model },
        name: name.to_string(),
    };
    let solvers = [named(ssmp, "ssmp"), named(mse, "mse"), named(mae, "mae")];
    let mut refs: Vec<&dyn pcmmap::eval::Solver> = solvers.iter().map(|s| s as _).collect();
    refs.push(&Baseline::BruteForce);
    println!("{}", compare_with(&refs, &test, 1)?);
    Ok(())
}

/// The same network-backed solver under a different report name.
struct NamedSolver {
    inner: SsmpSolver,
    name: String,
}

impl pcmmap::eval::Solver for NamedSolver {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn solve(&self, p: &pcmmap::MmapProblem) -> pcmmap::Result<pcmmap::MmapSolution> {
        self.inner.solve(p)
    }
}
