//! Evaluate several methods on a family of random circuits and tabulate how
//! often each beats the others.

use std::sync::Arc;

use pcmmap::circuit::random_circuit;
use pcmmap::eval::{
    compare_with, contingency, generate_problems, percent_diff, Baseline, EvalReport, ProblemMode, Solver, SsmpSolver,
};
use pcmmap::neural::{train_ssmp, TrainConfig};
use pcmmap::sampler::generate_dataset;

fn main() -> pcmmap::Result<()> {
    let cfg = TrainConfig {
        epochs: 10,
        learning_rate: 3e-3,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let mut reports: Vec<EvalReport> = Vec::new();
    for seed in 0..5 {
        let c = Arc::new(random_circuit(16, 2, 3, seed)?);
        let test = generate_problems(Arc::clone(&c), 0.5, ProblemMode::Mmap, 60, 500 + seed)?;
        let part = Arc::clone(test.partition().expect("non-empty set"));
        let (model, _) = train_ssmp(&c, &part, &generate_dataset(&c, &part, 800, seed)?, &cfg)?;
        let ssmp = SsmpSolver { model };
        let methods: [&dyn Solver; 4] = [&ssmp, &Baseline::Max, &Baseline::Ml, &Baseline::Seq];
        let r = compare_with(&methods, &test, 1)?;
        let (a, b) = (r.methods[0].mean_or_neg_inf(), r.methods[1].mean_or_neg_inf());
        println!("circuit {seed}: ssmp {a:.4}  max {b:.4}  ({:+.2}%)", percent_diff(a, b)?);
        reports.push(r);
    }

    let table = contingency(&reports)?;
    println!("\nwins of row over column across {} circuits\n{table}", table.total);
    print!("{}", table.to_csv()?);
    Ok(())
}
