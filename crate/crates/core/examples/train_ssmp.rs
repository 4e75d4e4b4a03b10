//! Train an amortized MMAP solver with the self-supervised objective and
//! score it on held-out problems.
//!
//! `cargo run --release --example train_ssmp`

use std::sync::Arc;

use pcmmap::circuit::random_circuit;
use pcmmap::eval::{compare_with, generate_problems, Baseline, ProblemMode, SsmpSolver};
use pcmmap::neural::{train_ssmp, MlpModel, TrainConfig};
use pcmmap::sampler::generate_dataset;

fn main() -> pcmmap::Result<()> {
    let c = Arc::new(random_circuit(20, 2, 3, 0)?);
    let test = generate_problems(Arc::clone(&c), 0.5, ProblemMode::Mmap, 200, 1000)?;
    let part = Arc::clone(test.partition().expect("non-empty set"));
    let data = generate_dataset(&c, &part, 2000, 7)?;

    let cfg = TrainConfig {
        epochs: 20,
        learning_rate: 3e-3,
        batch_size: 32,
        validation_fraction: 0.1,
        ..TrainConfig::default()
    };
    let (model, history) = train_ssmp(&c, &part, &data, &cfg)?;
    for r in &history.epochs {
        println!(
            "epoch {:>2}  lr {:.2e}  loss {:.4}  entropy {:.4}  val ll {:?}",
            r.epoch, r.learning_rate, r.loss, r.entropy, r.val_ll
        );
    }

    // the saved model reloads bit for bit
    let json = model.to_json();
    assert_eq!(MlpModel::from_json(&json)?, model);

    let ssmp = SsmpSolver { model };
    println!("{}", compare_with(&[&ssmp, &Baseline::Max, &Baseline::Ml, &Baseline::Seq], &test, 1)?);
    Ok(())
}
