//! Pick the entropy weight by k-fold cross-validation, then look at how far
//! the network outputs sit from 0/1 with and without the penalty.

use std::sync::Arc;

use pcmmap::circuit::random_circuit;
use pcmmap::eval::{random_partition, ProblemMode};
use pcmmap::neural::{cross_validate_alpha, predict_soft, train_ssmp, TrainConfig};
use pcmmap::sampler::generate_dataset;

fn main() -> pcmmap::Result<()> {
    let c = Arc::new(random_circuit(14, 2, 3, 2)?);
    let part = random_partition(c.n_vars(), 0.5, ProblemMode::Mmap, 1)?;
    let data = generate_dataset(&c, &part, 600, 2)?;
    let cfg = TrainConfig {
        epochs: 8,
        learning_rate: 3e-3,
        batch_size: 32,
        hidden: vec![32, 32],
        ..TrainConfig::default()
    };

    let report = cross_validate_alpha(&c, &part, &data, &[0.0, 0.1, 1.0, 10.0], 3, &cfg)?;
    for s in &report.scores {
        println!("alpha {:>5}: mean held-out ll {:.4}  folds {:.4?}", s.alpha, s.mean_ll, s.fold_ll);
    }
    println!("best alpha {}", report.best_alpha);

    for alpha in [0.0, report.best_alpha.max(10.0)] {
        let (model, _) = train_ssmp(&c, &part, &data, &TrainConfig { alpha, ..cfg.clone() })?;
        let outs = predict_soft(&model, &data.rows)?;
        let spread = outs.iter().map(|q| q.mean_distance_to_discrete()).sum::<f64>() / outs.len() as f64;
        println!("alpha {alpha}: mean min(q, 1-q) = {spread:.3e}");
    }
    Ok(())
}
