//! Draw samples from a circuit and write the evidence columns of a partition
//! as a CSV dataset.

use std::sync::Arc;

use pcmmap::circuit::{random_circuit, Circuit};
use pcmmap::eval::{random_partition, ProblemMode};
use pcmmap::sampler::{generate_dataset, sample_many, EvidenceDataset};

fn main() -> pcmmap::Result<()> {
    let fig1 = Circuit::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig1.json"))?;
    let n = 50_000;
    let rows = sample_many(&fig1, n, 42)?;
    for v in 0..fig1.n_vars() {
        let freq = rows.iter().filter(|r| r[v] == 1).count() as f64 / n as f64;
        let exact = fig1.marginal(&fig1.parse_assignment(&format!("{}=1", fig1.var_name(v)))?)?;
        println!("{}: sampled {freq:.4}, exact {exact:.4}", fig1.var_name(v));
    }

    let c = Arc::new(random_circuit(8, 2, 2, 5)?);
    let part = random_partition(c.n_vars(), 0.25, ProblemMode::Mmap, 9)?;
    let data = generate_dataset(&c, &part, 5, 1)?;
    let text = data.to_csv_string();
    print!("{text}");
    let back = EvidenceDataset::read_csv(text.as_bytes())?;
    assert_eq!(back.rows, data.rows);
    Ok(())
}
