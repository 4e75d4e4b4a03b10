//! Evaluate the relaxed query circuit at a fractional assignment and
//! differentiate it three ways.

use pcmmap::circuit::Circuit;
use pcmmap::{Assignment, MmapProblem, QpcContext, SoftAssignment, VariablePartition};
use std::sync::Arc;

fn main() -> pcmmap::Result<()> {
    let c = Arc::new(Circuit::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig1.json"))?);
    let part = Arc::new(VariablePartition::from_json(
        &c,
        r#"{"evidence":[],"query":["X3","X4"],"hidden":["X1","X2"]}"#,
    )?);
    let p = MmapProblem::new(c, part, Assignment::new())?;
    let ctx = QpcContext::from_problem(&p)?;

    let q = SoftAssignment::new(vec![0.99, 0.05])?;
    println!("v(q) = {:.7}", ctx.value(&q)?);
    for j in 0..q.len() {
        println!("dv/dq{j} by leaf substitution = {:.6}", ctx.grad_single(&q, j)?);
    }

    for alpha in [0.0, 0.5] {
        let loss = ctx.loss(&q, alpha)?;
        let rev = ctx.grad_loss(&q, alpha)?;
        let sub = ctx.grad_loss_by_substitution(&q, alpha)?;
        println!(
            "alpha {alpha}: loss {:.6} (nll {:.6}, entropy {:.6})\n  reverse mode {rev:.6?}\n  substitution {sub:.6?}",
            loss.total, loss.nll, loss.entropy_term
        );
    }

    // a few steps of projected gradient descent on the relaxation
    let mut x = q.values().to_vec();
    for _ in 0..200 {
        let g = ctx.grad_loss(&SoftAssignment::new(x.clone())?, 0.1)?;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi = (*xi - 0.05 * gi).clamp(0.0, 1.0);
        }
    }
    let x = SoftAssignment::new(x)?;
    println!("descended to {:.4?}, rounds to {:?}", x.values(), x.round());
    Ok(())
}
