//! Load a circuit, check its structural properties and compute marginals.
//!
//! Run with `cargo run --example circuit_marginals`.

use pcmmap::{Assignment, Circuit, EvalMode};

fn main() -> pcmmap::Result<()> {
    let c = Circuit::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig1.json"))?;
    println!("{} nodes ({}) over {:?}", c.len(), c.counts(), c.variables());
    println!("{}", c.validate());

    for text in ["X3=1,X4=0", "X3=0,X4=1", "X1=1", ""] {
        let q = c.parse_assignment(text)?;
        println!("p{} = {:.6}  ln = {:.6}", c.format_assignment(&q), c.marginal(&q)?, c.log_marginal(&q)?);
    }

    // linear and signed-log evaluation agree on the full table of X3, X4
    let (x3, x4) = (c.var_index("X3")?, c.var_index("X4")?);
    for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
        let q = Assignment::from_pairs([(x3, a), (x4, b)]);
        let lv = c.leaf_values_for_marginal(&q)?;
        let lin = c.evaluate(&lv, EvalMode::Linear)?;
        let log = c.evaluate(&lv, EvalMode::SignedLog)?;
        println!("X3={} X4={}: {lin:.6} (signed-log path {log:.6})", u8::from(a), u8::from(b));
    }
    Ok(())
}
