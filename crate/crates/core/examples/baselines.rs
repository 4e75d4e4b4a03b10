//! Compare the classical approximations against the exact optimum on a set
//! of random MMAP problems.

use std::sync::Arc;

use pcmmap::circuit::random_circuit;
use pcmmap::eval::{compare, generate_problems, Baseline, HillClimbSolver, ProblemMode, Solver};
use pcmmap::mmap::{brute_force_mmap, hill_climb_trace, max_approx};

fn main() -> pcmmap::Result<()> {
    let c = Arc::new(random_circuit(14, 2, 3, 11)?);
    let ps = generate_problems(Arc::clone(&c), 0.5, ProblemMode::Mmap, 50, 3)?;
    let (e, q, h) = ps.partition().expect("non-empty set").sizes();
    println!("{} nodes; |E|={e} |Q|={q} |H|={h}; {} problems", c.len(), ps.len());

    let hc = HillClimbSolver { iters: 200, seed: 1 };
    let methods: [&dyn Solver; 5] = [&Baseline::Max, &Baseline::Ml, &Baseline::Seq, &hc, &Baseline::BruteForce];
    println!("{}", compare(&methods, &ps)?);

    // hill climbing from the max-product answer on the first problem
    let p = &ps.problems[0];
    let start = max_approx(p)?;
    let trace = hill_climb_trace(p, &start.q, 30, 0)?;
    println!(
        "problem 0: max {:.4} -> hill climb {:.4}, optimum {:.4}",
        start.log_score,
        trace.solution.log_score,
        brute_force_mmap(p)?.log_score
    );
    Ok(())
}
