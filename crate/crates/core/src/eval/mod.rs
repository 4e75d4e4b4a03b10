//! Benchmark problem sets, method comparison and reporting.

mod compare;
mod contingency;
mod problems;
mod report;

pub use compare::{
    compare, compare_with, label_with_hill_climb, percent_diff, random_query, Baseline, EvalReport, HillClimbSolver,
    MethodReport, ReportMeta, Solver, SsmpSolver, TIE_RESOLUTION, TIMING_REPS,
};
pub use contingency::{contingency, ContingencyTable};
pub use problems::{generate_problems, problems_from_dataset, random_partition, ProblemMode, ProblemSet, ProblemSetMeta};
