pub mod circuit;
pub mod cli;
pub mod display;
pub mod error;
pub mod eval;
pub mod io;
pub mod logspace;
pub mod mmap;
pub mod neural;
pub mod qpc;
pub mod sampler;

pub use circuit::{Assignment, Circuit, EvalMode, LeafValues};
pub use error::{Error, Result};
pub use mmap::{MmapProblem, MmapSolution, VariablePartition};
pub use qpc::{QpcContext, SoftAssignment};
