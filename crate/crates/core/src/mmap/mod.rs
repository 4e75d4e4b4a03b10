//! Marginal MAP problems, scoring, the exhaustive oracle and the polytime
//! baselines.

mod baselines;
mod hill_climb;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use baselines::{all_marginals, all_marginals_reference, max_approx, ml_approx, seq_approx};
pub use hill_climb::{hill_climb, hill_climb_trace, HillClimbTrace};

use crate::circuit::{Assignment, Circuit};
use crate::error::{Error, Result};

/// Largest query set the exhaustive solver accepts.
pub const BRUTE_FORCE_MAX_QUERY: usize = 20;

/// Disjoint evidence, query and hidden variable sets covering every variable.
///
/// Each set keeps its declared order; query slot `j` of a soft assignment
/// refers to `query()[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariablePartition {
    evidence: Vec<usize>,
    query: Vec<usize>,
    hidden: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionDoc {
    pub evidence: Vec<String>,
    pub query: Vec<String>,
    pub hidden: Vec<String>,
}

impl VariablePartition {
    pub fn new(n_vars: usize, evidence: Vec<usize>, query: Vec<usize>, hidden: Vec<usize>) -> Result<Self> {
        Self::checked(n_vars, evidence, query, hidden, |v| format!("#{v}"))
    }

    fn checked(
        n_vars: usize,
        evidence: Vec<usize>,
        query: Vec<usize>,
        hidden: Vec<usize>,
        name: impl Fn(usize) -> String,
    ) -> Result<Self> {
        if query.is_empty() {
            return Err(Error::InvalidPartition("query set is empty".into()));
        }
        let mut seen = HashSet::with_capacity(n_vars);
        for &v in evidence.iter().chain(&query).chain(&hidden) {
            if v >= n_vars {
                return Err(Error::InvalidPartition(format!("variable {} out of range", name(v))));
            }
            if !seen.insert(v) {
                return Err(Error::InvalidPartition(format!("variable {} listed twice", name(v))));
            }
        }
        if let Some(missing) = (0..n_vars).find(|v| !seen.contains(v)) {
            return Err(Error::InvalidPartition(format!("variable {} is not listed", name(missing))));
        }
        Ok(VariablePartition { evidence, query, hidden })
    }

    pub fn from_doc(circuit: &Circuit, doc: &PartitionDoc) -> Result<Self> {
        let resolve = |names: &[String]| -> Result<Vec<usize>> {
            names
                .iter()
                .map(|n| {
                    circuit
                        .var_index(n)
                        .map_err(|_| Error::InvalidPartition(format!("unknown variable `{n}`")))
                })
                .collect()
        };
        Self::checked(
            circuit.n_vars(),
            resolve(&doc.evidence)?,
            resolve(&doc.query)?,
            resolve(&doc.hidden)?,
            |v| circuit.var_name(v).to_string(),
        )
    }

    pub fn from_json(circuit: &Circuit, text: &str) -> Result<Self> {
        let doc: PartitionDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_doc(circuit, &doc)
    }

    pub fn to_doc(&self, circuit: &Circuit) -> PartitionDoc {
        let names = |vs: &[usize]| vs.iter().map(|&v| circuit.var_name(v).to_string()).collect();
        PartitionDoc {
            evidence: names(&self.evidence),
            query: names(&self.query),
            hidden: names(&self.hidden),
        }
    }

    pub fn evidence(&self) -> &[usize] {
        &self.evidence
    }

    pub fn query(&self) -> &[usize] {
        &self.query
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    /// `(N, M, K)`: evidence, query and hidden set sizes.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.evidence.len(), self.query.len(), self.hidden.len())
    }

    pub fn is_mpe(&self) -> bool {
        self.hidden.is_empty()
    }
}

/// An MMAP instance: circuit, partition and an evidence assignment over
/// exactly the evidence set.
#[derive(Debug, Clone)]
pub struct MmapProblem {
    pub circuit: Arc<Circuit>,
    pub partition: Arc<VariablePartition>,
    pub evidence: Assignment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub circuit: String,
    pub partition: PartitionDoc,
    #[serde(default)]
    pub evidence: BTreeMap<String, u8>,
}

impl MmapProblem {
    pub fn new(circuit: Arc<Circuit>, partition: Arc<VariablePartition>, evidence: Assignment) -> Result<Self> {
        let keys: Vec<usize> = evidence.vars().collect();
        let mut expected = partition.evidence().to_vec();
        expected.sort_unstable();
        if keys != expected {
            return Err(Error::InvalidPartition(
                "evidence assignment must cover exactly the evidence variables".into(),
            ));
        }
        Ok(MmapProblem {
            circuit,
            partition,
            evidence,
        })
    }

    /// Build from evidence bits in the partition's evidence order.
    pub fn from_bits(circuit: Arc<Circuit>, partition: Arc<VariablePartition>, bits: &[u8]) -> Result<Self> {
        if bits.len() != partition.evidence().len() {
            return Err(Error::DimensionMismatch {
                expected: partition.evidence().len(),
                got: bits.len(),
            });
        }
        let evidence = Assignment::from_bits(partition.evidence(), bits);
        Self::new(circuit, partition, evidence)
    }

    /// Load a problem file; the circuit path is resolved against `base_dir`.
    pub fn from_doc(doc: &ProblemDoc, base_dir: &Path) -> Result<Self> {
        let circuit = Arc::new(Circuit::from_path(base_dir.join(&doc.circuit))?);
        let partition = Arc::new(VariablePartition::from_doc(&circuit, &doc.partition)?);
        let evidence = evidence_from_names(&circuit, &doc.evidence)?;
        Self::new(circuit, partition, evidence)
    }

    pub fn evidence_bits(&self) -> Vec<u8> {
        self.evidence.bits(self.partition.evidence())
    }

    pub fn query_assignment(&self, bits: &[u8]) -> Assignment {
        Assignment::from_bits(self.partition.query(), bits)
    }

    /// Log score of a query assignment given this problem's evidence.
    pub fn score(&self, q: &Assignment) -> Result<f64> {
        score(&self.circuit, &self.evidence, q)
    }

    /// Log probability of the evidence alone.
    pub fn log_evidence(&self) -> Result<f64> {
        self.circuit.log_marginal(&self.evidence)
    }

    pub(crate) fn solution(&self, q: Assignment, method: &str, start: Instant) -> Result<MmapSolution> {
        let log_score = self.score(&q)?;
        Ok(MmapSolution {
            q,
            log_score,
            method: method.to_string(),
            elapsed: start.elapsed(),
        })
    }
}

pub fn evidence_from_names(circuit: &Circuit, named: &BTreeMap<String, u8>) -> Result<Assignment> {
    let mut e = Assignment::new();
    for (name, &value) in named {
        if value > 1 {
            return Err(Error::Parse(format!("evidence value for {name} must be 0 or 1")));
        }
        e.set(circuit.var_index(name)?, value == 1);
    }
    Ok(e)
}

/// A discrete query assignment with its log score.
#[derive(Debug, Clone, PartialEq)]
pub struct MmapSolution {
    pub q: Assignment,
    /// `ln p(e, q)`; `-inf` when the assignment has probability zero.
    pub log_score: f64,
    pub method: String,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub q: BTreeMap<String, u8>,
    /// `null` encodes a score of negative infinity.
    pub log_score: Option<f64>,
    pub method: String,
    pub elapsed_secs: f64,
}

impl MmapSolution {
    pub fn to_doc(&self, circuit: &Circuit) -> SolutionDoc {
        SolutionDoc {
            q: self
                .q
                .iter()
                .map(|(v, b)| (circuit.var_name(v).to_string(), u8::from(b)))
                .collect(),
            log_score: self.log_score.is_finite().then_some(self.log_score),
            method: self.method.clone(),
            elapsed_secs: self.elapsed.as_secs_f64(),
        }
    }

    pub fn from_doc(circuit: &Circuit, doc: &SolutionDoc) -> Result<Self> {
        Ok(MmapSolution {
            q: evidence_from_names(circuit, &doc.q)?,
            log_score: doc.log_score.unwrap_or(f64::NEG_INFINITY),
            method: doc.method.clone(),
            elapsed: Duration::from_secs_f64(doc.elapsed_secs.max(0.0)),
        })
    }
}

/// `ln p(e, q)` computed in log space.
pub fn score(circuit: &Circuit, e: &Assignment, q: &Assignment) -> Result<f64> {
    let joint = e
        .union(q)
        .map_err(|v| Error::OverlappingAssignments(circuit.var_name(v).to_string()))?;
    circuit.log_marginal(&joint)
}

/// Exhaustive search over all `2^M` query assignments.
///
/// Ties go to the lexicographically smallest bit string, reading query
/// variables in ascending index order with 0 before 1.
pub fn brute_force_mmap(p: &MmapProblem) -> Result<MmapSolution> {
    let start = Instant::now();
    let m = p.partition.query().len();
    if m > BRUTE_FORCE_MAX_QUERY {
        return Err(Error::QueryTooLarge {
            m,
            max: BRUTE_FORCE_MAX_QUERY,
        });
    }
    let mut vars = p.partition.query().to_vec();
    vars.sort_unstable();
    let mut best: Option<(f64, u64)> = None;
    for code in 0..(1u64 << m) {
        let q = Assignment::from_pairs(vars.iter().enumerate().map(|(k, &v)| (v, code >> (m - 1 - k) & 1 == 1)));
        let s = p.score(&q)?;
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, code));
        }
    }
    let (_, code) = best.expect("at least one assignment");
    let q = Assignment::from_pairs(vars.iter().enumerate().map(|(k, &v)| (v, code >> (m - 1 - k) & 1 == 1)));
    p.solution(q, "bruteforce", start)
}
