//! Query-specific relaxation of a circuit and the differentiable MMAP loss.
//!
//! The query leaves of the original circuit are reinterpreted as continuous
//! inputs: a leaf `Q_j` reads `q_j` and a leaf `¬Q_j` reads `1 - q_j`.
//! Evidence leaves keep their 0/1 consistency value and hidden leaves read 1.
//! The root value is then a multilinear function of the soft assignment,
//! equal to `p(e, q)` at every 0/1 point. No second circuit is built; the
//! context only carries a role per leaf.
//!
//! The loss is
//!
//! ```text
//! loss(q) = -ln v(q) + alpha * sum_j H(q_j),   H(t) = -t ln t - (1 - t) ln(1 - t)
//! ```
//!
//! and its gradient is available through two independent routes: a single
//! reverse sweep over the circuit, and one forward pass per query variable
//! with that variable's leaves replaced by `+1` / `-1`.

use crate::circuit::{Assignment, Circuit, EvalMode, LeafValues};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, SignedLog};
use crate::mmap::{MmapProblem, VariablePartition};

/// Clamp applied to soft values before taking entropy logs.
pub const ENTROPY_EPS: f64 = 1e-12;

/// Soft query assignment, one value in `[0, 1]` per query slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment(Vec<f64>);

impl SoftAssignment {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidSpec(format!("soft assignment value {bad} outside [0, 1]")));
        }
        Ok(SoftAssignment(values))
    }

    pub fn uniform(m: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Threshold at 0.5; exactly 0.5 rounds to 0.
    pub fn round(&self) -> Vec<u8> {
        self.0.iter().map(|&v| u8::from(v > 0.5)).collect()
    }

    /// Mean of `min(q, 1 - q)`: 0 for a discrete vector, 0.5 at the centre.
    pub fn mean_distance_to_discrete(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|&v| v.min(1.0 - v)).sum::<f64>() / self.0.len() as f64
    }
}

/// What a leaf reads under the relaxed leaf function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafRole {
    QueryPositive(usize),
    QueryNegative(usize),
    EvidenceConsistent,
    EvidenceInconsistent,
    Hidden,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub total: f64,
    /// `-ln v`.
    pub nll: f64,
    /// `alpha * sum_j H(q_j)`, the amount added to `nll`.
    pub entropy_term: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct QpcContext<'a> {
    circuit: &'a Circuit,
    query: Vec<usize>,
    roles: Vec<LeafRole>,
}

impl<'a> QpcContext<'a> {
    /// `evidence` must assign exactly the partition's evidence variables.
    pub fn new(circuit: &'a Circuit, partition: &VariablePartition, evidence: &Assignment) -> Result<Self> {
        let mut expected = partition.evidence().to_vec();
        expected.sort_unstable();
        if !evidence.vars().eq(expected.iter().copied()) {
            return Err(Error::InvalidPartition(
                "evidence assignment must cover exactly the evidence variables".into(),
            ));
        }
        let mut slot_of = vec![None; circuit.n_vars()];
        for (j, &v) in partition.query().iter().enumerate() {
            slot_of[v] = Some(j);
        }
        let roles = (0..circuit.n_leaves())
            .map(|leaf| {
                let (var, negated) = circuit.leaf(leaf);
                match (slot_of[var], evidence.get(var)) {
                    (Some(j), _) if negated => LeafRole::QueryNegative(j),
                    (Some(j), _) => LeafRole::QueryPositive(j),
                    (None, Some(value)) if value == negated => LeafRole::EvidenceInconsistent,
                    (None, Some(_)) => LeafRole::EvidenceConsistent,
                    (None, None) => LeafRole::Hidden,
                }
            })
            .collect();
        Ok(QpcContext {
            circuit,
            query: partition.query().to_vec(),
            roles,
        })
    }

    pub fn from_problem(p: &'a MmapProblem) -> Result<Self> {
        Self::new(&p.circuit, &p.partition, &p.evidence)
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    pub fn roles(&self) -> &[LeafRole] {
        &self.roles
    }

    /// Number of query slots `M`.
    pub fn m(&self) -> usize {
        self.query.len()
    }

    fn check_len(&self, qc: &SoftAssignment) -> Result<()> {
        if qc.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: qc.len(),
            });
        }
        Ok(())
    }

    /// Relaxed leaf function; with `derivative_of = Some(j)` the leaves of
    /// query slot `j` read `+1` and `-1` instead.
    fn leaf_values_with(&self, qc: &SoftAssignment, derivative_of: Option<usize>) -> LeafValues {
        LeafValues(
            self.roles
                .iter()
                .map(|role| match *role {
                    LeafRole::QueryPositive(j) if Some(j) == derivative_of => 1.0,
                    LeafRole::QueryNegative(j) if Some(j) == derivative_of => -1.0,
                    LeafRole::QueryPositive(j) => qc.0[j],
                    LeafRole::QueryNegative(j) => 1.0 - qc.0[j],
                    LeafRole::EvidenceInconsistent => 0.0,
                    LeafRole::EvidenceConsistent | LeafRole::Hidden => 1.0,
                })
                .collect(),
        )
    }

    pub fn leaf_values(&self, qc: &SoftAssignment) -> Result<LeafValues> {
        self.check_len(qc)?;
        Ok(self.leaf_values_with(qc, None))
    }

    /// Root value of the relaxed circuit. Uses the same evaluation path as
    /// [`Circuit::marginal`], so 0/1 inputs reproduce marginals bit for bit.
    pub fn value(&self, qc: &SoftAssignment) -> Result<f64> {
        self.circuit.evaluate(&self.leaf_values(qc)?, EvalMode::Linear)
    }

    fn ln_value(&self, qc: &SoftAssignment) -> Result<f64> {
        let v = self.circuit.evaluate_signed_log(&self.leaf_values(qc)?)?;
        if v.sign() <= 0 {
            return Err(Error::NonpositiveCircuitValue);
        }
        Ok(v.ln_abs())
    }

    pub fn loss(&self, qc: &SoftAssignment, alpha: f64) -> Result<LossValue> {
        let nll = -self.ln_value(qc)?;
        Ok(assemble_loss(nll, qc, alpha))
    }

    /// `∂v/∂q_j` by one forward pass with the slot's leaves set to `+1`/`-1`.
    pub fn grad_single(&self, qc: &SoftAssignment, j: usize) -> Result<f64> {
        Ok(self.grad_single_signed(qc, j)?.to_f64())
    }

    fn grad_single_signed(&self, qc: &SoftAssignment, j: usize) -> Result<SignedLog> {
        self.check_len(qc)?;
        if j >= self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: j,
            });
        }
        self.circuit.evaluate_signed_log(&self.leaf_values_with(qc, Some(j)))
    }

    /// Loss gradient from `M` leaf-substitution passes.
    pub fn grad_loss_by_substitution(&self, qc: &SoftAssignment, alpha: f64) -> Result<Vec<f64>> {
        let ln_v = self.ln_value(qc)?;
        (0..self.m())
            .map(|j| {
                let d = self.grad_single_signed(qc, j)?;
                Ok(circuit_term(d, ln_v) + entropy_grad(qc.0[j], alpha))
            })
            .collect()
    }

    /// Loss gradient from a single reverse sweep.
    pub fn grad_loss(&self, qc: &SoftAssignment, alpha: f64) -> Result<Vec<f64>> {
        self.loss_and_grad(qc, alpha).map(|(_, g)| g)
    }

    /// Loss and its reverse-mode gradient from one forward/backward sweep.
    pub fn loss_and_grad(&self, qc: &SoftAssignment, alpha: f64) -> Result<(LossValue, Vec<f64>)> {
        let lv = self.leaf_values(qc)?;
        let adj = self.circuit.leaf_adjoints(&lv)?;
        if adj.root_ln == f64::NEG_INFINITY {
            return Err(Error::NonpositiveCircuitValue);
        }
        let mut pos: Vec<Vec<f64>> = vec![Vec::new(); self.m()];
        let mut neg: Vec<Vec<f64>> = vec![Vec::new(); self.m()];
        for (role, &a) in self.roles.iter().zip(&adj.leaf_ln) {
            match *role {
                LeafRole::QueryPositive(j) => pos[j].push(a),
                LeafRole::QueryNegative(j) => neg[j].push(a),
                _ => {}
            }
        }
        let grad = (0..self.m())
            .map(|j| {
                // ∂v/∂q_j = Σ adj(Q_j leaves) − Σ adj(¬Q_j leaves)
                let d = SignedLog::difference(
                    log_sum_exp(pos[j].iter().copied()),
                    log_sum_exp(neg[j].iter().copied()),
                );
                circuit_term(d, adj.root_ln) + entropy_grad(qc.0[j], alpha)
            })
            .collect();
        Ok((assemble_loss(-adj.root_ln, qc, alpha), grad))
    }
}

/// `-(∂v/∂q_j) / v` given the derivative and `ln v`.
fn circuit_term(d: SignedLog, ln_v: f64) -> f64 {
    -(d / SignedLog::from_ln(ln_v)).to_f64()
}

fn clamp(q: f64) -> f64 {
    q.clamp(ENTROPY_EPS, 1.0 - ENTROPY_EPS)
}

/// Binary entropy in nats, on the clamped value.
pub fn binary_entropy(q: f64) -> f64 {
    let q = clamp(q);
    -(q * q.ln() + (1.0 - q) * (1.0 - q).ln())
}

/// `d/dq [alpha * H(q)] = -alpha * (ln q - ln(1 - q))`.
fn entropy_grad(q: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let q = clamp(q);
    -alpha * (q.ln() - (1.0 - q).ln())
}

fn assemble_loss(nll: f64, qc: &SoftAssignment, alpha: f64) -> LossValue {
    let entropy_term = if alpha == 0.0 {
        0.0
    } else {
        alpha * qc.0.iter().map(|&q| binary_entropy(q)).sum::<f64>()
    };
    LossValue {
        total: nll + entropy_term,
        nll,
        entropy_term,
        alpha,
    }
}
