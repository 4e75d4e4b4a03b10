//! Bottom-up value computation and reverse-mode sweeps.

use super::{Circuit, LeafValues, NodeKind};
use crate::error::{Error, Result};
use crate::logspace::{LogSumExp, SignedLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Plain floating point.
    #[default]
    Linear,
    /// Sign plus log-magnitude; never overflows or underflows.
    SignedLog,
}

/// Result of a forward and backward sweep over non-negative leaf values.
#[derive(Debug, Clone)]
pub struct LeafAdjoints {
    /// `ln v(root)`.
    pub root_ln: f64,
    /// `ln ∂v(root)/∂(leaf value)` per leaf slot; the derivatives are never
    /// negative when every leaf value is non-negative.
    pub leaf_ln: Vec<f64>,
}

impl Circuit {
    fn check_leaf_values(&self, lv: &LeafValues) -> Result<()> {
        if lv.len() != self.n_leaves() {
            return Err(Error::DimensionMismatch {
                expected: self.n_leaves(),
                got: lv.len(),
            });
        }
        Ok(())
    }

    /// Root value for the given leaf values.
    pub fn evaluate(&self, lv: &LeafValues, mode: EvalMode) -> Result<f64> {
        match mode {
            EvalMode::Linear => self.evaluate_linear(lv),
            EvalMode::SignedLog => Ok(self.evaluate_signed_log(lv)?.to_f64()),
        }
    }

    fn evaluate_linear(&self, lv: &LeafValues) -> Result<f64> {
        self.check_leaf_values(lv)?;
        let mut values = vec![0.0f64; self.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            values[i] = match &node.kind {
                NodeKind::Leaf { .. } => lv.0[self.leaf_slot[i].expect("leaf has a slot")],
                NodeKind::Sum(kids) => kids.iter().map(|&(c, w)| w * values[c]).sum(),
                NodeKind::Product(kids) => kids.iter().map(|&c| values[c]).product(),
            };
        }
        let root = values[self.root()];
        if !root.is_finite() {
            return Err(Error::NumericOverflow);
        }
        Ok(root)
    }

    /// Root value in signed log space. Leaf values may be any finite reals.
    pub fn evaluate_signed_log(&self, lv: &LeafValues) -> Result<SignedLog> {
        self.check_leaf_values(lv)?;
        let mut values = vec![SignedLog::ZERO; self.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            values[i] = match &node.kind {
                NodeKind::Leaf { .. } => SignedLog::from_f64(lv.0[self.leaf_slot[i].expect("leaf has a slot")]),
                NodeKind::Sum(kids) => {
                    let mut pos = LogSumExp::default();
                    let mut neg = LogSumExp::default();
                    for &(c, w) in kids {
                        let v = values[c];
                        match v.sign() {
                            1 => pos.push(v.ln_abs() + w.ln()),
                            -1 => neg.push(v.ln_abs() + w.ln()),
                            _ => {}
                        }
                    }
                    SignedLog::difference(pos.finish(), neg.finish())
                }
                NodeKind::Product(kids) => kids.iter().fold(SignedLog::ONE, |acc, &c| acc * values[c]),
            };
        }
        Ok(values[self.root()])
    }

    /// Forward pass in log space followed by a reverse sweep that stores one
    /// adjoint per node. Requires every leaf value to be non-negative.
    pub fn leaf_adjoints(&self, lv: &LeafValues) -> Result<LeafAdjoints> {
        self.check_leaf_values(lv)?;
        if let Some(bad) = lv.0.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::InvalidSpec(format!("reverse sweep needs non-negative leaf values, got {bad}")));
        }
        let n = self.len();
        let mut ln_v = vec![f64::NEG_INFINITY; n];
        for (i, node) in self.nodes.iter().enumerate() {
            ln_v[i] = match &node.kind {
                NodeKind::Leaf { .. } => lv.0[self.leaf_slot[i].expect("leaf has a slot")].ln(),
                NodeKind::Sum(kids) => {
                    let mut acc = LogSumExp::default();
                    for &(c, w) in kids {
                        acc.push(ln_v[c] + w.ln());
                    }
                    acc.finish()
                }
                NodeKind::Product(kids) => kids.iter().map(|&c| ln_v[c]).sum(),
            };
        }

        let mut adj = vec![f64::NEG_INFINITY; n];
        adj[self.root()] = 0.0;
        for i in (0..n).rev() {
            let a = adj[i];
            if a == f64::NEG_INFINITY {
                continue;
            }
            match &self.nodes[i].kind {
                NodeKind::Leaf { .. } => {}
                NodeKind::Sum(kids) => {
                    for &(c, w) in kids {
                        adj[c] = log_add(adj[c], a + w.ln());
                    }
                }
                NodeKind::Product(kids) => {
                    // Product of the siblings' values, exact even when some are zero.
                    let zeros = kids.iter().filter(|&&c| ln_v[c] == f64::NEG_INFINITY).count();
                    let finite_sum: f64 = kids
                        .iter()
                        .map(|&c| ln_v[c])
                        .filter(|v| *v != f64::NEG_INFINITY)
                        .sum();
                    for &c in kids {
                        let others = match (zeros, ln_v[c] == f64::NEG_INFINITY) {
                            (0, _) => finite_sum - ln_v[c],
                            (1, true) => finite_sum,
                            _ => f64::NEG_INFINITY,
                        };
                        adj[c] = log_add(adj[c], a + others);
                    }
                }
            }
        }

        Ok(LeafAdjoints {
            root_ln: ln_v[self.root()],
            leaf_ln: self.leaves.iter().map(|&i| adj[i]).collect(),
        })
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::fig1;
    use super::*;

    #[test]
    fn all_ones_evaluates_to_one() {
        let c = fig1();
        let lv = LeafValues(vec![1.0; c.n_leaves()]);
        assert!((c.evaluate(&lv, EvalMode::Linear).unwrap() - 1.0).abs() < 1e-12);
        assert!((c.evaluate(&lv, EvalMode::SignedLog).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn signed_log_accepts_negative_leaves() {
        let c = fig1();
        let lv = LeafValues((0..c.n_leaves()).map(|i| if i % 3 == 0 { -1.0 } else { 0.4 }).collect());
        let lin = c.evaluate(&lv, EvalMode::Linear).unwrap();
        let log = c.evaluate(&lv, EvalMode::SignedLog).unwrap();
        assert!((lin - log).abs() <= 1e-12 * lin.abs().max(1e-300), "{lin} vs {log}");
    }

    #[test]
    fn wrong_length_is_rejected() {
        let c = fig1();
        let lv = LeafValues(vec![1.0; 3]);
        assert!(matches!(c.evaluate(&lv, EvalMode::Linear), Err(Error::DimensionMismatch { expected: 13, got: 3 })));
    }

    #[test]
    fn linear_overflow_is_reported() {
        let c = fig1();
        let lv = LeafValues(vec![1e200; c.n_leaves()]);
        assert!(matches!(c.evaluate(&lv, EvalMode::Linear), Err(Error::NumericOverflow)));
        let log = c.evaluate_signed_log(&lv).unwrap();
        assert!(log.ln_abs().is_finite());
    }

    #[test]
    fn adjoints_match_leaf_perturbation() {
        let c = fig1();
        let base: Vec<f64> = (0..c.n_leaves()).map(|i| 0.1 + 0.07 * i as f64).collect();
        let adj = c.leaf_adjoints(&LeafValues(base.clone())).unwrap();
        let v0 = c.evaluate(&LeafValues(base.clone()), EvalMode::Linear).unwrap();
        assert!((adj.root_ln.exp() - v0).abs() < 1e-14);
        for slot in 0..c.n_leaves() {
            let h = 1e-6;
            let mut up = base.clone();
            up[slot] += h;
            let mut dn = base.clone();
            dn[slot] -= h;
            let fd = (c.evaluate(&LeafValues(up), EvalMode::Linear).unwrap()
                - c.evaluate(&LeafValues(dn), EvalMode::Linear).unwrap())
                / (2.0 * h);
            assert!((adj.leaf_ln[slot].exp() - fd).abs() < 1e-8, "slot {slot}");
        }
    }

    #[test]
    fn adjoints_exact_with_zero_leaves() {
        // Marginal leaf values contain zeros; adjoint of X1 leaf equals p(X1=1) via the differential form.
        let c = fig1();
        let lv = c.leaf_values_for_marginal(&super::super::Assignment::new()).unwrap();
        let adj = c.leaf_adjoints(&lv).unwrap();
        let x1 = c.var_index("X1").unwrap();
        let d: f64 = (0..c.n_leaves())
            .filter(|&s| c.leaf(s) == (x1, false))
            .map(|s| adj.leaf_ln[s].exp())
            .sum();
        assert!((d - 0.3).abs() < 1e-12);
    }
}
