use std::collections::BTreeMap;
use std::time::Instant;

use super::{MmapProblem, MmapSolution};
use crate::circuit::{Assignment, Circuit, NodeKind};
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// Max-product approximation.
///
/// Upward pass with every sum node replaced by a max over weighted children
/// (evidence leaves set by the leaf function, query and hidden leaves at 1),
/// then a downward pass keeping the best child of each max node and every
/// child of each product node. Query values are read off the selected
/// leaves and the reported score is recomputed exactly.
pub fn max_approx(p: &MmapProblem) -> Result<MmapSolution> {
    let start = Instant::now();
    let c = &*p.circuit;
    let lv = c.leaf_values_for_marginal(&p.evidence)?;
    let nodes = c.nodes();
    let mut ln_v = vec![f64::NEG_INFINITY; nodes.len()];
    let mut best_child = vec![usize::MAX; nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        ln_v[i] = match &node.kind {
            NodeKind::Leaf { .. } => lv.0[c.leaf_slot(i).expect("leaf has a slot")].ln(),
            NodeKind::Product(kids) => kids.iter().map(|&k| ln_v[k]).sum(),
            NodeKind::Sum(kids) => {
                let mut best: Option<(f64, usize)> = None;
                for &(k, w) in kids {
                    let v = ln_v[k] + w.ln();
                    let better = match best {
                        None => true,
                        Some((bv, bk)) => v > bv || (v == bv && nodes[k].id < nodes[bk].id),
                    };
                    if better {
                        best = Some((v, k));
                    }
                }
                let (v, k) = best.expect("sum nodes have children");
                best_child[i] = k;
                v
            }
        };
    }

    let mut q = Assignment::new();
    let mut stack = vec![c.root()];
    while let Some(i) = stack.pop() {
        match &nodes[i].kind {
            NodeKind::Sum(_) => stack.push(best_child[i]),
            NodeKind::Product(kids) => stack.extend(kids.iter().copied()),
            NodeKind::Leaf { var, negated } => {
                if p.partition.query().contains(var) {
                    let prev = q.set(*var, !negated);
                    debug_assert!(prev.is_none(), "decomposability: each variable is reached once");
                }
            }
        }
    }
    // Smoothness guarantees the selected subcircuit covers every variable.
    assert_eq!(q.len(), p.partition.query().len(), "max pass left a query variable unassigned");
    p.solution(q, "max", start)
}

/// `p(V=1 | e)` for each target, from a single forward/backward sweep.
///
/// The derivative of the root with respect to the positive-literal
/// indicators of `V` equals `p(V=1, e)` when `V` is not in `e`.
pub fn all_marginals(c: &Circuit, e: &Assignment, targets: &[usize]) -> Result<BTreeMap<usize, f64>> {
    let lv = c.leaf_values_for_marginal(e)?;
    let adj = c.leaf_adjoints(&lv)?;
    if adj.root_ln == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidenceProbability);
    }
    let mut positive: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for slot in 0..c.n_leaves() {
        let (var, negated) = c.leaf(slot);
        if !negated {
            positive.entry(var).or_default().push(adj.leaf_ln[slot]);
        }
    }
    let mut out = BTreeMap::new();
    for &t in targets {
        let p = match e.get(t) {
            Some(v) => f64::from(u8::from(v)),
            None => {
                let ln_joint = log_sum_exp(positive.get(&t).into_iter().flatten().copied());
                (ln_joint - adj.root_ln).exp()
            }
        };
        out.insert(t, p);
    }
    Ok(out)
}

/// Reference implementation of [`all_marginals`]: two evaluations per target.
pub fn all_marginals_reference(c: &Circuit, e: &Assignment, targets: &[usize]) -> Result<BTreeMap<usize, f64>> {
    let ln_e = c.log_marginal(e)?;
    if ln_e == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidenceProbability);
    }
    let mut out = BTreeMap::new();
    for &t in targets {
        let p = match e.get(t) {
            Some(v) => f64::from(u8::from(v)),
            None => {
                let mut joint = e.clone();
                joint.set(t, true);
                (c.log_marginal(&joint)? - ln_e).exp()
            }
        };
        out.insert(t, p);
    }
    Ok(out)
}

/// Independent per-variable argmax of `p(Q_j | e)`; exact ties go to 0.
pub fn ml_approx(p: &MmapProblem) -> Result<MmapSolution> {
    let start = Instant::now();
    let marg = all_marginals(&p.circuit, &p.evidence, p.partition.query())?;
    let q = Assignment::from_pairs(marg.into_iter().map(|(v, p1)| (v, p1 > 0.5)));
    p.solution(q, "ml", start)
}

/// Greedy sequential assignment.
///
/// Each step fixes the (variable, value) pair with the highest conditional
/// probability given the evidence and the values fixed so far. Ties go to
/// the lower variable index, then to value 0.
pub fn seq_approx(p: &MmapProblem) -> Result<MmapSolution> {
    let start = Instant::now();
    let c = &*p.circuit;
    if c.log_marginal(&p.evidence)? == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidenceProbability);
    }
    let mut remaining: Vec<usize> = p.partition.query().to_vec();
    remaining.sort_unstable();
    let mut fixed = p.evidence.clone();
    let mut q = Assignment::new();
    while !remaining.is_empty() {
        // The conditioning set is shared by all candidates, so joint scores rank them.
        let mut best: Option<(f64, usize, bool)> = None;
        for &v in &remaining {
            for value in [false, true] {
                let mut joint = fixed.clone();
                joint.set(v, value);
                let s = c.log_marginal(&joint)?;
                if best.is_none_or(|(b, _, _)| s > b) {
                    best = Some((s, v, value));
                }
            }
        }
        let (_, v, value) = best.expect("remaining is non-empty");
        fixed.set(v, value);
        q.set(v, value);
        remaining.retain(|&r| r != v);
    }
    p.solution(q, "seq", start)
}
