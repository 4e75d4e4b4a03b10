//! Smooth, decomposable probabilistic circuits over binary variables.
//!
//! A [`Circuit`] is loaded from a [`CircuitDoc`], validated once and then
//! kept immutable. Nodes are stored in topological order (every child index
//! is smaller than its parent's), so evaluation is a single forward sweep and
//! reverse-mode differentiation a single backward sweep.

mod doc;
mod eval;
mod random;

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

pub use doc::{validate, CircuitDoc, NodeDoc, PropertyCheck, ValidationReport, WeightedChild, WEIGHT_TOLERANCE};
pub use eval::{EvalMode, LeafAdjoints};
pub use random::random_circuit;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Sum(Vec<(usize, f64)>),
    Product(Vec<usize>),
    Leaf { var: usize, negated: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Identifier from the source document.
    pub id: i64,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    variables: Vec<String>,
    nodes: Vec<Node>,
    scopes: Vec<Vec<usize>>,
    leaves: Vec<usize>,
    leaf_slot: Vec<Option<usize>>,
}

/// Per-leaf input values, indexed by leaf slot (see [`Circuit::leaf_nodes`]).
#[derive(Debug, Clone, PartialEq)]
pub struct LeafValues(pub Vec<f64>);

impl LeafValues {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Partial assignment of binary values to variable indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(BTreeMap<usize, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, bool)>>(pairs: I) -> Self {
        Assignment(pairs.into_iter().collect())
    }

    /// Pair each variable with the bit at the same position.
    pub fn from_bits(vars: &[usize], bits: &[u8]) -> Self {
        debug_assert_eq!(vars.len(), bits.len());
        Assignment(vars.iter().zip(bits).map(|(&v, &b)| (v, b != 0)).collect())
    }

    pub fn set(&mut self, var: usize, value: bool) -> Option<bool> {
        self.0.insert(var, value)
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        self.0.get(&var).copied()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    /// Bits for the given variables in order; unassigned variables read as 0.
    pub fn bits(&self, vars: &[usize]) -> Vec<u8> {
        vars.iter().map(|&v| u8::from(self.get(v).unwrap_or(false))).collect()
    }

    /// Union of two assignments; returns the first shared variable on overlap.
    pub fn union(&self, other: &Assignment) -> std::result::Result<Assignment, usize> {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            if out.set(k, v).is_some() {
                return Err(k);
            }
        }
        Ok(out)
    }
}

impl Circuit {
    pub fn from_doc(doc: &CircuitDoc) -> Result<Self> {
        if let Some(err) = validate(doc).first_error() {
            return Err(err);
        }
        Ok(Self::build(doc))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(&CircuitDoc::from_json(text)?)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Assumes `doc` passed validation.
    fn build(doc: &CircuitDoc) -> Self {
        let index: std::collections::HashMap<i64, usize> =
            doc.nodes.iter().enumerate().map(|(i, n)| (n.id(), i)).collect();
        let var_index: std::collections::HashMap<&str, usize> =
            doc.variables.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let children: Vec<Vec<usize>> = doc
            .nodes
            .iter()
            .map(|n| n.child_ids().iter().map(|c| index[c]).collect())
            .collect();

        // Postorder from the root: children always precede parents.
        let root = index[&doc.root];
        let mut order = Vec::with_capacity(doc.nodes.len());
        let mut placed = vec![false; doc.nodes.len()];
        let mut stack = vec![(root, 0usize)];
        placed[root] = true;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < children[node].len() {
                let c = children[node][*next];
                *next += 1;
                if !placed[c] {
                    placed[c] = true;
                    stack.push((c, 0));
                }
            } else {
                order.push(node);
                stack.pop();
            }
        }
        let mut dense = vec![usize::MAX; doc.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            dense[old] = new;
        }

        let nodes: Vec<Node> = order
            .iter()
            .map(|&old| {
                let kind = match &doc.nodes[old] {
                    NodeDoc::Leaf { var, negated, .. } => NodeKind::Leaf {
                        var: var_index[var.as_str()],
                        negated: *negated,
                    },
                    NodeDoc::Sum { children: kids, .. } => {
                        NodeKind::Sum(kids.iter().map(|c| (dense[index[&c.id]], c.weight)).collect())
                    }
                    NodeDoc::Product { children: kids, .. } => {
                        NodeKind::Product(kids.iter().map(|c| dense[index[c]]).collect())
                    }
                };
                Node {
                    id: doc.nodes[old].id(),
                    kind,
                }
            })
            .collect();

        let mut scopes: Vec<Vec<usize>> = Vec::with_capacity(nodes.len());
        for n in &nodes {
            let s = match &n.kind {
                NodeKind::Leaf { var, .. } => vec![*var],
                NodeKind::Sum(kids) => scopes[kids[0].0].clone(),
                NodeKind::Product(kids) => {
                    let mut s: Vec<usize> = kids.iter().flat_map(|&c| scopes[c].iter().copied()).collect();
                    s.sort_unstable();
                    s
                }
            };
            scopes.push(s);
        }

        let mut leaves = Vec::new();
        let mut leaf_slot = vec![None; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if n.is_leaf() {
                leaf_slot[i] = Some(leaves.len());
                leaves.push(i);
            }
        }

        Circuit {
            variables: doc.variables.clone(),
            nodes,
            scopes,
            leaves,
            leaf_slot,
        }
    }

    pub fn to_doc(&self) -> CircuitDoc {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Leaf { var, negated } => NodeDoc::Leaf {
                    id: n.id,
                    var: self.variables[*var].clone(),
                    negated: *negated,
                },
                NodeKind::Sum(kids) => NodeDoc::Sum {
                    id: n.id,
                    children: kids
                        .iter()
                        .map(|&(c, weight)| WeightedChild {
                            id: self.nodes[c].id,
                            weight,
                        })
                        .collect(),
                },
                NodeKind::Product(kids) => NodeDoc::Product {
                    id: n.id,
                    children: kids.iter().map(|&c| self.nodes[c].id).collect(),
                },
            })
            .collect();
        CircuitDoc {
            variables: self.variables.clone(),
            nodes,
            root: self.nodes[self.root()].id,
        }
    }

    pub fn to_json(&self) -> String {
        self.to_doc().to_json()
    }

    /// Hex SHA-256 of the compact JSON encoding.
    pub fn content_hash(&self) -> String {
        let compact = serde_json::to_vec(&self.to_doc()).expect("circuit documents always serialize");
        Sha256::digest(&compact).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn var_name(&self, var: usize) -> &str {
        &self.variables[var]
    }

    /// Nodes in topological order, root last.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scope(&self, node: usize) -> &[usize] {
        &self.scopes[node]
    }

    /// Node index of each leaf slot.
    pub fn leaf_nodes(&self) -> &[usize] {
        &self.leaves
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_slot(&self, node: usize) -> Option<usize> {
        self.leaf_slot[node]
    }

    /// Variable and polarity of a leaf slot.
    pub fn leaf(&self, slot: usize) -> (usize, bool) {
        match self.nodes[self.leaves[slot]].kind {
            NodeKind::Leaf { var, negated } => (var, negated),
            _ => unreachable!("leaf slots only point at leaves"),
        }
    }

    pub fn counts(&self) -> NodeCounts {
        let mut c = NodeCounts::default();
        for n in &self.nodes {
            match n.kind {
                NodeKind::Sum(_) => c.sum += 1,
                NodeKind::Product(_) => c.product += 1,
                NodeKind::Leaf { .. } => c.leaf += 1,
            }
        }
        c
    }

    /// The circuit always satisfies every property; this re-runs the checks.
    pub fn validate(&self) -> ValidationReport {
        validate(&self.to_doc())
    }

    /// Leaf function for a discrete partial assignment: leaves contradicting
    /// `q` get 0, every other leaf gets 1.
    pub fn leaf_values_for_marginal(&self, q: &Assignment) -> Result<LeafValues> {
        if let Some(bad) = q.vars().find(|&v| v >= self.n_vars()) {
            return Err(Error::UnknownVariable(format!("#{bad}")));
        }
        Ok(LeafValues(
            (0..self.n_leaves())
                .map(|slot| {
                    let (var, negated) = self.leaf(slot);
                    match q.get(var) {
                        Some(value) if value == negated => 0.0,
                        _ => 1.0,
                    }
                })
                .collect(),
        ))
    }

    /// Probability of a partial assignment.
    pub fn marginal(&self, q: &Assignment) -> Result<f64> {
        self.evaluate(&self.leaf_values_for_marginal(q)?, EvalMode::Linear)
    }

    /// Natural log of the probability of a partial assignment, computed in
    /// log space; `-inf` when the probability is zero.
    pub fn log_marginal(&self, q: &Assignment) -> Result<f64> {
        let lv = self.leaf_values_for_marginal(q)?;
        Ok(self.evaluate_signed_log(&lv)?.ln())
    }

    pub fn format_assignment(&self, q: &Assignment) -> String {
        let parts: Vec<String> = q
            .iter()
            .map(|(v, b)| format!("{}={}", self.variables[v], u8::from(b)))
            .collect();
        format!("({})", parts.join(","))
    }

    /// Parse `X1=1,X3=0` into an assignment.
    pub fn parse_assignment(&self, text: &str) -> Result<Assignment> {
        let mut q = Assignment::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected NAME=0|1, got `{part}`")))?;
            let var = self.var_index(name.trim())?;
            let value = match value.trim() {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse(format!("value for {name} must be 0 or 1, got `{other}`"))),
            };
            if q.set(var, value).is_some() {
                return Err(Error::Parse(format!("variable {name} assigned twice")));
            }
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounts {
    pub sum: usize,
    pub product: usize,
    pub leaf: usize,
}

impl fmt::Display for NodeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} sum, {} product, {} leaf", self.sum, self.product, self.leaf)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const FIG1_JSON: &str = include_str!("../../fixtures/fig1.json");

    pub fn fig1() -> Circuit {
        Circuit::from_json(FIG1_JSON).unwrap()
    }
}
