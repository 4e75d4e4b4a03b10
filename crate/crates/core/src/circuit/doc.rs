//! On-disk circuit format and structural validation.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Property, Result};

/// Maximum allowed deviation of a sum node's weights from 1.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitDoc {
    pub variables: Vec<String>,
    pub nodes: Vec<NodeDoc>,
    pub root: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeDoc {
    Leaf { id: i64, var: String, negated: bool },
    Sum { id: i64, children: Vec<WeightedChild> },
    Product { id: i64, children: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedChild {
    pub id: i64,
    pub weight: f64,
}

impl NodeDoc {
    pub fn id(&self) -> i64 {
        match self {
            NodeDoc::Leaf { id, .. } | NodeDoc::Sum { id, .. } | NodeDoc::Product { id, .. } => *id,
        }
    }

    pub(crate) fn child_ids(&self) -> Vec<i64> {
        match self {
            NodeDoc::Leaf { .. } => Vec::new(),
            NodeDoc::Sum { children, .. } => children.iter().map(|c| c.id).collect(),
            NodeDoc::Product { children, .. } => children.clone(),
        }
    }
}

impl CircuitDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit documents always serialize")
    }
}

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: Property,
    /// `None` when the check could not run because an earlier one failed.
    pub ok: Option<bool>,
    pub offending: Vec<i64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<PropertyCheck>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok == Some(true))
    }

    pub fn check(&self, property: Property) -> &PropertyCheck {
        self.checks
            .iter()
            .find(|c| c.property == property)
            .expect("every property is checked")
    }

    pub fn passed(&self, property: Property) -> bool {
        self.check(property).ok == Some(true)
    }

    /// The first failing check, as an error naming the offending node.
    pub fn first_error(&self) -> Option<Error> {
        self.checks.iter().find(|c| c.ok == Some(false)).map(|c| Error::Validation {
            node: c.offending[0],
            property: c.property,
            detail: c.details.first().cloned().unwrap_or_default(),
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match c.ok {
                Some(true) => writeln!(f, "{}: ok", c.property)?,
                Some(false) => {
                    let ids: Vec<String> = c.offending.iter().map(|i| i.to_string()).collect();
                    writeln!(f, "{}: FAIL (nodes {})", c.property, ids.join(", "))?;
                    for d in &c.details {
                        writeln!(f, "  {d}")?;
                    }
                }
                None => writeln!(f, "{}: skipped", c.property)?,
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Findings {
    offending: Vec<i64>,
    details: Vec<String>,
}

impl Findings {
    fn push(&mut self, id: i64, detail: String) {
        if !self.offending.contains(&id) {
            self.offending.push(id);
        }
        self.details.push(detail);
    }

    fn into_check(self, property: Property) -> PropertyCheck {
        PropertyCheck {
            property,
            ok: Some(self.offending.is_empty()),
            offending: self.offending,
            details: self.details,
        }
    }
}

fn skipped(property: Property) -> PropertyCheck {
    PropertyCheck {
        property,
        ok: None,
        offending: Vec::new(),
        details: Vec::new(),
    }
}

/// Indexed view of a document whose references all resolve.
pub(crate) struct Resolved<'a> {
    pub doc: &'a CircuitDoc,
    pub children: Vec<Vec<usize>>,
    pub root: usize,
}

/// Check every structural property of a document.
///
/// Properties that depend on a failed prerequisite (for example smoothness
/// on a cyclic graph) are reported as skipped.
pub fn validate(doc: &CircuitDoc) -> ValidationReport {
    let mut checks = Vec::with_capacity(Property::ALL.len());

    let (refs, resolved) = check_references(doc);
    checks.push(refs);
    let Some(resolved) = resolved else {
        checks.extend(Property::ALL[1..].iter().map(|&p| skipped(p)));
        return ValidationReport { checks };
    };

    checks.push(check_arity(doc));
    let (acyclic, order) = check_acyclic(&resolved);
    checks.push(acyclic);
    checks.push(check_reachable(&resolved));
    checks.push(check_normalized(doc));

    match order {
        Some(order) => {
            let scopes = scopes_in_order(&resolved, &order);
            checks.push(check_smooth(&resolved, &scopes));
            checks.push(check_decomposable(&resolved, &scopes));
        }
        None => {
            checks.push(skipped(Property::Smooth));
            checks.push(skipped(Property::Decomposable));
        }
    }
    ValidationReport { checks }
}

fn check_references(doc: &CircuitDoc) -> (PropertyCheck, Option<Resolved<'_>>) {
    let mut found = Findings::default();
    let mut index: HashMap<i64, usize> = HashMap::with_capacity(doc.nodes.len());
    for (i, n) in doc.nodes.iter().enumerate() {
        if index.insert(n.id(), i).is_some() {
            found.push(n.id(), format!("duplicate node id {}", n.id()));
        }
    }
    let vars: HashMap<&str, usize> = doc
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    if vars.len() != doc.variables.len() {
        found.push(doc.root, "duplicate variable names".to_string());
    }
    let mut children = Vec::with_capacity(doc.nodes.len());
    for n in &doc.nodes {
        if let NodeDoc::Leaf { id, var, .. } = n {
            if !vars.contains_key(var.as_str()) {
                found.push(*id, format!("leaf {id} references undeclared variable `{var}`"));
            }
        }
        let mut resolved = Vec::new();
        for c in n.child_ids() {
            match index.get(&c) {
                Some(&i) => resolved.push(i),
                None => found.push(n.id(), format!("node {} references missing child {c}", n.id())),
            }
        }
        children.push(resolved);
    }
    let root = index.get(&doc.root).copied();
    if root.is_none() {
        found.push(doc.root, format!("root {} does not exist", doc.root));
    }
    let ok = found.offending.is_empty();
    let check = found.into_check(Property::References);
    let resolved = match (ok, root) {
        (true, Some(root)) => Some(Resolved { doc, children, root }),
        _ => None,
    };
    (check, resolved)
}

fn check_arity(doc: &CircuitDoc) -> PropertyCheck {
    let mut found = Findings::default();
    for n in &doc.nodes {
        if !matches!(n, NodeDoc::Leaf { .. }) && n.child_ids().is_empty() {
            found.push(n.id(), format!("internal node {} has no children", n.id()));
        }
    }
    found.into_check(Property::Arity)
}

/// Postorder over all nodes (children first); `None` if a cycle exists.
fn check_acyclic(r: &Resolved<'_>) -> (PropertyCheck, Option<Vec<usize>>) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = r.children.len();
    let mut mark = vec![Mark::New; n];
    let mut order = Vec::with_capacity(n);
    let mut found = Findings::default();
    // Start from the root so that the order of a valid circuit is the root's postorder.
    let starts = std::iter::once(r.root).chain(0..n);
    for start in starts {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        mark[start] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < r.children[node].len() {
                let child = r.children[node][*next];
                *next += 1;
                match mark[child] {
                    Mark::New => {
                        mark[child] = Mark::Active;
                        stack.push((child, 0));
                    }
                    Mark::Active => {
                        let id = r.doc.nodes[child].id();
                        found.push(id, format!("cycle through node {id}"));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                order.push(node);
                stack.pop();
            }
        }
    }
    let ok = found.offending.is_empty();
    (found.into_check(Property::Acyclic), ok.then_some(order))
}

fn check_reachable(r: &Resolved<'_>) -> PropertyCheck {
    let n = r.children.len();
    let mut seen = vec![false; n];
    let mut stack = vec![r.root];
    seen[r.root] = true;
    while let Some(i) = stack.pop() {
        for &c in &r.children[i] {
            if !seen[c] {
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    let mut found = Findings::default();
    for (i, s) in seen.iter().enumerate() {
        if !s {
            let id = r.doc.nodes[i].id();
            found.push(id, format!("node {id} is unreachable from the root"));
        }
    }
    found.into_check(Property::Reachable)
}

fn check_normalized(doc: &CircuitDoc) -> PropertyCheck {
    let mut found = Findings::default();
    for n in &doc.nodes {
        if let NodeDoc::Sum { id, children } = n {
            if let Some(c) = children.iter().find(|c| !(c.weight.is_finite() && c.weight > 0.0)) {
                found.push(*id, format!("sum {id} has non-positive weight {} on child {}", c.weight, c.id));
                continue;
            }
            let total: f64 = children.iter().map(|c| c.weight).sum();
            if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                found.push(*id, format!("sum {id} weights add up to {total}"));
            }
        }
    }
    found.into_check(Property::Normalized)
}

/// Sorted variable scope for each node, filled in postorder.
pub(crate) fn scopes_in_order(r: &Resolved<'_>, order: &[usize]) -> Vec<Vec<usize>> {
    let var_index: HashMap<&str, usize> = r
        .doc
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let mut scopes: Vec<Vec<usize>> = vec![Vec::new(); r.children.len()];
    for &i in order {
        scopes[i] = match &r.doc.nodes[i] {
            NodeDoc::Leaf { var, .. } => vec![var_index[var.as_str()]],
            _ => {
                let mut s: Vec<usize> = r.children[i]
                    .iter()
                    .flat_map(|&c| scopes[c].iter().copied())
                    .collect();
                s.sort_unstable();
                s.dedup();
                s
            }
        };
    }
    scopes
}

fn check_smooth(r: &Resolved<'_>, scopes: &[Vec<usize>]) -> PropertyCheck {
    let mut found = Findings::default();
    for (i, n) in r.doc.nodes.iter().enumerate() {
        if let NodeDoc::Sum { id, .. } = n {
            let kids = &r.children[i];
            if let Some(&first) = kids.first() {
                if kids.iter().any(|&c| scopes[c] != scopes[first]) {
                    found.push(*id, format!("children of sum {id} have different scopes"));
                }
            }
        }
    }
    found.into_check(Property::Smooth)
}

fn check_decomposable(r: &Resolved<'_>, scopes: &[Vec<usize>]) -> PropertyCheck {
    let mut found = Findings::default();
    for (i, n) in r.doc.nodes.iter().enumerate() {
        if let NodeDoc::Product { id, .. } = n {
            let total: usize = r.children[i].iter().map(|&c| scopes[c].len()).sum();
            if total != scopes[i].len() {
                found.push(*id, format!("children of product {id} share variables"));
            }
        }
    }
    found.into_check(Property::Decomposable)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(id: i64, var: &str, negated: bool) -> NodeDoc {
        NodeDoc::Leaf {
            id,
            var: var.into(),
            negated,
        }
    }

    fn sum(id: i64, children: &[(i64, f64)]) -> NodeDoc {
        NodeDoc::Sum {
            id,
            children: children
                .iter()
                .map(|&(id, weight)| WeightedChild { id, weight })
                .collect(),
        }
    }

    fn doc(vars: &[&str], nodes: Vec<NodeDoc>, root: i64) -> CircuitDoc {
        CircuitDoc {
            variables: vars.iter().map(|s| s.to_string()).collect(),
            nodes,
            root,
        }
    }

    #[test]
    fn single_leaf_is_valid() {
        let d = doc(&["X1"], vec![leaf(0, "X1", false)], 0);
        assert!(validate(&d).is_ok());
    }

    #[test]
    fn product_with_shared_scope_fails_decomposability() {
        let d = doc(
            &["X3"],
            vec![
                leaf(1, "X3", false),
                leaf(2, "X3", true),
                NodeDoc::Product { id: 9, children: vec![1, 2] },
            ],
            9,
        );
        let r = validate(&d);
        assert!(!r.passed(Property::Decomposable));
        assert_eq!(r.check(Property::Decomposable).offending, vec![9]);
        assert!(r.passed(Property::Smooth));
    }

    #[test]
    fn sum_over_different_scopes_fails_smoothness() {
        let d = doc(
            &["X3", "X4"],
            vec![leaf(1, "X3", false), leaf(2, "X4", false), sum(5, &[(1, 0.5), (2, 0.5)])],
            5,
        );
        let r = validate(&d);
        assert!(!r.passed(Property::Smooth));
        assert_eq!(r.check(Property::Smooth).offending, vec![5]);
    }

    #[test]
    fn unnormalized_sum_is_reported() {
        let d = doc(
            &["X"],
            vec![leaf(1, "X", false), leaf(2, "X", true), sum(3, &[(1, 0.5), (2, 0.6)])],
            3,
        );
        let r = validate(&d);
        assert!(!r.passed(Property::Normalized));
        match r.first_error() {
            Some(Error::Validation { node, property, .. }) => {
                assert_eq!(node, 3);
                assert_eq!(property, Property::Normalized);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycle_is_detected_and_scope_checks_skipped() {
        let d = doc(
            &["X"],
            vec![
                leaf(1, "X", false),
                NodeDoc::Product { id: 2, children: vec![1, 3] },
                NodeDoc::Product { id: 3, children: vec![2] },
            ],
            2,
        );
        let r = validate(&d);
        assert!(!r.passed(Property::Acyclic));
        assert_eq!(r.check(Property::Smooth).ok, None);
    }

    #[test]
    fn dangling_references() {
        let d = doc(&["X"], vec![leaf(1, "Y", false), NodeDoc::Product { id: 2, children: vec![1, 7] }], 2);
        let r = validate(&d);
        let refs = r.check(Property::References);
        assert_eq!(refs.ok, Some(false));
        assert_eq!(refs.offending, vec![1, 2]);
        assert!(r.checks[1..].iter().all(|c| c.ok.is_none()));
    }

    #[test]
    fn unreachable_node_is_reported() {
        let d = doc(&["X"], vec![leaf(1, "X", false), leaf(2, "X", true)], 1);
        let r = validate(&d);
        assert_eq!(r.check(Property::Reachable).offending, vec![2]);
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(CircuitDoc::from_json("{\"variables\": ["), Err(Error::Parse(_))));
        assert!(matches!(
            CircuitDoc::from_json(r#"{"variables":[],"nodes":[{"id":1,"kind":"max"}],"root":1}"#),
            Err(Error::Parse(_))
        ));
    }
}
