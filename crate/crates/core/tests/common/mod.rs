//! Reference computations that do not go through the library's evaluator.
//!
//! The oracle reads circuit JSON as untyped values and evaluates full
//! assignments recursively; marginals come from summing the joint over all
//! completions.

#![allow(dead_code)]

use std::collections::HashMap;

use serde_json::Value;

pub const FIG1: &str = include_str!("../../fixtures/fig1.json");

pub struct Oracle {
    pub variables: Vec<String>,
    nodes: HashMap<i64, Value>,
    root: i64,
}

impl Oracle {
    pub fn from_json(text: &str) -> Self {
        let v: Value = serde_json::from_str(text).unwrap();
        let variables = v["variables"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s.as_str().unwrap().to_string())
            .collect();
        let nodes = v["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|n| (n["id"].as_i64().unwrap(), n.clone()))
            .collect();
        Oracle {
            variables,
            nodes,
            root: v["root"].as_i64().unwrap(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    fn var(&self, name: &str) -> usize {
        self.variables.iter().position(|v| v == name).unwrap()
    }

    fn eval(&self, id: i64, x: &[u8], memo: &mut HashMap<i64, f64>) -> f64 {
        if let Some(&v) = memo.get(&id) {
            return v;
        }
        let n = &self.nodes[&id];
        let v = match n["kind"].as_str().unwrap() {
            "leaf" => {
                let value = x[self.var(n["var"].as_str().unwrap())];
                let negated = n["negated"].as_bool().unwrap();
                if (value == 1) != negated {
                    1.0
                } else {
                    0.0
                }
            }
            "product" => n["children"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| self.eval(c.as_i64().unwrap(), x, memo))
                .product(),
            "sum" => n["children"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| c["weight"].as_f64().unwrap() * self.eval(c["id"].as_i64().unwrap(), x, memo))
                .sum(),
            k => panic!("unknown kind {k}"),
        };
        memo.insert(id, v);
        v
    }

    /// Probability of a complete assignment.
    pub fn joint(&self, x: &[u8]) -> f64 {
        self.eval(self.root, x, &mut HashMap::new())
    }

    /// Probability of a partial assignment `(var, value)` by enumeration.
    pub fn marginal(&self, fixed: &[(usize, u8)]) -> f64 {
        let free: Vec<usize> = (0..self.n_vars()).filter(|v| !fixed.iter().any(|(f, _)| f == v)).collect();
        let mut x = vec![0u8; self.n_vars()];
        for &(v, b) in fixed {
            x[v] = b;
        }
        let mut total = 0.0;
        for code in 0..1u64 << free.len() {
            for (k, &v) in free.iter().enumerate() {
                x[v] = ((code >> k) & 1) as u8;
            }
            total += self.joint(&x);
        }
        total
    }

    /// Table of `p(e, q)` over all query assignments, indexed by code with
    /// bit `k` holding query slot `k`.
    pub fn query_table(&self, evidence: &[(usize, u8)], query: &[usize]) -> Vec<f64> {
        (0..1u64 << query.len())
            .map(|code| {
                let mut fixed = evidence.to_vec();
                fixed.extend(query.iter().enumerate().map(|(k, &v)| (v, ((code >> k) & 1) as u8)));
                self.marginal(&fixed)
            })
            .collect()
    }
}

/// The relaxed value as a mixture over query assignments.
pub fn mixture_value(table: &[f64], q: &[f64]) -> f64 {
    table
        .iter()
        .enumerate()
        .map(|(code, p)| {
            let w: f64 = q
                .iter()
                .enumerate()
                .map(|(k, &qk)| if (code >> k) & 1 == 1 { qk } else { 1.0 - qk })
                .product();
            w * p
        })
        .sum()
}

/// Partial derivative of the mixture in coordinate `j`.
pub fn mixture_derivative(table: &[f64], q: &[f64], j: usize) -> f64 {
    table
        .iter()
        .enumerate()
        .map(|(code, p)| {
            let w: f64 = q
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(k, &qk)| if (code >> k) & 1 == 1 { qk } else { 1.0 - qk })
                .product();
            let sign = if (code >> j) & 1 == 1 { 1.0 } else { -1.0 };
            sign * w * p
        })
        .sum()
}

pub fn binary_entropy(q: f64) -> f64 {
    let q = q.clamp(1e-12, 1.0 - 1e-12);
    -(q * q.ln() + (1.0 - q) * (1.0 - q).ln())
}

/// Infinity-norm relative error of `got` against `want`.
pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let diff = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = want.iter().map(|b| b.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
