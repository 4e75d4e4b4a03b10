use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Circuit, CircuitDoc, NodeDoc, WeightedChild};
use crate::error::{Error, Result};

/// Distinct univariate sums kept per variable; extra requests reuse one of them.
const UNIVARIATE_POOL: usize = 2;

/// Generate a random smooth, decomposable, normalized circuit over
/// `X1..Xn`.
///
/// Construction: a region over a variable set is a sum node with `fanout`
/// product children; each product splits the variables into between 2 and
/// `max(fanout, 2)` random blocks and recurses with `depth - 1`. A region over
/// one variable is a sum over that variable's two literal leaves, and a region
/// at depth 0 is a product of such sums. Literal leaves are shared, and up to
/// two univariate sums per variable are reused across parents, so the result
/// is a DAG rather than a tree. Deterministic in `seed`.
pub fn random_circuit(n_vars: usize, depth: usize, fanout: usize, seed: u64) -> Result<Circuit> {
    if n_vars == 0 {
        return Err(Error::InvalidSpec("random circuit needs at least one variable".into()));
    }
    if fanout == 0 {
        return Err(Error::InvalidSpec("fanout must be at least 1".into()));
    }
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
        literals: vec![[None, None]; n_vars],
        univariate: vec![Vec::new(); n_vars],
        fanout,
    };
    let vars: Vec<usize> = (0..n_vars).collect();
    let root = g.region(&vars, depth);
    let doc = CircuitDoc {
        variables: (1..=n_vars).map(|i| format!("X{i}")).collect(),
        nodes: g.nodes,
        root,
    };
    Circuit::from_doc(&doc)
}

struct Generator {
    rng: ChaCha8Rng,
    nodes: Vec<NodeDoc>,
    literals: Vec<[Option<i64>; 2]>,
    univariate: Vec<Vec<i64>>,
    fanout: usize,
}

impl Generator {
    fn next_id(&self) -> i64 {
        self.nodes.len() as i64
    }

    fn literal(&mut self, var: usize, negated: bool) -> i64 {
        if let Some(id) = self.literals[var][usize::from(negated)] {
            return id;
        }
        let id = self.next_id();
        self.nodes.push(NodeDoc::Leaf {
            id,
            var: format!("X{}", var + 1),
            negated,
        });
        self.literals[var][usize::from(negated)] = Some(id);
        id
    }

    fn weights(&mut self, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| self.rng.gen_range(0.02..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    fn sum(&mut self, children: Vec<i64>) -> i64 {
        let weights = self.weights(children.len());
        let id = self.next_id();
        self.nodes.push(NodeDoc::Sum {
            id,
            children: children
                .into_iter()
                .zip(weights)
                .map(|(id, weight)| WeightedChild { id, weight })
                .collect(),
        });
        id
    }

    fn product(&mut self, children: Vec<i64>) -> i64 {
        let id = self.next_id();
        self.nodes.push(NodeDoc::Product { id, children });
        id
    }

    fn univariate_sum(&mut self, var: usize) -> i64 {
        let pool_len = self.univariate[var].len();
        if pool_len > 0 && (pool_len >= UNIVARIATE_POOL || self.rng.gen_bool(0.5)) {
            let pick = self.rng.gen_range(0..pool_len);
            return self.univariate[var][pick];
        }
        let pos = self.literal(var, false);
        let neg = self.literal(var, true);
        let id = self.sum(vec![pos, neg]);
        self.univariate[var].push(id);
        id
    }

    fn region(&mut self, vars: &[usize], depth: usize) -> i64 {
        if vars.len() == 1 {
            return self.univariate_sum(vars[0]);
        }
        if depth == 0 {
            let kids = vars.iter().map(|&v| self.univariate_sum(v)).collect();
            return self.product(kids);
        }
        let mut products = Vec::with_capacity(self.fanout);
        for _ in 0..self.fanout {
            let mut shuffled = vars.to_vec();
            shuffled.shuffle(&mut self.rng);
            let max_parts = self.fanout.max(2).min(vars.len());
            let parts = self.rng.gen_range(2..=max_parts);
            let mut cuts: Vec<usize> = (1..vars.len()).collect();
            cuts.shuffle(&mut self.rng);
            cuts.truncate(parts - 1);
            cuts.sort_unstable();
            let mut blocks = Vec::with_capacity(parts);
            let mut start = 0;
            for &cut in cuts.iter().chain(std::iter::once(&vars.len())) {
                let mut block = shuffled[start..cut].to_vec();
                block.sort_unstable();
                blocks.push(block);
                start = cut;
            }
            let kids = blocks.iter().map(|b| self.region(b, depth - 1)).collect();
            products.push(self.product(kids));
        }
        self.sum(products)
    }
}
