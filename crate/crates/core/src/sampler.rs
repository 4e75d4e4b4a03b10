//! Top-down ancestral sampling and evidence datasets.
//!
//! Sample `i` of a dataset draws from its own ChaCha8 stream: the generator is
//! seeded with the dataset seed and then moved to stream `i`. The rows
//! therefore do not depend on how many threads produce them.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Assignment, Circuit, NodeKind};
use crate::error::{Error, Result};
use crate::mmap::VariablePartition;

/// Draw one complete assignment.
///
/// Sum nodes pick a single child with probability equal to its weight,
/// product nodes expand every child, and each reached leaf fixes its
/// variable.
pub fn sample_full<R: Rng + ?Sized>(c: &Circuit, rng: &mut R) -> Result<Assignment> {
    let nodes = c.nodes();
    let mut values: Vec<Option<bool>> = vec![None; c.n_vars()];
    let mut stack = vec![c.root()];
    while let Some(n) = stack.pop() {
        match &nodes[n].kind {
            NodeKind::Leaf { var, negated } => {
                if values[*var].replace(!negated).is_some() {
                    return Err(Error::ConflictingLeafAssignment { var: *var });
                }
            }
            NodeKind::Product(children) => stack.extend(children.iter().rev()),
            NodeKind::Sum(children) => stack.push(pick(children, rng.gen::<f64>())),
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(v, x)| x.map(|b| (v, b)).ok_or(Error::ConflictingLeafAssignment { var: v }))
        .collect::<Result<Vec<_>>>()
        .map(Assignment::from_pairs)
}

fn pick(children: &[(usize, f64)], u: f64) -> usize {
    let mut acc = 0.0;
    for &(child, w) in children {
        acc += w;
        if u < acc {
            return child;
        }
    }
    // rounding left the weights summing just below `u`
    children.last().expect("sum nodes have children").0
}

/// Generator for sample index `i` of a dataset seeded with `seed`.
pub fn substream(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub circuit_hash: String,
    pub seed: u64,
    pub n: usize,
}

/// Rows of 0/1 values over a fixed list of evidence variables.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceDataset {
    pub variables: Vec<String>,
    pub rows: Vec<Vec<u8>>,
    /// Present for generated datasets, absent for ones read from CSV.
    pub provenance: Option<Provenance>,
}

/// `n` independent samples projected onto the evidence variables, in the
/// partition's declared evidence order.
pub fn generate_dataset(c: &Circuit, part: &VariablePartition, n: usize, seed: u64) -> Result<EvidenceDataset> {
    if n == 0 {
        return Err(Error::InvalidSpec("dataset size must be at least 1".into()));
    }
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = sample_full(c, &mut substream(seed, i as u64))?;
            Ok(x.bits(part.evidence()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvidenceDataset {
        variables: part.evidence().iter().map(|&v| c.var_name(v).to_string()).collect(),
        rows,
        provenance: Some(Provenance {
            circuit_hash: c.content_hash(),
            seed,
            n,
        }),
    })
}

/// `n` complete samples, one bit per circuit variable.
pub fn sample_many(c: &Circuit, n: usize, seed: u64) -> Result<Vec<Vec<u8>>> {
    let all: Vec<usize> = (0..c.n_vars()).collect();
    (0..n)
        .into_par_iter()
        .map(|i| Ok(sample_full(c, &mut substream(seed, i as u64))?.bits(&all)))
        .collect()
}

impl EvidenceDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fails unless the columns are exactly the partition's evidence
    /// variables in declared order.
    pub fn check_columns(&self, c: &Circuit, part: &VariablePartition) -> Result<()> {
        let expected = part.evidence().iter().map(|&v| c.var_name(v));
        if !expected.eq(self.variables.iter().map(String::as_str)) {
            return Err(Error::ShapeMismatch(format!(
                "dataset columns {:?} do not match the evidence variables",
                self.variables
            )));
        }
        Ok(())
    }

    pub fn subset(&self, idx: &[usize]) -> EvidenceDataset {
        EvidenceDataset {
            variables: self.variables.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: None,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Never)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(&self.variables)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|b| if *b == 1 { "1" } else { "0" }))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut input = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let variables: Vec<String> = input.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, record) in input.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| match f {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::Parse(format!("row {}: expected 0 or 1, found `{other}`", line + 1))),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        Ok(EvidenceDataset {
            variables,
            rows,
            provenance: None,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::fixtures::fig1;

    #[test]
    fn fig1_x1_frequency() {
        let c = fig1();
        let all = sample_many(&c, 100_000, 7).unwrap();
        let ones = all.iter().filter(|r| r[0] == 1).count() as f64 / 1e5;
        assert!((ones - 0.3).abs() < 0.005, "{ones}");
    }

    #[test]
    fn single_variable_bernoulli() {
        let c = Circuit::from_json(
            r#"{"variables":["X"],"nodes":[
            {"id":1,"kind":"leaf","var":"X","negated":true},
            {"id":2,"kind":"leaf","var":"X","negated":false},
            {"id":3,"kind":"sum","children":[{"id":1,"weight":0.7},{"id":2,"weight":0.3}]}],"root":3}"#,
        )
        .unwrap();
        let all = sample_many(&c, 100_000, 11).unwrap();
        let zeros = all.iter().filter(|r| r[0] == 0).count() as f64 / 1e5;
        assert!((zeros - 0.7).abs() < 0.01, "{zeros}");
    }

    #[test]
    fn samples_are_complete_and_supported() {
        let c = fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = sample_full(&c, &mut rng).unwrap();
            assert_eq!(x.len(), 4);
            assert!(c.marginal(&x).unwrap() > 0.0);
        }
    }

    #[test]
    fn dataset_is_deterministic_and_projected() {
        let c = fig1();
        let part = VariablePartition::new(4, vec![3, 0], vec![2], vec![1]).unwrap();
        let a = generate_dataset(&c, &part, 50, 5).unwrap();
        let b = generate_dataset(&c, &part, 50, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.variables, ["X4", "X1"]);
        assert!(a.rows.iter().all(|r| r.len() == 2));
        let full = sample_many(&c, 50, 5).unwrap();
        for (row, x) in a.rows.iter().zip(&full) {
            assert_eq!(row, &vec![x[3], x[0]]);
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let c = fig1();
        let part = VariablePartition::new(4, vec![0], vec![2], vec![1, 3]).unwrap();
        assert!(matches!(generate_dataset(&c, &part, 0, 1), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn csv_roundtrip() {
        let c = fig1();
        let part = VariablePartition::new(4, vec![0, 1], vec![2], vec![3]).unwrap();
        let d = generate_dataset(&c, &part, 8, 2).unwrap();
        let text = d.to_csv_string();
        assert!(text.starts_with("X1,X2\n"));
        assert_eq!(text.lines().count(), 9);
        assert!(!text.contains('\r'));
        let back = EvidenceDataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.rows, d.rows);
        assert_eq!(back.variables, d.variables);
        back.check_columns(&c, &part).unwrap();
    }

    #[test]
    fn csv_rejects_non_binary() {
        assert!(EvidenceDataset::read_csv("A,B\n0,2\n".as_bytes()).is_err());
    }
}
