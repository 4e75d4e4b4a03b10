use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::mmap::{MmapProblem, VariablePartition};
use crate::sampler::{generate_dataset, substream, EvidenceDataset};

/// Stream reserved for choosing the partition; sample `i` uses stream `i`.
const STREAM_PARTITION: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemMode {
    /// Every non-query variable is evidence.
    Mpe,
    /// Half of the non-query variables (rounded down) are evidence, the rest
    /// hidden.
    Mmap,
}

impl fmt::Display for ProblemMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemMode::Mpe => "mpe",
            ProblemMode::Mmap => "mmap",
        })
    }
}

impl FromStr for ProblemMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpe" => Ok(ProblemMode::Mpe),
            "mmap" => Ok(ProblemMode::Mmap),
            other => Err(Error::Parse(format!("unknown mode `{other}`, expected mpe or mmap"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSetMeta {
    pub qr: f64,
    pub mode: ProblemMode,
    pub seed: u64,
    pub circuit_hash: String,
}

/// Problems sharing one circuit and one partition, differing in evidence.
#[derive(Debug, Clone)]
pub struct ProblemSet {
    pub problems: Vec<MmapProblem>,
    pub meta: ProblemSetMeta,
}

impl ProblemSet {
    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn partition(&self) -> Option<&Arc<VariablePartition>> {
        self.problems.first().map(|p| &p.partition)
    }

    /// Evidence rows in the partition's evidence order.
    pub fn evidence_rows(&self) -> Vec<Vec<u8>> {
        self.problems.iter().map(MmapProblem::evidence_bits).collect()
    }
}

/// Seeded partition with `round(qr * n)` query variables.
pub fn random_partition(n_vars: usize, qr: f64, mode: ProblemMode, seed: u64) -> Result<VariablePartition> {
    if !(qr > 0.0 && qr < 1.0) {
        return Err(Error::InvalidSpec(format!("query ratio {qr} outside (0, 1)")));
    }
    let m = (qr * n_vars as f64).round() as usize;
    if m == 0 {
        return Err(Error::DegeneratePartition(format!(
            "query ratio {qr} selects no variables out of {n_vars}"
        )));
    }
    let mut rng = substream(seed, STREAM_PARTITION);
    let mut vars: Vec<usize> = (0..n_vars).collect();
    vars.shuffle(&mut rng);
    let (query, rest) = vars.split_at(m);
    let mut query = query.to_vec();
    let mut rest = rest.to_vec();
    query.sort_unstable();
    let n_evidence = match mode {
        ProblemMode::Mpe => rest.len(),
        ProblemMode::Mmap => rest.len() / 2,
    };
    if mode == ProblemMode::Mmap && n_evidence == 0 {
        return Err(Error::DegeneratePartition(format!(
            "{} remaining variables leave no evidence",
            rest.len()
        )));
    }
    rest.shuffle(&mut rng);
    let mut evidence = rest[..n_evidence].to_vec();
    let mut hidden = rest[n_evidence..].to_vec();
    evidence.sort_unstable();
    hidden.sort_unstable();
    VariablePartition::new(n_vars, evidence, query, hidden)
}

/// `n` problems over one seeded partition with evidence drawn from the
/// circuit itself.
pub fn generate_problems(c: Arc<Circuit>, qr: f64, mode: ProblemMode, n: usize, seed: u64) -> Result<ProblemSet> {
    let part = Arc::new(random_partition(c.n_vars(), qr, mode, seed)?);
    let data = generate_dataset(&c, &part, n, seed)?;
    let mut set = problems_from_dataset(c, part, &data)?;
    set.meta.qr = qr;
    set.meta.mode = mode;
    set.meta.seed = seed;
    Ok(set)
}

/// One problem per dataset row.
pub fn problems_from_dataset(c: Arc<Circuit>, part: Arc<VariablePartition>, data: &EvidenceDataset) -> Result<ProblemSet> {
    data.check_columns(&c, &part)?;
    let problems = data
        .rows
        .iter()
        .map(|row| MmapProblem::from_bits(Arc::clone(&c), Arc::clone(&part), row))
        .collect::<Result<Vec<_>>>()?;
    let (n, m, h) = part.sizes();
    let meta = ProblemSetMeta {
        qr: m as f64 / (n + m + h) as f64,
        mode: if h == 0 { ProblemMode::Mpe } else { ProblemMode::Mmap },
        seed: data.provenance.as_ref().map_or(0, |p| p.seed),
        circuit_hash: c.content_hash(),
    };
    Ok(ProblemSet { problems, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_circuit;

    fn ten() -> Arc<Circuit> {
        Arc::new(random_circuit(10, 2, 2, 1).unwrap())
    }

    #[test]
    fn mpe_sizes() {
        let ps = generate_problems(ten(), 0.5, ProblemMode::Mpe, 4, 0).unwrap();
        assert_eq!(ps.partition().unwrap().sizes(), (5, 5, 0));
    }

    #[test]
    fn mmap_sizes() {
        let ps = generate_problems(ten(), 0.4, ProblemMode::Mmap, 4, 0).unwrap();
        assert_eq!(ps.partition().unwrap().sizes(), (3, 4, 3));
        let p = random_partition(10, 0.5, ProblemMode::Mmap, 2).unwrap();
        assert_eq!(p.sizes(), (2, 5, 3));
    }

    #[test]
    fn deterministic() {
        let a = generate_problems(ten(), 0.3, ProblemMode::Mmap, 6, 9).unwrap();
        let b = generate_problems(ten(), 0.3, ProblemMode::Mmap, 6, 9).unwrap();
        assert_eq!(a.partition(), b.partition());
        assert_eq!(a.evidence_rows(), b.evidence_rows());
        let c = generate_problems(ten(), 0.3, ProblemMode::Mmap, 6, 10).unwrap();
        assert!(a.partition() != c.partition() || a.evidence_rows() != c.evidence_rows());
    }

    #[test]
    fn degenerate_partitions() {
        assert!(matches!(
            random_partition(10, 0.9, ProblemMode::Mmap, 0),
            Err(Error::DegeneratePartition(_))
        ));
        assert!(matches!(
            random_partition(10, 0.01, ProblemMode::Mpe, 0),
            Err(Error::DegeneratePartition(_))
        ));
        assert!(matches!(random_partition(10, 1.0, ProblemMode::Mpe, 0), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("mmap".parse::<ProblemMode>().unwrap(), ProblemMode::Mmap);
        assert_eq!(ProblemMode::Mpe.to_string(), "mpe");
        assert!("map".parse::<ProblemMode>().is_err());
    }
}
