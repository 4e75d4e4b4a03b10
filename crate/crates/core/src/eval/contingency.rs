use std::fmt;

use serde::{Deserialize, Serialize};

use super::compare::{EvalReport, TIE_RESOLUTION};
use crate::error::{Error, Result};

/// Pairwise win counts over datasets: `wins[i][j]` counts reports where
/// method `i` has a strictly higher mean log-likelihood than method `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub methods: Vec<String>,
    pub wins: Vec<Vec<usize>>,
    pub ties: Vec<Vec<usize>>,
    pub total: usize,
}

fn rounded(x: f64) -> f64 {
    if x.is_finite() {
        (x / TIE_RESOLUTION).round() * TIE_RESOLUTION
    } else {
        x
    }
}

pub fn contingency(reports: &[EvalReport]) -> Result<ContingencyTable> {
    let methods: Vec<String> = match reports.first() {
        Some(r) => r.methods.iter().map(|m| m.method.clone()).collect(),
        None => Vec::new(),
    };
    if reports
        .iter()
        .any(|r| !r.methods.iter().map(|m| &m.method).eq(methods.iter()))
    {
        return Err(Error::MethodSetMismatch);
    }
    let k = methods.len();
    let mut wins = vec![vec![0; k]; k];
    let mut ties = vec![vec![0; k]; k];
    for r in reports {
        let means: Vec<f64> = r.methods.iter().map(|m| rounded(m.mean_or_neg_inf())).collect();
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                if means[i] > means[j] {
                    wins[i][j] += 1;
                } else if means[i] == means[j] {
                    ties[i][j] += 1;
                }
            }
        }
    }
    Ok(ContingencyTable {
        methods,
        wins,
        ties,
        total: reports.len(),
    })
}

impl ContingencyTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.methods.iter().cloned());
        out.write_record(&header)?;
        for (name, row) in self.methods.iter().zip(&self.wins) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(usize::to_string));
            out.write_record(&rec)?;
        }
        let bytes = out.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8 output"))
    }
}

impl fmt::Display for ContingencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self
            .methods
            .iter()
            .map(String::len)
            .chain(std::iter::once(self.total.to_string().len()))
            .max()
            .unwrap_or(1);
        write!(f, "{:w$}", "")?;
        for m in &self.methods {
            write!(f, "  {m:>w$}")?;
        }
        writeln!(f)?;
        for (m, row) in self.methods.iter().zip(&self.wins) {
            write!(f, "{m:<w$}")?;
            for c in row {
                write!(f, "  {c:>w$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::compare::{MethodReport, ReportMeta};
    use crate::eval::problems::{ProblemMode, ProblemSetMeta};

    fn report(means: &[(&str, f64)]) -> EvalReport {
        EvalReport {
            meta: ReportMeta {
                problems: ProblemSetMeta {
                    qr: 0.5,
                    mode: ProblemMode::Mmap,
                    seed: 0,
                    circuit_hash: String::new(),
                },
                n_problems: 1,
                timing_reps: 1,
                tie_resolution: TIE_RESOLUTION,
            },
            methods: means
                .iter()
                .map(|(name, m)| MethodReport {
                    method: name.to_string(),
                    mean_ll: Some(*m),
                    std_ll: Some(0.0),
                    excluded: 0,
                    mean_time_secs: 0.0,
                    scores: vec![Some(*m)],
                    times_secs: vec![0.0],
                    errors: vec![None],
                })
                .collect(),
        }
    }

    #[test]
    fn counts_wins_and_ties() {
        let rs: Vec<EvalReport> = [(-1.0, -2.0), (-1.0, -3.0), (-0.5, -0.9), (-2.0, -2.0), (-4.0, -1.0)]
            .iter()
            .map(|&(a, b)| report(&[("A", a), ("B", b)]))
            .collect();
        let t = contingency(&rs).unwrap();
        assert_eq!(t.wins, vec![vec![0, 3], vec![1, 0]]);
        assert_eq!(t.wins[0][1] + t.wins[1][0] + t.ties[0][1], t.total);
    }

    #[test]
    fn exact_tie_gives_empty_table() {
        let t = contingency(&[report(&[("A", -1.0), ("B", -1.0), ("C", -1.0 + 1e-12)])]).unwrap();
        assert!(t.wins.iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn mismatched_methods() {
        let r = contingency(&[report(&[("A", -1.0)]), report(&[("B", -1.0)])]);
        assert!(matches!(r, Err(Error::MethodSetMismatch)));
    }

    #[test]
    fn csv_and_text() {
        let t = contingency(&[report(&[("ssmp", -1.0), ("max", -2.0)])]).unwrap();
        assert_eq!(t.to_csv().unwrap(), ",ssmp,max\nssmp,0,1\nmax,0,0\n");
        let text = t.to_string();
        assert_eq!(text.lines().count(), 3);
    }
}
