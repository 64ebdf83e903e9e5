use crate::error::{Error, Result};
use crate::procedure::Procedure;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoverySummary {
    pub procedure: String,
    pub average_discoveries: f64,
    /// Fraction of families with at least one discovery.
    pub any_discovery: f64,
}

/// Counts of families by discovery count under two procedures.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTab {
    pub row: String,
    pub col: String,
    /// `counts[i][j]`: families with `i` discoveries by `row` and `j` by `col`.
    pub counts: Vec<Vec<u64>>,
}

impl CrossTab {
    pub fn is_diagonal(&self) -> bool {
        self.counts
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().enumerate().all(|(j, &c)| i == j || c == 0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub k: usize,
    pub families: usize,
    pub summaries: Vec<DiscoverySummary>,
    pub crosstabs: Vec<CrossTab>,
}

impl CompareTable {
    /// Summary rows as CSV.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("procedure,families,average_discoveries,any_discovery\n");
        for s in &self.summaries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.procedure,
                self.families,
                super::fmt_sig(s.average_discoveries, super::CSV_DIGITS),
                super::fmt_sig(s.any_discovery, super::CSV_DIGITS)
            ));
        }
        out
    }

    /// Cross-tabulations in long form.
    pub fn crosstab_csv(&self) -> String {
        let mut out =
            String::from("row_procedure,col_procedure,row_discoveries,col_discoveries,families\n");
        for t in &self.crosstabs {
            for (i, r) in t.counts.iter().enumerate() {
                for (j, &c) in r.iter().enumerate() {
                    if c > 0 {
                        out.push_str(&format!("{},{},{i},{j},{c}\n", t.row, t.col));
                    }
                }
            }
        }
        out
    }
}

/// Discovery summaries and pairwise cross-tabulations over a dataset.
pub fn compare_table(dataset: &[Vec<f64>], procedures: &[Procedure]) -> Result<CompareTable> {
    let k = dataset.first().map_or(0, Vec::len);
    for (index, fam) in dataset.iter().enumerate() {
        if fam.len() != k {
            return Err(Error::Ragged {
                index,
                expected: k,
                got: fam.len(),
            });
        }
    }
    let counts: Vec<Vec<usize>> = procedures
        .iter()
        .map(|p| {
            dataset
                .iter()
                .map(|fam| p.apply(fam).map(|d| d.count()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let n = dataset.len().max(1) as f64;
    let summaries = procedures
        .iter()
        .zip(&counts)
        .map(|(p, c)| DiscoverySummary {
            procedure: p.label().to_string(),
            average_discoveries: c.iter().sum::<usize>() as f64 / n,
            any_discovery: c.iter().filter(|&&x| x > 0).count() as f64 / n,
        })
        .collect();
    let mut crosstabs = Vec::new();
    for a in 0..procedures.len() {
        for b in a + 1..procedures.len() {
            let mut t = vec![vec![0u64; k + 1]; k + 1];
            for (x, y) in counts[a].iter().zip(&counts[b]) {
                t[*x][*y] += 1;
            }
            crosstabs.push(CrossTab {
                row: procedures[a].label().to_string(),
                col: procedures[b].label().to_string(),
                counts: t,
            });
        }
    }
    Ok(CompareTable {
        k,
        families: dataset.len(),
        summaries,
        crosstabs,
    })
}
