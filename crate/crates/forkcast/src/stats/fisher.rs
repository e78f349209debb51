//! Fisher exact homogeneity tests for small contingency tables.
//!
//! The two-sided p-value follows the point-probability convention: sum the
//! probabilities of all margin-preserving tables whose point probability does
//! not exceed the observed table's (with a 1e-12 additive slack to absorb
//! float ties). 2x2 tables enumerate the one free cell against the
//! hypergeometric; 2x3 tables enumerate the two free cells.

use super::StatsError;
use serde::{Deserialize, Serialize};

/// Absolute slack when comparing point probabilities for the two-sided sum.
const TIE_SLACK: f64 = 1e-12;

/// Largest table total accepted by the exact enumeration.
pub const ENUMERATION_BOUND: u32 = 200;

/// A 2-row contingency table (success/failure by condition), 2 or 3 columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<u32>,
    cols: usize,
}

impl ContingencyTable {
    pub fn new_2x2(top: [u32; 2], bottom: [u32; 2]) -> Result<Self, StatsError> {
        Self::from_rows(&[top.to_vec(), bottom.to_vec()])
    }

    pub fn new_2x3(top: [u32; 3], bottom: [u32; 3]) -> Result<Self, StatsError> {
        Self::from_rows(&[top.to_vec(), bottom.to_vec()])
    }

    /// Build from explicit rows; every row and column margin must be positive.
    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self, StatsError> {
        if rows.len() != 2 || rows[0].len() != rows[1].len() || !(2..=3).contains(&rows[0].len()) {
            return Err(StatsError::BadTableShape {
                rows: rows.len(),
                cols: rows.first().map_or(0, |r| r.len()),
            });
        }
        let cols = rows[0].len();
        let counts: Vec<u32> = rows.iter().flatten().copied().collect();
        let table = ContingencyTable { counts, cols };
        for (r, total) in table.row_totals().iter().enumerate() {
            if *total == 0 {
                return Err(StatsError::ZeroMargin { which: format!("row {r}") });
            }
        }
        for (c, total) in table.col_totals().iter().enumerate() {
            if *total == 0 {
                return Err(StatsError::ZeroMargin { which: format!("column {c}") });
            }
        }
        Ok(table)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.cols + col]
    }

    pub fn row_totals(&self) -> [u32; 2] {
        let mut t = [0u32; 2];
        for (i, v) in self.counts.iter().enumerate() {
            t[i / self.cols] += v;
        }
        t
    }

    pub fn col_totals(&self) -> Vec<u32> {
        let mut t = vec![0u32; self.cols];
        for (i, v) in self.counts.iter().enumerate() {
            t[i % self.cols] += v;
        }
        t
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> [Vec<u32>; 2] {
        [self.counts[..self.cols].to_vec(), self.counts[self.cols..].to_vec()]
    }
}

/// Two-sided Fisher exact p-value of a 2x2 or 2x3 table.
pub fn fisher_exact(table: &ContingencyTable) -> Result<f64, StatsError> {
    let total = table.total();
    if total > ENUMERATION_BOUND {
        return Err(StatsError::TableTooLarge { total, bound: ENUMERATION_BOUND });
    }
    let lnf = ln_factorials(total as usize);
    let rows = table.row_totals();
    let cols = table.col_totals();

    // ln of the constant multinomial prefactor: prod(r!) * prod(c!) / n!
    let prefactor: f64 = rows.iter().map(|&r| lnf[r as usize]).sum::<f64>()
        + cols.iter().map(|&c| lnf[c as usize]).sum::<f64>()
        - lnf[total as usize];
    let cell_ln = |cells: &[u32]| -> f64 {
        prefactor - cells.iter().map(|&v| lnf[v as usize]).sum::<f64>()
    };

    let p_obs = cell_ln(&table.counts).exp();
    let threshold = p_obs + TIE_SLACK;

    let mut p_sum = 0.0f64;
    let r0 = rows[0];
    match table.cols {
        2 => {
            let (c0, c1) = (cols[0], cols[1]);
            let a_min = r0.saturating_sub(c1);
            let a_max = r0.min(c0);
            for a in a_min..=a_max {
                let cells = [a, r0 - a, c0 - a, c1 - (r0 - a)];
                let p = cell_ln(&cells).exp();
                if p <= threshold {
                    p_sum += p;
                }
            }
        }
        3 => {
            let (c0, c1, c2) = (cols[0], cols[1], cols[2]);
            for a in 0..=r0.min(c0) {
                let rem = r0 - a;
                for b in rem.saturating_sub(c2)..=rem.min(c1) {
                    let c = rem - b;
                    let cells = [a, b, c, c0 - a, c1 - b, c2 - c];
                    let p = cell_ln(&cells).exp();
                    if p <= threshold {
                        p_sum += p;
                    }
                }
            }
        }
        _ => unreachable!("shape validated at construction"),
    }
    Ok(p_sum.min(1.0))
}

fn ln_factorials(up_to: usize) -> Vec<f64> {
    let mut lnf = vec![0.0f64; up_to + 1];
    for i in 2..=up_to {
        lnf[i] = lnf[i - 1] + (i as f64).ln();
    }
    lnf
}

/// Per-test significance flags under a Bonferroni-corrected threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BonferroniReport {
    pub alpha: f64,
    pub comparisons: usize,
    /// Corrected per-test threshold, alpha / m.
    pub threshold: f64,
    pub flags: Vec<GateFlag>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateFlag {
    pub p_value: f64,
    pub significant_corrected: bool,
    pub significant_uncorrected: bool,
}

/// Flag each p-value at the corrected threshold `alpha / m`, and also report
/// uncorrected flags at `alpha`.
pub fn bonferroni_gate(p_values: &[f64], alpha: f64, m: usize) -> Result<BonferroniReport, StatsError> {
    if m == 0 {
        return Err(StatsError::BadComparisonCount);
    }
    let threshold = alpha / m as f64;
    let flags = p_values
        .iter()
        .map(|&p| GateFlag {
            p_value: p,
            significant_corrected: p < threshold,
            significant_uncorrected: p < alpha,
        })
        .collect();
    Ok(BonferroniReport { alpha, comparisons: m, threshold, flags })
}
