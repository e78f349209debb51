//! Trial statistics: ingestion, empirical success tables, Fisher exact
//! homogeneity tests with Bonferroni correction, and the evaluation metrics
//! built on top of them.

mod eval;
mod fisher;
mod ingest;

pub use eval::{expected_success_of_proposal, ooc_similarity, OocSimilarity, ProposalReport, ProposalSample};
pub use fisher::{bonferroni_gate, fisher_exact, BonferroniReport, ContingencyTable};
pub use ingest::{ingest_trials, write_trials, IngestConfig};

use crate::domain::{ActionId, EnvClass, FoodCategory, ForkRoll, MacroAction, Outcome};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("line {line}: {source}")]
    BadToken {
        line: u64,
        #[source]
        source: crate::domain::ParseEnumError,
    },
    #[error("line {line}: duplicate trial id `{trial_id}`")]
    DuplicateTrialId { line: u64, trial_id: String },
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no usable records after discard filtering")]
    EmptyAfterFiltering,
    #[error("success table is missing {count} cells: {gaps:?}")]
    CoverageGap { count: usize, gaps: Vec<String> },
    #[error("contingency table must be 2x2 or 2x3, got {rows}x{cols}")]
    BadTableShape { rows: usize, cols: usize },
    #[error("contingency table margin for {which} is zero")]
    ZeroMargin { which: String },
    #[error("table total {total} exceeds the exact-enumeration bound {bound}")]
    TableTooLarge { total: u32, bound: u32 },
    #[error("bonferroni requires m >= 1")]
    BadComparisonCount,
    #[error("no truth entry for item `{item}` in environment {env}")]
    LookupMiss { item: String, env: EnvClass },
    #[error("similarity group `{group}` is empty")]
    EmptyGroup { group: String },
    #[error("{0}")]
    InvalidInput(String),
}

/// One bite-acquisition attempt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub item: String,
    pub category: Option<FoodCategory>,
    pub macro_action: MacroAction,
    pub roll: ForkRoll,
    pub env: EnvClass,
    pub outcome: Outcome,
}

impl TrialRecord {
    pub fn action(&self) -> ActionId {
        ActionId::new(self.macro_action, self.roll)
    }
}

/// Success/failure counts per (item, environment, action).
///
/// Discarded trials never enter the table. Counts are kept alongside rates so
/// consumers can weight cells by the amount of evidence behind them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuccessTable {
    cells: BTreeMap<(String, EnvClass), [CellCount; ActionId::COUNT]>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub successes: u32,
    pub failures: u32,
}

impl CellCount {
    pub fn trials(&self) -> u32 {
        self.successes + self.failures
    }

    pub fn rate(&self) -> Option<f64> {
        let n = self.trials();
        (n > 0).then(|| self.successes as f64 / n as f64)
    }
}

impl SuccessTable {
    /// Aggregate counts from trial records, excluding discards.
    pub fn from_records(records: &[TrialRecord]) -> Result<Self, StatsError> {
        let mut table = SuccessTable::default();
        let mut used = 0usize;
        for r in records {
            match r.outcome {
                Outcome::Discard => continue,
                Outcome::Success => table.record(&r.item, r.env, r.action(), true),
                Outcome::Failure => table.record(&r.item, r.env, r.action(), false),
            }
            used += 1;
        }
        if used == 0 {
            return Err(StatsError::EmptyAfterFiltering);
        }
        Ok(table)
    }

    pub fn record(&mut self, item: &str, env: EnvClass, action: ActionId, success: bool) {
        let cell = &mut self.cells.entry((item.to_string(), env)).or_default()[action.ordinal()];
        if success {
            cell.successes += 1;
        } else {
            cell.failures += 1;
        }
    }

    pub fn count(&self, item: &str, env: EnvClass, action: ActionId) -> Option<CellCount> {
        self.cells
            .get(&(item.to_string(), env))
            .map(|row| row[action.ordinal()])
            .filter(|c| c.trials() > 0)
    }

    pub fn rate(&self, item: &str, env: EnvClass, action: ActionId) -> Option<f64> {
        self.count(item, env, action).and_then(|c| c.rate())
    }

    /// All six rates for an (item, env) pair, or `None` if any cell is empty.
    pub fn rate_vector(&self, item: &str, env: EnvClass) -> Option<[f64; ActionId::COUNT]> {
        let row = self.cells.get(&(item.to_string(), env))?;
        let mut out = [0.0; ActionId::COUNT];
        for (slot, cell) in out.iter_mut().zip(row) {
            *slot = cell.rate()?;
        }
        Some(out)
    }

    pub fn items(&self) -> Vec<String> {
        let mut items: Vec<String> = self.cells.keys().map(|(i, _)| i.clone()).collect();
        items.dedup();
        items
    }

    pub fn keys(&self) -> impl Iterator<Item = &(String, EnvClass)> {
        self.cells.keys()
    }

    /// Cells with zero trials over a required (item, env, action) coverage set.
    pub fn coverage_gaps<'a>(&self, required: impl Iterator<Item = (&'a str, EnvClass)>) -> Vec<String> {
        let mut gaps = Vec::new();
        for (item, env) in required {
            for action in ActionId::ALL {
                if self.count(item, env, action).is_none() {
                    gaps.push(format!("({item}, {env}, {action})"));
                }
            }
        }
        gaps
    }
}

/// Assemble a 10-element training target: canonicalized crop-normalized axis
/// endpoints followed by the six empirical action rates.
pub fn target_vector(
    table: &SuccessTable,
    item: &str,
    env: EnvClass,
    axis: [f64; 4],
) -> Result<[f64; 10], StatsError> {
    let gaps = table.coverage_gaps(std::iter::once((item, env)));
    if !gaps.is_empty() {
        return Err(StatsError::CoverageGap { count: gaps.len(), gaps });
    }
    let rates = table.rate_vector(item, env).expect("coverage just checked");
    let mut out = [0.0; 10];
    out[..4].copy_from_slice(&canonicalize_axis(axis));
    out[4..].copy_from_slice(&rates);
    Ok(out)
}

/// Order endpoints so the smaller-x endpoint comes first (ties: smaller y).
pub fn canonicalize_axis(axis: [f64; 4]) -> [f64; 4] {
    let (p0, p1) = ((axis[0], axis[1]), (axis[2], axis[3]));
    if p1.0 < p0.0 || (p1.0 == p0.0 && p1.1 < p0.1) {
        [p1.0, p1.1, p0.0, p0.1]
    } else {
        axis
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, item: &str, action: ActionId, env: EnvClass, outcome: Outcome) -> TrialRecord {
        TrialRecord {
            trial_id: id.into(),
            item: item.into(),
            category: None,
            macro_action: action.macro_action,
            roll: action.roll,
            env,
            outcome,
        }
    }

    #[test]
    fn rates_are_success_fractions() {
        let a = ActionId::ALL[0];
        let mut records = Vec::new();
        for i in 0..7 {
            records.push(rec(&format!("s{i}"), "carrot", a, EnvClass::Iso, Outcome::Success));
        }
        for i in 0..3 {
            records.push(rec(&format!("f{i}"), "carrot", a, EnvClass::Iso, Outcome::Failure));
        }
        let table = SuccessTable::from_records(&records).unwrap();
        assert_eq!(table.rate("carrot", EnvClass::Iso, a), Some(0.7));
        assert_eq!(table.count("carrot", EnvClass::Iso, a).unwrap().trials(), 10);
    }

    #[test]
    fn discards_are_excluded() {
        let a = ActionId::ALL[2];
        let records = vec![
            rec("a", "kale", a, EnvClass::Stack, Outcome::Success),
            rec("b", "kale", a, EnvClass::Stack, Outcome::Discard),
            rec("c", "kale", a, EnvClass::Stack, Outcome::Failure),
        ];
        let table = SuccessTable::from_records(&records).unwrap();
        assert_eq!(table.count("kale", EnvClass::Stack, a).unwrap().trials(), 2);
        assert_eq!(table.rate("kale", EnvClass::Stack, a), Some(0.5));
    }

    #[test]
    fn rates_are_order_invariant() {
        let a = ActionId::ALL[4];
        let mut records = vec![
            rec("1", "x", a, EnvClass::Wall, Outcome::Success),
            rec("2", "x", a, EnvClass::Wall, Outcome::Failure),
            rec("3", "x", a, EnvClass::Wall, Outcome::Success),
        ];
        let t1 = SuccessTable::from_records(&records).unwrap();
        records.reverse();
        let t2 = SuccessTable::from_records(&records).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn target_vector_reports_gaps() {
        let a = ActionId::ALL[0];
        let records = vec![rec("1", "x", a, EnvClass::Iso, Outcome::Success)];
        let table = SuccessTable::from_records(&records).unwrap();
        let err = target_vector(&table, "x", EnvClass::Iso, [0.0, 0.0, 1.0, 1.0]).unwrap_err();
        match err {
            StatsError::CoverageGap { count, gaps } => {
                assert_eq!(count, 5, "five of six actions have no trials: {gaps:?}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn axis_canonical_order_smaller_x_first() {
        assert_eq!(canonicalize_axis([0.8, 0.1, 0.2, 0.9]), [0.2, 0.9, 0.8, 0.1]);
        assert_eq!(canonicalize_axis([0.2, 0.9, 0.8, 0.1]), [0.2, 0.9, 0.8, 0.1]);
        // x tie: smaller y first
        assert_eq!(canonicalize_axis([0.5, 0.7, 0.5, 0.2]), [0.5, 0.2, 0.5, 0.7]);
    }
}
