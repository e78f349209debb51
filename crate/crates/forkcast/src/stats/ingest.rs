//! Trial CSV ingestion and emission.
//!
//! Schema: `trial_id,item,category,macro,roll,env,outcome` with the enums
//! spelled exactly `VS|TV|TA`, `0|90`, `ISO|WALL|STACK`,
//! `success|failure|discard`. The category column may be empty. Files are
//! UTF-8 with LF line endings.

use super::{StatsError, TrialRecord};
use crate::domain::{EnvClass, ForkRoll};
use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

pub const TRIAL_HEADER: [&str; 7] = ["trial_id", "item", "category", "macro", "roll", "env", "outcome"];

#[derive(Clone, Copy, Debug, Default)]
pub struct IngestConfig {
    /// Mirror roll-0 records of items that carry no roll-90 records at all,
    /// for rotationally symmetric items recorded under a single fork roll.
    pub mirror_symmetric: bool,
}

/// Read and validate a trial CSV. Errors carry the 1-based line number.
pub fn ingest_trials(path: &Path, config: IngestConfig) -> Result<Vec<TrialRecord>, StatsError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path)?;
    {
        let headers = reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != TRIAL_HEADER {
            return Err(StatsError::MalformedRow {
                line: 1,
                detail: format!("header {got:?} does not match {TRIAL_HEADER:?}"),
            });
        }
    }

    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != TRIAL_HEADER.len() {
            return Err(StatsError::MalformedRow {
                line,
                detail: format!("expected {} fields, got {}", TRIAL_HEADER.len(), row.len()),
            });
        }
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let trial_id = field(0).to_string();
        if trial_id.is_empty() {
            return Err(StatsError::MalformedRow { line, detail: "empty trial_id".into() });
        }
        if !seen_ids.insert(trial_id.clone()) {
            return Err(StatsError::DuplicateTrialId { line, trial_id });
        }
        let category = match field(2) {
            "" => None,
            s => Some(parse_token(s, line)?),
        };
        records.push(TrialRecord {
            trial_id,
            item: field(1).to_string(),
            category,
            macro_action: parse_token(field(3), line)?,
            roll: parse_token(field(4), line)?,
            env: parse_token(field(5), line)?,
            outcome: parse_token(field(6), line)?,
        });
    }

    if config.mirror_symmetric {
        mirror_single_roll_items(&mut records);
    }
    Ok(records)
}

fn parse_token<T>(s: &str, line: u64) -> Result<T, StatsError>
where
    T: std::str::FromStr<Err = crate::domain::ParseEnumError>,
{
    s.parse().map_err(|source| StatsError::BadToken { line, source })
}

/// Duplicate roll-0 records to roll-90 for items recorded under one roll only.
fn mirror_single_roll_items(records: &mut Vec<TrialRecord>) {
    let items_with_r90: HashSet<String> = records
        .iter()
        .filter(|r| r.roll == ForkRoll::R90)
        .map(|r| r.item.clone())
        .collect();
    let mirrored: Vec<TrialRecord> = records
        .iter()
        .filter(|r| r.roll == ForkRoll::R0 && !items_with_r90.contains(&r.item))
        .map(|r| TrialRecord {
            trial_id: format!("{}-m", r.trial_id),
            roll: ForkRoll::R90,
            ..r.clone()
        })
        .collect();
    records.extend(mirrored);
}

/// Write records in schema order with LF endings.
pub fn write_trials(path: &Path, records: &[TrialRecord]) -> Result<(), StatsError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", TRIAL_HEADER.join(","))?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.trial_id,
            r.item,
            r.category.map(|c| c.as_str()).unwrap_or(""),
            r.macro_action,
            r.roll,
            r.env,
            r.outcome
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Convenience: which environments an item was recorded in.
pub fn environments_of(records: &[TrialRecord], item: &str) -> Vec<EnvClass> {
    let mut envs: Vec<EnvClass> = records.iter().filter(|r| r.item == item).map(|r| r.env).collect();
    envs.sort();
    envs.dedup();
    envs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActionId, Outcome};
    use crate::stats::SuccessTable;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn well_formed_file_parses_fully() {
        let mut body = String::from("trial_id,item,category,macro,roll,env,outcome\n");
        for i in 0..720 {
            body.push_str(&format!("t{i},carrot,long,VS,0,ISO,success\n"));
        }
        let f = write_csv(&body);
        let records = ingest_trials(f.path(), IngestConfig::default()).unwrap();
        assert_eq!(records.len(), 720);
    }

    #[test]
    fn discard_rows_are_kept_in_the_list() {
        let f = write_csv(
            "trial_id,item,category,macro,roll,env,outcome\n\
             a,kale,leafy,TV,0,STACK,success\n\
             b,kale,leafy,TV,0,STACK,discard\n",
        );
        let records = ingest_trials(f.path(), IngestConfig::default()).unwrap();
        assert_eq!(records.len(), 2);
        let table = SuccessTable::from_records(&records).unwrap();
        let a = ActionId::ALL[2];
        assert_eq!(table.count("kale", EnvClass::Stack, a).unwrap().trials(), 1);
    }

    #[test]
    fn bad_macro_token_reports_line() {
        let f = write_csv(
            "trial_id,item,category,macro,roll,env,outcome\n\
             a,kale,leafy,TV,0,STACK,success\n\
             b,kale,leafy,XX,0,STACK,success\n",
        );
        let err = ingest_trials(f.path(), IngestConfig::default()).unwrap_err();
        match err {
            StatsError::BadToken { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn duplicate_ids_reports_line() {
        let f = write_csv(
            "trial_id,item,category,macro,roll,env,outcome\n\
             a,kale,leafy,TV,0,STACK,success\n\
             a,kale,leafy,TV,90,STACK,success\n",
        );
        let err = ingest_trials(f.path(), IngestConfig::default()).unwrap_err();
        assert!(matches!(err, StatsError::DuplicateTrialId { line: 3, .. }));
    }

    #[test]
    fn short_row_reports_line() {
        let f = write_csv(
            "trial_id,item,category,macro,roll,env,outcome\n\
             a,kale,leafy,TV,0,STACK\n",
        );
        let err = ingest_trials(f.path(), IngestConfig::default()).unwrap_err();
        assert!(matches!(err, StatsError::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn mirroring_balances_rolls_for_single_roll_items() {
        let f = write_csv(
            "trial_id,item,category,macro,roll,env,outcome\n\
             a,kiwi,non-flat,VS,0,ISO,success\n\
             b,kiwi,non-flat,VS,0,ISO,failure\n\
             c,carrot,long,VS,90,ISO,success\n",
        );
        let records = ingest_trials(f.path(), IngestConfig { mirror_symmetric: true }).unwrap();
        assert_eq!(records.len(), 5, "two kiwi rows mirrored, carrot untouched");
        let table = SuccessTable::from_records(&records).unwrap();
        let vs0 = ActionId::ALL[0];
        let vs90 = ActionId::ALL[1];
        assert_eq!(
            table.rate("kiwi", EnvClass::Iso, vs0),
            table.rate("kiwi", EnvClass::Iso, vs90)
        );
    }

    #[test]
    fn round_trip_preserves_records() {
        let f = write_csv(
            "trial_id,item,category,macro,roll,env,outcome\n\
             a,kale,leafy,TV,0,STACK,success\n\
             b,melon,,TA,90,WALL,failure\n",
        );
        let records = ingest_trials(f.path(), IngestConfig::default()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_trials(out.path(), &records).unwrap();
        let back = ingest_trials(out.path(), IngestConfig::default()).unwrap();
        assert_eq!(records, back);
        assert_eq!(back[1].category, None);
    }
}
