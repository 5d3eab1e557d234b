//! CSV and text formats exchanged between pipeline stages.
//!
//! Floating-point values are written with Rust's shortest round-trip
//! formatting, so reading a file back yields bit-identical values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::centrality::{FeatureMatrix, FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::character::CharacterId;
use crate::error::{Error, Result};
use crate::evaluation::{CharacterEstimate, OutcomeRecord, PredictionReport, ThresholdCurve};
use crate::graph::NodeAttrs;
use crate::ingest::{canonicalize, AliasTable};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, what: &str, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers()?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::format(what, format!("expected header `{}`", expected.join(","))));
    }
    Ok(())
}

fn finish(wtr: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = wtr.into_inner().map_err(|e| Error::format("csv", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

fn parse_flag(value: &str, what: &str, line: usize) -> Result<bool> {
    match value {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::format(what, format!("row {line}: expected 0 or 1, got {other:?}"))),
    }
}

/// Roster: one character per line; blank lines and `#` comments ignored.
pub fn parse_roster(text: &str, aliases: &AliasTable) -> Result<Vec<CharacterId>> {
    let mut out = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id = canonicalize(line, aliases)?;
        if out.contains(&id) {
            return Err(Error::format("roster", format!("duplicate roster entry {id}")));
        }
        out.push(id);
    }
    Ok(out)
}

/// `character,<flag column>` with 0/1 values, in file order.
fn parse_flags(text: &str, what: &'static str, column: &str, aliases: &AliasTable) -> Result<Vec<(CharacterId, bool)>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, what, &["character", column])?;
    let mut out: Vec<(CharacterId, bool)> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let id = canonicalize(&row[0], aliases)?;
        if out.iter().any(|(c, _)| c == &id) {
            return Err(Error::format(what, format!("duplicate entry for {id}")));
        }
        out.push((id, parse_flag(&row[1], what, i + 1)?));
    }
    Ok(out)
}

/// Labels CSV `character,dead`.
pub fn parse_labels(text: &str, aliases: &AliasTable) -> Result<Vec<(CharacterId, bool)>> {
    parse_flags(text, "labels", "dead", aliases)
}

/// Outcomes CSV `character,died`.
pub fn parse_outcomes(text: &str, aliases: &AliasTable) -> Result<Vec<OutcomeRecord>> {
    Ok(parse_flags(text, "outcomes", "died", aliases)?
        .into_iter()
        .map(|(character, died)| OutcomeRecord { character, died })
        .collect())
}

/// Houses CSV `character,house` for the DOT export.
pub fn parse_houses(text: &str, aliases: &AliasTable) -> Result<NodeAttrs> {
    let mut rdr = reader(text);
    check_header(&mut rdr, "houses", &["character", "house"])?;
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        out.insert(canonicalize(&row[0], aliases)?, row[1].to_string());
    }
    Ok(out)
}

pub fn features_header() -> Vec<&'static str> {
    std::iter::once("character").chain(FEATURE_NAMES).collect()
}

/// Raw feature table, one row per roster member.
pub fn write_features(roster: &[CharacterId], rows: &[FeatureVector]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(features_header())?;
    for (id, f) in roster.iter().zip(rows) {
        wtr.write_record([
            id.to_string(),
            f.degree.to_string(),
            f.strength.to_string(),
            f.clustering.to_string(),
            f.betweenness.to_string(),
            f.closeness.to_string(),
            f.eigencentrality.to_string(),
            f.core_number.to_string(),
        ])?;
    }
    finish(wtr)
}

pub fn parse_features(text: &str) -> Result<FeatureMatrix> {
    let mut rdr = reader(text);
    check_header(&mut rdr, "features", &features_header())?;
    let mut roster = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = [0.0; N_FEATURES];
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = rec[j + 1].parse::<f64>().map_err(|_| {
                Error::format("features", format!("row {}: bad {} value {:?}", i + 1, FEATURE_NAMES[j], &rec[j + 1]))
            })?;
        }
        roster.push(CharacterId::new(&rec[0]));
        rows.push(row);
    }
    Ok(FeatureMatrix::raw(roster, rows))
}

pub fn write_report(report: &PredictionReport) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["character", "mean_probability", "std_probability", "rank"])?;
    for e in &report.entries {
        wtr.write_record([
            e.character.to_string(),
            e.mean_probability.to_string(),
            e.std_probability.to_string(),
            e.rank.to_string(),
        ])?;
    }
    finish(wtr)
}

/// Reads a report CSV. `n_estimates` is not stored in the file and is set to 0.
pub fn parse_report(text: &str) -> Result<PredictionReport> {
    let mut rdr = reader(text);
    check_header(&mut rdr, "report", &["character", "mean_probability", "std_probability", "rank"])?;
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| {
            rec[k].parse::<f64>().map_err(|_| Error::format("report", format!("row {}: bad number {:?}", i + 1, &rec[k])))
        };
        entries.push(CharacterEstimate {
            character: CharacterId::new(&rec[0]),
            mean_probability: num(1)?,
            std_probability: num(2)?,
            n_estimates: 0,
            rank: rec[3].parse().map_err(|_| Error::format("report", format!("row {}: bad rank", i + 1)))?,
        });
    }
    Ok(PredictionReport { entries })
}

pub fn write_curve(curve: &ThresholdCurve) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["threshold", "n_above", "accuracy"])?;
    for p in &curve.points {
        wtr.write_record([
            format!("{:.2}", p.threshold),
            p.n_above.to_string(),
            p.accuracy.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    finish(wtr)
}
