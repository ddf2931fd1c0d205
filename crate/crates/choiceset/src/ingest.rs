//! Observation CSV files: header `segment,chosen,choice_set`, sets joined
//! with `;`, lines starting with `#` ignored.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use choiceset_core::fitting::{ChoiceDataset, ChoiceObservation};
use choiceset_core::ItemId;
use serde::Serialize;

pub const HEADER: [&str; 3] = ["segment", "chosen", "choice_set"];

/// Rows seen and why any were dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    pub accepted: usize,
    pub chosen_not_in_set: usize,
    pub set_too_small: usize,
}

impl IngestReport {
    pub fn rejected(&self) -> usize {
        self.chosen_not_in_set + self.set_too_small
    }
}

/// Parses a dataset. Items are numbered in order of first appearance unless
/// `universe` is given, in which case unknown items are an error.
pub fn read_csv<R: Read>(reader: R, universe: Option<&[ItemId]>) -> Result<(ChoiceDataset, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(false).flexible(true).from_reader(reader);
    let mut items: Vec<ItemId> = universe.map(<[ItemId]>::to_vec).unwrap_or_default();
    let fixed = universe.is_some();
    let mut rows: Vec<(String, usize, Vec<usize>, u64)> = Vec::new();
    let mut report = IngestReport::default();
    let mut saw_header = false;
    for rec in rdr.records() {
        let rec = rec.context("malformed CSV")?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = rec.iter().map(str::trim).collect();
        if !saw_header {
            if fields != HEADER {
                bail!("line {line}: expected header `segment,chosen,choice_set`, found `{}`", fields.join(","));
            }
            saw_header = true;
            continue;
        }
        if fields.len() != 3 {
            bail!("line {line}: expected 3 fields, found {}", fields.len());
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            bail!("line {line}: empty segment or chosen item");
        }
        report.rows += 1;
        let mut set = Vec::new();
        for name in fields[2].split(';').map(str::trim) {
            if name.is_empty() {
                bail!("line {line}: empty item in choice set");
            }
            let i = lookup(&mut items, fixed, name, line)?;
            if set.contains(&i) {
                bail!("line {line}: item `{name}` repeated in choice set");
            }
            set.push(i);
        }
        let Some(&chosen) = set.iter().find(|&&i| items[i].as_str() == fields[1]) else {
            report.chosen_not_in_set += 1;
            continue;
        };
        if set.len() < 2 {
            report.set_too_small += 1;
            continue;
        }
        rows.push((fields[0].to_owned(), chosen, set, line));
    }
    let mut data = ChoiceDataset::new(items)?;
    for (segment, chosen, set, line) in rows {
        data.push(ChoiceObservation::new(segment, set, chosen).with_context(|| format!("line {line}"))?)?;
        report.accepted += 1;
    }
    Ok((data, report))
}

fn lookup(items: &mut Vec<ItemId>, fixed: bool, name: &str, line: u64) -> Result<usize> {
    if let Some(i) = items.iter().position(|x| x.as_str() == name) {
        return Ok(i);
    }
    if fixed {
        bail!("line {line}: item `{name}` is not in the universe");
    }
    items.push(ItemId::new(name).with_context(|| format!("line {line}"))?);
    Ok(items.len() - 1)
}

pub fn read_csv_path(path: &Path, universe: Option<&[ItemId]>) -> Result<(ChoiceDataset, IngestReport)> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_csv(std::io::BufReader::new(file), universe).with_context(|| format!("reading {}", path.display()))
}

pub fn write_csv<W: Write>(data: &ChoiceDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    let name = |i: usize| data.universe()[i].as_str();
    for o in data.observations() {
        let set: Vec<&str> = o.choice_set.iter().map(|&i| name(i)).collect();
        w.write_record([o.segment.as_str(), name(o.chosen), &set.join(";")])?;
    }
    w.flush()?;
    Ok(())
}
