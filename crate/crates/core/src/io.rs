//! Long-format CSV files for measures, labels and feature matrices.
//!
//! Measures: header `measure_id,weight,x1,...,xd`, one row per weighted atom.
//! Rows of one measure need not be contiguous; ascending ids define the
//! collection order. Labels: header `measure_id,label`. Features: header
//! `measure_id,v1,...,vb`. Floats are written with the shortest decimal
//! representation that parses back to the same bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{AtolError, Result};
use crate::matrix::Matrix;
use crate::measure::{MeasureCollection, PointMeasure};
use crate::util::write_atomic;

fn parse_err(source: &Path, line: u64, message: impl Into<String>) -> AtolError {
    AtolError::Parse {
        path: source.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    source: &Path,
    line: u64,
    name: &str,
    raw: &str,
) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(source, line, format!("invalid {name} {raw:?}")))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Parses measures from long-format CSV. `source` is only used in error
/// messages.
pub fn read_measures<R: Read>(reader: R, source: &Path) -> Result<MeasureCollection> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() == 0 || (header.len() == 1 && header[0].is_empty()) {
        return Err(parse_err(source, 1, "missing header"));
    }
    if header.len() < 3 || &header[0] != "measure_id" || &header[1] != "weight" {
        return Err(parse_err(
            source,
            1,
            "header must be measure_id,weight,x1,...,xd",
        ));
    }
    let dim = header.len() - 2;
    for (k, name) in header.iter().skip(2).enumerate() {
        if name != format!("x{}", k + 1) {
            return Err(parse_err(source, 1, format!("unexpected column {name:?}")));
        }
    }

    let mut groups: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != dim + 2 {
            return Err(parse_err(
                source,
                line,
                format!(
                    "inconsistent dimension: expected {} fields, found {}",
                    dim + 2,
                    record.len()
                ),
            ));
        }
        let id: u64 = parse_field(source, line, "measure_id", &record[0])?;
        let weight: f64 = parse_field(source, line, "weight", &record[1])?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(parse_err(source, line, format!("invalid weight {weight}")));
        }
        let entry = groups.entry(id).or_default();
        for raw in record.iter().skip(2) {
            let x: f64 = parse_field(source, line, "coordinate", raw)?;
            if !x.is_finite() {
                return Err(parse_err(source, line, "non-finite coordinate"));
            }
            entry.0.push(x);
        }
        entry.1.push(weight);
    }

    let mut ids = Vec::with_capacity(groups.len());
    let mut measures = Vec::with_capacity(groups.len());
    for (id, (coords, weights)) in groups {
        ids.push(id);
        measures.push(PointMeasure::from_flat(dim, coords, weights)?);
    }
    MeasureCollection::new(dim, measures)?.with_ids(ids)
}

pub fn load_measures(path: &Path) -> Result<MeasureCollection> {
    let file = std::fs::File::open(path)
        .map_err(|e| AtolError::from(e).context(format!("opening {}", path.display())))?;
    read_measures(std::io::BufReader::new(file), path)
}

/// Serializes measures to long-format CSV. Empty measures produce no rows;
/// they survive a round trip only through the labels sidecar.
pub fn write_measures(c: &MeasureCollection) -> String {
    let mut out = String::from("measure_id,weight");
    for k in 1..=c.dim() {
        write!(out, ",x{k}").unwrap();
    }
    out.push('\n');
    for (id, m) in c.ids().iter().zip(c.measures()) {
        for (x, w) in m.atoms() {
            write!(out, "{id},{w}").unwrap();
            for v in x {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn save_measures(c: &MeasureCollection, path: &Path) -> Result<()> {
    write_atomic(path, write_measures(c).as_bytes())?;
    Ok(())
}

pub fn read_labels<R: Read>(reader: R, source: &Path) -> Result<BTreeMap<u64, u32>> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "measure_id" || &header[1] != "label" {
        return Err(parse_err(source, 1, "header must be measure_id,label"));
    }
    let mut labels = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 2 {
            return Err(parse_err(source, line, "expected 2 fields"));
        }
        let id: u64 = parse_field(source, line, "measure_id", &record[0])?;
        let label: u32 = parse_field(source, line, "label", &record[1])?;
        if labels.insert(id, label).is_some() {
            return Err(parse_err(source, line, format!("duplicate measure_id {id}")));
        }
    }
    Ok(labels)
}

pub fn load_labels(path: &Path) -> Result<BTreeMap<u64, u32>> {
    let file = std::fs::File::open(path)
        .map_err(|e| AtolError::from(e).context(format!("opening {}", path.display())))?;
    read_labels(std::io::BufReader::new(file), path)
}

pub fn write_labels(c: &MeasureCollection) -> Result<String> {
    let labels = c
        .labels()
        .ok_or_else(|| AtolError::InvalidConfig("collection has no labels".into()))?;
    let mut out = String::from("measure_id,label\n");
    for (id, l) in c.ids().iter().zip(labels) {
        writeln!(out, "{id},{l}").unwrap();
    }
    Ok(out)
}

pub fn save_labels(c: &MeasureCollection, path: &Path) -> Result<()> {
    write_atomic(path, write_labels(c)?.as_bytes())?;
    Ok(())
}

/// Joins a measures collection with its labels sidecar. Ids present in the
/// labels but absent from the measures file become empty measures; ids with
/// atoms but no label are an error.
pub fn attach_labels(
    c: MeasureCollection,
    labels: &BTreeMap<u64, u32>,
    source: &Path,
) -> Result<MeasureCollection> {
    let dim = c.dim();
    let mut by_id: BTreeMap<u64, PointMeasure> =
        c.ids().iter().copied().zip(c.measures().iter().cloned()).collect();
    if let Some(id) = by_id.keys().find(|id| !labels.contains_key(id)) {
        return Err(parse_err(source, 0, format!("no label for measure_id {id}")));
    }
    let mut ids = Vec::with_capacity(labels.len());
    let mut measures = Vec::with_capacity(labels.len());
    let mut ys = Vec::with_capacity(labels.len());
    for (&id, &y) in labels {
        ids.push(id);
        measures.push(by_id.remove(&id).unwrap_or_else(|| PointMeasure::empty(dim)));
        ys.push(y);
    }
    MeasureCollection::new(dim, measures)?
        .with_ids(ids)?
        .with_labels(ys)
}

pub fn load_labeled(measures: &Path, labels: &Path) -> Result<MeasureCollection> {
    let c = load_measures(measures)?;
    let l = load_labels(labels)?;
    attach_labels(c, &l, labels)
}

/// Conventional sidecar paths next to a measures file:
/// `name.csv` → (`name.labels.csv`, `name.manifest.json`).
pub fn sidecar_paths(measures: &Path) -> (PathBuf, PathBuf) {
    let stem = measures
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "measures".into());
    (
        measures.with_file_name(format!("{stem}.labels.csv")),
        measures.with_file_name(format!("{stem}.manifest.json")),
    )
}

pub fn write_features(ids: &[u64], features: &Matrix) -> String {
    assert_eq!(ids.len(), features.rows(), "one id per feature row");
    let mut out = String::from("measure_id");
    for k in 1..=features.cols() {
        write!(out, ",v{k}").unwrap();
    }
    out.push('\n');
    for (id, row) in ids.iter().zip(features.iter_rows()) {
        write!(out, "{id}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_features(ids: &[u64], features: &Matrix, path: &Path) -> Result<()> {
    write_atomic(path, write_features(ids, features).as_bytes())?;
    Ok(())
}

pub fn read_features<R: Read>(reader: R, source: &Path) -> Result<(Vec<u64>, Matrix)> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || &header[0] != "measure_id" {
        return Err(parse_err(source, 1, "header must be measure_id,v1,...,vb"));
    }
    let cols = header.len() - 1;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != cols + 1 {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, found {}", cols + 1, record.len()),
            ));
        }
        ids.push(parse_field(source, line, "measure_id", &record[0])?);
        for raw in record.iter().skip(1) {
            data.push(parse_field::<f64>(source, line, "feature", raw)?);
        }
    }
    let rows = ids.len();
    Ok((ids, Matrix::from_vec(rows, cols, data)))
}

pub fn load_features(path: &Path) -> Result<(Vec<u64>, Matrix)> {
    let file = std::fs::File::open(path)
        .map_err(|e| AtolError::from(e).context(format!("opening {}", path.display())))?;
    read_features(std::io::BufReader::new(file), path)
}
