//! Embeddings CSV:
//! `subject_id,sample_id,role,kind,pair_subject,e0,e1,...,e{d-1}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Dataset, Embedding, SampleKind, SampleRecord};
use crate::error::{Error, Result};

const FIXED_COLUMNS: [&str; 5] = ["subject_id", "sample_id", "role", "kind", "pair_subject"];

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => parse_error(line, format!("{other:?}")),
    }
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.len() < FIXED_COLUMNS.len() + 2 {
        return Err(parse_error(
            1,
            format!("header has {} columns, need at least 7", header.len()),
        ));
    }
    for (i, expected) in FIXED_COLUMNS.iter().enumerate() {
        if &header[i] != *expected {
            return Err(parse_error(
                1,
                format!("column {i} must be '{expected}', found '{}'", &header[i]),
            ));
        }
    }
    let dimension = header.len() - FIXED_COLUMNS.len();
    for (j, name) in header.iter().skip(FIXED_COLUMNS.len()).enumerate() {
        if name != format!("e{j}") {
            return Err(parse_error(
                1,
                format!("embedding column {j} must be 'e{j}', found '{name}'"),
            ));
        }
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != header.len() {
            return Err(parse_error(
                line,
                format!("expected {} columns, found {}", header.len(), row.len()),
            ));
        }
        let role = row[2].parse().map_err(|m: String| parse_error(line, m))?;
        let kind: SampleKind = row[3].parse().map_err(|m: String| parse_error(line, m))?;
        let pair_subject = match &row[4] {
            "" => None,
            s => Some(s.to_owned()),
        };
        let mut components = Vec::with_capacity(dimension);
        for (j, field) in row.iter().skip(FIXED_COLUMNS.len()).enumerate() {
            let value: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_error(line, format!("e{j}: '{field}' is not a number")))?;
            if !value.is_finite() {
                return Err(parse_error(
                    line,
                    format!("e{j}: non-finite value '{field}'"),
                ));
            }
            components.push(value);
        }
        let record = SampleRecord {
            subject_id: row[0].to_owned(),
            sample_id: row[1].to_owned(),
            role,
            kind,
            pair_subject,
            embedding: Embedding::from_raw(components),
        };
        record
            .validate()
            .map_err(|e| parse_error(line, e.to_string()))?;
        records.push(record);
    }
    Dataset::new(dimension, records)
}

pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..dataset.dimension()).map(|j| format!("e{j}")));
    wtr.write_record(&header).map_err(csv_error)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in dataset.records() {
        row.clear();
        row.push(r.subject_id.clone());
        row.push(r.sample_id.clone());
        row.push(r.role.to_string());
        row.push(r.kind.to_string());
        row.push(r.pair_subject.clone().unwrap_or_default());
        row.extend(r.embedding.as_slice().iter().map(|&c| format_float(c)));
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_dataset(BufReader::new(file)).map_err(|e| e.in_file(path))
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_dataset(dataset, BufWriter::new(file)).map_err(|e| e.in_file(path))
}
