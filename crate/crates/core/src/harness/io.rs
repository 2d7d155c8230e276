//! CSV plumbing: comma-separated, header row, integer codes, decimal floats.
//!
//! Ingestion errors carry 1-based positions: `row` counts data rows after the
//! header, `column` counts fields from the left.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sampler::CategoricalMatrix;

/// Category-coded covariates plus a numeric response in the last column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub response: String,
    pub x: CategoricalMatrix,
    pub y: Vec<f64>,
}

fn ingest(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Ingestion {
        row,
        column,
        message: message.into(),
    }
}

/// Header plus string records; positions of malformed records are reported.
fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| ingest(0, 0, format!("unreadable header: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(ingest(0, 0, "missing header row"));
    }
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ingest(i + 1, 0, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(ingest(i + 1, 0, format!("{} fields, header has {}", rec.len(), header.len())));
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(ingest(0, 0, "no data rows"));
    }
    Ok((header, records))
}

fn parse_code(field: &str, row: usize, column: usize, m: u8) -> Result<u8> {
    let code: u8 = field
        .trim()
        .parse()
        .map_err(|_| ingest(row, column, format!("expected an integer code, got {field:?}")))?;
    if code > m {
        return Err(ingest(row, column, format!("code {code} outside {{0, …, {m}}}")));
    }
    Ok(code)
}

fn parse_float(field: &str, row: usize, column: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| ingest(row, column, format!("expected a number, got {field:?}")))?;
    if !v.is_finite() {
        return Err(ingest(row, column, "non-finite value"));
    }
    Ok(v)
}

fn codes_from_records(records: &[csv::StringRecord], p: usize, m: u8) -> Result<CategoricalMatrix> {
    let mut data = Vec::with_capacity(records.len() * p);
    for (i, rec) in records.iter().enumerate() {
        for j in 0..p {
            data.push(parse_code(&rec[j], i + 1, j + 1, m)?);
        }
    }
    CategoricalMatrix::new(records.len(), p, m, data)
}

pub fn read_dataset_from<R: Read>(reader: R, m: u8) -> Result<Dataset> {
    let (header, records) = read_table(reader)?;
    let p = header.len() - 1;
    if p == 0 {
        return Err(ingest(0, 1, "need at least one covariate column before the response"));
    }
    let x = codes_from_records(&records, p, m)?;
    let y = records
        .iter()
        .enumerate()
        .map(|(i, rec)| parse_float(&rec[p], i + 1, p + 1))
        .collect::<Result<_>>()?;
    Ok(Dataset {
        names: header[..p].to_vec(),
        response: header[p].clone(),
        x,
        y,
    })
}

pub fn read_dataset(path: &Path, m: u8) -> Result<Dataset> {
    read_dataset_from(std::fs::File::open(path)?, m)
}

pub fn write_dataset_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = data.names.clone();
    header.push(data.response.clone());
    w.write_record(&header)?;
    for i in 0..data.x.nrows() {
        let mut rec: Vec<String> = data.x.row(i).iter().map(u8::to_string).collect();
        rec.push(data.y[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_dataset_to(std::fs::File::create(path)?, data)
}

/// A code matrix without a response column.
pub fn read_codes_from<R: Read>(reader: R, m: u8) -> Result<(Vec<String>, CategoricalMatrix)> {
    let (header, records) = read_table(reader)?;
    let x = codes_from_records(&records, header.len(), m)?;
    Ok((header, x))
}

pub fn read_codes(path: &Path, m: u8) -> Result<(Vec<String>, CategoricalMatrix)> {
    read_codes_from(std::fs::File::open(path)?, m)
}

pub fn write_codes_to<W: Write>(writer: W, names: &[String], x: &CategoricalMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(names)?;
    for i in 0..x.nrows() {
        w.write_record(x.row(i).iter().map(u8::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_codes(path: &Path, names: &[String], x: &CategoricalMatrix) -> Result<()> {
    write_codes_to(std::fs::File::create(path)?, names, x)
}

/// A real matrix, returned column-major.
pub fn read_real_from<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let (header, records) = read_table(reader)?;
    let mut cols = vec![Vec::with_capacity(records.len()); header.len()];
    for (i, rec) in records.iter().enumerate() {
        for (j, col) in cols.iter_mut().enumerate() {
            col.push(parse_float(&rec[j], i + 1, j + 1)?);
        }
    }
    Ok((header, cols))
}

pub fn read_real(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    read_real_from(std::fs::File::open(path)?)
}

pub fn write_real_to<W: Write>(writer: W, names: &[String], columns: &[Vec<f64>]) -> Result<()> {
    if names.len() != columns.len() {
        return Err(Error::Dimension(format!("{} names for {} columns", names.len(), columns.len())));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(names)?;
    let n = columns.first().map_or(0, Vec::len);
    for i in 0..n {
        w.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_real(path: &Path, names: &[String], columns: &[Vec<f64>]) -> Result<()> {
    write_real_to(std::fs::File::create(path)?, names, columns)
}

/// Default column names x1, …, xp.
pub fn default_names(prefix: &str, p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("{prefix}{j}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let x = CategoricalMatrix::new(2, 3, 2, vec![0, 1, 2, 2, 1, 0]).unwrap();
        let d = Dataset {
            names: default_names("x", 3),
            response: "y".into(),
            x,
            y: vec![0.1, -3.25e-7],
        };
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, &d).unwrap();
        assert_eq!(read_dataset_from(buf.as_slice(), 2).unwrap(), d);
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(read_dataset_from("a,y\n".as_bytes(), 1), Err(Error::Ingestion { .. })));
        assert!(matches!(read_dataset_from("".as_bytes(), 1), Err(Error::Ingestion { .. })));
    }

    #[test]
    fn bad_code_position_is_reported() {
        let err = read_dataset_from("a,b,y\n0,1,0.5\n1,3,0.2\n".as_bytes(), 2).unwrap_err();
        match err {
            Error::Ingestion { row, column, .. } => assert_eq!((row, column), (2, 2)),
            other => panic!("{other}"),
        }
        let err = read_dataset_from("a,y\n0,abc\n".as_bytes(), 1).unwrap_err();
        assert!(matches!(err, Error::Ingestion { row: 1, column: 2, .. }));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(matches!(read_codes_from("a,b\n0,1\n1\n".as_bytes(), 1), Err(Error::Ingestion { row: 2, .. })));
    }
}
