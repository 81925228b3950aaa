//! Bit-exact file serialization: RFC 4180 CSV (UTF-8, LF line endings,
//! fields quoted only when they contain a comma, quote, or newline) and a
//! JSON mirror with the same field names.

use std::io;
use std::path::{Path, PathBuf};

use csv::{QuoteStyle, Terminator};
use thiserror::Error;

use crate::record::{
    fulfillment_from_str, fulfillment_to_string, format_timestamp, parse_timestamp, KeyValuePair,
    ProductRecord, StrainType, Value, PRODUCT_FIELDS,
};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("schema mismatch: missing column `{0}`")]
    MissingColumn(String),
    #[error("schema mismatch: unknown column `{0}`")]
    UnknownColumn(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("malformed csv: {0}")]
    Malformed(#[from] csv::Error),
}

/// A row type with a fixed header that can be written to and read from CSV
/// and mirrored to JSON.
pub trait CsvRecord: Sized {
    fn headers() -> &'static [&'static str];

    /// Cell values in header order.
    fn to_fields(&self) -> Vec<String>;

    /// Rebuild from cells already arranged in header order. `line` is the
    /// 1-based line number of the row, for error reporting.
    fn from_fields(fields: &[&str], line: u64) -> Result<Self, CsvError>;

    fn to_json(&self) -> serde_json::Value;
}

impl CsvRecord for KeyValuePair {
    fn headers() -> &'static [&'static str] {
        &["key", "value"]
    }

    fn to_fields(&self) -> Vec<String> {
        vec![self.key.clone(), self.value.to_string()]
    }

    fn from_fields(fields: &[&str], line: u64) -> Result<Self, CsvError> {
        if fields[0].is_empty() {
            return Err(CsvError::Row {
                line,
                message: "empty key".to_string(),
            });
        }
        Ok(KeyValuePair::new(fields[0], Value::parse(fields[1])))
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "key": self.key, "value": self.value })
    }
}

fn opt_text(cell: &str) -> Option<String> {
    if cell.is_empty() {
        None
    } else {
        Some(cell.to_string())
    }
}

fn parse_cell<T, E: std::fmt::Display>(
    cell: &str,
    field: &str,
    line: u64,
    parse: impl Fn(&str) -> Result<T, E>,
) -> Result<Option<T>, CsvError> {
    if cell.is_empty() {
        return Ok(None);
    }
    parse(cell).map(Some).map_err(|e| CsvError::Row {
        line,
        message: format!("field `{field}`: {e}"),
    })
}

impl CsvRecord for ProductRecord {
    fn headers() -> &'static [&'static str] {
        &PRODUCT_FIELDS
    }

    fn to_fields(&self) -> Vec<String> {
        fn opt_num<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        fn opt_float(v: &Option<f64>) -> String {
            v.map(|x| format!("{x:?}")).unwrap_or_default()
        }
        vec![
            self.product_name.clone(),
            self.category.clone(),
            self.brand.clone().unwrap_or_default(),
            self.strain.clone().unwrap_or_default(),
            self.strain_type.to_string(),
            opt_float(&self.thc_pct),
            opt_float(&self.cbd_pct),
            opt_float(&self.thc_mg),
            opt_num(&self.price_original_cents),
            opt_num(&self.price_discount_cents),
            self.unit_weight.clone().unwrap_or_default(),
            self.description.clone().unwrap_or_default(),
            self.image_url.clone().unwrap_or_default(),
            self.product_url.clone(),
            self.dispensary_name.clone(),
            self.dispensary_url.clone(),
            opt_float(&self.rating),
            opt_num(&self.review_count),
            fulfillment_to_string(&self.fulfillment),
            format_timestamp(self.scraped_at),
        ]
    }

    fn from_fields(fields: &[&str], line: u64) -> Result<Self, CsvError> {
        let parse_f64 = |s: &str| s.parse::<f64>();
        let parse_u64 = |s: &str| s.parse::<u64>();
        let record = ProductRecord {
            product_name: fields[0].to_string(),
            category: fields[1].to_string(),
            brand: opt_text(fields[2]),
            strain: opt_text(fields[3]),
            strain_type: fields[4].parse::<StrainType>().map_err(|e| CsvError::Row {
                line,
                message: format!("field `strain_type`: {e}"),
            })?,
            thc_pct: parse_cell(fields[5], "thc_pct", line, parse_f64)?,
            cbd_pct: parse_cell(fields[6], "cbd_pct", line, parse_f64)?,
            thc_mg: parse_cell(fields[7], "thc_mg", line, parse_f64)?,
            price_original_cents: parse_cell(fields[8], "price_original_cents", line, parse_u64)?,
            price_discount_cents: parse_cell(fields[9], "price_discount_cents", line, parse_u64)?,
            unit_weight: opt_text(fields[10]),
            description: opt_text(fields[11]),
            image_url: opt_text(fields[12]),
            product_url: fields[13].to_string(),
            dispensary_name: fields[14].to_string(),
            dispensary_url: fields[15].to_string(),
            rating: parse_cell(fields[16], "rating", line, parse_f64)?,
            review_count: parse_cell(fields[17], "review_count", line, parse_u64)?,
            fulfillment: fulfillment_from_str(fields[18]).map_err(|e| CsvError::Row {
                line,
                message: format!("field `fulfillment`: {e}"),
            })?,
            scraped_at: parse_timestamp(fields[19]).map_err(|e| CsvError::Row {
                line,
                message: format!("field `scraped_at`: {e}"),
            })?,
        };
        Ok(record)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("product record serializes")
    }
}

/// Serialize records to CSV bytes: header row first, rows in input order,
/// deterministic for identical input.
pub fn to_csv_bytes<T: CsvRecord>(records: &[T]) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .quote_style(QuoteStyle::Necessary)
        .from_writer(Vec::new());
    writer
        .write_record(T::headers())
        .expect("in-memory write cannot fail");
    for record in records {
        writer
            .write_record(record.to_fields())
            .expect("in-memory write cannot fail");
    }
    writer.into_inner().expect("in-memory flush cannot fail")
}

/// Write records as CSV to `path`, returning the byte count written.
pub fn write_csv<T: CsvRecord>(records: &[T], path: &Path) -> Result<u64, CsvError> {
    let bytes = to_csv_bytes(records);
    std::fs::write(path, &bytes).map_err(|source| CsvError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(bytes.len() as u64)
}

/// Parse CSV bytes produced by [`to_csv_bytes`] (or any RFC 4180 file with a
/// matching header). Columns may appear in any order; missing or unknown
/// columns are schema errors naming the column.
pub fn from_csv_bytes<T: CsvRecord>(bytes: &[u8]) -> Result<Vec<T>, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .flexible(true)
        .from_reader(bytes);
    let headers = reader.headers()?.clone();
    let expected = T::headers();
    for name in &headers {
        if !expected.contains(&name) {
            return Err(CsvError::UnknownColumn(name.to_string()));
        }
    }
    let mut column_of = Vec::with_capacity(expected.len());
    for name in expected {
        match headers.iter().position(|h| h == *name) {
            Some(idx) => column_of.push(idx),
            None => return Err(CsvError::MissingColumn(name.to_string())),
        }
    }

    let mut out = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let line = row_idx as u64 + 2; // 1-based, after the header row
        let row = row.map_err(|e| CsvError::Row {
            line,
            message: e.to_string(),
        })?;
        if row.len() != headers.len() {
            return Err(CsvError::Row {
                line,
                message: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
        }
        let cells: Vec<&str> = column_of.iter().map(|&i| &row[i]).collect();
        out.push(T::from_fields(&cells, line)?);
    }
    Ok(out)
}

/// Read a CSV file of the given record kind.
pub fn read_csv<T: CsvRecord>(path: &Path) -> Result<Vec<T>, CsvError> {
    let bytes = std::fs::read(path).map_err(|source| CsvError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    from_csv_bytes(&bytes)
}

/// JSON mirror of the CSV format: an array of objects whose keys are the
/// CSV header names.
pub fn to_json_bytes<T: CsvRecord>(records: &[T]) -> Vec<u8> {
    let values: Vec<serde_json::Value> = records.iter().map(T::to_json).collect();
    let mut bytes = serde_json::to_vec_pretty(&values).expect("records serialize");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: CsvRecord>(records: &[T], path: &Path) -> Result<u64, CsvError> {
    let bytes = to_json_bytes(records);
    std::fs::write(path, &bytes).map_err(|source| CsvError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(bytes.len() as u64)
}
