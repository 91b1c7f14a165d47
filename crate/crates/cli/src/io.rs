use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use mable::Dataset;

use crate::CliError;

/// Numeric CSV contents.
#[derive(Debug)]
pub struct Table {
    pub columns: Option<Vec<String>>,
    pub data: Dataset,
}

/// Reads a comma-separated file of finite reals, one observation per row.
pub fn read_table(path: &Path, header: bool) -> Result<Table, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(file);
    let columns = if header {
        let names = reader
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(str::to_owned)
            .collect();
        Some(names)
    } else {
        None
    };
    let mut flat = Vec::new();
    let mut dim = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                CliError::Runtime(format!(
                    "{}: line {line}, column {}: {field:?} is not a number",
                    path.display(),
                    col + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::Runtime(format!(
                    "{}: line {line}, column {}: value {field:?} is not finite",
                    path.display(),
                    col + 1
                )));
            }
            flat.push(value);
        }
        dim.get_or_insert(record.len());
    }
    let Some(dim) = dim else {
        return Err(CliError::Runtime(format!("{}: no data rows", path.display())));
    };
    let data = Dataset::from_flat(flat, dim)?;
    Ok(Table { columns, data })
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let at = e
        .position()
        .map(|p| format!(" line {}:", p.line()))
        .unwrap_or_default();
    let detail = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    CliError::Runtime(format!("{}:{at} {detail}", path.display()))
}

/// File or stdout.
pub fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// CSV writer with a header row. Reals use the shortest round-trip form.
pub struct CsvOut {
    inner: csv::Writer<Box<dyn Write>>,
}

/// Shortest round-trip form; exponent notation outside `[1e-5, 1e16)`.
fn format_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

impl CsvOut {
    pub fn new(out: Box<dyn Write>, header: &[String]) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(header).map_err(write_error)?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, values: impl IntoIterator<Item = f64>) -> Result<(), CliError> {
        self.inner
            .write_record(values.into_iter().map(format_value))
            .map_err(write_error)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| CliError::Runtime(e.to_string()))
    }
}

fn write_error(e: csv::Error) -> CliError {
    CliError::Runtime(format!("writing CSV: {e}"))
}

/// `x1, ..., xd` unless names are known.
pub fn column_names(known: Option<&[String]>, dim: usize) -> Vec<String> {
    match known {
        Some(names) if names.len() == dim => names.to_vec(),
        _ => (1..=dim).map(|j| format!("x{j}")).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::format_value;

    #[test]
    fn values_use_exponents_only_at_extremes() {
        assert_eq!(format_value(0.25), "0.25");
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(5.5e-220), "5.5e-220");
        assert_eq!(format_value(-3e20), "-3e20");
    }
}
