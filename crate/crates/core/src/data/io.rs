use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

use super::{Admission, Gender, ReadmissionStatus};
use crate::codes::CodeId;

pub const ADMISSIONS_HEADER: [&str; 10] = [
    "admission_id",
    "patient_id",
    "hospital",
    "year",
    "discharge_date",
    "gender",
    "age",
    "codes",
    "readmission",
    "death_date",
];

const CODE_SEPARATOR: char = ';';
const DATE_FORMAT: &str = "%Y-%m-%d";

/// A rejected input row. `line` is the 1-based line number in the file
/// (the header is line 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header {found:?}; expected {}", ADMISSIONS_HEADER.join(","))]
    Header { found: String },
    #[error("{} malformed row(s); first: {}", .0.len(), .0[0])]
    MalformedRows(Vec<RowError>),
}

/// Admissions that parsed cleanly plus every row that did not.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub admissions: Vec<Admission>,
    pub row_errors: Vec<RowError>,
}

impl ParseOutcome {
    pub fn into_strict(self) -> Result<Vec<Admission>, DataError> {
        if self.row_errors.is_empty() {
            Ok(self.admissions)
        } else {
            Err(DataError::MalformedRows(self.row_errors))
        }
    }
}

/// Reads admissions from comma-separated text. Bad rows are collected in
/// [`ParseOutcome::row_errors`] rather than aborting; only an unreadable
/// stream or a wrong header is fatal.
pub fn parse_admissions<R: Read>(source: R) -> Result<ParseOutcome, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let header = reader.headers()?;
    if header.iter().map(str::trim).ne(ADMISSIONS_HEADER.iter().copied()) {
        return Err(DataError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut outcome = ParseOutcome::default();
    let mut seen_ids = HashSet::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line_hint = reader.position().line() + 1;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line_hint, |p| p.line());
                match parse_row(&record) {
                    Ok(admission) => {
                        if seen_ids.insert(admission.admission_id.clone()) {
                            outcome.admissions.push(admission);
                        } else {
                            outcome.row_errors.push(RowError {
                                line,
                                message: format!("duplicate admission_id {:?}", admission.admission_id),
                            });
                        }
                    }
                    Err(message) => outcome.row_errors.push(RowError { line, message }),
                }
            }
            Err(err) if err.is_io_error() => return Err(err.into()),
            Err(err) => {
                let line = err.position().map_or(line_hint, |p| p.line());
                outcome.row_errors.push(RowError {
                    line,
                    message: err.to_string(),
                });
            }
        }
    }
    Ok(outcome)
}

/// Like [`parse_admissions`] but any malformed row fails the whole read.
pub fn parse_admissions_strict<R: Read>(source: R) -> Result<Vec<Admission>, DataError> {
    parse_admissions(source)?.into_strict()
}

pub fn read_admissions_file(path: &Path) -> Result<ParseOutcome, DataError> {
    parse_admissions(BufReader::new(File::open(path)?))
}

fn parse_date(field: &str, name: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(field.trim(), DATE_FORMAT).map_err(|e| format!("bad {name} {field:?}: {e}"))
}

fn parse_row(record: &csv::StringRecord) -> Result<Admission, String> {
    if record.len() != ADMISSIONS_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            ADMISSIONS_HEADER.len(),
            record.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();

    let admission_id = field(0).to_string();
    if admission_id.is_empty() {
        return Err("empty admission_id".to_string());
    }
    let admission_year = field(3)
        .parse::<i32>()
        .map_err(|e| format!("bad year {:?}: {e}", field(3)))?;
    let discharge_date = parse_date(field(4), "discharge_date")?;
    let gender = field(5).parse::<Gender>()?;
    let age_years = field(6)
        .parse::<u32>()
        .map_err(|e| format!("bad age {:?}: {e}", field(6)))?;
    let codes = field(7)
        .split(CODE_SEPARATOR)
        .filter(|raw| !raw.trim().is_empty())
        .map(CodeId::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let readmission = field(8).parse::<ReadmissionStatus>()?;
    let death_date = match field(9) {
        "" => None,
        raw => Some(parse_date(raw, "death_date")?),
    };

    let admission = Admission {
        admission_id,
        patient_id: field(1).to_string(),
        hospital: field(2).to_string(),
        admission_year,
        discharge_date,
        gender,
        age_years,
        codes,
        readmission,
        death_date,
    };
    admission.validate()?;
    Ok(admission)
}

/// Writes admissions in the same schema [`parse_admissions`] reads.
pub fn write_admissions<W: Write>(sink: W, admissions: &[Admission]) -> Result<(), DataError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    writer.write_record(ADMISSIONS_HEADER)?;
    for a in admissions {
        let codes = a.codes.iter().map(CodeId::as_str).collect::<Vec<_>>().join(";");
        let death = a
            .death_date
            .map(|d| d.format(DATE_FORMAT).to_string())
            .unwrap_or_default();
        writer.write_record([
            a.admission_id.as_str(),
            a.patient_id.as_str(),
            a.hospital.as_str(),
            &a.admission_year.to_string(),
            &a.discharge_date.format(DATE_FORMAT).to_string(),
            a.gender.token(),
            &a.age_years.to_string(),
            &codes,
            a.readmission.token(),
            &death,
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_admissions_file(path: &Path, admissions: &[Admission]) -> Result<(), DataError> {
    write_admissions(BufWriter::new(File::create(path)?), admissions)
}
