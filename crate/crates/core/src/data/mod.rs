//! Admission records, delimited-text ingestion and dataset filters.

mod filter;
mod io;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::codes::CodeId;

pub use filter::{apply_filters, filter_by_censor_date, filter_rare_codes, DatasetFilterConfig};
pub use io::{
    parse_admissions, parse_admissions_strict, read_admissions_file, write_admissions, write_admissions_file,
    DataError, ParseOutcome, RowError, ADMISSIONS_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn token(self) -> &'static str {
        match self {
            Gender::Male => "M",
            Gender::Female => "F",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Ok(Gender::Male),
            "f" | "female" => Ok(Gender::Female),
            other => Err(format!("unknown gender token {other:?}")),
        }
    }
}

/// 28-day readmission status of an admission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReadmissionStatus {
    Missing,
    ReadmittedOtherFacility,
    ReadmittedSameFacility,
    NotReadmitted,
}

impl ReadmissionStatus {
    pub const ALL: [ReadmissionStatus; 4] = [
        ReadmissionStatus::Missing,
        ReadmissionStatus::ReadmittedOtherFacility,
        ReadmissionStatus::ReadmittedSameFacility,
        ReadmissionStatus::NotReadmitted,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ReadmissionStatus::Missing => "missing",
            ReadmissionStatus::ReadmittedOtherFacility => "other",
            ReadmissionStatus::ReadmittedSameFacility => "same",
            ReadmissionStatus::NotReadmitted => "none",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for ReadmissionStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "missing" => Ok(ReadmissionStatus::Missing),
            "other" => Ok(ReadmissionStatus::ReadmittedOtherFacility),
            "same" => Ok(ReadmissionStatus::ReadmittedSameFacility),
            "none" => Ok(ReadmissionStatus::NotReadmitted),
            other => Err(format!(
                "unknown readmission status {other:?} (expected missing|other|same|none)"
            )),
        }
    }
}

impl fmt::Display for ReadmissionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One hospital episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admission {
    pub admission_id: String,
    pub patient_id: String,
    pub hospital: String,
    pub admission_year: i32,
    pub discharge_date: NaiveDate,
    pub gender: Gender,
    pub age_years: u32,
    /// Diagnosis codes in coding order; the first is the primary diagnosis.
    pub codes: Vec<CodeId>,
    pub readmission: ReadmissionStatus,
    pub death_date: Option<NaiveDate>,
}

impl Admission {
    pub fn first_code(&self) -> Option<&CodeId> {
        self.codes.first()
    }

    /// Checks the record-level invariants: at least one code, and death not
    /// before discharge.
    pub fn validate(&self) -> Result<(), String> {
        if self.codes.is_empty() {
            return Err(format!("admission {} has no codes", self.admission_id));
        }
        if let Some(death) = self.death_date {
            if death < self.discharge_date {
                return Err(format!(
                    "admission {}: death date {death} precedes discharge {}",
                    self.admission_id, self.discharge_date
                ));
            }
        }
        Ok(())
    }
}
