//! Parse an admissions CSV, report malformed rows, and apply the rare-code
//! and censor-date filters.
//!
//!     cargo run --example ingest_and_filter -- [admissions.csv]

use anyhow::Result;
use codematch::data::{apply_filters, parse_admissions, DatasetFilterConfig};

const SAMPLE: &str = "\
admission_id,patient_id,hospital,year,discharge_date,gender,age,codes,readmission,death_date
A1,P1,H1,2005,2005-07-11,F,67,I200;K219;E119,same,2008-05-12
A2,P2,H1,2005,2005-10-27,M,71,R570;K219,none,
A3,P3,H1,2006,2006-02-30,M,80,I200,none,
A4,P4,H2,2009,2009-03-01,F,55,I200;Z511,other,
A5,P5,H2,2006,2006-04-02,X,44,C50,none,
";

fn main() -> Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let parsed = parse_admissions(text.as_bytes())?;
    println!("{} admissions parsed", parsed.admissions.len());
    for e in &parsed.row_errors {
        println!("  skipped: {e}");
    }

    let cfg = DatasetFilterConfig {
        min_code_count: 2,
        ..Default::default()
    };
    let kept = apply_filters(&parsed.admissions, &cfg);
    println!(
        "{} admissions after filtering (codes seen < {} times dropped, censor {})",
        kept.len(),
        cfg.min_code_count,
        cfg.censor_date
    );
    for a in &kept {
        let codes: Vec<&str> = a.codes.iter().map(|c| c.as_str()).collect();
        println!("  {} {:?}", a.admission_id, codes);
    }
    Ok(())
}
