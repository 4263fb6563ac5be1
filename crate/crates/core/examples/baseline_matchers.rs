//! Match one sampled cohort with every method and compare the chosen
//! controls' outcome agreement.
//!
//!     cargo run --release --example baseline_matchers

use anyhow::Result;
use codematch::cohort::{generate_synthetic_cohort, SynthConfig};
use codematch::data::{apply_filters, DatasetFilterConfig};
use codematch::embedding::{train_skipgram, TrainingConfig};
use codematch::evaluation::{match_trial, sample_trial_cohort, ExperimentConfig};
use codematch::matching::{hamming_distance, Method};

fn main() -> Result<()> {
    let raw = generate_synthetic_cohort(&SynthConfig::default())?;
    let admissions = apply_filters(&raw, &DatasetFilterConfig::default());
    let model = train_skipgram(
        &admissions,
        &TrainingConfig {
            dim: 30,
            ..Default::default()
        },
    )?;
    let cfg = ExperimentConfig::default();
    let cohort = sample_trial_cohort(&admissions, &cfg, 0).map_err(anyhow::Error::msg)?;
    println!(
        "hospital {} year {}: {} cases, {} controls",
        cohort.hospital_year.hospital,
        cohort.hospital_year.year,
        cohort.cases.len(),
        cohort.controls.len()
    );
    let find = |id: &str| admissions.iter().find(|a| a.admission_id == id).unwrap();

    println!(
        "{:<6}{:>8}{:>8}{:>12}{:>14}",
        "method", "matched", "skipped", "same status", "mean hamming"
    );
    for method in Method::ALL {
        let m = match_trial(&cohort, Some(&model), method, &cfg, 0);
        let (mut same, mut hamming) = (0, 0);
        for r in &m.results {
            let (case, control) = (find(&r.case_id), find(&r.control_id));
            same += (case.readmission == control.readmission) as usize;
            hamming += hamming_distance(&case.codes, &control.codes);
        }
        let n = m.results.len().max(1) as f64;
        println!(
            "{:<6}{:>8}{:>8}{:>12.3}{:>14.2}",
            method.label(),
            m.results.len(),
            m.skipped.len(),
            same as f64 / n,
            hamming as f64 / n
        );
    }
    Ok(())
}
