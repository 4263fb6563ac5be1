//! Generate a synthetic cohort and summarize it: outcome marginals,
//! demographics, and how outcomes depend on the leading-code profile.
//!
//!     cargo run --release --example synthetic_cohort -- [patients] [coupling]

use std::collections::BTreeMap;

use anyhow::Result;
use codematch::cohort::{generate_synthetic_cohort_with_log, SynthConfig};
use codematch::data::{Gender, ReadmissionStatus};

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = SynthConfig {
        n_patients: args.first().map_or(Ok(5000), |s| s.parse())?,
        outcome_coupling: args.get(1).map_or(Ok(0.8), |s| s.parse())?,
        ..Default::default()
    };
    let cohort = generate_synthetic_cohort_with_log(&cfg)?;
    let adm = &cohort.admissions;
    let n = adm.len() as f64;
    println!(
        "{} admissions, {} codes in {} synonym clusters",
        adm.len(),
        cohort.code_clusters.len(),
        cfg.n_synonym_clusters
    );

    let mut status = [0usize; 4];
    for a in adm {
        status[a.readmission.index()] += 1;
    }
    for (s, (k, want)) in ReadmissionStatus::ALL
        .iter()
        .zip(status.iter().zip(cfg.readmission_marginals))
    {
        println!("  {:<7} {:.4} (target {want})", s.token(), *k as f64 / n);
    }
    let male = adm.iter().filter(|a| a.gender == Gender::Male).count() as f64 / n;
    let mut ages: Vec<u32> = adm.iter().map(|a| a.age_years).collect();
    ages.sort_unstable();
    println!("  male {male:.3}, median age {}", ages[ages.len() / 2]);

    // Outcomes by primary cluster; the spread grows with the coupling.
    let mut by_primary: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    for (a, p) in adm.iter().zip(&cohort.profiles) {
        let e = by_primary.entry(p.primary_cluster).or_default();
        e.0 += 1;
        e.1 += (a.readmission != ReadmissionStatus::NotReadmitted) as usize;
        e.2 += a.death_date.is_some() as usize;
    }
    println!("primary cluster: admissions, readmitted share, died before censoring");
    for (k, (count, readmitted, died)) in by_primary {
        println!(
            "  {k:>3} {count:>6} {:>6.3} {:>6.3}",
            readmitted as f64 / count as f64,
            died as f64 / count as f64
        );
    }
    Ok(())
}
