//! Walk through the three ways WVM picks a control on a hand-built pool
//! with a toy two-dimensional embedding.
//!
//!     cargo run --example sequential_matching

use anyhow::Result;
use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use codematch::codes::codes;
use codematch::data::{Admission, Gender, ReadmissionStatus};
use codematch::embedding::EmbeddingModel;
use codematch::matching::{match_wvm, prefix_match_levels, MatcherConfig};

fn admission(id: &str, code_list: &[&str]) -> Admission {
    Admission {
        admission_id: id.into(),
        patient_id: id.into(),
        hospital: "H1".into(),
        admission_year: 2005,
        discharge_date: NaiveDate::from_ymd_opt(2005, 6, 1).unwrap(),
        gender: Gender::Male,
        age_years: 70,
        codes: codes(code_list.iter().copied()),
        readmission: ReadmissionStatus::NotReadmitted,
        death_date: None,
    }
}

fn main() -> Result<()> {
    // I200 and R570 point the same way; K219 and Z511 do not. Ties on
    // distance go to the smallest admission id.
    let model = EmbeddingModel::from_vectors(
        2,
        [
            ("C50", vec![0.0, 1.0]),
            ("I200", vec![1.0, 0.1]),
            ("R570", vec![0.9, 0.3]),
            ("K219", vec![-0.2, 1.0]),
            ("Z511", vec![-1.0, 0.2]),
        ],
    )?;
    let pool = [
        admission("c1", &["C50", "R570", "K219"]),
        admission("c2", &["C50", "R570"]),
        admission("c3", &["C50", "Z511"]),
        admission("c4", &["R570", "K219"]),
        admission("c5", &["Z511"]),
    ];
    let controls: Vec<&Admission> = pool.iter().collect();
    let cfg = MatcherConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    for case in [
        admission("exact", &["C50", "R570", "K219"]),
        admission("partial", &["C50", "I200"]),
        admission("first", &["I200", "C50"]),
    ] {
        let index = prefix_match_levels(&case, &controls);
        let sizes: Vec<usize> = index.levels().iter().map(Vec::len).collect();
        let r = match_wvm(&case, &controls, &model, &cfg, &mut rng)?;
        let distance = r.distance.map_or("-".to_string(), |d| format!("{d:.4}"));
        println!(
            "{:<8} prefix level sizes {sizes:?} -> {} via {} (distance {distance})",
            case.admission_id, r.control_id, r.scenario
        );
    }
    Ok(())
}
