//! Case and control group construction from hospital-year pools, and the
//! synthetic admission generator used in place of registry data.

mod synth;

use std::collections::{BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::data::Admission;

pub use synth::{
    generate_synthetic_cohort, generate_synthetic_cohort_with_log, triangular_mode_for_median, AdmissionProfile,
    SynthConfig, SynthError, SyntheticCohort,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HospitalYear {
    pub hospital: String,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortSpec {
    pub n_cases: usize,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec { n_cases: 200 }
    }
}

/// Admissions of a single hospital and admission year, at most one per patient.
#[derive(Debug, Clone, PartialEq)]
pub struct HyPool {
    pub hospital_year: HospitalYear,
    pub admissions: Vec<Admission>,
}

impl HyPool {
    pub fn len(&self) -> usize {
        self.admissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.admissions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohortError {
    #[error("no admissions for hospital {hospital} in {year}")]
    EmptyPool { hospital: String, year: i32 },
    #[error(
        "pool of {size} admissions cannot supply {n_cases} cases and at least one control; resample the hospital-year"
    )]
    PoolTooSmall { size: usize, n_cases: usize },
    #[error("n_cases must be at least 1")]
    NoCases,
}

/// A uniformly random (hospital, year) combination among those present.
/// `None` only for an empty dataset.
pub fn sample_hospital_year<R: Rng + ?Sized>(admissions: &[Admission], rng: &mut R) -> Option<HospitalYear> {
    let combos: Vec<(&str, i32)> = admissions
        .iter()
        .map(|a| (a.hospital.as_str(), a.admission_year))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if combos.is_empty() {
        return None;
    }
    let (hospital, year) = combos[rng.random_range(0..combos.len())];
    Some(HospitalYear {
        hospital: hospital.to_string(),
        year,
    })
}

/// All admissions at `hy`, keeping each patient's earliest discharge (ties:
/// smallest admission_id). Input order is preserved.
pub fn build_hy_pool(admissions: &[Admission], hy: &HospitalYear) -> Result<HyPool, CohortError> {
    let in_hy = || {
        admissions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.hospital == hy.hospital && a.admission_year == hy.year)
    };
    let mut keep: HashMap<&str, usize> = HashMap::new();
    for (i, a) in in_hy() {
        keep.entry(a.patient_id.as_str())
            .and_modify(|best| {
                let b = &admissions[*best];
                if (a.discharge_date, &a.admission_id) < (b.discharge_date, &b.admission_id) {
                    *best = i;
                }
            })
            .or_insert(i);
    }
    let kept: Vec<Admission> = in_hy()
        .filter(|(i, a)| keep[a.patient_id.as_str()] == *i)
        .map(|(_, a)| a.clone())
        .collect();
    if kept.is_empty() {
        return Err(CohortError::EmptyPool {
            hospital: hy.hospital.clone(),
            year: hy.year,
        });
    }
    Ok(HyPool {
        hospital_year: hy.clone(),
        admissions: kept,
    })
}

/// Samples `spec.n_cases` cases without replacement; the rest of the pool
/// are controls. Both lists keep pool order.
pub fn split_case_control<R: Rng + ?Sized>(
    pool: &HyPool,
    spec: &CohortSpec,
    rng: &mut R,
) -> Result<(Vec<Admission>, Vec<Admission>), CohortError> {
    if spec.n_cases == 0 {
        return Err(CohortError::NoCases);
    }
    if pool.len() <= spec.n_cases {
        return Err(CohortError::PoolTooSmall {
            size: pool.len(),
            n_cases: spec.n_cases,
        });
    }
    let mut is_case = vec![false; pool.len()];
    for i in sample(rng, pool.len(), spec.n_cases) {
        is_case[i] = true;
    }
    let (cases, controls): (Vec<_>, Vec<_>) = pool.admissions.iter().zip(is_case).partition(|(_, case)| *case);
    Ok((
        cases.into_iter().map(|(a, _)| a.clone()).collect(),
        controls.into_iter().map(|(a, _)| a.clone()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::admission;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn at(id: &str, patient: &str, hospital: &str, year: i32) -> Admission {
        let mut a = admission(id, &["C50"]);
        a.patient_id = patient.into();
        a.hospital = hospital.into();
        a.admission_year = year;
        a.discharge_date = NaiveDate::from_ymd_opt(year, 6, 1).unwrap();
        a
    }

    #[test]
    fn single_combination_is_always_chosen() {
        let data = [at("1", "p1", "H", 2005), at("2", "p2", "H", 2005)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let hy = sample_hospital_year(&data, &mut rng).unwrap();
            assert_eq!(
                hy,
                HospitalYear {
                    hospital: "H".into(),
                    year: 2005
                }
            );
        }
        assert!(sample_hospital_year(&[], &mut rng).is_none());
    }

    // Two combinations, 10^4 draws: the share of each must be within 3% of 1/2
    // (about six binomial standard deviations).
    #[test]
    fn combinations_are_drawn_uniformly() {
        let data = [at("1", "p1", "H", 2005), at("2", "p2", "G", 2006)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let h = (0..n)
            .filter(|_| sample_hospital_year(&data, &mut rng).unwrap().hospital == "H")
            .count();
        assert!((h as f64 / n as f64 - 0.5).abs() < 0.03, "{h}");
    }

    #[test]
    fn pool_keeps_earliest_admission_per_patient() {
        let mut late = at("a1", "p1", "H", 2005);
        late.discharge_date = NaiveDate::from_ymd_opt(2005, 9, 1).unwrap();
        let mut early = at("a2", "p1", "H", 2005);
        early.discharge_date = NaiveDate::from_ymd_opt(2005, 2, 1).unwrap();
        let data = [
            late,
            early,
            at("a3", "p2", "H", 2005),
            at("a4", "p3", "G", 2005),
            at("a5", "p4", "H", 2006),
        ];
        let pool = build_hy_pool(
            &data,
            &HospitalYear {
                hospital: "H".into(),
                year: 2005,
            },
        )
        .unwrap();
        let ids: Vec<&str> = pool.admissions.iter().map(|a| a.admission_id.as_str()).collect();
        assert_eq!(ids, ["a2", "a3"]);
    }

    #[test]
    fn same_day_ties_keep_smallest_id() {
        let data = [at("b", "p1", "H", 2005), at("a", "p1", "H", 2005)];
        let pool = build_hy_pool(
            &data,
            &HospitalYear {
                hospital: "H".into(),
                year: 2005,
            },
        )
        .unwrap();
        assert_eq!(pool.admissions[0].admission_id, "a");
    }

    #[test]
    fn empty_pool_is_an_error() {
        let data = [at("1", "p1", "H", 2005)];
        let err = build_hy_pool(
            &data,
            &HospitalYear {
                hospital: "X".into(),
                year: 2005,
            },
        )
        .unwrap_err();
        assert!(matches!(err, CohortError::EmptyPool { .. }));
    }

    fn pool_of(n: usize) -> HyPool {
        HyPool {
            hospital_year: HospitalYear {
                hospital: "H".into(),
                year: 2005,
            },
            admissions: (0..n)
                .map(|i| at(&format!("a{i:03}"), &format!("p{i}"), "H", 2005))
                .collect(),
        }
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (cases, controls) = split_case_control(&pool_of(250), &CohortSpec::default(), &mut rng).unwrap();
        assert_eq!(cases.len(), 200);
        assert_eq!(controls.len(), 50);
        let case_patients: BTreeSet<&str> = cases.iter().map(|a| a.patient_id.as_str()).collect();
        assert!(controls.iter().all(|c| !case_patients.contains(c.patient_id.as_str())));
    }

    #[test]
    fn pool_without_room_for_controls_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = split_case_control(&pool_of(200), &CohortSpec::default(), &mut rng).unwrap_err();
        assert_eq!(
            err,
            CohortError::PoolTooSmall {
                size: 200,
                n_cases: 200
            }
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn split_partitions_the_pool(size in 2usize..60, frac in 0.0f64..1.0, seed in any::<u64>()) {
                let n_cases = ((size - 1) as f64 * frac).floor() as usize + 1;
                let n_cases = n_cases.min(size - 1);
                let pool = pool_of(size);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (cases, controls) = split_case_control(&pool, &CohortSpec { n_cases }, &mut rng).unwrap();
                prop_assert_eq!(cases.len(), n_cases);
                prop_assert_eq!(cases.len() + controls.len(), size);
                let mut all: Vec<&str> = cases.iter().chain(&controls).map(|a| a.admission_id.as_str()).collect();
                all.sort();
                all.dedup();
                prop_assert_eq!(all.len(), size);
            }
        }
    }
}
