//! Synthetic admission data.
//!
//! The vocabulary is partitioned into *synonym clusters*: groups of codes
//! that stand for the same condition and are used interchangeably. Each
//! patient has a condition profile, a primary cluster and a comorbidity
//! cluster, fixed across their admissions. Every admission codes the primary
//! condition first and the comorbidity second, each time with a randomly
//! chosen synonym, followed by filler codes drawn with a preference for
//! clusters associated with the primary condition. Synonyms therefore share
//! contexts across the corpus, which is what lets an embedding learn that
//! they are interchangeable.
//!
//! Outcomes depend on the profile. Profiles are laid out in random order on
//! the unit interval, each owning a slice as long as its probability. With
//! coupling `c`, readmission status is drawn from
//! `(1 - c) * marginals + c * q`, where `q` is the share of the profile's
//! slice falling in each status's stretch of the marginal CDF; averaged over
//! profiles this returns the marginals exactly, at any coupling. The death
//! hazard is `exp(c * spread * (1 - 2 * u)) / mean_survival_days`, with `u` the
//! slice midpoint, and the gap from a patient's last discharge to death is
//! exponential.

use chrono::{Datelike, Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Triangular};
use thiserror::Error;

use crate::codes::CodeId;
use crate::data::{Admission, Gender, ReadmissionStatus};

const AGE_MIN: f64 = 18.0;
const AGE_MAX: f64 = 100.0;
/// Clusters each primary condition prefers for comorbidity and filler codes.
const AFFINITY_SIZE: usize = 3;
const COMORBIDITY_AFFINITY_PROB: f64 = 0.8;
const FILLER_AFFINITY_PROB: f64 = 0.5;
/// Chance that a filler position re-codes the primary condition with a synonym.
const RECODE_PROB: f64 = 0.15;
const HOME_HOSPITAL_PROB: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid synthetic-data configuration: {0}")]
pub struct SynthError(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub n_hospitals: usize,
    pub year_start: i32,
    pub year_end: i32,
    /// Upper bound of the uniform admissions-per-patient draw (lower bound 1).
    pub max_admissions_per_patient: usize,
    pub vocab_size: usize,
    pub n_synonym_clusters: usize,
    pub min_codes: usize,
    pub max_codes: usize,
    /// Missing, other facility, same facility, not readmitted.
    pub readmission_marginals: [f64; 4],
    pub male_fraction: f64,
    pub median_age: f64,
    pub outcome_coupling: f64,
    /// Mean days from last discharge to death at a neutral profile.
    pub mean_survival_days: f64,
    /// Log-scale spread of the death hazard across profiles at full coupling.
    pub hazard_spread: f64,
    /// Deaths after this date are not recorded; discharges never exceed it.
    pub censor_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_patients: 20_000,
            n_hospitals: 2,
            year_start: 2004,
            year_end: 2008,
            max_admissions_per_patient: 3,
            vocab_size: 45,
            n_synonym_clusters: 15,
            min_codes: 2,
            max_codes: 6,
            readmission_marginals: [0.0001, 0.0407, 0.2303, 0.7289],
            male_fraction: 0.582,
            median_age: 71.0,
            outcome_coupling: 0.8,
            mean_survival_days: 1500.0,
            hazard_spread: 8.0,
            censor_date: NaiveDate::from_ymd_opt(2008, 12, 31).expect("valid date"),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError(m));
        if self.n_patients == 0 || self.n_hospitals == 0 || self.max_admissions_per_patient == 0 {
            return fail("patients, hospitals and admissions per patient must be positive".into());
        }
        if self.year_start > self.year_end {
            return fail(format!("year range {}..{} is empty", self.year_start, self.year_end));
        }
        let first_day = NaiveDate::from_ymd_opt(self.year_start, 1, 1)
            .ok_or_else(|| SynthError(format!("year {} out of range", self.year_start)))?;
        if first_day > self.censor_date {
            return fail(format!("year_start {} begins after the censor date", self.year_start));
        }
        if NaiveDate::from_ymd_opt(self.year_end, 12, 31).is_none() {
            return fail(format!("year {} out of range", self.year_end));
        }
        if self.n_synonym_clusters == 0 || self.vocab_size < self.n_synonym_clusters {
            return fail("need 1 <= synonym clusters <= vocab size".into());
        }
        if self.min_codes == 0 || self.min_codes > self.max_codes {
            return fail("need 1 <= min_codes <= max_codes".into());
        }
        let m = &self.readmission_marginals;
        if m.iter().any(|p| !(0.0..=1.0).contains(p)) || (m.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return fail(format!(
                "readmission marginals {m:?} must be probabilities summing to 1"
            ));
        }
        if !(0.0..=1.0).contains(&self.male_fraction) {
            return fail(format!("male fraction {} outside [0, 1]", self.male_fraction));
        }
        if !(AGE_MIN < self.median_age && self.median_age < AGE_MAX) {
            return fail(format!("median age must lie in ({AGE_MIN}, {AGE_MAX})"));
        }
        if !(0.0..=1.0).contains(&self.outcome_coupling) {
            return fail(format!("outcome coupling {} outside [0, 1]", self.outcome_coupling));
        }
        if !(self.mean_survival_days > 0.0 && self.mean_survival_days.is_finite()) {
            return fail("mean survival must be positive".into());
        }
        if !(self.hazard_spread >= 0.0 && self.hazard_spread.is_finite()) {
            return fail("hazard spread must be non-negative".into());
        }
        Ok(())
    }
}

/// Mode of a triangular distribution on `[min, max]` whose median is `median`.
pub fn triangular_mode_for_median(min: f64, max: f64, median: f64) -> f64 {
    let width = max - min;
    if median >= (min + max) / 2.0 {
        min + 2.0 * (median - min).powi(2) / width
    } else {
        max - 2.0 * (max - median).powi(2) / width
    }
}

/// Generation record for one admission: its condition profile and the
/// outcome parameters it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionProfile {
    pub primary_cluster: usize,
    pub comorbidity_cluster: usize,
    pub readmission_probs: [f64; 4],
    /// Deaths per day.
    pub death_hazard: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub admissions: Vec<Admission>,
    /// Parallel to `admissions`.
    pub profiles: Vec<AdmissionProfile>,
    /// Cluster of each code, for inspection and tests.
    pub code_clusters: Vec<(CodeId, usize)>,
}

impl SyntheticCohort {
    pub fn cluster_of(&self, code: &CodeId) -> Option<usize> {
        self.code_clusters.iter().find(|(c, _)| c == code).map(|(_, k)| *k)
    }
}

pub fn generate_synthetic_cohort(cfg: &SynthConfig) -> Result<Vec<Admission>, SynthError> {
    generate_synthetic_cohort_with_log(cfg).map(|c| c.admissions)
}

fn code_name(cluster: usize, synonym: usize) -> CodeId {
    CodeId::new(&format!("S{cluster:03}X{synonym}")).expect("non-empty")
}

struct World {
    clusters: Vec<Vec<CodeId>>,
    affinity: Vec<[usize; AFFINITY_SIZE]>,
    /// `[lo, hi)` slice of the unit interval owned by each (primary,
    /// comorbidity) profile, row-major; its length is the profile's probability.
    slices: Vec<(f64, f64)>,
}

impl World {
    fn new(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Self {
        let k = cfg.n_synonym_clusters;
        let mut clusters = vec![Vec::new(); k];
        for i in 0..cfg.vocab_size {
            let cluster = i % k;
            let synonym = clusters[cluster].len();
            clusters[cluster].push(code_name(cluster, synonym));
        }
        let affinity: Vec<[usize; AFFINITY_SIZE]> = (0..k)
            .map(|_| std::array::from_fn(|_| rng.random_range(0..k)))
            .collect();

        // Exact profile probabilities under the sampling scheme below.
        let mass = |p: usize, q: usize| {
            let hits = affinity[p].iter().filter(|&&a| a == q).count() as f64;
            let c = COMORBIDITY_AFFINITY_PROB;
            (c * hits / AFFINITY_SIZE as f64 + (1.0 - c) / k as f64) / k as f64
        };
        // Profiles sit on the outcome scale in random order: outcomes depend on
        // the combination of conditions, not on either one alone.
        let mut order: Vec<(usize, usize)> = (0..k).flat_map(|p| (0..k).map(move |q| (p, q))).collect();
        order.shuffle(rng);
        let mut slices = vec![(0.0, 0.0); k * k];
        let mut lo = 0.0;
        for (p, q) in order {
            let hi = lo + mass(p, q);
            slices[p * k + q] = (lo, hi);
            lo = hi;
        }
        World {
            clusters,
            affinity,
            slices,
        }
    }

    fn synonym(&self, cluster: usize, rng: &mut ChaCha8Rng) -> CodeId {
        let codes = &self.clusters[cluster];
        codes[rng.random_range(0..codes.len())].clone()
    }

    fn related_cluster(&self, primary: usize, affinity_prob: f64, rng: &mut ChaCha8Rng) -> usize {
        if rng.random_bool(affinity_prob) {
            self.affinity[primary][rng.random_range(0..AFFINITY_SIZE)]
        } else {
            rng.random_range(0..self.clusters.len())
        }
    }

    /// Status distribution of a profile at full coupling: the share of its
    /// slice that falls in each status's stretch of the marginal CDF. Mixing
    /// over profiles gives back the marginals exactly.
    fn profile(&self, cfg: &SynthConfig, primary: usize, comorbidity: usize) -> AdmissionProfile {
        let (lo, hi) = self.slices[primary * self.clusters.len() + comorbidity];
        let marginals = cfg.readmission_marginals;
        let mut start = 0.0;
        let concentrated: [f64; 4] = std::array::from_fn(|i| {
            let end = if i == 3 { 1.0 } else { start + marginals[i] };
            let overlap = (hi.min(end) - lo.max(start)).max(0.0);
            start = end;
            overlap / (hi - lo)
        });
        let c = cfg.outcome_coupling;
        let readmission_probs = std::array::from_fn(|i| (1.0 - c) * marginals[i] + c * concentrated[i]);
        let score = (lo + hi) / 2.0;
        let death_hazard = (c * cfg.hazard_spread * (1.0 - 2.0 * score)).exp() / cfg.mean_survival_days;
        AdmissionProfile {
            primary_cluster: primary,
            comorbidity_cluster: comorbidity,
            readmission_probs,
            death_hazard,
        }
    }
}

fn random_day_in_year(year: i32, last_allowed: NaiveDate, rng: &mut ChaCha8Rng) -> NaiveDate {
    let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("validated year");
    let end = NaiveDate::from_ymd_opt(year, 12, 31)
        .expect("validated year")
        .min(last_allowed);
    let span = (end - start).num_days();
    start + Duration::days(rng.random_range(0..=span))
}

/// Generates admissions together with the per-admission generation record.
/// Deterministic for a fixed configuration (including seed).
pub fn generate_synthetic_cohort_with_log(cfg: &SynthConfig) -> Result<SyntheticCohort, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let world = World::new(cfg, &mut rng);

    let mode = triangular_mode_for_median(AGE_MIN, AGE_MAX, cfg.median_age);
    let age_dist = Triangular::new(AGE_MIN, AGE_MAX, mode).map_err(|e| SynthError(e.to_string()))?;
    // The last admission year cannot start after the censor date.
    let last_year = cfg.year_end.min(cfg.censor_date.year());
    let n_years = (last_year - cfg.year_start + 1) as usize;

    let mut admissions = Vec::new();
    let mut profiles = Vec::new();
    for patient in 0..cfg.n_patients {
        let patient_id = format!("P{patient:07}");
        let gender = if rng.random_bool(cfg.male_fraction) {
            Gender::Male
        } else {
            Gender::Female
        };
        let base_age = age_dist.sample(&mut rng).round() as u32;
        let home = rng.random_range(0..cfg.n_hospitals);
        let primary = rng.random_range(0..world.clusters.len());
        let comorbidity = world.related_cluster(primary, COMORBIDITY_AFFINITY_PROB, &mut rng);
        let profile = world.profile(cfg, primary, comorbidity);
        let status_dist = WeightedIndex::new(profile.readmission_probs).map_err(|e| SynthError(e.to_string()))?;

        let n_adm = rng.random_range(1..=cfg.max_admissions_per_patient);
        let mut dates: Vec<NaiveDate> = (0..n_adm)
            .map(|_| {
                let year = cfg.year_start + rng.random_range(0..n_years) as i32;
                random_day_in_year(year, cfg.censor_date, &mut rng)
            })
            .collect();
        dates.sort();
        let first_year = dates[0].year();

        let last_discharge = *dates.last().expect("at least one admission");
        let gap = Exp::new(profile.death_hazard)
            .map_err(|e| SynthError(e.to_string()))?
            .sample(&mut rng);
        let death_date = last_discharge
            .checked_add_signed(Duration::days(gap.floor().min(1e6) as i64))
            .filter(|d| *d <= cfg.censor_date);

        for discharge in dates {
            let hospital = if rng.random_bool(HOME_HOSPITAL_PROB) {
                home
            } else {
                rng.random_range(0..cfg.n_hospitals)
            };
            let n_codes = rng.random_range(cfg.min_codes..=cfg.max_codes);
            let mut codes = Vec::with_capacity(n_codes);
            codes.push(world.synonym(primary, &mut rng));
            if n_codes >= 2 {
                codes.push(world.synonym(comorbidity, &mut rng));
            }
            while codes.len() < n_codes {
                let cluster = if rng.random_bool(RECODE_PROB) {
                    primary
                } else {
                    world.related_cluster(primary, FILLER_AFFINITY_PROB, &mut rng)
                };
                codes.push(world.synonym(cluster, &mut rng));
            }
            let age = base_age + (discharge.year() - first_year) as u32;
            admissions.push(Admission {
                admission_id: format!("A{:08}", admissions.len()),
                patient_id: patient_id.clone(),
                hospital: format!("H{hospital:02}"),
                admission_year: discharge.year(),
                discharge_date: discharge,
                gender,
                age_years: age,
                codes,
                readmission: ReadmissionStatus::ALL[status_dist.sample(&mut rng)],
                death_date,
            });
            profiles.push(profile.clone());
        }
    }

    let code_clusters = world
        .clusters
        .iter()
        .enumerate()
        .flat_map(|(k, codes)| codes.iter().map(move |c| (c.clone(), k)))
        .collect();
    Ok(SyntheticCohort {
        admissions,
        profiles,
        code_clusters,
    })
}
