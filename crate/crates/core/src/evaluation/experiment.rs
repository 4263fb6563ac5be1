use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::{incidence_summary, ir_error, readmission_accuracy, MetricSummary};
use super::EvaluationError;
use crate::cohort::{build_hy_pool, sample_hospital_year, split_case_control, CohortError, CohortSpec, HospitalYear};
use crate::data::Admission;
use crate::embedding::EmbeddingModel;
use crate::matching::{match_cohort, CohortMatch, MatcherConfig, Method};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_iterations: usize,
    pub cohort: CohortSpec,
    pub age_bin_width_years: u32,
    pub with_replacement: bool,
    pub censor_date: NaiveDate,
    /// Hospital-year draws per iteration before the iteration is aborted.
    pub max_retries: usize,
    pub seed: u64,
    /// Iterations run concurrently on this many threads; results do not
    /// depend on it.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_iterations: 150,
            cohort: CohortSpec::default(),
            age_bin_width_years: 5,
            with_replacement: false,
            censor_date: NaiveDate::from_ymd_opt(2008, 12, 31).expect("valid date"),
            max_retries: 20,
            seed: 0,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn matcher(&self, method: Method) -> MatcherConfig {
        MatcherConfig {
            method,
            age_bin_width_years: self.age_bin_width_years,
            with_replacement: self.with_replacement,
        }
    }

    /// Key-value view of the settings, for report headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        [
            ("iterations", self.n_iterations.to_string()),
            ("cases", self.cohort.n_cases.to_string()),
            ("age_bin_width", self.age_bin_width_years.to_string()),
            ("with_replacement", self.with_replacement.to_string()),
            ("censor_date", self.censor_date.to_string()),
            ("max_retries", self.max_retries.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// One method's result on one iteration's cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub iteration: usize,
    pub hospital_year: HospitalYear,
    pub readmission_accuracy: f64,
    /// Deaths per person-day among matched cases.
    pub ir_case: f64,
    pub ir_control: f64,
    pub ir_error: f64,
    pub n_matched: usize,
    pub n_skipped: usize,
    /// Deaths after the censor date, treated as survival (cases + controls).
    pub censored_deaths: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbortedIteration {
    pub iteration: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub method: Method,
    /// Completed iterations in index order.
    pub outcomes: Vec<TrialOutcome>,
    pub aborted: Vec<AbortedIteration>,
    pub config_echo: Vec<(String, String)>,
}

impl ExperimentReport {
    fn summary(&self, f: impl Fn(&TrialOutcome) -> f64) -> MetricSummary {
        MetricSummary::from_values(&self.outcomes.iter().map(f).collect::<Vec<_>>())
    }

    pub fn accuracy(&self) -> MetricSummary {
        self.summary(|o| o.readmission_accuracy)
    }

    pub fn ir_error(&self) -> MetricSummary {
        self.summary(|o| o.ir_error)
    }

    pub fn ir_case(&self) -> MetricSummary {
        self.summary(|o| o.ir_case)
    }

    pub fn ir_control(&self) -> MetricSummary {
        self.summary(|o| o.ir_control)
    }

    /// `(name, summary)` for every reported metric, in report order.
    pub fn metrics(&self) -> [(&'static str, MetricSummary); 4] {
        [
            ("readmission_accuracy", self.accuracy()),
            ("ir_error", self.ir_error()),
            ("ir_case", self.ir_case()),
            ("ir_control", self.ir_control()),
        ]
    }

    pub fn total_skipped(&self) -> usize {
        self.outcomes.iter().map(|o| o.n_skipped).sum()
    }

    pub fn total_censored_deaths(&self) -> u64 {
        self.outcomes.iter().map(|o| o.censored_deaths).sum()
    }
}

/// Seeds derived from `(seed, iteration, purpose)` so that each iteration's
/// draws are independent of scheduling and of which other methods run.
fn stream_rng(seed: u64, iteration: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 8) | purpose);
    rng
}

const COHORT_STREAM: u64 = 0;

fn method_stream(method: Method) -> u64 {
    1 + Method::ALL.iter().position(|m| *m == method).expect("listed") as u64
}

/// One iteration's case and control groups.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialCohort {
    pub hospital_year: HospitalYear,
    pub cases: Vec<Admission>,
    pub controls: Vec<Admission>,
}

/// Draws iteration `iteration`'s cohort: a hospital-year with a big enough
/// pool, split into cases and controls. Undersized pools are resampled up to
/// `cfg.max_retries` times; the error names the last rejected pool.
pub fn sample_trial_cohort(
    admissions: &[Admission],
    cfg: &ExperimentConfig,
    iteration: usize,
) -> Result<TrialCohort, String> {
    let mut rng = stream_rng(cfg.seed, iteration, COHORT_STREAM);
    let mut last = String::new();
    for _ in 0..cfg.max_retries.max(1) {
        let hy = sample_hospital_year(admissions, &mut rng).ok_or("empty dataset")?;
        let pool = build_hy_pool(admissions, &hy).map_err(|e| e.to_string())?;
        match split_case_control(&pool, &cfg.cohort, &mut rng) {
            Ok((cases, controls)) => {
                return Ok(TrialCohort {
                    hospital_year: hy,
                    cases,
                    controls,
                })
            }
            Err(e @ CohortError::PoolTooSmall { .. }) => {
                log::debug!("iteration {iteration}: {} {}: {e}", hy.hospital, hy.year);
                last = format!("{} {}: {e}", hy.hospital, hy.year);
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    Err(format!(
        "no usable hospital-year after {} draws (last: {last})",
        cfg.max_retries.max(1)
    ))
}

/// Matches a trial cohort with `method`, using the iteration's own random
/// stream for that method.
pub fn match_trial(
    cohort: &TrialCohort,
    model: Option<&EmbeddingModel>,
    method: Method,
    cfg: &ExperimentConfig,
    iteration: usize,
) -> CohortMatch {
    let mut rng = stream_rng(cfg.seed, iteration, method_stream(method));
    match_cohort(&cohort.cases, &cohort.controls, model, &cfg.matcher(method), &mut rng)
}

fn score_trial(
    iteration: usize,
    cohort: &TrialCohort,
    model: Option<&EmbeddingModel>,
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<TrialOutcome, String> {
    let matched = match_trial(cohort, model, method, cfg, iteration);
    let (cases, controls) = (&cohort.cases, &cohort.controls);
    if let Some(bad) = matched.skipped.iter().find(|s| !s.no_match) {
        return Err(bad.reason.clone());
    }
    let find = |pool: &[Admission], id: &str| -> Admission {
        pool.iter()
            .find(|a| a.admission_id == id)
            .cloned()
            .expect("matcher returns ids from its inputs")
    };
    let pairs: Vec<(Admission, Admission)> = matched
        .results
        .iter()
        .map(|r| (find(cases, &r.case_id), find(controls, &r.control_id)))
        .collect();
    if pairs.is_empty() {
        return Err(format!("{method}: no case could be matched"));
    }
    let status =
        |side: fn(&(Admission, Admission)) -> &Admission| pairs.iter().map(|p| side(p).readmission).collect::<Vec<_>>();
    let accuracy = readmission_accuracy(&status(|p| &p.0), &status(|p| &p.1)).map_err(|e| e.to_string())?;
    let records = |side: fn(&(Admission, Admission)) -> &Admission| {
        pairs
            .iter()
            .map(|p| (side(p).discharge_date, side(p).death_date))
            .collect::<Vec<_>>()
    };
    let ir = |side| incidence_summary(&records(side), cfg.censor_date).map_err(|e: EvaluationError| e.to_string());
    let case_ir = ir(|p| &p.0)?;
    let control_ir = ir(|p| &p.1)?;
    Ok(TrialOutcome {
        iteration,
        hospital_year: cohort.hospital_year.clone(),
        readmission_accuracy: accuracy,
        ir_case: case_ir.rate(),
        ir_control: control_ir.rate(),
        ir_error: ir_error(case_ir.rate(), control_ir.rate()),
        n_matched: pairs.len(),
        n_skipped: matched.skipped.len(),
        censored_deaths: case_ir.censored_deaths + control_ir.censored_deaths,
    })
}

/// Runs `cfg.n_iterations` paired trials: every method matches the same
/// case and control groups on each iteration. Metrics use matched pairs only.
///
/// An iteration aborts (for all methods) when no hospital-year yields a
/// usable pool within the retry budget, and for a single method when none
/// of its cases matched or the incidence rate is undefined.
pub fn run_paired_experiment(
    admissions: &[Admission],
    methods: &[Method],
    model: Option<&EmbeddingModel>,
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentReport>, EvaluationError> {
    if let Some(m) = methods.iter().find(|m| m.needs_embedding() && model.is_none()) {
        return Err(EvaluationError::MissingModel(*m));
    }
    if admissions.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let run_one = |i: usize| -> Vec<Result<TrialOutcome, String>> {
        match sample_trial_cohort(admissions, cfg, i) {
            Ok(cohort) => methods
                .iter()
                .map(|&m| score_trial(i, &cohort, model, m, cfg))
                .collect(),
            Err(reason) => vec![Err(reason); methods.len()],
        }
    };
    let per_iteration: Vec<Vec<Result<TrialOutcome, String>>> = if cfg.workers <= 1 {
        (0..cfg.n_iterations).map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| EvaluationError::Internal(e.to_string()))?;
        // Indexed parallel collect keeps iteration order.
        pool.install(|| (0..cfg.n_iterations).into_par_iter().map(run_one).collect())
    };

    let mut reports: Vec<ExperimentReport> = methods
        .iter()
        .map(|&method| ExperimentReport {
            method,
            outcomes: Vec::new(),
            aborted: Vec::new(),
            config_echo: cfg.echo(),
        })
        .collect();
    for (iteration, results) in per_iteration.into_iter().enumerate() {
        for (report, result) in reports.iter_mut().zip(results) {
            match result {
                Ok(outcome) => report.outcomes.push(outcome),
                Err(reason) => {
                    log::warn!("{} iteration {iteration} aborted: {reason}", report.method);
                    report.aborted.push(AbortedIteration { iteration, reason });
                }
            }
        }
    }
    for r in &reports {
        log::info!(
            "{}: {} iterations, accuracy {:.4}, IR error {:.3e}",
            r.method,
            r.outcomes.len(),
            r.accuracy().mean,
            r.ir_error().mean
        );
    }
    Ok(reports)
}

/// Single-method experiment; identical to that method's report from
/// [`run_paired_experiment`] with the same configuration.
pub fn run_experiment(
    admissions: &[Admission],
    method: Method,
    model: Option<&EmbeddingModel>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, EvaluationError> {
    let mut reports = run_paired_experiment(admissions, &[method], model, cfg)?;
    Ok(reports.pop().expect("one method requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::CodeId;
    use crate::cohort::{generate_synthetic_cohort, SynthConfig};
    use crate::data::{Gender, ReadmissionStatus};

    fn small_data() -> Vec<Admission> {
        generate_synthetic_cohort(&SynthConfig {
            n_patients: 3000,
            n_hospitals: 2,
            year_start: 2006,
            year_end: 2007,
            seed: 5,
            ..Default::default()
        })
        .unwrap()
    }

    fn cfg(n: usize) -> ExperimentConfig {
        ExperimentConfig {
            n_iterations: n,
            cohort: CohortSpec { n_cases: 50 },
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn single_iteration_report_is_degenerate() {
        let data = small_data();
        let r = run_experiment(&data, Method::Pcm, None, &cfg(1)).unwrap();
        assert_eq!(r.outcomes.len() + r.aborted.len(), 1);
        let acc = r.accuracy();
        assert!(acc.spread_undefined);
        assert_eq!(acc.mean, r.outcomes[0].readmission_accuracy);
        assert_eq!(acc.stddev, 0.0);
    }

    #[test]
    fn paired_runs_share_cohorts_and_match_single_runs() {
        let data = small_data();
        let c = cfg(4);
        let paired = run_paired_experiment(&data, &[Method::Pcm, Method::Hdm], None, &c).unwrap();
        let hdm = run_experiment(&data, Method::Hdm, None, &c).unwrap();
        assert_eq!(paired[1], hdm);
        for (a, b) in paired[0].outcomes.iter().zip(&paired[1].outcomes) {
            assert_eq!(a.hospital_year, b.hospital_year);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let data = small_data();
        let one = run_paired_experiment(&data, &[Method::Pcm, Method::Hdm], None, &cfg(6)).unwrap();
        let four = run_paired_experiment(
            &data,
            &[Method::Pcm, Method::Hdm],
            None,
            &ExperimentConfig { workers: 4, ..cfg(6) },
        )
        .unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn embedding_methods_need_a_model() {
        let err = run_experiment(&small_data(), Method::Csm, None, &cfg(1)).unwrap_err();
        assert!(matches!(err, EvaluationError::MissingModel(Method::Csm)));
    }

    #[test]
    fn undersized_pools_abort_with_reason() {
        let data = small_data();
        let c = ExperimentConfig {
            cohort: CohortSpec { n_cases: 100_000 },
            max_retries: 3,
            ..cfg(2)
        };
        let r = run_experiment(&data, Method::Pcm, None, &c).unwrap();
        assert!(r.outcomes.is_empty());
        assert_eq!(r.aborted.len(), 2);
        assert!(r.aborted[0].reason.contains("3 draws"));
        assert!(r.accuracy().mean.is_nan());
    }

    // Every case has a control with an identical code sequence and identical
    // outcomes, so WVM picks the duplicate and both metrics are exact.
    #[test]
    fn exact_duplicates_give_perfect_agreement() {
        let mut data = Vec::new();
        for i in 0..60 {
            let codes = vec![
                CodeId::new(&format!("K{}", i % 7)).unwrap(),
                CodeId::new(&format!("M{}", i % 5)).unwrap(),
                CodeId::new(&format!("Z{i}")).unwrap(),
            ];
            let discharge = NaiveDate::from_ymd_opt(2005, 1 + (i % 12) as u32, 10).unwrap();
            let death = (i % 3 == 0).then(|| discharge + chrono::Duration::days(100 + i as i64));
            for copy in 0..2 {
                data.push(Admission {
                    admission_id: format!("A{i:03}{copy}"),
                    patient_id: format!("P{i}-{copy}"),
                    hospital: "H".into(),
                    admission_year: 2005,
                    discharge_date: discharge,
                    gender: if i % 2 == 0 { Gender::Male } else { Gender::Female },
                    age_years: 60,
                    codes: codes.clone(),
                    readmission: ReadmissionStatus::ALL[i % 4],
                    death_date: death,
                });
            }
        }
        let vocab: std::collections::BTreeSet<&CodeId> = data.iter().flat_map(|a| &a.codes).collect();
        let model = EmbeddingModel::from_vectors(
            vocab.len(),
            vocab.iter().enumerate().map(|(k, c)| {
                let mut v = vec![0.0; vocab.len()];
                v[k] = 1.0;
                (c.as_ref().to_string(), v)
            }),
        )
        .unwrap();
        // A larger random split could put both twins among the cases; with a
        // single case per iteration its twin is always a control.
        let c = ExperimentConfig {
            cohort: CohortSpec { n_cases: 1 },
            ..cfg(20)
        };
        let r = run_experiment(&data, Method::Wvm, Some(&model), &c).unwrap();
        assert_eq!(r.outcomes.len(), 20);
        for o in &r.outcomes {
            assert_eq!(o.readmission_accuracy, 1.0);
            assert_eq!(o.ir_error, 0.0);
        }
    }
}
