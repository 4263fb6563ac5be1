use chrono::NaiveDate;

use super::EvaluationError;
use crate::data::ReadmissionStatus;

/// Fraction of positions where the case and its matched control share a
/// readmission status. `controls[r]` must be the match of `cases[r]`.
pub fn readmission_accuracy(
    cases: &[ReadmissionStatus],
    controls: &[ReadmissionStatus],
) -> Result<f64, EvaluationError> {
    if cases.len() != controls.len() {
        return Err(EvaluationError::LengthMismatch {
            cases: cases.len(),
            controls: controls.len(),
        });
    }
    if cases.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let agree = cases.iter().zip(controls).filter(|(a, b)| a == b).count();
    Ok(agree as f64 / cases.len() as f64)
}

/// Death and person-time tallies behind an incidence rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceSummary {
    pub deaths: u64,
    pub person_days: i64,
    /// Deaths dated after the censor date, counted as alive at censoring.
    pub censored_deaths: u64,
}

impl IncidenceSummary {
    /// Deaths per person-day.
    pub fn rate(&self) -> f64 {
        self.deaths as f64 / self.person_days as f64
    }
}

/// Tallies deaths and person-days for `(discharge, death)` records. The dead
/// contribute days from discharge to death, everyone else days from
/// discharge to `censor`.
pub fn incidence_summary(
    records: &[(NaiveDate, Option<NaiveDate>)],
    censor: NaiveDate,
) -> Result<IncidenceSummary, EvaluationError> {
    let mut out = IncidenceSummary {
        deaths: 0,
        person_days: 0,
        censored_deaths: 0,
    };
    for (index, &(discharge, death)) in records.iter().enumerate() {
        if discharge > censor {
            return Err(EvaluationError::DischargeAfterCensor {
                index,
                discharge,
                censor,
            });
        }
        let end = match death {
            Some(d) if d < discharge => {
                return Err(EvaluationError::DeathBeforeDischarge { index });
            }
            Some(d) if d <= censor => {
                out.deaths += 1;
                d
            }
            Some(_) => {
                out.censored_deaths += 1;
                censor
            }
            None => censor,
        };
        out.person_days += (end - discharge).num_days();
    }
    if out.person_days == 0 {
        return Err(EvaluationError::ZeroPersonTime);
    }
    Ok(out)
}

/// Deaths per person-day; see [`incidence_summary`].
pub fn incidence_rate(records: &[(NaiveDate, Option<NaiveDate>)], censor: NaiveDate) -> Result<f64, EvaluationError> {
    incidence_summary(records, censor).map(|s| s.rate())
}

pub fn ir_error(ir_case: f64, ir_control: f64) -> f64 {
    (ir_case - ir_control).abs()
}

/// Mean, sample standard deviation and standard error of per-iteration values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub stddev: f64,
    pub stderr: f64,
    pub n: usize,
    /// Fewer than two values: the spread is undefined and reported as 0.
    pub spread_undefined: bool,
}

impl MetricSummary {
    /// `n = 0` gives NaN mean.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return MetricSummary {
                mean,
                stddev: 0.0,
                stderr: 0.0,
                n,
                spread_undefined: true,
            };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let stddev = var.sqrt();
        MetricSummary {
            mean,
            stddev,
            stderr: stddev / (n as f64).sqrt(),
            n,
            spread_undefined: false,
        }
    }
}

/// Two-sided exact sign test on paired values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    /// Pairs with `a > b`.
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub p_value: f64,
}

/// Ties are dropped; the p-value is `min(1, 2 P(X <= min(wins, losses)))`
/// with `X ~ Binomial(wins + losses, 1/2)`.
pub fn sign_test(a: &[f64], b: &[f64]) -> Result<SignTest, EvaluationError> {
    if a.len() != b.len() {
        return Err(EvaluationError::LengthMismatch {
            cases: a.len(),
            controls: b.len(),
        });
    }
    let wins = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let losses = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let ties = a.len() - wins - losses;
    let n = wins + losses;
    let k = wins.min(losses);
    // Binomial(n, 1/2) pmf in log space: ln C(n, i) - n ln 2.
    let mut ln_choose = 0.0;
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (ln_choose - n as f64 * std::f64::consts::LN_2).exp();
    }
    Ok(SignTest {
        wins,
        losses,
        ties,
        p_value: (2.0 * tail).min(1.0),
    })
}
