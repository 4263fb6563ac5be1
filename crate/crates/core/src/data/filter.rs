use std::collections::HashMap;

use chrono::NaiveDate;

use super::Admission;
use crate::codes::CodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFilterConfig {
    /// Codes seen fewer than this many times across the dataset are removed.
    pub min_code_count: u64,
    /// End of the study window; admissions discharged after it are dropped.
    pub censor_date: NaiveDate,
}

impl Default for DatasetFilterConfig {
    fn default() -> Self {
        DatasetFilterConfig {
            min_code_count: 30,
            censor_date: NaiveDate::from_ymd_opt(2008, 12, 31).expect("valid date"),
        }
    }
}

/// Deletes every code occurring fewer than `cfg.min_code_count` times, then
/// drops admissions left with no codes. Surviving order is unchanged.
pub fn filter_rare_codes(admissions: &[Admission], cfg: &DatasetFilterConfig) -> Vec<Admission> {
    let mut counts: HashMap<&CodeId, u64> = HashMap::new();
    for code in admissions.iter().flat_map(|a| a.codes.iter()) {
        *counts.entry(code).or_default() += 1;
    }
    admissions
        .iter()
        .filter_map(|a| {
            let kept: Vec<CodeId> = a
                .codes
                .iter()
                .filter(|c| counts[c] >= cfg.min_code_count)
                .cloned()
                .collect();
            (!kept.is_empty()).then(|| Admission {
                codes: kept,
                ..a.clone()
            })
        })
        .collect()
}

/// Keeps admissions discharged on or before the censor date.
pub fn filter_by_censor_date(admissions: &[Admission], cfg: &DatasetFilterConfig) -> Vec<Admission> {
    admissions
        .iter()
        .filter(|a| a.discharge_date <= cfg.censor_date)
        .cloned()
        .collect()
}

/// Censor-date cut first, then rare-code removal, so code counts reflect
/// the study window.
pub fn apply_filters(admissions: &[Admission], cfg: &DatasetFilterConfig) -> Vec<Admission> {
    filter_rare_codes(&filter_by_censor_date(admissions, cfg), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::admission;

    fn cfg(min: u64) -> DatasetFilterConfig {
        DatasetFilterConfig {
            min_code_count: min,
            ..Default::default()
        }
    }

    fn repeated(code: &str, n: usize) -> Vec<Admission> {
        (0..n).map(|i| admission(&format!("{code}{i}"), &[code])).collect()
    }

    #[test]
    fn threshold_is_inclusive() {
        let mut data = repeated("C50", 30);
        data.extend(repeated("I10", 29));
        let out = filter_rare_codes(&data, &cfg(30));
        assert_eq!(out.len(), 30);
        assert!(out.iter().all(|a| a.codes[0].as_str() == "C50"));
    }

    // Brute-force recount over a 10-admission fixture.
    #[test]
    fn matches_recount_oracle() {
        let rows: [&[&str]; 10] = [
            &["A", "B"],
            &["A", "C"],
            &["D"],
            &["B", "A", "E"],
            &["C"],
            &["E", "D"],
            &["A"],
            &["F"],
            &["B", "F", "A"],
            &["G"],
        ];
        let data: Vec<Admission> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| admission(&i.to_string(), r))
            .collect();
        let min = 2;
        let expected: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .filter(|c| {
                        let mut n = 0;
                        for row in &rows {
                            for other in row.iter() {
                                if other == *c {
                                    n += 1;
                                }
                            }
                        }
                        n >= min
                    })
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
            })
            .filter(|r| !r.is_empty())
            .collect();
        let got: Vec<Vec<String>> = filter_rare_codes(&data, &cfg(min as u64))
            .iter()
            .map(|a| a.codes.iter().map(|c| c.to_string()).collect())
            .collect();
        assert_eq!(got, expected);
        // "G" only appears alone and is rare: its admission must be gone.
        assert_eq!(got.len(), 9);
    }

    #[test]
    fn censor_boundary_is_inclusive() {
        let mut on = admission("on", &["A"]);
        on.discharge_date = NaiveDate::from_ymd_opt(2008, 12, 31).unwrap();
        let mut after = admission("after", &["A"]);
        after.discharge_date = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap();
        let out = filter_by_censor_date(&[on.clone(), after], &DatasetFilterConfig::default());
        assert_eq!(out, vec![on]);
    }

    #[test]
    fn censor_filter_preserves_order() {
        let dates = [(2007, 3, 1), (2009, 5, 2), (2008, 12, 31), (2010, 1, 1), (2001, 1, 1)];
        let data: Vec<Admission> = dates
            .iter()
            .enumerate()
            .map(|(i, &(y, m, d))| {
                let mut a = admission(&i.to_string(), &["A"]);
                a.discharge_date = NaiveDate::from_ymd_opt(y, m, d).unwrap();
                a
            })
            .collect();
        let censor = DatasetFilterConfig::default().censor_date;
        let expected: Vec<&Admission> = data.iter().filter(|a| a.discharge_date <= censor).collect();
        let got = filter_by_censor_date(&data, &DatasetFilterConfig::default());
        assert_eq!(got.iter().collect::<Vec<_>>(), expected);
        assert_eq!(
            got.iter().map(|a| a.admission_id.as_str()).collect::<Vec<_>>(),
            ["0", "2", "4"]
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dataset() -> impl Strategy<Value = Vec<Admission>> {
            prop::collection::vec(prop::collection::vec(0u8..6, 1..5), 0..25).prop_map(|rows| {
                rows.iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let names: Vec<String> = r.iter().map(|c| format!("X{c}")).collect();
                        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                        admission(&i.to_string(), &refs)
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn rare_code_filter_is_idempotent(data in dataset(), min in 1u64..6) {
                let once = filter_rare_codes(&data, &cfg(min));
                let twice = filter_rare_codes(&once, &cfg(min));
                prop_assert_eq!(once, twice);
            }

            #[test]
            fn filtered_admissions_are_valid(data in dataset(), min in 1u64..6) {
                for a in apply_filters(&data, &cfg(min)) {
                    prop_assert!(a.validate().is_ok());
                }
            }
        }
    }
}
