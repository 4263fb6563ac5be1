//! Flat `key = value` run configuration shared by every subcommand.
//!
//! Precedence: built-in defaults, then the `--config` file, then flags given
//! on the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches};

use super::CliError;
use crate::cohort::{CohortSpec, SynthConfig};
use crate::data::DatasetFilterConfig;
use crate::embedding::TrainingConfig;
use crate::evaluation::ExperimentConfig;
use crate::matching::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Train,
    Match,
    Evaluate,
}

use Command::*;

const ALL: &[Command] = &[Synth, Train, Match, Evaluate];
const READS_DATA: &[Command] = &[Train, Match, Evaluate];
const MATCHES: &[Command] = &[Match, Evaluate];

pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
    pub short: Option<char>,
    /// Subcommands exposing the key as a flag. Global keys use `ALL` and
    /// are declared on the root command.
    pub commands: &'static [Command],
    pub global: bool,
}

const fn key(name: &'static str, default: &'static str, help: &'static str, commands: &'static [Command]) -> Key {
    Key {
        name,
        default,
        help,
        short: None,
        commands,
        global: false,
    }
}

pub const KEYS: &[Key] = &[
    Key {
        global: true,
        ..key("seed", "0", "Seed for every random draw", ALL)
    },
    Key {
        global: true,
        ..key(
            "workers",
            "1",
            "Worker threads; training is bit-reproducible only with 1",
            ALL,
        )
    },
    Key {
        global: true,
        ..key("strict", "false", "Treat malformed input rows as fatal", ALL)
    },
    // Data filters.
    key(
        "min_code_count",
        "30",
        "Drop codes occurring fewer times than this",
        READS_DATA,
    ),
    key("censor_date", "2008-12-31", "Study end date (YYYY-MM-DD)", ALL),
    // Synthetic data.
    key("patients", "20000", "Synthetic patients", &[Synth]),
    key("hospitals", "2", "Synthetic hospitals", &[Synth]),
    key("year_start", "2004", "First admission year", &[Synth]),
    key("year_end", "2008", "Last admission year", &[Synth]),
    key("max_admissions", "3", "Maximum admissions per patient", &[Synth]),
    key("vocab_size", "45", "Distinct codes", &[Synth]),
    key("synonym_clusters", "15", "Groups of interchangeable codes", &[Synth]),
    key("min_codes", "2", "Minimum codes per admission", &[Synth]),
    key("max_codes", "6", "Maximum codes per admission", &[Synth]),
    key(
        "readmission_marginals",
        "0.0001,0.0407,0.2303,0.7289",
        "Status probabilities: missing, other facility, same facility, none",
        &[Synth],
    ),
    key("male_fraction", "0.582", "Share of male patients", &[Synth]),
    key("median_age", "71", "Median patient age", &[Synth]),
    key(
        "outcome_coupling",
        "0.8",
        "Dependence of outcomes on the leading codes, 0 to 1",
        &[Synth],
    ),
    key(
        "mean_survival_days",
        "1500",
        "Mean days from last discharge to death at a neutral profile",
        &[Synth],
    ),
    key(
        "hazard_spread",
        "8",
        "Log-scale spread of death hazard across profiles",
        &[Synth],
    ),
    // Embedding training.
    key("dim", "100", "Embedding dimension", &[Train]),
    key("window", "5", "Context window (codes on each side)", &[Train]),
    key("negatives", "5", "Negative samples per pair", &[Train]),
    key("epochs", "5", "Passes over the corpus", &[Train]),
    key("learning_rate", "0.025", "Initial learning rate", &[Train]),
    key("min_learning_rate", "0.0001", "Final learning rate", &[Train]),
    key(
        "unigram_exponent",
        "0.75",
        "Exponent of the negative-sampling distribution",
        &[Train],
    ),
    // Cohorts and matching.
    key("cases", "200", "Cases per cohort", MATCHES),
    key("age_bin_width", "5", "Width of the age groups, in years", MATCHES),
    key(
        "with_replacement",
        "false",
        "Let one control match several cases",
        MATCHES,
    ),
    key(
        "max_retries",
        "20",
        "Hospital-year draws per iteration before giving up",
        MATCHES,
    ),
    Key {
        short: Some('m'),
        ..key(
            "methods",
            "WVM,PCM,HDM,CSM",
            "Comma-separated matchers: WVM, PCM, HDM, CSM",
            MATCHES,
        )
    },
    Key {
        short: Some('n'),
        ..key("iterations", "150", "Repeated trials", &[Evaluate])
    },
];

pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn find_key(name: &str) -> Option<&'static Key> {
    let name = name.trim().replace('-', "_");
    KEYS.iter().find(|k| k.name == name)
}

fn is_flag(k: &Key) -> bool {
    k.default == "false" || k.default == "true"
}

/// Clap arguments for the keys of `command` (or the global ones).
pub fn args_for(command: Option<Command>) -> Vec<Arg> {
    KEYS.iter()
        .filter(|k| match command {
            None => k.global,
            Some(c) => !k.global && k.commands.contains(&c),
        })
        .map(|k| {
            let mut arg = Arg::new(k.name).long(flag_name(k.name)).help(k.help).global(k.global);
            if let Some(s) = k.short {
                arg = arg.short(s);
            }
            if is_flag(k) {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.value_name("VALUE").default_value(k.default)
            }
        })
        .collect()
}

/// Effective settings for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: KEYS.iter().map(|k| (k.name, k.default.to_string())).collect(),
        }
    }
}

impl RunConfig {
    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("unknown key {key}"))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let k = find_key(key).ok_or_else(|| CliError::usage(format!("unknown configuration key {key:?}")))?;
        self.values.insert(k.name, value.trim().to_string());
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected key = value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| CliError::usage(format!("{origin}:{}: {}", n + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Defaults, then the `--config` file, then explicit flags.
    pub fn from_matches(matches: &ArgMatches) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = matches.get_one::<String>("config") {
            cfg.apply_file(Path::new(path))?;
        }
        for k in KEYS {
            let Ok(Some(source)) = matches.try_get_raw(k.name).map(|_| matches.value_source(k.name)) else {
                continue;
            };
            if source != ValueSource::CommandLine {
                continue;
            }
            if is_flag(k) {
                cfg.set(k.name, &matches.get_flag(k.name).to_string())?;
            } else if let Some(v) = matches.get_one::<String>(k.name) {
                cfg.set(k.name, v)?;
            }
        }
        Ok(cfg)
    }

    /// Every key in table order, as a loadable config file.
    pub fn echo(&self, title: &str) -> String {
        let mut out = format!("# {title}\n");
        for k in KEYS {
            let _ = writeln!(out, "{} = {}", k.name, self.get(k.name));
        }
        out
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .map(|k| (k.name.to_string(), self.get(k.name).to_string()))
            .collect()
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key);
        raw.parse()
            .map_err(|e| CliError::usage(format!("invalid value {raw:?} for --{}: {e}", flag_name(key))))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.parse("seed")
    }

    pub fn workers(&self) -> Result<usize, CliError> {
        match self.parse("workers")? {
            0 => Err(CliError::usage("--workers must be at least 1")),
            n => Ok(n),
        }
    }

    pub fn strict(&self) -> Result<bool, CliError> {
        self.parse("strict")
    }

    pub fn censor_date(&self) -> Result<NaiveDate, CliError> {
        self.parse("censor_date")
    }

    pub fn methods(&self) -> Result<Vec<Method>, CliError> {
        Method::parse_list(self.get("methods")).map_err(CliError::usage)
    }

    pub fn filter(&self) -> Result<DatasetFilterConfig, CliError> {
        let min_code_count: u64 = self.parse("min_code_count")?;
        if min_code_count == 0 {
            return Err(CliError::usage("--min-code-count must be at least 1"));
        }
        Ok(DatasetFilterConfig {
            min_code_count,
            censor_date: self.censor_date()?,
        })
    }

    pub fn synth(&self) -> Result<SynthConfig, CliError> {
        let marginals: Vec<f64> = self
            .get("readmission_marginals")
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::usage(format!("--readmission-marginals: {e}")))?;
        let readmission_marginals: [f64; 4] = marginals
            .try_into()
            .map_err(|_| CliError::usage("--readmission-marginals needs four comma-separated values"))?;
        let cfg = SynthConfig {
            n_patients: self.parse("patients")?,
            n_hospitals: self.parse("hospitals")?,
            year_start: self.parse("year_start")?,
            year_end: self.parse("year_end")?,
            max_admissions_per_patient: self.parse("max_admissions")?,
            vocab_size: self.parse("vocab_size")?,
            n_synonym_clusters: self.parse("synonym_clusters")?,
            min_codes: self.parse("min_codes")?,
            max_codes: self.parse("max_codes")?,
            readmission_marginals,
            male_fraction: self.parse("male_fraction")?,
            median_age: self.parse("median_age")?,
            outcome_coupling: self.parse("outcome_coupling")?,
            mean_survival_days: self.parse("mean_survival_days")?,
            hazard_spread: self.parse("hazard_spread")?,
            censor_date: self.censor_date()?,
            seed: self.seed()?,
        };
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn training(&self) -> Result<TrainingConfig, CliError> {
        let cfg = TrainingConfig {
            dim: self.parse("dim")?,
            window: self.parse("window")?,
            negatives: self.parse("negatives")?,
            epochs: self.parse("epochs")?,
            initial_learning_rate: self.parse("learning_rate")?,
            min_learning_rate: self.parse("min_learning_rate")?,
            unigram_exponent: self.parse("unigram_exponent")?,
            seed: self.seed()?,
            workers: self.workers()?,
        };
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let n_cases: usize = self.parse("cases")?;
        if n_cases == 0 {
            return Err(CliError::usage("--cases must be at least 1"));
        }
        let age_bin_width_years: u32 = self.parse("age_bin_width")?;
        if age_bin_width_years == 0 {
            return Err(CliError::usage("--age-bin-width must be at least 1"));
        }
        Ok(ExperimentConfig {
            n_iterations: self.parse("iterations")?,
            cohort: CohortSpec { n_cases },
            age_bin_width_years,
            with_replacement: self.parse("with_replacement")?,
            censor_date: self.censor_date()?,
            max_retries: self.parse("max_retries")?,
            seed: self.seed()?,
            workers: self.workers()?,
        })
    }
}
