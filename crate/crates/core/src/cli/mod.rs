//! The `codematch` command: `synth`, `train`, `match` and `evaluate`.
//!
//! Every output file gets a sibling `<output>.config` holding the effective
//! configuration; passing it back through `--config` reproduces the run.

mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command as ClapCommand};
use thiserror::Error;

use crate::cohort::generate_synthetic_cohort;
use crate::data::{apply_filters, parse_admissions, write_admissions, Admission, DataError};
use crate::embedding::{load_model, save_model, train_skipgram_with_stats, EmbeddingError, EmbeddingModel};
use crate::evaluation::{
    match_trial, run_paired_experiment, sample_trial_cohort, write_summary_csv, write_text_report, write_trials_csv,
    EvaluationError,
};
use crate::matching::{write_match_results, MatchResult, Method};

pub use config::{flag_name, Command, Key, RunConfig, KEYS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::Usage,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::Data,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::Internal,
            message: message.into(),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::InvalidConfig(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::MissingModel(_) => CliError::usage(e.to_string()),
            EvaluationError::Internal(_) => CliError::internal(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

fn path_arg(name: &'static str, short: char, help: &'static str) -> Arg {
    Arg::new(name)
        .short(short)
        .long(name)
        .value_name("PATH")
        .required(true)
        .help(help)
}

fn model_arg() -> Arg {
    Arg::new("model")
        .long("model")
        .value_name("PATH")
        .help("Embedding model; required by WVM and CSM")
}

pub fn command() -> ClapCommand {
    let sub = |name: &'static str, about: &'static str, which: Command| {
        ClapCommand::new(name).about(about).args(config::args_for(Some(which)))
    };
    ClapCommand::new("codematch")
        .about("Case-control matching on diagnosis code sequences")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .global(true)
                .help("key = value file applied over the defaults; flags win"),
        )
        .args(config::args_for(None))
        .subcommand(
            sub("synth", "Generate a synthetic admissions file", Command::Synth).arg(path_arg(
                "output",
                'o',
                "Admissions CSV to write",
            )),
        )
        .subcommand(
            sub("train", "Learn code embeddings from an admissions file", Command::Train)
                .arg(path_arg("input", 'i', "Admissions CSV"))
                .arg(path_arg(
                    "output",
                    'o',
                    "Model file to write (output vectors go to <PATH>.out)",
                )),
        )
        .subcommand(
            sub("match", "Match one sampled cohort and write the pairs", Command::Match)
                .arg(path_arg("input", 'i', "Admissions CSV"))
                .arg(model_arg())
                .arg(path_arg("output", 'o', "Match CSV to write")),
        )
        .subcommand(
            sub(
                "evaluate",
                "Repeated paired trials comparing matchers",
                Command::Evaluate,
            )
            .arg(path_arg("input", 'i', "Admissions CSV"))
            .arg(model_arg())
            .arg(
                Arg::new("output")
                    .short('o')
                    .long("output")
                    .value_name("PREFIX")
                    .required(true)
                    .help("Writes PREFIX.txt, PREFIX.csv and PREFIX.config"),
            )
            .arg(
                Arg::new("per_trial")
                    .long("per-trial")
                    .action(ArgAction::SetTrue)
                    .help("Also write PREFIX.trials.csv"),
            ),
        )
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Help and version requests succeed after printing.
pub fn run_from<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    Ok(())
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Err(CliError::usage(e.render().to_string())),
                _ => Err(CliError::usage(e.render().to_string())),
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cfg = RunConfig::from_matches(sub)?;
    match name {
        "synth" => cmd_synth(&cfg, &output(sub)),
        "train" => cmd_train(&cfg, &input(sub), &output(sub)),
        "match" => cmd_match(&cfg, &input(sub), model_path(sub).as_deref(), &output(sub)),
        "evaluate" => cmd_evaluate(
            &cfg,
            &input(sub),
            model_path(sub).as_deref(),
            &output(sub),
            sub.get_flag("per_trial"),
        ),
        other => Err(CliError::internal(format!("unhandled subcommand {other}"))),
    }
}

/// Runs the command line and returns the process exit code, printing
/// errors to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run_from(args) {
        Ok(()) => ExitCode::Success as i32,
        Err(e) => {
            eprintln!("error: {}", e.message.trim_end());
            e.code as i32
        }
    }
}

fn output(m: &ArgMatches) -> PathBuf {
    PathBuf::from(m.get_one::<String>("output").expect("required"))
}

fn input(m: &ArgMatches) -> PathBuf {
    PathBuf::from(m.get_one::<String>("input").expect("required"))
}

fn model_path(m: &ArgMatches) -> Option<PathBuf> {
    m.get_one::<String>("model").map(PathBuf::from)
}

/// `<path>.<ext>` without replacing an existing extension.
fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn write_echo(cfg: &RunConfig, output: &Path, title: &str) -> Result<(), CliError> {
    let path = sibling(output, "config");
    std::fs::write(&path, cfg.echo(title)).map_err(|e| io_error(&path, e))
}

/// Reads and filters admissions. Malformed rows are reported and skipped,
/// or fatal under `--strict`.
fn load_admissions(cfg: &RunConfig, path: &Path) -> Result<Vec<Admission>, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let parsed = parse_admissions(std::io::BufReader::new(file)).map_err(|e| io_error(path, e))?;
    if !parsed.row_errors.is_empty() {
        if cfg.strict()? {
            return Err(io_error(path, DataError::MalformedRows(parsed.row_errors)));
        }
        for e in &parsed.row_errors {
            log::warn!("{}: {e}", path.display());
        }
        eprintln!(
            "warning: skipped {} malformed rows in {}",
            parsed.row_errors.len(),
            path.display()
        );
    }
    let n_read = parsed.admissions.len();
    let kept = apply_filters(&parsed.admissions, &cfg.filter()?);
    log::info!(
        "{}: {n_read} admissions read, {} after filtering",
        path.display(),
        kept.len()
    );
    if kept.is_empty() {
        return Err(CliError::data(format!(
            "{}: no admissions left after filtering",
            path.display()
        )));
    }
    Ok(kept)
}

fn load_model_for(methods: &[Method], path: Option<&Path>) -> Result<Option<EmbeddingModel>, CliError> {
    match path {
        Some(p) => Ok(Some(load_model(p)?)),
        None => match methods.iter().find(|m| m.needs_embedding()) {
            Some(m) => Err(CliError::usage(format!("{m} needs an embedding model; pass --model"))),
            None => Ok(None),
        },
    }
}

pub fn cmd_synth(cfg: &RunConfig, output: &Path) -> Result<(), CliError> {
    let synth = cfg.synth()?;
    let admissions = generate_synthetic_cohort(&synth).map_err(|e| CliError::usage(e.to_string()))?;
    let mut w = create(output)?;
    write_admissions(&mut w, &admissions)?;
    w.flush().map_err(|e| io_error(output, e))?;
    write_echo(cfg, output, "codematch synth")?;

    let patients: std::collections::BTreeSet<&str> = admissions.iter().map(|a| a.patient_id.as_str()).collect();
    println!(
        "wrote {} admissions for {} patients to {}",
        admissions.len(),
        patients.len(),
        output.display()
    );
    let mut counts = [0usize; 4];
    for a in &admissions {
        counts[a.readmission.index()] += 1;
    }
    for (status, n) in crate::data::ReadmissionStatus::ALL.iter().zip(counts) {
        println!(
            "  readmission {:<8}{:.4}",
            status.token(),
            n as f64 / admissions.len() as f64
        );
    }
    let deaths = patients.len() - {
        let alive: std::collections::BTreeSet<&str> = admissions
            .iter()
            .filter(|a| a.death_date.is_none())
            .map(|a| a.patient_id.as_str())
            .collect();
        alive.len()
    };
    println!("  deaths before censoring: {deaths} of {} patients", patients.len());
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, input: &Path, output: &Path) -> Result<(), CliError> {
    let training = cfg.training()?;
    let admissions = load_admissions(cfg, input)?;
    let (model, stats) = train_skipgram_with_stats(&admissions, &training)?;
    save_model(&model, output)?;
    write_echo(cfg, output, "codematch train")?;
    println!(
        "trained {} vectors of dimension {} on {} pairs; final loss {:.6}",
        stats.vocab_size,
        model.dim(),
        stats.pair_count,
        stats.final_loss().unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn cmd_match(cfg: &RunConfig, input: &Path, model: Option<&Path>, output: &Path) -> Result<(), CliError> {
    let methods = cfg.methods()?;
    let experiment = cfg.experiment()?;
    let admissions = load_admissions(cfg, input)?;
    let model = load_model_for(&methods, model)?;
    let cohort = sample_trial_cohort(&admissions, &experiment, 0).map_err(CliError::data)?;

    let mut results: Vec<MatchResult> = Vec::new();
    let mut skipped = Vec::new();
    for &method in &methods {
        let m = match_trial(&cohort, model.as_ref(), method, &experiment, 0);
        results.extend(m.results);
        skipped.extend(m.skipped.into_iter().map(|s| (method, s)));
    }
    let mut w = create(output)?;
    write_match_results(&mut w, &results).map_err(|e| io_error(output, e))?;
    w.flush().map_err(|e| io_error(output, e))?;

    let skipped_path = sibling(output, "skipped.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(&skipped_path)?);
    let write_skipped = |w: &mut csv::Writer<_>| -> csv::Result<()> {
        w.write_record(["case_id", "method", "reason"])?;
        for (method, s) in &skipped {
            w.write_record([s.case_id.as_str(), method.label(), s.reason.as_str()])?;
        }
        w.flush()?;
        Ok(())
    };
    write_skipped(&mut w).map_err(|e| io_error(&skipped_path, e))?;
    write_echo(cfg, output, "codematch match")?;

    println!(
        "hospital {} year {}: {} cases, {} controls; {} pairs and {} skipped cases written to {}",
        cohort.hospital_year.hospital,
        cohort.hospital_year.year,
        cohort.cases.len(),
        cohort.controls.len(),
        results.len(),
        skipped.len(),
        output.display()
    );
    Ok(())
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    input: &Path,
    model: Option<&Path>,
    prefix: &Path,
    per_trial: bool,
) -> Result<(), CliError> {
    let methods = cfg.methods()?;
    let experiment = cfg.experiment()?;
    let admissions = load_admissions(cfg, input)?;
    let model = load_model_for(&methods, model)?;
    let reports = run_paired_experiment(&admissions, &methods, model.as_ref(), &experiment)?;
    for r in &reports {
        if r.outcomes.len() + r.aborted.len() != experiment.n_iterations {
            return Err(CliError::internal(format!(
                "{}: iteration count does not add up",
                r.method
            )));
        }
    }

    let echo = cfg.pairs();
    let text_path = sibling(prefix, "txt");
    let mut w = create(&text_path)?;
    write_text_report(&mut w, &reports, Some(&echo)).map_err(|e| io_error(&text_path, e))?;
    w.flush().map_err(|e| io_error(&text_path, e))?;

    let csv_path = sibling(prefix, "csv");
    write_summary_csv(create(&csv_path)?, &reports).map_err(|e| io_error(&csv_path, e))?;
    if per_trial {
        let trials_path = sibling(prefix, "trials.csv");
        write_trials_csv(create(&trials_path)?, &reports).map_err(|e| io_error(&trials_path, e))?;
    }
    write_echo(cfg, prefix, "codematch evaluate")?;

    println!(
        "{:<6}{:>10}{:>10}{:>12}{:>12}{:>7}",
        "method", "accuracy", "stderr", "IR error", "stderr", "runs"
    );
    for r in &reports {
        let (acc, err) = (r.accuracy(), r.ir_error());
        println!(
            "{:<6}{:>10.4}{:>10.4}{:>12.3e}{:>12.3e}{:>7}",
            r.method.label(),
            acc.mean,
            acc.stderr,
            err.mean,
            err.stderr,
            acc.n
        );
        if acc.spread_undefined {
            println!("      (spread undefined: fewer than 2 completed iterations)");
        }
    }
    println!("report written to {}", text_path.display());
    Ok(())
}
