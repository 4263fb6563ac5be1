//! End-to-end comparison of the four matchers on a synthetic cohort:
//! generate, filter, train embeddings, run paired trials, sign-test WVM
//! against PCM.
//!
//!     cargo run --release --example paired_experiment -- [patients] [iterations] [coupling]

use anyhow::Result;
use codematch::cohort::{generate_synthetic_cohort, SynthConfig};
use codematch::data::{apply_filters, DatasetFilterConfig};
use codematch::embedding::{train_skipgram, TrainingConfig};
use codematch::evaluation::{run_paired_experiment, sign_test, ExperimentConfig};
use codematch::matching::Method;

fn main() -> Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let synth = SynthConfig {
        n_patients: arg(0, "54000").parse()?,
        outcome_coupling: arg(2, "0.8").parse()?,
        seed: 1,
        ..Default::default()
    };
    let raw = generate_synthetic_cohort(&synth)?;
    let admissions = apply_filters(&raw, &DatasetFilterConfig::default());
    println!("{} admissions ({} after filtering)", raw.len(), admissions.len());

    let t = std::time::Instant::now();
    let model = train_skipgram(
        &admissions,
        &TrainingConfig {
            dim: 50,
            seed: 2,
            ..Default::default()
        },
    )?;
    println!("trained {} vectors in {:.1?}", model.len(), t.elapsed());

    let cfg = ExperimentConfig {
        n_iterations: arg(1, "150").parse()?,
        seed: 11,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..Default::default()
    };
    let t = std::time::Instant::now();
    let reports = run_paired_experiment(&admissions, &Method::ALL, Some(&model), &cfg)?;
    println!("{} iterations in {:.1?}\n", cfg.n_iterations, t.elapsed());

    println!(
        "{:<6}{:>10}{:>10}{:>12}{:>12}{:>9}",
        "method", "accuracy", "stderr", "IR error", "stderr", "skipped"
    );
    for r in &reports {
        let (acc, err) = (r.accuracy(), r.ir_error());
        println!(
            "{:<6}{:>10.4}{:>10.4}{:>12.3e}{:>12.3e}{:>9}",
            r.method,
            acc.mean,
            acc.stderr,
            err.mean,
            err.stderr,
            r.total_skipped()
        );
    }
    // Pair by iteration: an aborted iteration drops out of both sides.
    let pcm: std::collections::BTreeMap<usize, f64> = reports[1]
        .outcomes
        .iter()
        .map(|o| (o.iteration, o.readmission_accuracy))
        .collect();
    let (wvm_acc, pcm_acc): (Vec<f64>, Vec<f64>) = reports[0]
        .outcomes
        .iter()
        .filter_map(|o| pcm.get(&o.iteration).map(|&p| (o.readmission_accuracy, p)))
        .unzip();
    let test = sign_test(&wvm_acc, &pcm_acc)?;
    println!(
        "\nWVM vs PCM accuracy: {} wins, {} losses, {} ties, p = {:.2e}",
        test.wins, test.losses, test.ties, test.p_value
    );
    Ok(())
}
