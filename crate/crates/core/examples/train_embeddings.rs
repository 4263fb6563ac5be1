//! Train skip-gram embeddings on a synthetic cohort, save and reload them,
//! and show that each code's nearest neighbours are its synonyms.
//!
//!     cargo run --release --example train_embeddings -- [dim] [epochs]

use anyhow::Result;
use codematch::cohort::{generate_synthetic_cohort_with_log, SynthConfig};
use codematch::embedding::{load_model, save_model, train_skipgram_with_stats, TrainingConfig};

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = TrainingConfig {
        dim: args.first().map_or(Ok(40), |s| s.parse())?,
        epochs: args.get(1).map_or(Ok(5), |s| s.parse())?,
        ..Default::default()
    };
    let cohort = generate_synthetic_cohort_with_log(&SynthConfig {
        n_patients: 5000,
        ..Default::default()
    })?;
    let (model, stats) = train_skipgram_with_stats(&cohort.admissions, &cfg)?;
    println!(
        "{} codes, {} training pairs per epoch",
        stats.vocab_size, stats.pair_count
    );
    for (epoch, loss) in stats.epoch_losses.iter().enumerate() {
        println!("  epoch {}: mean loss {loss:.4}", epoch + 1);
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("codes.vec");
    save_model(&model, &path)?;
    let model = load_model(&path)?;
    println!("saved and reloaded {}", path.display());

    let mut hits = 0;
    for code in model.vocab() {
        let (nearest, d) = &model.nearest(code, 1)?[0];
        if cohort.cluster_of(nearest) == cohort.cluster_of(code) {
            hits += 1;
        }
        if model.index_of(code) < Some(5) {
            println!("  {code}: nearest {nearest} (distance {d:.3})");
        }
    }
    println!("nearest neighbour is a synonym for {hits} of {} codes", model.len());
    Ok(())
}
