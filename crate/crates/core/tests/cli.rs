//! Exit codes, configuration precedence and input handling of the binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anyhow::Result;

fn codematch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codematch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn synth(dir: &Path) -> String {
    let out = path(dir, "adm.csv");
    let o = codematch(&["synth", "-o", &out, "--patients", "3000", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"], &["evaluate", "--help"]] {
        let o = codematch(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &[][..],
        &["frobnicate"],
        &["synth"],
        &["synth", "-o", "x.csv", "--patients", "many"],
        &["synth", "-o", "x.csv", "--male-fraction", "2"],
        &["train", "-i", "x.csv", "-o", "m.vec", "--dim", "0"],
    ] {
        assert_eq!(codematch(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn embedding_methods_need_a_model() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let input = synth(dir.path());
    let prefix = path(dir.path(), "r");
    let o = codematch(&["evaluate", "-i", &input, "-o", &prefix, "-m", "PCM,CSM", "-n", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CSM"));

    let o = codematch(&[
        "evaluate", "-i", &input, "-o", &prefix, "-m", "PCM,HDM", "-n", "3", "--cases", "40",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(format!("{prefix}.csv"))?;
    assert_eq!(
        summary.lines().next(),
        Some("method,metric,mean,stddev,stderr,n_iterations")
    );
    assert_eq!(summary.lines().count(), 1 + 2 * 4);
    Ok(())
}

#[test]
fn data_errors_exit_two() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let missing = path(dir.path(), "absent.csv");
    assert_eq!(
        codematch(&["train", "-i", &missing, "-o", &path(dir.path(), "m")])
            .status
            .code(),
        Some(2)
    );

    let bad_header = dir.path().join("bad.csv");
    std::fs::write(&bad_header, "id,codes\n1,A\n")?;
    let o = codematch(&[
        "train",
        "-i",
        bad_header.to_str().unwrap(),
        "-o",
        &path(dir.path(), "m"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    Ok(())
}

#[test]
fn malformed_rows_warn_unless_strict() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let input = synth(dir.path());
    let mut text = std::fs::read_to_string(&input)?;
    text.push_str("Z1,PZ,H01,2005,2005-13-40,M,70,S000X0,none,\n");
    std::fs::write(&input, text)?;
    let out = path(dir.path(), "pairs.csv");
    let base = ["match", "-i", &input, "-o", &out, "-m", "PCM", "--cases", "20"];

    let o = codematch(&base);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipped 1 malformed row"));

    let strict: Vec<&str> = base.iter().copied().chain(["--strict"]).collect();
    let o = codematch(&strict);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2005-13-40"));
    Ok(())
}

#[test]
fn flags_override_config_file_and_echo_replays() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let input = synth(dir.path());
    let cfg = dir.path().join("run.config");
    std::fs::write(
        &cfg,
        "# test\ncases = 30\nmethods = PCM, HDM\niterations = 4\nseed = 8\n",
    )?;
    let first = path(dir.path(), "first");
    let o = codematch(&[
        "evaluate",
        "--config",
        cfg.to_str().unwrap(),
        "-i",
        &input,
        "-o",
        &first,
        "-n",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let echo = std::fs::read_to_string(format!("{first}.config"))?;
    for line in ["cases = 30", "methods = PCM, HDM", "iterations = 5", "seed = 8"] {
        assert!(echo.lines().any(|l| l == line), "missing {line:?} in\n{echo}");
    }

    // Replaying the echo reproduces the report.
    let second = path(dir.path(), "second");
    let o = codematch(&[
        "evaluate",
        "--config",
        &format!("{first}.config"),
        "-i",
        &input,
        "-o",
        &second,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for ext in ["txt", "csv", "config"] {
        assert_eq!(
            std::fs::read(format!("{first}.{ext}"))?,
            std::fs::read(format!("{second}.{ext}"))?,
            "{ext}"
        );
    }
    Ok(())
}

#[test]
fn unknown_config_key_names_the_line() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("bad.config");
    std::fs::write(&cfg, "seed = 1\n\nwidnow = 3\n")?;
    let o = codematch(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "-o",
        &path(dir.path(), "a.csv"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));
    Ok(())
}

#[test]
fn match_writes_pairs_skips_and_echo() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let input = synth(dir.path());
    let model = path(dir.path(), "m.vec");
    let o = codematch(&["train", "-i", &input, "-o", &model, "--dim", "10", "--epochs", "1"]);
    assert!(o.status.success());
    assert!(PathBuf::from(format!("{model}.out")).exists());

    let out = path(dir.path(), "pairs.csv");
    let o = codematch(&["match", "-i", &input, "--model", &model, "-o", &out, "--cases", "25"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pairs = std::fs::read_to_string(&out)?;
    let skipped = std::fs::read_to_string(format!("{out}.skipped.csv"))?;
    assert_eq!(
        pairs.lines().next(),
        Some("case_id,control_id,method,scenario,matched_prefix_len,distance")
    );
    assert_eq!(skipped.lines().next(), Some("case_id,method,reason"));
    // Every case is either matched or skipped, per method.
    assert_eq!(pairs.lines().count() - 1 + skipped.lines().count() - 1, 4 * 25);
    assert!(PathBuf::from(format!("{out}.config")).exists());
    Ok(())
}
