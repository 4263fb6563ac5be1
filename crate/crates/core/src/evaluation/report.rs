use std::io::{self, Write};

use super::experiment::ExperimentReport;

pub const SUMMARY_HEADER: [&str; 6] = ["method", "metric", "mean", "stddev", "stderr", "n_iterations"];

pub const TRIAL_HEADER: [&str; 11] = [
    "iteration",
    "method",
    "hospital",
    "year",
    "readmission_accuracy",
    "ir_case",
    "ir_control",
    "ir_error",
    "n_matched",
    "n_skipped",
    "censored_deaths",
];

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

/// Human-readable report: the configuration echo as `#` comments, then one
/// stanza per method. `config_echo` defaults to the first report's own.
pub fn write_text_report<W: Write>(
    mut sink: W,
    reports: &[ExperimentReport],
    config_echo: Option<&[(String, String)]>,
) -> io::Result<()> {
    let echo = config_echo.or_else(|| reports.first().map(|r| r.config_echo.as_slice()));
    writeln!(sink, "# configuration")?;
    for (k, v) in echo.unwrap_or_default() {
        writeln!(sink, "# {k} = {v}")?;
    }
    for r in reports {
        writeln!(sink)?;
        writeln!(sink, "[{}]", r.method)?;
        writeln!(sink, "iterations_completed = {}", r.outcomes.len())?;
        writeln!(sink, "iterations_aborted = {}", r.aborted.len())?;
        writeln!(sink, "cases_skipped = {}", r.total_skipped())?;
        writeln!(sink, "deaths_after_censor = {}", r.total_censored_deaths())?;
        for (name, s) in r.metrics() {
            write!(
                sink,
                "{name}: mean = {:.6e}, stddev = {:.6e}, stderr = {:.6e}",
                s.mean, s.stddev, s.stderr
            )?;
            if s.spread_undefined {
                write!(sink, " (spread undefined: fewer than 2 iterations)")?;
            }
            writeln!(sink)?;
        }
        for a in &r.aborted {
            writeln!(sink, "aborted iteration {}: {}", a.iteration, a.reason)?;
        }
    }
    Ok(())
}

/// `method,metric,mean,stddev,stderr,n_iterations`, one row per method and metric.
pub fn write_summary_csv<W: Write>(sink: W, reports: &[ExperimentReport]) -> csv::Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(SUMMARY_HEADER)?;
    for r in reports {
        for (name, s) in r.metrics() {
            w.write_record([
                r.method.label(),
                name,
                &s.mean.to_string(),
                &s.stddev.to_string(),
                &s.stderr.to_string(),
                &s.n.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-iteration rows for every method, ordered by iteration then method,
/// so paired values sit next to each other.
pub fn write_trials_csv<W: Write>(sink: W, reports: &[ExperimentReport]) -> csv::Result<()> {
    let mut rows: Vec<_> = reports
        .iter()
        .enumerate()
        .flat_map(|(k, r)| r.outcomes.iter().map(move |o| (o.iteration, k, r.method, o)))
        .collect();
    rows.sort_by_key(|(i, k, _, _)| (*i, *k));
    let mut w = csv_writer(sink);
    w.write_record(TRIAL_HEADER)?;
    for (_, _, method, o) in rows {
        w.write_record([
            o.iteration.to_string(),
            method.label().to_string(),
            o.hospital_year.hospital.clone(),
            o.hospital_year.year.to_string(),
            o.readmission_accuracy.to_string(),
            o.ir_case.to_string(),
            o.ir_control.to_string(),
            o.ir_error.to_string(),
            o.n_matched.to_string(),
            o.n_skipped.to_string(),
            o.censored_deaths.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::HospitalYear;
    use crate::evaluation::TrialOutcome;
    use crate::matching::Method;

    fn report(method: Method, accs: &[f64]) -> ExperimentReport {
        ExperimentReport {
            method,
            outcomes: accs
                .iter()
                .enumerate()
                .map(|(i, &a)| TrialOutcome {
                    iteration: i,
                    hospital_year: HospitalYear {
                        hospital: "H".into(),
                        year: 2005,
                    },
                    readmission_accuracy: a,
                    ir_case: 0.001,
                    ir_control: 0.0005,
                    ir_error: 0.0005,
                    n_matched: 10,
                    n_skipped: 0,
                    censored_deaths: 0,
                })
                .collect(),
            aborted: vec![],
            config_echo: vec![("seed".into(), "1".into())],
        }
    }

    #[test]
    fn summary_csv_has_one_row_per_method_and_metric() {
        let mut out = Vec::new();
        write_summary_csv(
            &mut out,
            &[report(Method::Wvm, &[0.5, 1.0]), report(Method::Pcm, &[0.25])],
        )
        .unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "method,metric,mean,stddev,stderr,n_iterations");
        assert_eq!(lines.len(), 1 + 2 * 4);
        assert!(lines[1].starts_with("WVM,readmission_accuracy,0.75,"));
        assert_eq!(lines[5], "PCM,readmission_accuracy,0.25,0,0,1");
    }

    #[test]
    fn trials_are_interleaved_by_iteration() {
        let mut out = Vec::new();
        write_trials_csv(
            &mut out,
            &[report(Method::Wvm, &[0.5, 1.0]), report(Method::Hdm, &[0.4, 0.6])],
        )
        .unwrap();
        let text = String::from_utf8(out).unwrap();
        let methods: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(methods, ["WVM", "HDM", "WVM", "HDM"]);
    }

    #[test]
    fn text_report_flags_degenerate_spread() {
        let mut out = Vec::new();
        write_text_report(&mut out, &[report(Method::Pcm, &[0.25])], None).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("# configuration\n# seed = 1\n"));
        assert!(text.contains("[PCM]"));
        assert!(text.contains("spread undefined"));
    }
}
