//! Mortality incidence rates with censoring, and the summary statistics
//! used in reports.
//!
//!     cargo run --example incidence_rate

use anyhow::Result;
use chrono::NaiveDate;
use codematch::evaluation::{incidence_summary, ir_error, sign_test, MetricSummary};

fn date(s: &str) -> NaiveDate {
    s.parse().expect("valid date")
}

fn main() -> Result<()> {
    let censor = date("2008-12-31");
    let cases = [
        (date("2005-07-11"), Some(date("2008-05-12"))),
        (date("2005-10-27"), None),
    ];
    let controls = [
        (date("2005-03-02"), Some(date("2006-01-15"))),
        (date("2005-08-19"), Some(date("2009-04-01"))), // after the censor date
        (date("2005-11-30"), None),
    ];
    let c = incidence_summary(&cases, censor)?;
    let k = incidence_summary(&controls, censor)?;
    for (name, s) in [("cases", &c), ("controls", &k)] {
        println!(
            "{name:<9} {} deaths / {} person-days = {:.4e} ({} censored deaths)",
            s.deaths,
            s.person_days,
            s.rate(),
            s.censored_deaths
        );
    }
    println!("IR error {:.4e}", ir_error(c.rate(), k.rate()));

    let a = [0.80, 0.78, 0.83, 0.79, 0.81];
    let b = [0.70, 0.74, 0.83, 0.69, 0.72];
    let s = MetricSummary::from_values(&a);
    println!(
        "accuracy {:.4} ± {:.4} (stddev {:.4}, n = {})",
        s.mean, s.stderr, s.stddev, s.n
    );
    let t = sign_test(&a, &b)?;
    println!(
        "sign test: {} wins, {} losses, {} ties, p = {:.4}",
        t.wins, t.losses, t.ties, t.p_value
    );
    Ok(())
}
