//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use pushasep::verify::{
    check_gt_bottom_row, check_kernel_consistency, check_one_particle, check_oracles, check_reversibility,
    check_row_marginal, check_theorem1, check_theorem2, exact_suite, CheckReport, StatParams,
};
use pushasep::{RateVector, Result};

const SEED: u64 = 20240601;

struct Criterion {
    id: usize,
    title: &'static str,
    budget_secs: f64,
    run: fn() -> Result<Vec<CheckReport>>,
}

fn rv(s: &str) -> RateVector {
    RateVector::parse(s).expect("valid rates")
}

fn c1() -> Result<Vec<CheckReport>> {
    exact_suite(100, SEED)
}

fn c2() -> Result<Vec<CheckReport>> {
    let mut out = check_one_particle(0.5)?;
    out.extend(check_one_particle(0.3)?);
    Ok(out)
}

fn c3() -> Result<Vec<CheckReport>> {
    let mut out = check_kernel_consistency(&rv("0.5"))?;
    out.extend(check_kernel_consistency(&rv("0.3,0.5"))?);
    Ok(out)
}

fn c4() -> Result<Vec<CheckReport>> {
    check_theorem1(&rv("0.3,0.5"), &StatParams::default(), SEED)
}

fn c5() -> Result<Vec<CheckReport>> {
    let p = StatParams::default();
    let mut out = check_theorem2(&rv("0.3,0.5"), &p, SEED)?;
    out.extend(check_theorem2(&rv("0.3,0.5,0.7"), &p, SEED)?);
    Ok(out)
}

fn c6() -> Result<Vec<CheckReport>> {
    let p = StatParams::default();
    let v = rv("0.3,0.5");
    Ok(vec![check_reversibility(&v, 0.5, &p, SEED)?, check_row_marginal(&v, 0.5, &p, SEED)?])
}

fn c7() -> Result<Vec<CheckReport>> {
    Ok(vec![check_gt_bottom_row(&rv("0.3,0.5"), &[0, 2], 1.0, &StatParams::default(), SEED)?])
}

fn c8() -> Result<Vec<CheckReport>> {
    check_oracles(100, SEED)
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, title: "exact identities, literal rational zeros", budget_secs: 60.0, run: c1 },
        Criterion { id: 2, title: "one-particle closed forms", budget_secs: 5.0, run: c2 },
        Criterion { id: 3, title: "kernel consistency, n <= 2", budget_secs: 120.0, run: c3 },
        Criterion { id: 4, title: "top particle law, n = 2", budget_secs: 600.0, run: c4 },
        Criterion { id: 5, title: "joint law of the maxima, n = 2, 3", budget_secs: 900.0, run: c5 },
        Criterion { id: 6, title: "dynamical reversibility and row marginal", budget_secs: 900.0, run: c6 },
        Criterion { id: 7, title: "push-block bottom row law", budget_secs: 600.0, run: c7 },
        Criterion { id: 8, title: "oracle equivalences", budget_secs: 60.0, run: c8 },
    ];
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    let mut all = true;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match &result {
            Ok(reports) => {
                let failed: Vec<&CheckReport> = reports.iter().filter(|r| !r.pass).collect();
                let within = secs < c.budget_secs;
                let detail = if let Some(f) = failed.first() {
                    format!("{} of {} checks failed, first: {f}", failed.len(), reports.len())
                } else if !within {
                    format!("{} checks passed but over the {:.0}s budget", reports.len(), c.budget_secs)
                } else {
                    format!("{} checks", reports.len())
                };
                (failed.is_empty() && within, detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!(
            "criterion {}: {} {} ({detail}; {secs:.1}s of {:.0}s)",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.title,
            c.budget_secs
        );
        if verbose {
            if let Ok(reports) = &result {
                for r in reports {
                    println!("    {r}");
                }
            }
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
