//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ags_harness::verify::{run_check, CheckResult, Level, Report, VerifyOptions};

struct Outcome {
    passed: bool,
    detail: String,
}

fn checks(names: &[&str], opts: &VerifyOptions) -> (bool, Vec<CheckResult>) {
    let results: Vec<CheckResult> = names
        .iter()
        .map(|n| run_check(n, opts).unwrap_or_else(|| panic!("unknown check {n}")))
        .collect();
    (results.iter().all(|r| r.passed), results)
}

fn describe(results: &[CheckResult]) -> String {
    results
        .iter()
        .map(|r| {
            format!(
                "{} {} (measured {:.4e}, limit {:.4e}): {}",
                r.name,
                if r.passed { "ok" } else { "FAILED" },
                r.measured,
                r.limit,
                r.detail
            )
        })
        .collect::<Vec<_>>()
        .join("\n      ")
}

fn within(names: &[&str], budget: Duration) -> Outcome {
    let opts = VerifyOptions::new(Level::Full);
    let start = Instant::now();
    let (passed, results) = checks(names, &opts);
    let elapsed = start.elapsed();
    Outcome {
        passed: passed && elapsed <= budget,
        detail: format!(
            "{:.1}s of {}s\n      {}",
            elapsed.as_secs_f64(),
            budget.as_secs(),
            describe(&results)
        ),
    }
}

fn oracle_agreement() -> Outcome {
    within(
        &["smoothing.oracle_quadrature", "smoothing.oracle_monte_carlo"],
        Duration::from_secs(60),
    )
}

fn estimator_rate() -> Outcome {
    let opts = VerifyOptions::new(Level::Full);
    let (passed, mut results) = checks(&["smoothing.estimator_rate", "smoothing.forward_agreement"], &opts);
    let halved = VerifyOptions {
        forward_coefficient: 1.0,
        ..opts
    };
    let guard = run_check("smoothing.forward_agreement", &halved).expect("known check");
    let guard_fails = !guard.passed;
    results.push(guard);
    Outcome {
        passed: passed && guard_fails,
        detail: format!(
            "coefficient 1 rejected: {guard_fails}\n      {}",
            describe(&results)
        ),
    }
}

fn lemma_soundness() -> Outcome {
    within(&["bounds.smoothing_gaps", "bounds.value_diff"], Duration::from_secs(120))
}

fn single(names: &[&str]) -> Outcome {
    let (passed, results) = checks(names, &VerifyOptions::new(Level::Full));
    Outcome {
        passed,
        detail: describe(&results),
    }
}

const REPRO_CONFIG: &str = r#"{
  "name": "repro",
  "function": {"name": "rosenbrock", "dim": 6, "rotation_seed": 3},
  "optimizer": {"method": "ags_adam", "T": 500, "eta0": 0.3},
  "smoothing": {"sigma0": 0.5, "adaptation": {"kind": "cma"}, "mc_samples": 16},
  "stochastic": {"K": 4, "noise_scale": 0.5},
  "seed": 17
}"#;

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ags"))
        .args(args)
        .output()
        .expect("ags binary runs")
}

fn run_once(config: &Path, out: &Path) -> Result<Vec<u8>, String> {
    let o = run_cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "17",
        "--out",
        out.to_str().unwrap(),
    ]);
    if !o.status.success() {
        return Err(format!("run exited with {}: {}", o.status, String::from_utf8_lossy(&o.stderr)));
    }
    fs::read(out.join("records.csv")).map_err(|e| e.to_string())
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("repro.json");
    fs::write(&config, REPRO_CONFIG).expect("write config");
    let first = run_once(&config, &dir.path().join("a"));
    let second = run_once(&config, &dir.path().join("b"));
    let (identical, sizes) = match (&first, &second) {
        (Ok(a), Ok(b)) => (a == b && !a.is_empty(), format!("{} and {} bytes", a.len(), b.len())),
        (Err(e), _) | (_, Err(e)) => (false, e.clone()),
    };

    let start = Instant::now();
    let o = run_cli(&["verify", "--level", "full"]);
    let elapsed = start.elapsed();
    let report: Result<Report, _> = serde_json::from_slice(&o.stdout);
    let (verified, verify_detail) = match report {
        Ok(r) => {
            let failed: Vec<&str> = r.failures().map(|c| c.name.as_str()).collect();
            (
                o.status.success() && r.passed(),
                format!("{} checks, failed: {:?}", r.checks.len(), failed),
            )
        }
        Err(e) => (false, format!("unreadable report: {e}")),
    };
    let in_time = elapsed <= Duration::from_secs(600);
    Outcome {
        passed: identical && verified && in_time,
        detail: format!(
            "records byte-identical: {identical} ({sizes}); verify --level full exit {}: {verify_detail}; {:.1}s",
            o.status,
            elapsed.as_secs_f64()
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle agreement: closed form, quadrature and Monte Carlo", oracle_agreement),
        ("estimator rate and forward-difference coefficient", estimator_rate),
        ("gap and switching bounds against quadrature", lemma_soundness),
        ("semigroup property for non-commuting pairs", || single(&["smoothing.semigroup"])),
        (
            "convex certificate soundness and monotonicity",
            || single(&["bounds.certificate_soundness", "bounds.certificate_monotone"]),
        ),
        (
            "stochastic noise ball and decreasing steps",
            || single(&["optimizers.sgd_plateau", "optimizers.sgd_decreasing"]),
        ),
        ("adam trend on rotated rosenbrock", || single(&["optimizers.adam_rosenbrock"])),
        ("end-to-end reproducibility and full verification", reproducibility),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let outcome = f();
        if !outcome.passed {
            failures += 1;
        }
        println!(
            "criterion {} {}: {}\n      {}",
            i + 1,
            if outcome.passed { "PASS" } else { "FAIL" },
            title,
            outcome.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
