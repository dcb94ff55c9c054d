//! One verdict line per acceptance criterion, on the default settings.
//!
//! Runs without the libtest harness so the lines are always printed.
//! Failures listed in `KNOWN_DEVIATIONS` are reported but do not fail the
//! target; every other check is asserted.

use std::process::ExitCode;

use hyper_explore::harness::verify::{invariant_suite, is_known_deviation, reproduction_suite, CheckResult};
use hyper_explore::harness::ExperimentConfig;

const CRITERIA: [(&str, &[&str]); 9] = [
    ("ucbq success band", &["ucbq success band"]),
    ("hyper robustness across beta", &["hyper robustness"]),
    (
        "ucbq visitation signatures",
        &[
            "visitation: stuck near suboptimal goal at beta=0.01",
            "visitation: near-uniform at beta=1",
            "visitation: greedy policy reaches optimal goal at beta=0.1",
        ],
    ),
    ("linear weight norm bound", &["weight norm bound"]),
    ("confidence sandwich", &["confidence sandwich"]),
    ("regret scaling", &["regret scaling"]),
    (
        "bounded geometric sampler",
        &["bounded geometric", "bounded geometric sampling noise"],
    ),
    ("decoupling purity", &["decoupling purity"]),
    ("oracle correctness", &["oracle"]),
];

fn main() -> ExitCode {
    let started = std::time::Instant::now();
    let mut checks: Vec<CheckResult> = invariant_suite().expect("invariant suite runs");
    checks.extend(reproduction_suite(&ExperimentConfig::default()).expect("reproduction runs"));

    let mut unexpected = Vec::new();
    for (label, names) in CRITERIA {
        let members: Vec<&CheckResult> = names
            .iter()
            .map(|n| checks.iter().find(|c| c.name == *n).expect("check exists"))
            .collect();
        // the noise-calibrated sampler check supports the literal one; it
        // does not make the criterion pass on its own
        let verdict = members.iter().filter(|c| !c.name.ends_with("sampling noise")).all(|c| c.passed);
        let known = !verdict
            && members
                .iter()
                .filter(|c| !c.passed)
                .all(|c| is_known_deviation(&c.name));
        let tag = match (verdict, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => "FAIL",
        };
        println!("acceptance {tag} {label}");
        for c in &members {
            println!("    {c}");
            if !c.passed && !is_known_deviation(&c.name) {
                unexpected.push(c.name.clone());
            }
        }
    }
    println!("acceptance finished in {:.1}s", started.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
