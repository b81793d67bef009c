//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any fail.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lonely_passenger::chain::p_lonely;
use lonely_passenger::combinatorics::{newton_failures, stirling_ratio_failures};
use lonely_passenger::coupling::{run_bulk, Coupler, CouplingKind, Predicate, RngSeed};
use lonely_passenger::dist::ratio;
use lonely_passenger::dominance::{check_reverse_kernel, check_total_probability, verify_theorem};
use lonely_passenger::mc::estimate_p;
use lonely_passenger::oracle::{
    conditioning_lemma_check, configurations, dp_agreement, enumerate_joint, Configuration, OracleGrid,
    DEFAULT_LIMIT,
};
use lonely_passenger::{Execution, Rational};

const THEOREM_N_MAX: usize = 12;
const THEOREM_K_MAX: usize = 8;
const STIRLING_N_MAX: usize = 200;
const REVERSE_N_MAX: usize = 10;
const COUPLING_PATHS: u64 = 100_000;
const GOF_ALPHA: f64 = 1e-3;
const TOTAL_PROB_N_MAX: usize = 10;
const TOTAL_PROB_K_MAX: usize = 6;
const MC_SAMPLES: u64 = 100_000;
const MC_SIGMAS: f64 = 5.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn exec() -> Execution {
    Execution::default()
}

fn theorem_grid() -> Outcome {
    let report = verify_theorem(THEOREM_N_MAX, THEOREM_K_MAX, exec()).expect("grid runs");
    let first = report.cells.iter().find(|c| !c.passed());
    outcome(
        report.passed(),
        match first {
            None => format!("{} cells strict, p increasing", report.cells.len()),
            Some(c) => format!("n={} k={} {:?} p {} -> {}", c.n, c.k, c.relation, c.p_lo, c.p_hi),
        },
    )
}

fn oracle_equivalence() -> Outcome {
    let grid = OracleGrid::default();
    let mismatches = dp_agreement(&grid, exec()).expect("grid runs");
    let enumerated = |n, k| {
        let last = enumerate_joint(n, k, DEFAULT_LIMIT, exec()).expect("small")[n].clone();
        last.prob(|s| s.lonely > 0)
    };
    let spots = [(3, 2, ratio(3, 4)), (3, 3, ratio(8, 9))];
    let spots_ok = spots
        .iter()
        .all(|(n, k, p)| &p_lonely(*n, *k).unwrap() == p && &enumerated(*n, *k) == p);
    outcome(
        mismatches.is_empty() && spots_ok,
        format!(
            "{} cells, {} mismatches, p(3,2)=3/4 and p(3,3)=8/9 {}",
            grid.cells().len(),
            mismatches.len(),
            if spots_ok { "confirmed" } else { "WRONG" }
        ),
    )
}

fn together_given(given: impl Fn(&Configuration) -> bool) -> Rational {
    let (mut hits, mut total) = (0u64, 0u64);
    for c in configurations(3, 3).filter(|c| given(c)) {
        total += 1;
        hits += u64::from(c.buses()[0] == c.buses()[1]);
    }
    ratio(hits, total)
}

fn cautionary_conditioning() -> Outcome {
    let by_count = together_given(|c| c.final_state().n_buses <= 2);
    let by_labels = together_given(|c| c.buses().iter().all(|&b| b <= 2));
    outcome(
        by_count == ratio(3, 7) && by_labels == ratio(1, 2) && by_count != by_labels,
        format!("given N<=2: {by_count}, given buses in {{1,2}}: {by_labels}"),
    )
}

fn conditioning_lemma() -> Outcome {
    let report = conditioning_lemma_check(&OracleGrid::default(), exec()).expect("grid runs");
    outcome(
        report.failures.is_empty() && report.comparisons > 0,
        format!("{} comparisons, {} failures", report.comparisons, report.failures.len()),
    )
}

fn stirling_inequalities() -> Outcome {
    let ratio_fail = stirling_ratio_failures(STIRLING_N_MAX, exec());
    let newton_fail = newton_failures(STIRLING_N_MAX, exec());
    outcome(
        ratio_fail.is_empty() && newton_fail.is_empty(),
        format!(
            "n<={STIRLING_N_MAX}: {} ratio failures, {} Newton failures",
            ratio_fail.len(),
            newton_fail.len()
        ),
    )
}

fn reverse_kernel() -> Outcome {
    let r = check_reverse_kernel(REVERSE_N_MAX, exec()).expect("kernel check runs");
    outcome(
        r.passed() && r.checks > 0,
        format!("{} (l,n,m,i) comparisons, {} failures", r.checks, r.failures.len()),
    )
}

fn coupling_cells() -> Vec<(CouplingKind, usize, usize)> {
    let mut cells = vec![
        (CouplingKind::Forward, 4, 2),
        (CouplingKind::Forward, 7, 3),
        (CouplingKind::Forward, 10, 1),
        (CouplingKind::Forward, 10, 6),
    ];
    for kind in [CouplingKind::Conditioned, CouplingKind::Monotone, CouplingKind::Lonely] {
        for (n, l) in [(3, 2), (6, 3), (8, 4), (10, 5), (10, 10)] {
            cells.push((kind, n, l));
        }
    }
    cells
}

fn coupling_suites() -> Outcome {
    let mut failures = Vec::new();
    let cells = coupling_cells();
    for (i, &(kind, n, param)) in cells.iter().enumerate() {
        let coupler = Coupler::new(kind, n, param).expect("valid cell");
        let seed = RngSeed(1_000_003 * (i as u64 + 1));
        let run = run_bulk(
            &coupler,
            COUPLING_PATHS,
            seed,
            &Predicate::declared_for(kind),
            false,
            exec(),
        );
        if run.total_violations() > 0 {
            failures.push(format!("{kind} n={n} p={param}: {} violations", run.total_violations()));
        }
        let (hi, lo) = run.goodness_of_fit(GOF_ALPHA).expect("exact laws");
        if !(hi.passed && lo.passed) {
            failures.push(format!(
                "{kind} n={n} p={param}: fit p-values {:.2e}/{:.2e}",
                hi.p_value, lo.p_value
            ));
        }
    }
    // The checker must see violations once the roles are swapped.
    let control = run_bulk(
        &Coupler::new(CouplingKind::Monotone, 6, 3).unwrap(),
        1000,
        RngSeed(5),
        &Predicate::declared_for(CouplingKind::Monotone),
        true,
        exec(),
    );
    if control.total_violations() == 0 {
        failures.push("negative control found no violations".into());
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} cells x {COUPLING_PATHS} pairs: 0 violations, fit ok at {GOF_ALPHA}",
                cells.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

fn total_probability() -> Outcome {
    let r = check_total_probability(TOTAL_PROB_N_MAX, TOTAL_PROB_K_MAX, exec()).expect("runs");
    outcome(
        r.passed(),
        format!("{} (n,k,u) tails, {} mismatches", r.checks, r.failures.len()),
    )
}

fn monte_carlo() -> Outcome {
    let grid = [(2, 2), (3, 2), (3, 3), (5, 3), (8, 4), (10, 10), (12, 30), (20, 5), (20, 20), (20, 50)];
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, &(n, k)) in grid.iter().enumerate() {
        let e = estimate_p(n, k, MC_SAMPLES, 7 + i as u64, exec()).unwrap();
        let z = e.z_score().expect("exact reference present");
        worst = worst.max(z.abs());
        if z.abs() > MC_SIGMAS {
            failures.push(format!("({n},{k}) z={z:.2}"));
        }
    }
    for k in [1, 4, 50] {
        let e = estimate_p(1, k, 10, 0, exec()).unwrap();
        if e.value != 1.0 {
            failures.push(format!("n=1 k={k} gave {}", e.value));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} cells, max |z| = {worst:.2}, n=1 exactly 1.0", grid.len())
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 9] = [
        ("dominance grid n<=12, k<=7", theorem_grid, secs(10)),
        ("chain equals enumeration for k^n <= 1e6", oracle_equivalence, secs(60)),
        ("first two together: 3/7 vs 1/2", cautionary_conditioning, secs(1)),
        ("conditioning on filled-bus count", conditioning_lemma, secs(120)),
        ("Stirling ratio and Newton inequalities", stirling_inequalities, secs(30)),
        ("reverse kernel is a Stirling ratio", reverse_kernel, secs(60)),
        ("coupling suites", coupling_suites, secs(300)),
        ("total probability decomposition", total_probability, secs(60)),
        ("Monte Carlo within 5 sigma", monte_carlo, secs(120)),
    ];
    let mut all = true;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = run();
        let elapsed = start.elapsed();
        if elapsed > *budget {
            o.passed = false;
            o.detail.push_str(&format!("; over time budget {budget:?}"));
        }
        all &= o.passed;
        println!(
            "criterion {}: {} {name}: {} ({:.2}s)",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
