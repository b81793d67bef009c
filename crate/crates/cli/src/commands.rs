use lonely_passenger::chain::{exact_joint_dist, joint_slices, ne_lonely_dist, ne_nonempty_dist, p_lonely};
use lonely_passenger::combinatorics::{newton_failures, stirling_ratio_failures};
use lonely_passenger::coupling::{run_bulk, Coupler, CouplingKind, GofResult, Predicate, RngSeed};
use lonely_passenger::dist::fmt_rational;
use lonely_passenger::dominance::{total_probability_identity, verify_lemmas, verify_theorem, LemmaBounds};
use lonely_passenger::mc::{estimate_p, monotonicity_shadow};
use lonely_passenger::oracle::{
    conditioned_law, conditioning_lemma_check, dp_agreement, enumerate_joint, ne_enumerate, ne_law,
    Functional, OracleGrid, Outcome, MAX_PATH_CODE_LEN,
};
use lonely_passenger::{Error, Execution};
use serde_json::{json, Value};
use thiserror::Error;

use crate::report::{join_path, opt, Report, Table};
use crate::{
    CheckArgs, Command, CoupleArgs, ExactCmd, KindArg, McArgs, McCmd, OracleCmd, OracleConditioned,
    OracleJoint, OracleNe, ShadowArgs, Suite, LN, NK,
};

/// Hard ceiling on any enumeration limit.
pub const MAX_LIMIT: u64 = 10_000_000;
/// Coupling goodness of fit is skipped beyond this horizon.
const GOF_MAX_N: usize = 16;
const ALPHA: f64 = 1e-3;
const SIGMAS: f64 = 5.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Limit(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Limit(_) | CliError::Core(Error::SizeLimit { .. }) => 3,
            CliError::Core(_) => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage_if(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Err(CliError::Usage(msg()))
    } else {
        Ok(())
    }
}

fn check_limit(limit: u64) -> Result<()> {
    if limit > MAX_LIMIT {
        return Err(CliError::Limit(format!(
            "enumeration limit {limit} exceeds the ceiling of {MAX_LIMIT}"
        )));
    }
    Ok(())
}

fn report(command: &str, parameters: Value, payload: Value, table: Table) -> Report {
    Report {
        command: command.to_string(),
        parameters,
        seed: None,
        payload,
        table,
        failure: None,
    }
}

pub fn run(command: &Command, exec: Execution) -> Result<Report> {
    match command {
        Command::Exact(cmd) => exact(cmd),
        Command::Check(args) => check(args, exec),
        Command::Couple(args) => couple(args, exec),
        Command::Mc(McCmd::P(args)) => mc_p(args, exec),
        Command::Mc(McCmd::Shadow(args)) => mc_shadow(args, exec),
        Command::Oracle(OracleCmd::Joint(args)) => oracle_joint(args, exec),
        Command::Oracle(OracleCmd::Ne(args)) => oracle_ne(args, exec),
        Command::Oracle(OracleCmd::Conditioned(args)) => oracle_conditioned(args, exec),
    }
}

fn params<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("argument structs serialize")
}

fn exact(cmd: &ExactCmd) -> Result<Report> {
    match cmd {
        ExactCmd::P(a @ NK { n, k }) => {
            let p = fmt_rational(&p_lonely(*n, *k)?);
            let mut table = Table::new(&["n", "k", "p"]);
            table.push(vec![n.to_string(), k.to_string(), p.clone()]);
            Ok(report("exact p", params(a), json!({"n": n, "k": k, "p": p}), table))
        }
        ExactCmd::Dist(a @ NK { n, k }) => {
            let dist = exact_joint_dist(*n, *k)?;
            let mut table = Table::new(&["N", "L", "prob"]);
            let mut rows = Vec::new();
            for (s, mass) in dist.iter() {
                let prob = fmt_rational(mass);
                table.push(vec![s.n_buses.to_string(), s.lonely.to_string(), prob.clone()]);
                rows.push(json!({"N": s.n_buses, "L": s.lonely, "prob": prob}));
            }
            Ok(report("exact dist", params(a), json!({"n": n, "k": k, "rows": rows}), table))
        }
        ExactCmd::Ne(a @ LN { l, n }) => {
            let mut table = Table::new(&["m", "i", "prob"]);
            let mut rows = Vec::new();
            for m in 0..=*n {
                for (i, mass) in ne_nonempty_dist(*l, *n, m)?.iter() {
                    let prob = fmt_rational(mass);
                    table.push(vec![m.to_string(), i.to_string(), prob.clone()]);
                    rows.push(json!({"m": m, "i": i, "prob": prob}));
                }
            }
            Ok(report("exact ne", params(a), json!({"l": l, "n": n, "rows": rows}), table))
        }
        ExactCmd::Tail(a @ NK { n, k }) => {
            let rows = total_probability_identity(*n, *k)?;
            let mut table = Table::new(&["u", "direct", "decomposed", "equal"]);
            for r in &rows {
                table.push(vec![
                    r.u.to_string(),
                    r.direct.clone(),
                    r.decomposed.clone(),
                    r.equal.to_string(),
                ]);
            }
            let failure = rows
                .iter()
                .find(|r| !r.equal)
                .map(|r| format!("tails differ at u={}: {} vs {}", r.u, r.direct, r.decomposed));
            let mut rep = report("exact tail", params(a), json!({"n": n, "k": k, "rows": rows}), table);
            rep.failure = failure;
            Ok(rep)
        }
    }
}

fn check(args: &CheckArgs, exec: Execution) -> Result<Report> {
    match args.suite {
        Suite::Theorem => check_theorem(args, exec),
        Suite::Stirling => check_stirling(args, exec),
        Suite::Lemmas => check_lemmas(args, exec),
        Suite::Oracle => check_oracle(args, exec),
    }
}

fn check_theorem(args: &CheckArgs, exec: Execution) -> Result<Report> {
    let n_max = args.n_max.unwrap_or(12);
    let k_max = args.k_max.unwrap_or(8);
    usage_if(!(2..=200).contains(&n_max), || format!("--n-max must be in 2..=200, got {n_max}"))?;
    usage_if(!(1..=200).contains(&k_max), || format!("--k-max must be in 1..=200, got {k_max}"))?;
    let theorem = verify_theorem(n_max, k_max, exec)?;
    let mut table = Table::new(&["n", "k", "relation", "p_lo", "p_hi", "witness_u", "passed"]);
    for c in &theorem.cells {
        table.push(vec![
            c.n.to_string(),
            c.k.to_string(),
            json!(c.relation).as_str().unwrap_or_default().to_string(),
            c.p_lo.clone(),
            c.p_hi.clone(),
            opt(c.witness_u),
            c.passed().to_string(),
        ]);
    }
    let failure = theorem.cells.iter().find(|c| !c.passed()).map(|c| {
        format!(
            "n={} k={}: {:?} witness {:?}, p {} -> {}",
            c.n, c.k, c.relation, c.witness_u, c.p_lo, c.p_hi
        )
    });
    let mut rep = report(
        "check theorem",
        json!({"suite": "theorem", "n_max": n_max, "k_max": k_max}),
        serde_json::to_value(&theorem).expect("serializable"),
        table,
    );
    rep.failure = failure;
    Ok(rep)
}

fn check_stirling(args: &CheckArgs, exec: Execution) -> Result<Report> {
    let n_max = args.n_max.unwrap_or(200);
    usage_if(!(1..=2000).contains(&n_max), || format!("--n-max must be in 1..=2000, got {n_max}"))?;
    let ratio = stirling_ratio_failures(n_max, exec);
    let newton = newton_failures(n_max, exec);
    let ratio_checked = n_max * n_max.saturating_sub(1) / 2;
    let newton_checked: usize = (3..=n_max).map(|n| n - 2).sum();
    let mut table = Table::new(&["check", "checked", "failures"]);
    let fmt = |f: &[(usize, usize)]| {
        f.iter()
            .map(|(n, k)| format!("{n}:{k}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    table.push(vec!["stirling-ratio".into(), ratio_checked.to_string(), fmt(&ratio)]);
    table.push(vec!["newton".into(), newton_checked.to_string(), fmt(&newton)]);
    let failure = match (ratio.first(), newton.first()) {
        (Some((n, k)), _) => Some(format!("Stirling ratio inequality fails at n={n} k={k}")),
        (None, Some((n, k))) => Some(format!("Newton inequality fails at row {n} index {k}")),
        (None, None) => None,
    };
    let pairs = |f: &[(usize, usize)]| f.iter().map(|(n, k)| json!({"n": n, "k": k})).collect::<Vec<_>>();
    let mut rep = report(
        "check stirling",
        json!({"suite": "stirling", "n_max": n_max}),
        json!({
            "stirling_ratio": {"checked": ratio_checked, "failures": pairs(&ratio)},
            "newton": {"checked": newton_checked, "failures": pairs(&newton)},
        }),
        table,
    );
    rep.failure = failure;
    Ok(rep)
}

fn check_lemmas(args: &CheckArgs, exec: Execution) -> Result<Report> {
    let defaults = LemmaBounds::default();
    let bounds = LemmaBounds {
        n_max: args.n_max.unwrap_or(defaults.n_max),
        k_max: args.k_max.unwrap_or(defaults.k_max),
        ..defaults
    };
    usage_if(!(2..=14).contains(&bounds.n_max), || {
        format!("--n-max must be in 2..=14, got {}", bounds.n_max)
    })?;
    usage_if(!(1..=30).contains(&bounds.k_max), || {
        format!("--k-max must be in 1..=30, got {}", bounds.k_max)
    })?;
    let results = verify_lemmas(bounds, exec)?;
    let mut table = Table::new(&["check", "checks", "failures"]);
    for r in &results {
        table.push(vec![r.name.clone(), r.checks.to_string(), r.failures.join(";")]);
    }
    let failure = results
        .iter()
        .find(|r| !r.passed())
        .map(|r| format!("{}: {}", r.name, r.failures[0]));
    let mut rep = report(
        "check lemmas",
        json!({"suite": "lemmas", "bounds": bounds}),
        json!({"checks": results}),
        table,
    );
    rep.failure = failure;
    Ok(rep)
}

fn check_oracle(args: &CheckArgs, exec: Execution) -> Result<Report> {
    check_limit(args.limit)?;
    let defaults = OracleGrid::default();
    let grid = OracleGrid {
        limit: args.limit,
        n_max: args.n_max.unwrap_or(defaults.n_max),
        k_max: args.k_max.unwrap_or(defaults.k_max),
    };
    usage_if(!(1..=MAX_PATH_CODE_LEN).contains(&grid.n_max), || {
        format!("--n-max must be in 1..={MAX_PATH_CODE_LEN}, got {}", grid.n_max)
    })?;
    usage_if(grid.k_max < 1, || "--k-max must be at least 1".into())?;
    let cells = grid.cells();
    let mismatches = dp_agreement(&grid, exec)?;
    let conditioning = conditioning_lemma_check(&grid, exec)?;
    let slices: usize = cells.iter().map(|(n, _)| n + 1).sum();
    let mut table = Table::new(&["check", "comparisons", "failures"]);
    table.push(vec![
        "dp-agreement".into(),
        slices.to_string(),
        mismatches
            .iter()
            .map(|m| format!("n={} k={} m={}", m.n, m.k, m.m))
            .collect::<Vec<_>>()
            .join(";"),
    ]);
    table.push(vec![
        "conditioning".into(),
        conditioning.comparisons.to_string(),
        conditioning
            .failures
            .iter()
            .map(|f| format!("n={} k={} l={} {}", f.n, f.k, f.l, f.functional))
            .collect::<Vec<_>>()
            .join(";"),
    ]);
    let failure = match (mismatches.first(), conditioning.failures.first()) {
        (Some(m), _) => Some(format!("DP and enumeration differ at n={} k={} m={}", m.n, m.k, m.m)),
        (None, Some(f)) => Some(format!(
            "conditioning fails at n={} k={} l={} for {}",
            f.n, f.k, f.l, f.functional
        )),
        (None, None) => None,
    };
    let mut rep = report(
        "check oracle",
        json!({"suite": "oracle", "limit": grid.limit, "n_max": grid.n_max, "k_max": grid.k_max}),
        json!({
            "cells": cells.len(),
            "dp_agreement": {"comparisons": slices, "failures": mismatches},
            "conditioning": conditioning,
        }),
        table,
    );
    rep.failure = failure;
    Ok(rep)
}

fn gof_json(g: &GofResult) -> Value {
    serde_json::to_value(g).expect("serializable")
}

fn couple(args: &CoupleArgs, exec: Execution) -> Result<Report> {
    let (kind, param) = match args.kind {
        KindArg::Forward => (CouplingKind::Forward, args.k.ok_or_else(|| CliError::Usage("forward coupling needs --k".into()))?),
        KindArg::Conditioned => (CouplingKind::Conditioned, args.l.ok_or_else(|| CliError::Usage("conditioned coupling needs --l".into()))?),
        KindArg::Monotone => (CouplingKind::Monotone, args.l.ok_or_else(|| CliError::Usage("monotone coupling needs --l".into()))?),
        KindArg::Lonely => (CouplingKind::Lonely, args.l.ok_or_else(|| CliError::Usage("lonely coupling needs --l".into()))?),
    };
    usage_if(args.paths == 0, || "--paths must be at least 1".into())?;
    let coupler = Coupler::new(kind, args.n, param)?;
    let (hi_param, lo_param) = kind.params(param);
    let run = run_bulk(
        &coupler,
        args.paths,
        RngSeed(args.seed),
        &Predicate::declared_for(kind),
        args.negative_control,
        exec,
    );
    let gof = if !args.negative_control && args.n <= GOF_MAX_N {
        Some(run.goodness_of_fit(ALPHA)?)
    } else {
        None
    };

    let mut table = Table::new(&["section", "key", "value"]);
    for r in &run.reports {
        let name = r.predicate.name().to_string();
        table.push(vec!["checked".into(), name.clone(), r.checked.to_string()]);
        table.push(vec!["violations".into(), name.clone(), r.violations.to_string()]);
        if let Some(f) = &r.first {
            table.push(vec![
                "first-violation".into(),
                name,
                format!("sample={} time={} hi={} lo={}", f.sample, f.time, join_path(&f.hi), join_path(&f.lo)),
            ]);
        }
    }
    if let Some((hi, lo)) = &gof {
        for (side, g) in [("gof-hi", hi), ("gof-lo", lo)] {
            table.push(vec![side.into(), "statistic".into(), format!("{:?}", g.statistic)]);
            table.push(vec![side.into(), "dof".into(), g.dof.to_string()]);
            table.push(vec![side.into(), "p_value".into(), format!("{:?}", g.p_value)]);
            table.push(vec![side.into(), "unexpected".into(), g.unexpected.to_string()]);
            table.push(vec![side.into(), "passed".into(), g.passed.to_string()]);
        }
    }
    for (i, pair) in run.excerpt.iter().enumerate() {
        table.push(vec!["excerpt-hi".into(), i.to_string(), join_path(&pair.hi)]);
        table.push(vec!["excerpt-lo".into(), i.to_string(), join_path(&pair.lo)]);
    }

    let violations = run.total_violations();
    let failure = if violations > 0 {
        let r = run.reports.iter().find(|r| !r.is_clean()).expect("some report has violations");
        let f = r.first.as_ref().expect("detail recorded");
        Some(format!(
            "{} violations; first {} at sample {} time {}",
            violations,
            r.predicate.name(),
            f.sample,
            f.time
        ))
    } else {
        match &gof {
            Some((hi, lo)) if !(hi.passed && lo.passed) => Some(format!(
                "goodness of fit rejected at alpha {ALPHA}: p = {:?} (hi), {:?} (lo)",
                hi.p_value, lo.p_value
            )),
            _ => None,
        }
    };
    let payload = json!({
        "kind": kind,
        "n": args.n,
        "hi_param": hi_param,
        "lo_param": lo_param,
        "paths": args.paths,
        "negative_control": args.negative_control,
        "violations": violations,
        "reports": run.reports,
        "goodness_of_fit": gof.as_ref().map(|(hi, lo)| json!({"alpha": ALPHA, "hi": gof_json(hi), "lo": gof_json(lo)})),
        "excerpt": run.excerpt.iter().map(|p| json!({"hi": p.hi, "lo": p.lo})).collect::<Vec<_>>(),
    });
    let mut rep = report(&format!("couple {}", kind.name()), params(args), payload, table);
    rep.seed = Some(args.seed);
    rep.failure = failure;
    Ok(rep)
}

fn mc_p(args: &McArgs, exec: Execution) -> Result<Report> {
    let e = estimate_p(args.n, args.k, args.samples, args.seed, exec)?;
    let z = e.z_score();
    let exact = e.exact_ref.as_ref().map(fmt_rational);
    let mut table = Table::new(&["n", "k", "samples", "estimate", "stderr", "exact", "z"]);
    table.push(vec![
        args.n.to_string(),
        args.k.to_string(),
        args.samples.to_string(),
        format!("{:?}", e.value),
        format!("{:?}", e.stderr),
        exact.clone().unwrap_or_default(),
        z.map(|z| format!("{z:?}")).unwrap_or_default(),
    ]);
    let failure = match e.within(SIGMAS) {
        Some(false) => Some(format!(
            "estimate {:?} is {:?} standard errors from {}",
            e.value,
            z.unwrap_or(f64::NAN),
            exact.clone().unwrap_or_default()
        )),
        _ => None,
    };
    let payload = json!({
        "n": args.n,
        "k": args.k,
        "samples": e.samples,
        "estimate": e.value,
        "stderr": e.stderr,
        "exact": exact,
        // JSON has no infinity; a degenerate reference miss serializes as null.
        "z": z.filter(|z| z.is_finite()),
        "sigmas": SIGMAS,
    });
    let mut rep = report("mc p", params(args), payload, table);
    rep.seed = Some(args.seed);
    rep.failure = failure;
    Ok(rep)
}

fn mc_shadow(args: &ShadowArgs, exec: Execution) -> Result<Report> {
    usage_if(args.k_max < 1, || "--k-max must be at least 1".into())?;
    let rows = monotonicity_shadow(args.n, args.k_max, args.samples, args.seed, SIGMAS, exec)?;
    let mut table = Table::new(&["k", "estimate", "stderr", "exact", "step_sigmas", "consistent"]);
    for r in &rows {
        table.push(vec![
            r.k.to_string(),
            format!("{:?}", r.estimate.value),
            format!("{:?}", r.estimate.stderr),
            r.estimate.exact_ref.as_ref().map(fmt_rational).unwrap_or_default(),
            r.step_sigmas.map(|s| format!("{s:?}")).unwrap_or_default(),
            r.consistent.to_string(),
        ]);
    }
    let payload = json!({
        "n": args.n,
        "sigmas": SIGMAS,
        "rows": rows.iter().map(|r| json!({
            "k": r.k,
            "estimate": r.estimate,
            "step_sigmas": r.step_sigmas.filter(|s| s.is_finite()),
            "consistent": r.consistent,
        })).collect::<Vec<_>>(),
    });
    let mut rep = report("mc shadow", params(args), payload, table);
    rep.seed = Some(args.seed);
    Ok(rep)
}

fn oracle_joint(args: &OracleJoint, exec: Execution) -> Result<Report> {
    check_limit(args.limit)?;
    let counted = enumerate_joint(args.n, args.k, args.limit, exec)?;
    let dp = joint_slices(args.n, args.k)?;
    let mut table = Table::new(&["m", "N", "L", "prob", "agrees"]);
    let mut rows = Vec::new();
    let mut failure = None;
    for (m, slice) in counted.iter().enumerate() {
        let agrees = *slice == dp[m];
        if !agrees && failure.is_none() {
            failure = Some(format!("enumeration and chain differ at m={m}"));
        }
        for (s, mass) in slice.iter() {
            let prob = fmt_rational(mass);
            table.push(vec![
                m.to_string(),
                s.n_buses.to_string(),
                s.lonely.to_string(),
                prob.clone(),
                agrees.to_string(),
            ]);
            rows.push(json!({"m": m, "N": s.n_buses, "L": s.lonely, "prob": prob, "agrees": agrees}));
        }
    }
    let mut rep = report(
        "oracle joint",
        params(args),
        json!({"n": args.n, "k": args.k, "rows": rows}),
        table,
    );
    rep.failure = failure;
    Ok(rep)
}

fn oracle_ne(args: &OracleNe, exec: Execution) -> Result<Report> {
    check_limit(args.limit)?;
    let law = ne_enumerate(args.l, args.n, args.limit, exec)?;
    let mut table = Table::new(&["m", "statistic", "value", "prob"]);
    let mut rows = Vec::new();
    let mut failure = None;
    for m in 0..=args.n {
        let nonempty = law.nonempty_at(m);
        if nonempty != ne_nonempty_dist(args.l, args.n, m)? && failure.is_none() {
            failure = Some(format!("nonempty law differs from the closed form at m={m}"));
        }
        for (stat, dist) in [("nonempty", nonempty), ("lonely", law.lonely_at(m))] {
            for (v, mass) in dist.iter() {
                let prob = fmt_rational(mass);
                table.push(vec![m.to_string(), stat.into(), v.to_string(), prob.clone()]);
                rows.push(json!({"m": m, "statistic": stat, "value": v, "prob": prob}));
            }
        }
    }
    if failure.is_none() && law.lonely_at(args.n) != ne_lonely_dist(args.l, args.n)? {
        failure = Some("final lonely law differs from the conditioned chain".into());
    }
    let mut rep = report(
        "oracle ne",
        params(args),
        json!({"l": args.l, "n": args.n, "size": law.size.to_string(), "rows": rows}),
        table,
    );
    rep.failure = failure;
    Ok(rep)
}

fn outcome_str(o: &Outcome) -> String {
    match o {
        Outcome::Path(p) => join_path(p),
        Outcome::Count(c) => c.to_string(),
        Outcome::Flag(b) => b.to_string(),
    }
}

fn oracle_conditioned(args: &OracleConditioned, exec: Execution) -> Result<Report> {
    check_limit(args.limit)?;
    let f: Functional = args
        .functional
        .parse()
        .map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let conditioned = conditioned_law(args.n, args.k, args.l, f, args.limit, exec)?;
    let ne = ne_law(args.l, args.n, f, args.limit, exec)?;
    let mut outcomes: Vec<&Outcome> = conditioned.support().chain(ne.support()).collect();
    outcomes.sort();
    outcomes.dedup();
    let mut table = Table::new(&["outcome", "conditioned", "no_empty_bus"]);
    let mut rows = Vec::new();
    for o in outcomes {
        let (a, b) = (fmt_rational(&conditioned.mass(o)), fmt_rational(&ne.mass(o)));
        table.push(vec![outcome_str(o), a.clone(), b.clone()]);
        rows.push(json!({"outcome": o, "conditioned": a, "no_empty_bus": b}));
    }
    let failure = (conditioned != ne).then(|| format!("{f} laws differ"));
    let mut rep = report(
        "oracle conditioned",
        params(args),
        json!({"n": args.n, "k": args.k, "l": args.l, "functional": f, "equal": failure.is_none(), "rows": rows}),
        table,
    );
    rep.failure = failure;
    Ok(rep)
}

