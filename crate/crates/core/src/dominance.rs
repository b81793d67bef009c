//! Exact first-order stochastic dominance and the grid checks built on it.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::chain::{
    lonely_dist, lonely_survival_product, ne_lonely_dist, ne_nonempty_dist, nonempty_dist,
    reverse_death_prob, reverse_prob_from_conditioned, HTransform,
};
use crate::combinatorics::lonely_first_prob_ne;
use crate::dist::{fmt_rational, ExactDist, Rational};
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `a` dominates `b` and the laws differ.
    Strict,
    Equal,
    /// `b` strictly dominates `a`.
    Dominated,
    /// The tails cross.
    Incomparable,
}

/// How the tails of `a` compare with those of `b`. The witness is the first
/// `u` with `P(a >= u) > P(b >= u)` for [`Relation::Strict`], and the first
/// `u` with `P(a >= u) < P(b >= u)` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DominanceVerdict {
    pub relation: Relation,
    pub witness: Option<usize>,
}

impl DominanceVerdict {
    /// `a ⪰ b` (weakly).
    pub fn dominates(&self) -> bool {
        matches!(self.relation, Relation::Strict | Relation::Equal)
    }
}

/// Compares `P(a >= u)` with `P(b >= u)` at every `u` in the union of the supports.
pub fn cdf_dominates(a: &ExactDist<usize>, b: &ExactDist<usize>) -> DominanceVerdict {
    let mut points: Vec<usize> = a.support().chain(b.support()).copied().collect();
    points.sort_unstable();
    points.dedup();
    let mut first_gt = None;
    let mut first_lt = None;
    for u in points {
        let (ta, tb) = (a.tail(u), b.tail(u));
        if ta > tb && first_gt.is_none() {
            first_gt = Some(u);
        }
        if ta < tb && first_lt.is_none() {
            first_lt = Some(u);
        }
    }
    let relation = match (first_gt, first_lt) {
        (None, None) => Relation::Equal,
        (Some(_), None) => Relation::Strict,
        (None, Some(_)) => Relation::Dominated,
        (Some(_), Some(_)) => Relation::Incomparable,
    };
    DominanceVerdict {
        relation,
        witness: if relation == Relation::Strict {
            first_gt
        } else {
            first_lt
        },
    }
}

/// Probabilities of events on `k` and `k + 1` buses differ unless both are 0
/// or both are 1. Fails if the denominators are not divisors of `k^n` and
/// `(k+1)^n`.
pub fn distinct_unless_trivial(pa: &Rational, pb: &Rational, k: usize, n: usize) -> Result<bool> {
    let exp = u32::try_from(n).map_err(|_| Error::OutOfRange(format!("n={n} too large")))?;
    for (p, base) in [(pa, k), (pb, k + 1)] {
        let modulus = num_traits::pow(BigInt::from(base), exp as usize);
        if !modulus.is_multiple_of(p.denom()) {
            return Err(Error::DenominatorMismatch {
                value: fmt_rational(p),
                modulus: modulus.to_string(),
            });
        }
    }
    let trivial = |p: &Rational| p.is_zero() || p.is_one();
    Ok(pa != pb || (trivial(pa) && trivial(pb)))
}

/// One `(n, k)` comparison of `L` with `k + 1` versus `k` buses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremCell {
    pub n: usize,
    pub k: usize,
    pub relation: Relation,
    /// `p_{n,k}` as `num/den`.
    pub p_lo: String,
    /// `p_{n,k+1}` as `num/den`.
    pub p_hi: String,
    pub witness_u: Option<usize>,
    pub p_increases: bool,
    pub distinct_unless_trivial: bool,
}

impl TheoremCell {
    pub fn passed(&self) -> bool {
        self.relation == Relation::Strict && self.p_increases && self.distinct_unless_trivial
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub n_max: usize,
    pub k_max: usize,
    pub cells: Vec<TheoremCell>,
    pub failures: usize,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Checks strict dominance of `L^(k+1)_n` over `L^(k)_n` and
/// `p_{n,k+1} > p_{n,k}` for all `2 <= n <= n_max`, `1 <= k < k_max`.
pub fn verify_theorem(n_max: usize, k_max: usize, exec: Execution) -> Result<TheoremReport> {
    let mut jobs = Vec::new();
    for n in 2..=n_max {
        for k in 1..=k_max {
            jobs.push((n, k));
        }
    }
    let laws: HashMap<(usize, usize), ExactDist<usize>> = exec
        .map(jobs, |(n, k)| lonely_dist(n, k).map(|d| ((n, k), d)))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for n in 2..=n_max {
        for k in 1..k_max {
            let (lo, hi) = (&laws[&(n, k)], &laws[&(n, k + 1)]);
            let verdict = cdf_dominates(hi, lo);
            let (p_lo, p_hi) = (lo.tail(1), hi.tail(1));
            cells.push(TheoremCell {
                n,
                k,
                relation: verdict.relation,
                p_lo: fmt_rational(&p_lo),
                p_hi: fmt_rational(&p_hi),
                witness_u: verdict.witness,
                p_increases: p_hi > p_lo,
                distinct_unless_trivial: distinct_unless_trivial(&p_lo, &p_hi, k, n)?,
            });
        }
    }
    let failures = cells.iter().filter(|c| !c.passed()).count();
    Ok(TheoremReport {
        n_max,
        k_max,
        cells,
        failures,
    })
}

/// `P(L_n >= u)` computed directly and through the decomposition over the
/// final number of nonempty buses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TotalProbabilityRow {
    pub u: usize,
    pub direct: String,
    pub decomposed: String,
    pub equal: bool,
}

/// `P(L^(k)_n >= u) = sum_l P(N^(k)_n = l) P(L~^(l,n)_n >= u)` for every `u`.
pub fn total_probability_identity(n: usize, k: usize) -> Result<Vec<TotalProbabilityRow>> {
    let direct = lonely_dist(n, k)?;
    let weights = nonempty_dist(n, k)?;
    let conditioned: Vec<(Rational, ExactDist<usize>)> = weights
        .iter()
        .map(|(&l, w)| Ok((w.clone(), ne_lonely_dist(l, n)?)))
        .collect::<Result<_>>()?;
    Ok((0..=n + 1)
        .map(|u| {
            let lhs = direct.tail(u);
            let rhs: Rational = conditioned.iter().map(|(w, d)| w * d.tail(u)).sum();
            TotalProbabilityRow {
                u,
                direct: fmt_rational(&lhs),
                decomposed: fmt_rational(&rhs),
                equal: lhs == rhs,
            }
        })
        .collect())
}

/// Outcome of one named family of exact checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl CheckResult {
    fn collect(name: &str, outcomes: Vec<Result<(usize, Vec<String>)>>) -> Result<Self> {
        let mut checks = 0;
        let mut failures = Vec::new();
        for o in outcomes {
            let (c, f) = o?;
            checks += c;
            failures.extend(f);
        }
        Ok(CheckResult {
            name: name.to_string(),
            checks,
            failures,
        })
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Reverse jump probabilities of every conditioned chain equal the Stirling
/// ratio, whatever the final bus count.
pub fn check_reverse_kernel(n_max: usize, exec: Execution) -> Result<CheckResult> {
    let rows: Vec<usize> = (2..=n_max).collect();
    let out = exec.map(rows, |n| {
        let mut checks = 0;
        let mut failures = Vec::new();
        for l in 2..=n {
            for m in 1..=n {
                for i in 1..=m.min(l) {
                    if let Some(p) = reverse_prob_from_conditioned(l, n, m, i)? {
                        checks += 1;
                        if p != reverse_death_prob(m, i)? {
                            failures.push(format!("l={l} n={n} m={m} i={i}: {}", fmt_rational(&p)));
                        }
                    }
                }
            }
        }
        Ok((checks, failures))
    });
    CheckResult::collect("reverse-kernel", out)
}

/// The closed-form conditioned law equals the h-transform law at every time.
pub fn check_h_transform(n_max: usize, exec: Execution) -> Result<CheckResult> {
    let rows: Vec<usize> = (1..=n_max).collect();
    let out = exec.map(rows, |n| {
        let mut checks = 0;
        let mut failures = Vec::new();
        for l in 1..=n {
            let slices = HTransform::new(l, n)?.nonempty_slices()?;
            for (m, slice) in slices.iter().enumerate() {
                checks += 1;
                if &ne_nonempty_dist(l, n, m)? != slice {
                    failures.push(format!("l={l} n={n} m={m}"));
                }
            }
        }
        Ok((checks, failures))
    });
    CheckResult::collect("h-transform", out)
}

/// `E R(N~) = S(n-1, l-1) / S(n, l)`.
pub fn check_survival_expectation(n_max: usize, exec: Execution) -> Result<CheckResult> {
    let rows: Vec<usize> = (1..=n_max).collect();
    let out = exec.map(rows, |n| {
        let mut failures = Vec::new();
        for l in 1..=n {
            let law = HTransform::new(l, n)?.path_law()?;
            let mut expectation = Rational::zero();
            for (path, mass) in law.iter() {
                expectation += mass * lonely_survival_product(path)?;
            }
            if expectation != lonely_first_prob_ne(n, l)? {
                failures.push(format!("l={l} n={n}"));
            }
        }
        Ok((n, failures))
    });
    CheckResult::collect("survival-expectation", out)
}

/// Passenger 1 is more likely alone when more buses are filled.
pub fn check_first_passenger(n_max: usize, exec: Execution) -> Result<CheckResult> {
    let rows: Vec<usize> = (2..=n_max).collect();
    let out = exec.map(rows, |n| {
        let mut failures = Vec::new();
        for l in 2..=n {
            if lonely_first_prob_ne(n, l)? < lonely_first_prob_ne(n, l - 1)? {
                failures.push(format!("l={l} n={n}"));
            }
        }
        Ok((n - 1, failures))
    });
    CheckResult::collect("first-passenger", out)
}

/// Conditioned nonempty counts dominate at every intermediate time.
pub fn check_conditioned_nonempty_dominance(n_max: usize, exec: Execution) -> Result<CheckResult> {
    let rows: Vec<usize> = (2..=n_max).collect();
    let out = exec.map(rows, |n| {
        let mut checks = 0;
        let mut failures = Vec::new();
        for l in 2..=n {
            for m in 0..=n {
                checks += 1;
                let v = cdf_dominates(&ne_nonempty_dist(l, n, m)?, &ne_nonempty_dist(l - 1, n, m)?);
                if !v.dominates() {
                    failures.push(format!("l={l} n={n} m={m}: {:?}", v.relation));
                }
            }
        }
        Ok((checks, failures))
    });
    CheckResult::collect("conditioned-nonempty-dominance", out)
}

/// Final lonely counts dominate as the number of filled buses grows.
pub fn check_conditioned_lonely_dominance(n_max: usize, exec: Execution) -> Result<CheckResult> {
    let rows: Vec<usize> = (2..=n_max).collect();
    let out = exec.map(rows, |n| {
        let mut failures = Vec::new();
        for l in 2..=n {
            let v = cdf_dominates(&ne_lonely_dist(l, n)?, &ne_lonely_dist(l - 1, n)?);
            if !v.dominates() {
                failures.push(format!("l={l} n={n}: {:?}", v.relation));
            }
        }
        Ok((n - 1, failures))
    });
    CheckResult::collect("conditioned-lonely-dominance", out)
}

/// Unconditioned nonempty counts dominate as buses are added.
pub fn check_nonempty_dominance(n_max: usize, k_max: usize, exec: Execution) -> Result<CheckResult> {
    let rows: Vec<usize> = (1..=n_max).collect();
    let out = exec.map(rows, |n| {
        let mut failures = Vec::new();
        for k in 1..k_max {
            let v = cdf_dominates(&nonempty_dist(n, k + 1)?, &nonempty_dist(n, k)?);
            if !v.dominates() {
                failures.push(format!("n={n} k={k}: {:?}", v.relation));
            }
        }
        Ok((k_max.saturating_sub(1), failures))
    });
    CheckResult::collect("nonempty-dominance", out)
}

/// The total-probability decomposition of the lonely tail.
pub fn check_total_probability(n_max: usize, k_max: usize, exec: Execution) -> Result<CheckResult> {
    let rows: Vec<usize> = (1..=n_max).collect();
    let out = exec.map(rows, |n| {
        let mut checks = 0;
        let mut failures = Vec::new();
        for k in 1..=k_max {
            for row in total_probability_identity(n, k)? {
                checks += 1;
                if !row.equal {
                    failures.push(format!(
                        "n={n} k={k} u={}: {} vs {}",
                        row.u, row.direct, row.decomposed
                    ));
                }
            }
        }
        Ok((checks, failures))
    });
    CheckResult::collect("total-probability", out)
}

/// Bounds for [`verify_lemmas`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LemmaBounds {
    /// Horizon for the chain-level checks.
    pub n_max: usize,
    /// Bus count for the unconditioned checks.
    pub k_max: usize,
    /// Horizon for the Stirling-ratio form of the first-passenger check.
    pub first_passenger_n_max: usize,
}

impl Default for LemmaBounds {
    fn default() -> Self {
        LemmaBounds {
            n_max: 10,
            k_max: 6,
            first_passenger_n_max: 200,
        }
    }
}

/// Every intermediate step of the dominance argument, checked exactly.
pub fn verify_lemmas(bounds: LemmaBounds, exec: Execution) -> Result<Vec<CheckResult>> {
    let LemmaBounds {
        n_max,
        k_max,
        first_passenger_n_max,
    } = bounds;
    Ok(vec![
        check_nonempty_dominance(n_max, k_max, exec)?,
        check_reverse_kernel(n_max, exec)?,
        check_h_transform(n_max, exec)?,
        check_conditioned_nonempty_dominance(n_max, exec)?,
        check_survival_expectation(n_max, exec)?,
        check_first_passenger(first_passenger_n_max, exec)?,
        check_conditioned_lonely_dominance(n_max, exec)?,
        check_total_probability(n_max, k_max, exec)?,
    ])
}
