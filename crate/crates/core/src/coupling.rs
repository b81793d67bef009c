//! Seeded samplers for the couplings that order the nonempty-bus and
//! lonely-passenger processes pathwise.
//!
//! Every sampler is a pure function of its parameters and an [`RngSeed`].
//! Ordered Bernoulli draws share one uniform: each chain moves iff the
//! uniform falls below its own threshold, so the chain with the larger
//! threshold moves whenever the other does.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::chain::{forward_path_law, HTransform, Path, ReverseKernel};
use crate::dist::{to_f64, ExactDist};
use crate::error::{ensure, Error, Result};
use crate::exec::Execution;

/// Seed of a deterministic 64-bit generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Independent sub-stream `stream` of this seed.
    fn stream(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    pub fn offset(self, i: u64) -> RngSeed {
        RngSeed(self.0.wrapping_add(i))
    }
}

const MAIN_STREAM: u64 = 0;
const HI_STREAM: u64 = 1;
const LO_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    /// Unconditioned nonempty counts with `k + 1` and `k` buses.
    Forward,
    /// Conditioned nonempty counts via reversed death chains that stick on meeting.
    Conditioned,
    /// Conditioned nonempty counts whose difference rises from 0 to 1 once.
    Monotone,
    /// Conditioned lonely counts seated on top of a monotone pair.
    Lonely,
}

impl CouplingKind {
    pub const ALL: [CouplingKind; 4] = [
        CouplingKind::Forward,
        CouplingKind::Conditioned,
        CouplingKind::Monotone,
        CouplingKind::Lonely,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CouplingKind::Forward => "forward",
            CouplingKind::Conditioned => "conditioned",
            CouplingKind::Monotone => "monotone",
            CouplingKind::Lonely => "lonely",
        }
    }

    /// `(hi, lo)` parameters for bus parameter `param` (`k` or `l`).
    pub fn params(self, param: usize) -> (usize, usize) {
        match self {
            CouplingKind::Forward => (param + 1, param),
            _ => (param, param - 1),
        }
    }
}

impl fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CouplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CouplingKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::OutOfRange(format!("unknown coupling {s:?}")))
    }
}

/// Two paths of length `n + 1` sampled in lock step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupledPathPair {
    pub kind: CouplingKind,
    pub n: usize,
    pub hi_param: usize,
    pub lo_param: usize,
    pub hi: Path,
    pub lo: Path,
}

impl CoupledPathPair {
    /// The same pair with components exchanged (a negative control).
    pub fn swapped(&self) -> Self {
        CoupledPathPair {
            hi: self.lo.clone(),
            lo: self.hi.clone(),
            hi_param: self.lo_param,
            lo_param: self.hi_param,
            ..self.clone()
        }
    }
}

/// Precomputed thresholds for one `(kind, n, param)` cell.
#[derive(Debug, Clone)]
pub struct Coupler {
    kind: CouplingKind,
    n: usize,
    param: usize,
    // reverse[m][i] = P(i -> i-1 at reverse time m); index 0 unused
    reverse: Vec<Vec<f64>>,
}

impl Coupler {
    pub fn new(kind: CouplingKind, n: usize, param: usize) -> Result<Self> {
        let reverse = match kind {
            CouplingKind::Forward => {
                ensure!(param >= 1, OutOfRange, "bus count k must be >= 1");
                Vec::new()
            }
            _ => {
                ensure!(
                    param >= 2 && param <= n,
                    OutOfRange,
                    "need 2 <= l <= n, got l={param}, n={n}"
                );
                let mut table = vec![Vec::new()];
                for m in 1..=n {
                    let kernel = ReverseKernel::at(m)?;
                    let mut row = vec![0.0];
                    row.extend(kernel.probs().iter().map(to_f64));
                    debug_assert!(row.windows(2).all(|w| w[0] <= w[1]));
                    table.push(row);
                }
                table
            }
        };
        Ok(Coupler {
            kind,
            n,
            param,
            reverse,
        })
    }

    pub fn kind(&self) -> CouplingKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn param(&self) -> usize {
        self.param
    }

    pub fn sample(&self, seed: RngSeed) -> CoupledPathPair {
        let (hi_param, lo_param) = self.kind.params(self.param);
        let (hi, lo) = match self.kind {
            CouplingKind::Forward => self.forward(seed),
            CouplingKind::Conditioned => self.reversed(&mut seed.stream(MAIN_STREAM), false),
            CouplingKind::Monotone => self.reversed(&mut seed.stream(MAIN_STREAM), true),
            CouplingKind::Lonely => self.lonely(seed),
        };
        CoupledPathPair {
            kind: self.kind,
            n: self.n,
            hi_param,
            lo_param,
            hi,
            lo,
        }
    }

    fn forward(&self, seed: RngSeed) -> (Path, Path) {
        let mut rng = seed.stream(MAIN_STREAM);
        let (k_hi, k_lo) = (self.param + 1, self.param);
        let births = |k: usize, i: usize| (k - i.min(k)) as f64 / k as f64;
        let mut hi = vec![0];
        let mut lo = vec![0];
        for _ in 0..self.n {
            let u: f64 = rng.random();
            let (h, l) = (*hi.last().unwrap(), *lo.last().unwrap());
            hi.push(h + usize::from(u < births(k_hi, h)));
            lo.push(l + usize::from(u < births(k_lo, l)));
        }
        (hi, lo)
    }

    /// Runs the two reversed death chains from `l` and `l - 1` at time `n`
    /// down to time 0 and returns the forward-time paths. Once equal they
    /// share every draw. Before meeting, `shared` selects one common uniform
    /// (monotone coupling) or independent uniforms.
    fn reversed(&self, rng: &mut ChaCha8Rng, shared: bool) -> (Path, Path) {
        let n = self.n;
        let mut hi = vec![0; n + 1];
        let mut lo = vec![0; n + 1];
        hi[n] = self.param;
        lo[n] = self.param - 1;
        for m in (1..=n).rev() {
            let row = &self.reverse[m];
            let (h, l) = (hi[m], lo[m]);
            let u: f64 = rng.random();
            let v: f64 = if h == l || shared { u } else { rng.random() };
            hi[m - 1] = h - usize::from(h > 0 && u < row[h]);
            lo[m - 1] = l - usize::from(l > 0 && v < row[l]);
        }
        (hi, lo)
    }

    fn lonely(&self, seed: RngSeed) -> (Path, Path) {
        let mut main = seed.stream(MAIN_STREAM);
        let mut hi_rng = seed.stream(HI_STREAM);
        let mut lo_rng = seed.stream(LO_STREAM);
        let (n_hi, n_lo) = self.reversed(&mut main, true);
        let mut hi = vec![0; self.n + 1];
        let mut lo = vec![0; self.n + 1];
        for m in 0..self.n {
            let grows_hi = n_hi[m + 1] > n_hi[m];
            let grows_lo = n_lo[m + 1] > n_lo[m];
            let companion = |l: usize, buses: usize, u: f64| l > 0 && u < l as f64 / buses as f64;
            if !grows_hi && !grows_lo && hi[m] == lo[m] {
                let u: f64 = main.random();
                hi[m + 1] = hi[m] - usize::from(companion(hi[m], n_hi[m], u));
                lo[m + 1] = lo[m] - usize::from(companion(lo[m], n_lo[m], u));
                continue;
            }
            hi[m + 1] = if grows_hi {
                hi[m] + 1
            } else {
                hi[m] - usize::from(companion(hi[m], n_hi[m], hi_rng.random()))
            };
            lo[m + 1] = if grows_lo {
                lo[m] + 1
            } else {
                lo[m] - usize::from(companion(lo[m], n_lo[m], lo_rng.random()))
            };
        }
        (hi, lo)
    }
}

/// Pair of `N^(k+1)` and `N^(k)` paths over `n` arrivals.
pub fn couple_forward_nonempty(n: usize, k: usize, seed: RngSeed) -> Result<CoupledPathPair> {
    Ok(Coupler::new(CouplingKind::Forward, n, k)?.sample(seed))
}

/// Pair of conditioned nonempty paths for `l` and `l - 1` filled buses.
pub fn couple_conditioned_nonempty(n: usize, l: usize, seed: RngSeed) -> Result<CoupledPathPair> {
    Ok(Coupler::new(CouplingKind::Conditioned, n, l)?.sample(seed))
}

/// Conditioned nonempty paths whose difference steps from 0 to 1 exactly once.
pub fn couple_monotone(n: usize, l: usize, seed: RngSeed) -> Result<CoupledPathPair> {
    Ok(Coupler::new(CouplingKind::Monotone, n, l)?.sample(seed))
}

/// Conditioned lonely-count paths for `l` and `l - 1` filled buses.
pub fn couple_lonely(n: usize, l: usize, seed: RngSeed) -> Result<CoupledPathPair> {
    Ok(Coupler::new(CouplingKind::Lonely, n, l)?.sample(seed))
}

/// Pathwise properties a coupled pair can be checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    /// `hi_m >= lo_m` at every time.
    PathwiseGe,
    /// `hi - lo` is `0, .., 0, 1, .., 1` with exactly one unit step.
    MonotoneDifference,
    /// Each component is a possible path of its own marginal chain.
    MarginalValidity,
}

impl Predicate {
    pub const ALL: [Predicate; 3] = [
        Predicate::PathwiseGe,
        Predicate::MonotoneDifference,
        Predicate::MarginalValidity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::PathwiseGe => "pathwise-ge",
            Predicate::MonotoneDifference => "monotone-difference",
            Predicate::MarginalValidity => "marginal-validity",
        }
    }

    /// Predicates that hold by construction for `kind`.
    pub fn declared_for(kind: CouplingKind) -> Vec<Predicate> {
        match kind {
            CouplingKind::Monotone => Predicate::ALL.to_vec(),
            _ => vec![Predicate::PathwiseGe, Predicate::MarginalValidity],
        }
    }

    /// First time index where `pair` violates the predicate.
    pub fn first_violation(self, pair: &CoupledPathPair) -> Option<usize> {
        if pair.hi.len() != pair.n + 1 || pair.lo.len() != pair.n + 1 {
            return Some(0);
        }
        match self {
            Predicate::PathwiseGe => (0..=pair.n).find(|&m| pair.hi[m] < pair.lo[m]),
            Predicate::MonotoneDifference => {
                let diff = |m: usize| pair.hi[m] as i64 - pair.lo[m] as i64;
                (0..=pair.n)
                    .find(|&m| {
                        let d = diff(m);
                        !(0..=1).contains(&d) || (m > 0 && d < diff(m - 1)) || (m == 0 && d != 0)
                    })
                    .or_else(|| (diff(pair.n) != 1).then_some(pair.n))
            }
            Predicate::MarginalValidity => {
                let hi = invalid_at(pair.kind, pair.n, pair.hi_param, &pair.hi);
                let lo = invalid_at(pair.kind, pair.n, pair.lo_param, &pair.lo);
                match (hi, lo) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
        }
    }
}

fn invalid_at(kind: CouplingKind, n: usize, param: usize, path: &[usize]) -> Option<usize> {
    if path[0] != 0 {
        return Some(0);
    }
    if n >= 1 && path[1] != 1 {
        return Some(1);
    }
    for m in 1..=n {
        let (prev, cur) = (path[m - 1], path[m]);
        let ok = match kind {
            CouplingKind::Forward => cur >= prev && cur - prev <= 1 && cur <= param.min(m),
            CouplingKind::Conditioned | CouplingKind::Monotone => {
                cur >= prev && cur - prev <= 1 && cur <= m && cur + (n - m) >= param && cur <= param
            }
            CouplingKind::Lonely => cur.abs_diff(prev) <= 1 && cur <= m.min(param),
        };
        if !ok {
            return Some(m);
        }
    }
    let end_ok = match kind {
        CouplingKind::Forward => true,
        CouplingKind::Conditioned | CouplingKind::Monotone => path[n] == param,
        // every bus filled: the param - L non-lonely buses hold two or more each
        CouplingKind::Lonely => path[n] + 2 * (param - path[n].min(param)) <= n,
    };
    (!end_ok).then_some(n)
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Predicate::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPredicate(s.to_string()))
    }
}

/// Where a predicate first failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationDetail {
    pub sample: u64,
    pub time: usize,
    pub hi: Path,
    pub lo: Path,
}

/// Counts of checked and violating pairs for one predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationReport {
    pub predicate: Predicate,
    pub checked: u64,
    pub violations: u64,
    pub first: Option<ViolationDetail>,
}

impl ViolationReport {
    pub fn new(predicate: Predicate) -> Self {
        ViolationReport {
            predicate,
            checked: 0,
            violations: 0,
            first: None,
        }
    }

    pub fn record(&mut self, sample: u64, pair: &CoupledPathPair) {
        self.checked += 1;
        if let Some(time) = self.predicate.first_violation(pair) {
            self.violations += 1;
            if self.first.as_ref().is_none_or(|f| sample < f.sample) {
                self.first = Some(ViolationDetail {
                    sample,
                    time,
                    hi: pair.hi.clone(),
                    lo: pair.lo.clone(),
                });
            }
        }
    }

    /// Commutative merge; the earliest sample wins the detail slot.
    pub fn merge(mut self, other: ViolationReport) -> ViolationReport {
        debug_assert_eq!(self.predicate, other.predicate);
        self.checked += other.checked;
        self.violations += other.violations;
        self.first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(if b.sample < a.sample { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }

    pub fn is_clean(&self) -> bool {
        self.violations == 0
    }
}

/// Checks a stream of pairs against the predicate called `predicate`.
pub fn verify_pathwise<'a>(
    pairs: impl IntoIterator<Item = &'a CoupledPathPair>,
    predicate: &str,
) -> Result<ViolationReport> {
    let predicate: Predicate = predicate.parse()?;
    let mut report = ViolationReport::new(predicate);
    for (i, pair) in pairs.into_iter().enumerate() {
        report.record(i as u64, pair);
    }
    Ok(report)
}

/// Exact path laws of the two components of a coupling, computed from the
/// forward kernels (birth chain, h-transform), independently of the
/// reversed-chain samplers.
pub fn exact_component_laws(
    kind: CouplingKind,
    n: usize,
    param: usize,
) -> Result<(ExactDist<Path>, ExactDist<Path>)> {
    Coupler::new(kind, n, param)?;
    let (hi, lo) = kind.params(param);
    match kind {
        CouplingKind::Forward => Ok((forward_path_law(n, hi)?, forward_path_law(n, lo)?)),
        CouplingKind::Conditioned | CouplingKind::Monotone => Ok((
            HTransform::new(hi, n)?.path_law()?,
            HTransform::new(lo, n)?.path_law()?,
        )),
        CouplingKind::Lonely => Ok((
            HTransform::new(hi, n)?.lonely_path_law()?,
            HTransform::new(lo, n)?.lonely_path_law()?,
        )),
    }
}

/// Pearson chi-square goodness of fit of observed path counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Samples that landed outside the exact support.
    pub unexpected: u64,
    pub passed: bool,
}

/// Expected cell counts below this are pooled.
const MIN_EXPECTED: f64 = 5.0;

pub fn chi_square_gof(
    counts: &HashMap<Path, u64>,
    law: &ExactDist<Path>,
    alpha: f64,
) -> GofResult {
    let total: u64 = counts.values().sum();
    let unexpected: u64 = counts
        .iter()
        .filter(|(p, _)| law.mass(p) == num_traits::Zero::zero())
        .map(|(_, &c)| c)
        .sum();
    let mut cells: Vec<(f64, f64)> = law
        .iter()
        .map(|(p, mass)| {
            (
                to_f64(mass) * total as f64,
                counts.get(p).copied().unwrap_or(0) as f64,
            )
        })
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (e, o) in cells {
        if e < MIN_EXPECTED {
            pooled.0 += e;
            pooled.1 += o;
        } else {
            bins.push((e, o));
        }
    }
    if pooled.0 > 0.0 {
        if pooled.0 < MIN_EXPECTED && !bins.is_empty() {
            bins[0].0 += pooled.0;
            bins[0].1 += pooled.1;
        } else {
            bins.push(pooled);
        }
    }
    let statistic: f64 = bins.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if unexpected > 0 {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map(|d| d.sf(statistic))
            .unwrap_or(0.0)
    };
    GofResult {
        statistic,
        dof,
        p_value,
        unexpected,
        passed: p_value >= alpha,
    }
}

/// Result of sampling many pairs from one cell.
#[derive(Debug, Clone)]
pub struct BulkRun {
    pub kind: CouplingKind,
    pub n: usize,
    pub param: usize,
    pub paths: u64,
    pub base_seed: RngSeed,
    pub reports: Vec<ViolationReport>,
    pub hi_counts: HashMap<Path, u64>,
    pub lo_counts: HashMap<Path, u64>,
    /// The first few sampled pairs, in seed order.
    pub excerpt: Vec<CoupledPathPair>,
}

impl BulkRun {
    pub fn total_violations(&self) -> u64 {
        self.reports.iter().map(|r| r.violations).sum()
    }

    /// Goodness of fit of both components against their exact path laws.
    pub fn goodness_of_fit(&self, alpha: f64) -> Result<(GofResult, GofResult)> {
        let (hi_law, lo_law) = exact_component_laws(self.kind, self.n, self.param)?;
        Ok((
            chi_square_gof(&self.hi_counts, &hi_law, alpha),
            chi_square_gof(&self.lo_counts, &lo_law, alpha),
        ))
    }
}

struct BulkAcc {
    reports: Vec<ViolationReport>,
    hi_counts: HashMap<Path, u64>,
    lo_counts: HashMap<Path, u64>,
    excerpt: BTreeMap<u64, CoupledPathPair>,
}

const CHUNK: u64 = 1024;
const EXCERPT: u64 = 3;

/// Samples `paths` pairs with seeds `base_seed, base_seed + 1, ..` and checks
/// each against `predicates`. With `negative_control` every pair is swapped
/// before checking and counting.
pub fn run_bulk(
    coupler: &Coupler,
    paths: u64,
    base_seed: RngSeed,
    predicates: &[Predicate],
    negative_control: bool,
    exec: Execution,
) -> BulkRun {
    let init = || BulkAcc {
        reports: predicates.iter().map(|&p| ViolationReport::new(p)).collect(),
        hi_counts: HashMap::new(),
        lo_counts: HashMap::new(),
        excerpt: BTreeMap::new(),
    };
    let chunks = paths.div_ceil(CHUNK);
    let acc = exec.map_reduce(
        chunks,
        init,
        |c| {
            let mut acc = init();
            for i in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                let mut pair = coupler.sample(base_seed.offset(i));
                if negative_control {
                    pair = pair.swapped();
                }
                for r in &mut acc.reports {
                    r.record(i, &pair);
                }
                *acc.hi_counts.entry(pair.hi.clone()).or_insert(0) += 1;
                *acc.lo_counts.entry(pair.lo.clone()).or_insert(0) += 1;
                if i < EXCERPT {
                    acc.excerpt.insert(i, pair);
                }
            }
            acc
        },
        |mut a, b| {
            a.reports = a
                .reports
                .into_iter()
                .zip(b.reports)
                .map(|(x, y)| x.merge(y))
                .collect();
            for (p, c) in b.hi_counts {
                *a.hi_counts.entry(p).or_insert(0) += c;
            }
            for (p, c) in b.lo_counts {
                *a.lo_counts.entry(p).or_insert(0) += c;
            }
            a.excerpt.extend(b.excerpt);
            a
        },
    );
    BulkRun {
        kind: coupler.kind(),
        n: coupler.n(),
        param: coupler.param(),
        paths,
        base_seed,
        reports: acc.reports,
        hi_counts: acc.hi_counts,
        lo_counts: acc.lo_counts,
        excerpt: acc.excerpt.into_values().collect(),
    }
}
