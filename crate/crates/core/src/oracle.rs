//! Brute-force enumeration of all `k^n` seatings, the ground truth for every
//! exact quantity computed elsewhere in the crate.
//!
//! Configurations are visited depth-first in odometer order (last passenger
//! fastest) with the nonempty and lonely counts maintained incrementally.
//! Work is split by the first passenger's bus; counts are plain integers
//! bounded by the enumeration limit and become rationals only at the end.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;

use crate::chain::{joint_slices, Path, PairState};
use crate::dist::{ExactDist, Rational};
use crate::error::{ensure, Error, Result};
use crate::exec::Execution;

pub const DEFAULT_LIMIT: u64 = 1_000_000;

/// One seating: `buses[j]` is the bus (in `1..=k`) taken by passenger `j+1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    buses: Vec<usize>,
}

impl Configuration {
    pub fn new(buses: Vec<usize>, k: usize) -> Result<Self> {
        ensure!(
            buses.iter().all(|&b| b >= 1 && b <= k),
            OutOfRange,
            "bus numbers must lie in 1..={k}"
        );
        Ok(Configuration { buses })
    }

    pub fn buses(&self) -> &[usize] {
        &self.buses
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    /// `N_0..N_n`: distinct buses among the first `m` passengers.
    pub fn nonempty_path(&self) -> Path {
        let mut tracker = Tracker::new(self.max_bus());
        let mut path = vec![0];
        for &b in &self.buses {
            tracker.push(b);
            path.push(tracker.nonempty);
        }
        path
    }

    /// `L_0..L_n`: passengers alone on their bus after `m` arrivals.
    pub fn lonely_path(&self) -> Path {
        let mut tracker = Tracker::new(self.max_bus());
        let mut path = vec![0];
        for &b in &self.buses {
            tracker.push(b);
            path.push(tracker.lonely);
        }
        path
    }

    pub fn final_state(&self) -> PairState {
        let mut tracker = Tracker::new(self.max_bus());
        for &b in &self.buses {
            tracker.push(b);
        }
        PairState::new(self.len(), tracker.nonempty, tracker.lonely)
    }

    pub fn first_passenger_lonely(&self) -> bool {
        match self.buses.split_first() {
            Some((first, rest)) => !rest.contains(first),
            None => false,
        }
    }

    /// Whether every bus in `1..=l` is taken (and no other).
    pub fn fills_exactly(&self, l: usize) -> bool {
        let mut seen = vec![false; l + 1];
        for &b in &self.buses {
            if b > l {
                return false;
            }
            seen[b] = true;
        }
        seen[1..].iter().all(|&s| s)
    }

    fn max_bus(&self) -> usize {
        self.buses.iter().copied().max().unwrap_or(0)
    }
}

/// Every configuration of `n` passengers on `k` buses, odometer order.
pub fn configurations(n: usize, k: usize) -> impl Iterator<Item = Configuration> {
    let mut next = if k == 0 && n > 0 {
        None
    } else {
        Some(vec![1; n])
    };
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        let mut pos = n;
        while pos > 0 {
            pos -= 1;
            if succ[pos] < k {
                succ[pos] += 1;
                next = Some(succ);
                break;
            }
            succ[pos] = 1;
        }
        Some(Configuration { buses: current })
    })
}

/// `k^n`, rejected when above `limit`.
pub fn check_size(n: usize, k: usize, limit: u64) -> Result<u64> {
    let size = u32::try_from(n)
        .ok()
        .and_then(|e| (k as u128).checked_pow(e))
        .unwrap_or(u128::MAX);
    if size > limit as u128 {
        return Err(Error::SizeLimit { size, limit });
    }
    Ok(size as u64)
}

struct Tracker {
    counts: Vec<u32>,
    nonempty: usize,
    lonely: usize,
}

impl Tracker {
    fn new(k: usize) -> Self {
        Tracker {
            counts: vec![0; k + 1],
            nonempty: 0,
            lonely: 0,
        }
    }

    fn push(&mut self, b: usize) {
        match self.counts[b] {
            0 => {
                self.nonempty += 1;
                self.lonely += 1;
            }
            1 => self.lonely -= 1,
            _ => {}
        }
        self.counts[b] += 1;
    }

    fn pop(&mut self, b: usize) {
        self.counts[b] -= 1;
        match self.counts[b] {
            0 => {
                self.nonempty -= 1;
                self.lonely -= 1;
            }
            1 => self.lonely += 1,
            _ => {}
        }
    }
}

/// A fully seated configuration together with its count paths.
pub(crate) struct Trajectory<'a> {
    pub buses: &'a [usize],
    pub nonempty: &'a [usize],
    pub lonely: &'a [usize],
}

struct Walker<'v, A, V> {
    n: usize,
    k: usize,
    tracker: Tracker,
    buses: Vec<usize>,
    nonempty: Vec<usize>,
    lonely: Vec<usize>,
    visit: &'v V,
    acc: A,
}

impl<A, V: Fn(&mut A, &Trajectory<'_>)> Walker<'_, A, V> {
    fn seat(&mut self, b: usize) {
        self.tracker.push(b);
        self.buses.push(b);
        self.nonempty.push(self.tracker.nonempty);
        self.lonely.push(self.tracker.lonely);
    }

    fn unseat(&mut self) {
        let b = self.buses.pop().expect("seated passenger");
        self.nonempty.pop();
        self.lonely.pop();
        self.tracker.pop(b);
    }

    fn descend(&mut self) {
        if self.buses.len() == self.n {
            let traj = Trajectory {
                buses: &self.buses,
                nonempty: &self.nonempty,
                lonely: &self.lonely,
            };
            (self.visit)(&mut self.acc, &traj);
            return;
        }
        for b in 1..=self.k {
            self.seat(b);
            self.descend();
            self.unseat();
        }
    }
}

/// Folds `visit` over every configuration, partitioned by the first bus.
pub(crate) fn fold_configurations<A, I, V, M>(
    n: usize,
    k: usize,
    limit: u64,
    exec: Execution,
    init: I,
    visit: V,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &Trajectory<'_>) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    ensure!(k >= 1, OutOfRange, "bus count must be >= 1");
    check_size(n, k, limit)?;
    let walk = |first: Option<usize>| {
        let mut walker = Walker {
            n,
            k,
            tracker: Tracker::new(k),
            buses: Vec::with_capacity(n),
            nonempty: vec![0],
            lonely: vec![0],
            visit: &visit,
            acc: init(),
        };
        if let Some(b) = first {
            walker.seat(b);
        }
        walker.descend();
        walker.acc
    };
    if n == 0 {
        return Ok(walk(None));
    }
    Ok(exec.map_reduce(k as u64, &init, |b| walk(Some(b as usize + 1)), &merge))
}

fn slices_from_counts(n: usize, counts: &[u64], total: u64) -> Result<Vec<ExactDist<PairState>>> {
    let side = n + 1;
    let total = Rational::from_integer(total.into());
    (0..=n)
        .map(|m| {
            let mut masses = Vec::new();
            for nb in 0..side {
                for l in 0..side {
                    let c = counts[(m * side + nb) * side + l];
                    if c > 0 {
                        masses.push((
                            PairState::new(m, nb, l),
                            Rational::from_integer(c.into()) / &total,
                        ));
                    }
                }
            }
            ExactDist::from_masses(masses)
        })
        .collect()
}

/// Exact laws of `(N_m, L_m)` for every `m = 0..=n`, by direct counting.
pub fn enumerate_joint(
    n: usize,
    k: usize,
    limit: u64,
    exec: Execution,
) -> Result<Vec<ExactDist<PairState>>> {
    let side = n + 1;
    let counts = fold_configurations(
        n,
        k,
        limit,
        exec,
        || vec![0u64; side * side * side],
        |acc, t| {
            for m in 0..=n {
                acc[(m * side + t.nonempty[m]) * side + t.lonely[m]] += 1;
            }
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    )?;
    slices_from_counts(n, &counts, check_size(n, k, limit)?)
}

/// Permutation-symmetric functionals of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    LonelyPath,
    NonemptyPath,
    FinalLonely,
    FirstPassengerLonely,
}

/// Value of a [`Functional`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Path(Path),
    Count(usize),
    Flag(bool),
}

impl Functional {
    pub const ALL: [Functional; 4] = [
        Functional::LonelyPath,
        Functional::NonemptyPath,
        Functional::FinalLonely,
        Functional::FirstPassengerLonely,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::LonelyPath => "lonely-path",
            Functional::NonemptyPath => "nonempty-path",
            Functional::FinalLonely => "final-lonely",
            Functional::FirstPassengerLonely => "first-passenger-lonely",
        }
    }

    pub fn eval(self, config: &Configuration) -> Outcome {
        match self {
            Functional::LonelyPath => Outcome::Path(config.lonely_path()),
            Functional::NonemptyPath => Outcome::Path(config.nonempty_path()),
            Functional::FinalLonely => Outcome::Count(config.final_state().lonely),
            Functional::FirstPassengerLonely => Outcome::Flag(config.first_passenger_lonely()),
        }
    }

    // Compact keys for the hot loop: birth bits for the nonempty path,
    // base-3 step digits for the lonely path.
    fn encode(self, t: &Trajectory<'_>) -> u64 {
        match self {
            Functional::NonemptyPath => t
                .nonempty
                .windows(2)
                .fold(0, |acc, w| (acc << 1) | (w[1] - w[0]) as u64),
            Functional::LonelyPath => t
                .lonely
                .windows(2)
                .fold(0, |acc, w| acc * 3 + (w[1] + 1 - w[0]) as u64),
            Functional::FinalLonely => *t.lonely.last().expect("time 0 present") as u64,
            Functional::FirstPassengerLonely => match t.buses.split_first() {
                Some((first, rest)) => u64::from(!rest.contains(first)),
                None => 0,
            },
        }
    }

    fn decode(self, code: u64, n: usize) -> Outcome {
        match self {
            Functional::NonemptyPath => {
                let mut path = vec![0];
                for j in (0..n).rev() {
                    let last = *path.last().expect("nonempty");
                    path.push(last + ((code >> j) & 1) as usize);
                }
                Outcome::Path(path)
            }
            Functional::LonelyPath => {
                let mut digits = Vec::with_capacity(n);
                let mut c = code;
                for _ in 0..n {
                    digits.push(c % 3);
                    c /= 3;
                }
                let mut path = vec![0usize];
                for d in digits.into_iter().rev() {
                    let last = *path.last().expect("nonempty");
                    path.push(last + d as usize - 1);
                }
                Outcome::Path(path)
            }
            Functional::FinalLonely => Outcome::Count(code as usize),
            Functional::FirstPassengerLonely => Outcome::Flag(code == 1),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Functional::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::OutOfRange(format!("{s:?} is not a catalog functional")))
    }
}

type CodeCounts = HashMap<(usize, Functional, u64), u64>;

fn merge_code_counts(mut a: CodeCounts, b: CodeCounts) -> CodeCounts {
    for (key, c) in b {
        *a.entry(key).or_insert(0) += c;
    }
    a
}

fn laws_from_codes(n: usize, counts: CodeCounts) -> Result<BTreeMap<(usize, Functional), ExactDist<Outcome>>> {
    let mut grouped: BTreeMap<(usize, Functional), Vec<(Outcome, BigUint)>> = BTreeMap::new();
    for ((l, f, code), c) in counts {
        grouped
            .entry((l, f))
            .or_default()
            .push((f.decode(code, n), BigUint::from(c)));
    }
    grouped
        .into_iter()
        .map(|(key, entries)| Ok((key, ExactDist::from_counts(entries)?)))
        .collect()
}

/// Longest horizon whose path codes fit the packed keys.
pub const MAX_PATH_CODE_LEN: usize = 24;

/// Laws of every catalog functional under `P_{k,n}( . | N_n = l)`, for every
/// `l` with positive probability, from a single enumeration.
pub fn conditioned_laws(
    n: usize,
    k: usize,
    limit: u64,
    exec: Execution,
) -> Result<BTreeMap<(usize, Functional), ExactDist<Outcome>>> {
    ensure!(n <= MAX_PATH_CODE_LEN, OutOfRange, "horizon {n} too long for path codes");
    let counts = fold_configurations(
        n,
        k,
        limit,
        exec,
        CodeCounts::new,
        |acc, t| {
            let l = t.nonempty[n];
            for f in Functional::ALL {
                *acc.entry((l, f, f.encode(t))).or_insert(0) += 1;
            }
        },
        merge_code_counts,
    )?;
    laws_from_codes(n, counts)
}

/// Law of `functional` under `P_{k,n}( . | N_n = l)`.
pub fn conditioned_law(
    n: usize,
    k: usize,
    l: usize,
    functional: Functional,
    limit: u64,
    exec: Execution,
) -> Result<ExactDist<Outcome>> {
    conditioned_laws(n, k, limit, exec)?
        .remove(&(l, functional))
        .ok_or_else(|| {
            Error::NullConditioning(format!("N_n = {l} is impossible for n={n}, k={k}"))
        })
}

/// Law of `functional` under the uniform measure on seatings of `n`
/// passengers that fill all of `l` buses.
pub fn ne_law(
    l: usize,
    n: usize,
    functional: Functional,
    limit: u64,
    exec: Execution,
) -> Result<ExactDist<Outcome>> {
    let counts = ne_fold(l, n, limit, exec, |acc: &mut HashMap<u64, u64>, t| {
        *acc.entry(functional.encode(t)).or_insert(0) += 1;
    })?;
    ExactDist::from_counts(
        counts
            .into_iter()
            .map(|(code, c)| (functional.decode(code, n), BigUint::from(c))),
    )
}

fn ne_fold<V>(l: usize, n: usize, limit: u64, exec: Execution, visit: V) -> Result<HashMap<u64, u64>>
where
    V: Fn(&mut HashMap<u64, u64>, &Trajectory<'_>) + Sync + Send,
{
    ensure!(l >= 1 && l <= n, OutOfRange, "need 1 <= l <= n, got l={l}, n={n}");
    ensure!(n <= MAX_PATH_CODE_LEN, OutOfRange, "horizon {n} too long for path codes");
    fold_configurations(
        n,
        l,
        limit,
        exec,
        HashMap::new,
        |acc, t| {
            let mut seen = vec![false; l + 1];
            t.buses.iter().for_each(|&b| seen[b] = true);
            if seen[1..].iter().all(|&s| s) {
                visit(acc, t);
            }
        },
        |mut a, b| {
            for (key, c) in b {
                *a.entry(key).or_insert(0) += c;
            }
            a
        },
    )
}

/// Exact path law of `(N_m, L_m)_{m=0..n}` under the uniform measure on
/// seatings that fill all `l` buses.
#[derive(Debug, Clone)]
pub struct NePathLaw {
    pub l: usize,
    pub n: usize,
    /// Number of filling seatings, `|Omega^(l,n,NE)|`.
    pub size: BigUint,
    /// Joint law of the (nonempty path, lonely path) pair.
    pub paths: ExactDist<(Path, Path)>,
}

impl NePathLaw {
    pub fn nonempty_at(&self, m: usize) -> ExactDist<usize> {
        self.paths.map(|(np, _)| np[m])
    }

    pub fn lonely_at(&self, m: usize) -> ExactDist<usize> {
        self.paths.map(|(_, lp)| lp[m])
    }

    pub fn nonempty_path_law(&self) -> ExactDist<Path> {
        self.paths.map(|(np, _)| np.clone())
    }

    pub fn lonely_path_law(&self) -> ExactDist<Path> {
        self.paths.map(|(_, lp)| lp.clone())
    }
}

/// Enumerates the filling seatings of `n` passengers on `l` buses.
pub fn ne_enumerate(l: usize, n: usize, limit: u64, exec: Execution) -> Result<NePathLaw> {
    // nonempty path code in the high half, lonely path code in the low half
    let counts = ne_fold(l, n, limit, exec, |acc, t| {
        let key = (Functional::NonemptyPath.encode(t) << 40) | Functional::LonelyPath.encode(t);
        *acc.entry(key).or_insert(0) += 1;
    })?;
    let size: BigUint = counts.values().map(|&c| BigUint::from(c)).sum();
    let decode_path = |f: Functional, code: u64| match f.decode(code, n) {
        Outcome::Path(p) => p,
        _ => unreachable!("path functionals decode to paths"),
    };
    let paths = ExactDist::from_counts(counts.into_iter().map(|(key, c)| {
        let np = decode_path(Functional::NonemptyPath, key >> 40);
        let lp = decode_path(Functional::LonelyPath, key & ((1 << 40) - 1));
        ((np, lp), BigUint::from(c))
    }))?;
    Ok(NePathLaw { l, n, size, paths })
}

/// Cells `(n, k)` swept by the oracle checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleGrid {
    pub limit: u64,
    pub n_max: usize,
    pub k_max: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            limit: DEFAULT_LIMIT,
            n_max: 20,
            k_max: 64,
        }
    }
}

impl OracleGrid {
    /// All `1 <= n <= n_max`, `1 <= k <= k_max` with `k^n <= limit`.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for n in 1..=self.n_max {
            for k in 1..=self.k_max {
                if check_size(n, k, self.limit).is_ok() {
                    cells.push((n, k));
                }
            }
        }
        cells
    }
}

/// A cell where the enumerated law disagrees with the DP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleMismatch {
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

/// Compares every per-time slice of the DP with the enumeration, across the grid.
pub fn dp_agreement(grid: &OracleGrid, exec: Execution) -> Result<Vec<OracleMismatch>> {
    let results = exec.map(grid.cells(), |(n, k)| -> Result<Vec<OracleMismatch>> {
        let counted = enumerate_joint(n, k, grid.limit, Execution::Sequential)?;
        let dp = joint_slices(n, k)?;
        Ok((0..=n)
            .filter(|&m| counted[m] != dp[m])
            .map(|m| OracleMismatch { n, k, m })
            .collect())
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// A `(n, k, l, functional)` where conditioning on `N_n = l` does not
/// reproduce the no-empty-bus law.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditioningFailure {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub functional: Functional,
}

/// Summary of a conditioning-lemma sweep.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConditioningReport {
    pub comparisons: usize,
    pub failures: Vec<ConditioningFailure>,
}

/// For every grid cell, every `1 <= l <= min(n, k)` and every catalog
/// functional, checks that the law conditioned on `N_n = l` equals the law
/// under the uniform measure on seatings filling `l` buses.
pub fn conditioning_lemma_check(grid: &OracleGrid, exec: Execution) -> Result<ConditioningReport> {
    let mut ne_cache: HashMap<(usize, usize), BTreeMap<Functional, ExactDist<Outcome>>> =
        HashMap::new();
    let cells = grid.cells();
    for &(n, k) in &cells {
        for l in 1..=n.min(k) {
            if let std::collections::hash_map::Entry::Vacant(e) = ne_cache.entry((l, n)) {
                let mut laws = BTreeMap::new();
                for f in Functional::ALL {
                    laws.insert(f, ne_law(l, n, f, grid.limit, exec)?);
                }
                e.insert(laws);
            }
        }
    }
    let per_cell = exec.map(cells, |(n, k)| -> Result<ConditioningReport> {
        let laws = conditioned_laws(n, k, grid.limit, Execution::Sequential)?;
        let mut report = ConditioningReport::default();
        for l in 1..=n.min(k) {
            for f in Functional::ALL {
                report.comparisons += 1;
                if laws.get(&(l, f)) != ne_cache[&(l, n)].get(&f) {
                    report.failures.push(ConditioningFailure { n, k, l, functional: f });
                }
            }
        }
        Ok(report)
    });
    let mut total = ConditioningReport::default();
    for r in per_cell {
        let r = r?;
        total.comparisons += r.comparisons;
        total.failures.extend(r.failures);
    }
    Ok(total)
}
