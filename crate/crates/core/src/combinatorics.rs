//! Big-integer combinatorics: Stirling numbers of the second kind, surjection
//! and singleton-free counts, and the two inequality checks on Stirling rows.

use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::dist::{nat_ratio, BigNat, Rational};
use crate::error::{ensure, Result};
use crate::exec::Execution;

/// Lazily grown triangle of `S(n, k)` for `0 <= k <= n <= max_n`.
///
/// Rows are appended whole under the write lock, so a reader either sees a
/// complete row or none of it.
#[derive(Debug)]
pub struct StirlingTable {
    rows: RwLock<Vec<Vec<BigNat>>>,
}

impl Default for StirlingTable {
    fn default() -> Self {
        Self::new()
    }
}

impl StirlingTable {
    pub fn new() -> Self {
        StirlingTable {
            rows: RwLock::new(vec![vec![BigNat::one()]]),
        }
    }

    /// Builds the triangle eagerly up to `max_n`.
    pub fn with_max(max_n: usize) -> Self {
        let table = Self::new();
        table.ensure(max_n);
        table
    }

    pub fn max_n(&self) -> usize {
        self.rows.read().expect("stirling table poisoned").len() - 1
    }

    fn ensure(&self, n: usize) {
        if self.rows.read().expect("stirling table poisoned").len() > n {
            return;
        }
        let mut rows = self.rows.write().expect("stirling table poisoned");
        while rows.len() <= n {
            let prev = rows.last().expect("row 0 always present");
            let i = rows.len();
            let mut row = vec![BigNat::zero(); i + 1];
            for j in 1..=i {
                let carry = prev.get(j).map(|s| s * j).unwrap_or_default();
                row[j] = &prev[j - 1] + carry;
            }
            rows.push(row);
        }
    }

    /// `S(n, k)`, zero outside the triangle.
    pub fn get(&self, n: usize, k: usize) -> BigNat {
        if k > n {
            return BigNat::zero();
        }
        self.ensure(n);
        self.rows.read().expect("stirling table poisoned")[n][k].clone()
    }

    /// The full row `S(n, 0..=n)`.
    pub fn row(&self, n: usize) -> Vec<BigNat> {
        self.ensure(n);
        self.rows.read().expect("stirling table poisoned")[n].clone()
    }
}

/// Process-wide shared table.
pub fn global_table() -> &'static StirlingTable {
    static TABLE: OnceLock<StirlingTable> = OnceLock::new();
    TABLE.get_or_init(StirlingTable::new)
}

/// Number of partitions of an `n`-set into `k` nonempty blocks.
pub fn stirling2(n: usize, k: usize) -> BigNat {
    global_table().get(n, k)
}

pub(crate) fn factorial(n: usize) -> BigNat {
    (1..=n).map(BigNat::from).product()
}

pub(crate) fn falling_factorial(n: usize, j: usize) -> BigNat {
    if j > n {
        return BigNat::zero();
    }
    (n - j + 1..=n).map(BigNat::from).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> BigNat {
    if k > n {
        return BigNat::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigNat::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub(crate) fn pow(base: usize, exp: usize) -> BigNat {
    num_traits::pow(BigNat::from(base), exp)
}

/// Number of onto maps from an `n`-set to a `k`-set, `k! S(n, k)`.
pub fn surjection_count(n: usize, k: usize) -> BigNat {
    factorial(k) * stirling2(n, k)
}

/// Probability that passenger 1 rides alone under the uniform measure on
/// configurations of `m` passengers filling all of `i` buses:
/// `S(m-1, i-1) / S(m, i)`.
pub fn lonely_first_prob_ne(m: usize, i: usize) -> Result<Rational> {
    ensure!(i >= 1, OutOfRange, "bus count i must be >= 1");
    ensure!(
        i <= m,
        OutOfRange,
        "{i} buses cannot all be filled by {m} passengers"
    );
    Ok(nat_ratio(&stirling2(m - 1, i - 1), &stirling2(m, i)))
}

/// `S(n-1, k-1) / S(n, k) <= S(n-1, k) / S(n, k+1)`, compared after
/// cross-multiplication so a vanishing `S(n, k+1)` needs no special case.
pub fn check_stirling_ratio_inequality(n: usize, k: usize) -> bool {
    if n == 0 || k == 0 {
        return true;
    }
    let lhs = stirling2(n - 1, k - 1) * stirling2(n, k + 1);
    let rhs = stirling2(n - 1, k) * stirling2(n, k);
    lhs <= rhs
}

/// Newton's inequality at interior index `k` for coefficients `a_1..a_m`
/// (`coeffs[0]` is `a_1`):
/// `a_{k-1} a_{k+1} C(m,k)^2 <= a_k^2 C(m,k-1) C(m,k+1)`.
pub fn check_newton_inequality(coeffs: &[BigNat], k: usize) -> Result<bool> {
    let m = coeffs.len();
    ensure!(m >= 3, OutOfRange, "need at least 3 coefficients, got {m}");
    ensure!(
        k > 1 && k < m,
        OutOfRange,
        "index {k} is not interior to 1..={m}"
    );
    let a = |j: usize| &coeffs[j - 1];
    let c = binomial(m, k);
    let lhs = a(k - 1) * a(k + 1) * &c * &c;
    let rhs = a(k) * a(k) * binomial(m, k - 1) * binomial(m, k + 1);
    Ok(lhs <= rhs)
}

/// Coefficients `S(n,1), .., S(n,n)` of the Touchard polynomial of order `n`.
pub fn touchard_coefficients(n: usize) -> Vec<BigNat> {
    global_table().row(n).into_iter().skip(1).collect()
}

/// Number of maps from an `m`-set to `b` labeled bins leaving no bin with
/// exactly one element (inclusion-exclusion over forced singletons).
pub fn no_singleton_count(m: usize, b: usize) -> BigNat {
    let mut acc = BigInt::zero();
    for i in 0..=m.min(b) {
        let term = BigInt::from(
            binomial(b, i) * binomial(m, i) * factorial(i) * pow(b - i, m - i),
        );
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc.to_biguint().expect("inclusion-exclusion count is nonnegative")
}

/// Number of configurations of `n` passengers on `k` buses with exactly `j`
/// lonely passengers.
pub fn lonely_count_configs(n: usize, k: usize, j: usize) -> BigNat {
    if j > n || j > k {
        return BigNat::zero();
    }
    binomial(n, j) * falling_factorial(k, j) * no_singleton_count(n - j, k - j)
}

/// All `(n, k)` with `1 <= k < n <= n_max` where the ratio inequality fails.
pub fn stirling_ratio_failures(n_max: usize, exec: Execution) -> Vec<(usize, usize)> {
    global_table().get(n_max, 0);
    let rows: Vec<usize> = (2..=n_max).collect();
    exec.map(rows, |n| {
        (1..n)
            .filter(|&k| !check_stirling_ratio_inequality(n, k))
            .map(|k| (n, k))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// All `(n, k)` with `n <= n_max` and `1 < k < n` where Newton's inequality
/// fails on the Touchard row of order `n`.
pub fn newton_failures(n_max: usize, exec: Execution) -> Vec<(usize, usize)> {
    global_table().get(n_max, 0);
    let rows: Vec<usize> = (3..=n_max).collect();
    exec.map(rows, |n| {
        let coeffs = touchard_coefficients(n);
        (2..n)
            .filter(|&k| !check_newton_inequality(&coeffs, k).unwrap_or(false))
            .map(|k| (n, k))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}
