use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision nonnegative integer.
pub type BigNat = BigUint;

/// Exact fraction, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
    Rational::new(num.into(), den.into())
}

pub fn nat_ratio(num: &BigNat, den: &BigNat) -> Rational {
    Rational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// Renders a rational as `num/den`, including integers (`1/1`).
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses the `num/den` form produced by [`fmt_rational`]; a bare integer is accepted too.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse::<BigInt>().ok()?, d.trim().parse::<BigInt>().ok()?),
        None => (s.trim().parse::<BigInt>().ok()?, BigInt::one()),
    };
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

pub fn to_f64(r: &Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// A finite probability distribution with exact masses.
///
/// Outcomes with zero mass are never stored, so two distributions are equal
/// exactly when they assign the same mass to every outcome.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactDist<T: Ord> {
    masses: BTreeMap<T, Rational>,
}

impl<T: Ord + Clone> ExactDist<T> {
    /// Builds a distribution, merging repeated outcomes. Fails unless every
    /// mass is nonnegative and the total is exactly one.
    pub fn from_masses(entries: impl IntoIterator<Item = (T, Rational)>) -> Result<Self> {
        let mut masses = BTreeMap::new();
        for (outcome, mass) in entries {
            if mass.is_negative() {
                return Err(Error::NegativeMass(fmt_rational(&mass)));
            }
            *masses.entry(outcome).or_insert_with(Rational::zero) += mass;
        }
        masses.retain(|_, m: &mut Rational| !m.is_zero());
        let total: Rational = masses.values().sum();
        if !total.is_one() {
            return Err(Error::NotNormalized(fmt_rational(&total)));
        }
        Ok(ExactDist { masses })
    }

    /// Normalizes integer counts into a distribution.
    pub fn from_counts(counts: impl IntoIterator<Item = (T, BigNat)>) -> Result<Self> {
        let counts: Vec<(T, BigNat)> = counts.into_iter().collect();
        let total: BigNat = counts.iter().map(|(_, c)| c).sum();
        if total.is_zero() {
            return Err(Error::NotNormalized("0".into()));
        }
        Self::from_masses(counts.into_iter().map(|(t, c)| (t, nat_ratio(&c, &total))))
    }

    pub fn point(outcome: T) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(outcome, Rational::one());
        ExactDist { masses }
    }

    pub fn mass(&self, outcome: &T) -> Rational {
        self.masses.get(outcome).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rational)> {
        self.masses.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.masses.keys()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Pushforward along `f`.
    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> ExactDist<U> {
        let mut masses: BTreeMap<U, Rational> = BTreeMap::new();
        for (t, m) in &self.masses {
            *masses.entry(f(t)).or_insert_with(Rational::zero) += m;
        }
        ExactDist { masses }
    }

    /// Expectation of an exact-valued function.
    pub fn expect(&self, mut f: impl FnMut(&T) -> Rational) -> Rational {
        self.masses.iter().map(|(t, m)| f(t) * m).sum()
    }

    /// Probability of the event `pred`.
    pub fn prob(&self, mut pred: impl FnMut(&T) -> bool) -> Rational {
        self.masses.iter().filter(|(t, _)| pred(t)).map(|(_, m)| m).sum()
    }

    pub fn into_map(self) -> BTreeMap<T, Rational> {
        self.masses
    }
}

impl ExactDist<usize> {
    /// `P(X >= u)`.
    pub fn tail(&self, u: usize) -> Rational {
        self.masses.range(u..).map(|(_, m)| m).sum()
    }

    pub fn max_outcome(&self) -> usize {
        self.masses.keys().next_back().copied().unwrap_or(0)
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for ExactDist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.masses.iter().map(|(k, v)| (k, fmt_rational(v))))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_and_negative() {
        assert!(matches!(
            ExactDist::from_masses([(0usize, ratio(1, 2))]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            ExactDist::from_masses([(0usize, ratio(3, 2)), (1, ratio(-1, 2))]),
            Err(Error::NegativeMass(_))
        ));
    }

    #[test]
    fn merges_duplicates_and_drops_zeros() {
        let d = ExactDist::from_masses([
            (1usize, ratio(1, 4)),
            (1, ratio(1, 4)),
            (2, ratio(1, 2)),
            (3, ratio(0, 1)),
        ])
        .unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.mass(&1), ratio(1, 2));
        assert_eq!(d.tail(2), ratio(1, 2));
        assert_eq!(d.tail(0), ratio(1, 1));
        assert_eq!(d.tail(3), ratio(0, 1));
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(fmt_rational(&ratio(1, 1)), "1/1");
        assert_eq!(fmt_rational(&ratio(6, 8)), "3/4");
        assert_eq!(parse_rational("3/4"), Some(ratio(3, 4)));
        assert_eq!(parse_rational("2"), Some(ratio(2, 1)));
        assert_eq!(parse_rational("1/0"), None);
    }
}
