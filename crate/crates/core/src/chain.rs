//! Exact Markov-chain machinery for the arrival process.
//!
//! The unconditioned model is a pure birth chain for the nonempty-bus count
//! `N` (birth probability `1 - i/k`) carried jointly with the lonely count `L`.
//! Conditioning on `N_n = l` is realized as an h-transform of the birth chain
//! with `l` buses, and its time reversal is a pure death chain whose jump
//! probabilities are Stirling ratios independent of `l`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, factorial, lonely_first_prob_ne, pow, stirling2};
use crate::dist::{nat_ratio, ratio, ExactDist, Rational};
use crate::error::{ensure, Error, Result};

/// Time-indexed sequence of chain states, starting at time 0.
pub type Path = Vec<usize>;

/// Nonempty-bus and lonely-passenger counts after `m` arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairState {
    pub m: usize,
    pub n_buses: usize,
    pub lonely: usize,
}

impl PairState {
    pub const START: PairState = PairState {
        m: 0,
        n_buses: 0,
        lonely: 0,
    };

    pub fn new(m: usize, n_buses: usize, lonely: usize) -> Self {
        PairState { m, n_buses, lonely }
    }

    /// Checks `L <= N <= m` and `N <= k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        ensure!(
            self.lonely <= self.n_buses && self.n_buses <= self.m,
            InvalidState,
            "{self:?} violates L <= N <= m"
        );
        ensure!(
            self.n_buses <= k,
            InvalidState,
            "{self:?} has more nonempty buses than the {k} available"
        );
        Ok(())
    }
}

/// Probability that the next passenger opens a new bus when `i` of `k` are taken.
pub fn forward_birth_prob(k: usize, i: usize) -> Result<Rational> {
    ensure!(k >= 1, OutOfRange, "bus count must be >= 1");
    ensure!(i <= k, OutOfRange, "state {i} exceeds bus count {k}");
    Ok(ratio(k - i, k))
}

/// One-step law of the joint `(N, L)` chain with `k` buses.
pub fn pair_step_dist(k: usize, s: PairState) -> Result<ExactDist<PairState>> {
    ensure!(k >= 1, OutOfRange, "bus count must be >= 1");
    s.validate(k)?;
    let PairState { m, n_buses, lonely } = s;
    ExactDist::from_masses([
        (PairState::new(m + 1, n_buses + 1, lonely + 1), ratio(k - n_buses, k)),
        (
            PairState::new(m + 1, n_buses, lonely.saturating_sub(1)),
            ratio(lonely, k),
        ),
        (PairState::new(m + 1, n_buses, lonely), ratio(n_buses - lonely, k)),
    ])
}

fn step_all(k: usize, current: &ExactDist<PairState>) -> Result<ExactDist<PairState>> {
    let mut next: BTreeMap<PairState, Rational> = BTreeMap::new();
    for (state, mass) in current.iter() {
        for (succ, p) in pair_step_dist(k, *state)?.iter() {
            *next.entry(*succ).or_insert_with(Rational::zero) += mass * p;
        }
    }
    ExactDist::from_masses(next)
}

/// Exact laws of `(N_m, L_m)` for `m = 0..=n` with `k` buses.
pub fn joint_slices(n: usize, k: usize) -> Result<Vec<ExactDist<PairState>>> {
    ensure!(k >= 1, OutOfRange, "bus count must be >= 1");
    let mut slices = Vec::with_capacity(n + 1);
    slices.push(ExactDist::point(PairState::START));
    for _ in 0..n {
        let next = step_all(k, slices.last().expect("nonempty"))?;
        slices.push(next);
    }
    Ok(slices)
}

/// Exact joint law of `(N_n, L_n)` after `n` arrivals on `k` buses.
pub fn exact_joint_dist(n: usize, k: usize) -> Result<ExactDist<PairState>> {
    Ok(joint_slices(n, k)?.pop().expect("slice 0 always present"))
}

/// Law of the final lonely count `L_n`.
pub fn lonely_dist(n: usize, k: usize) -> Result<ExactDist<usize>> {
    Ok(exact_joint_dist(n, k)?.map(|s| s.lonely))
}

/// Law of the final nonempty count `N_n`.
pub fn nonempty_dist(n: usize, k: usize) -> Result<ExactDist<usize>> {
    Ok(exact_joint_dist(n, k)?.map(|s| s.n_buses))
}

/// Probability that at least one of `n` passengers on `k` buses travels alone.
pub fn p_lonely(n: usize, k: usize) -> Result<Rational> {
    ensure!(n >= 1, OutOfRange, "need at least one passenger");
    Ok(lonely_dist(n, k)?.tail(1))
}

/// Laws of `N_m` for `m = 0..=n` under the plain birth chain, computed only
/// from the birth probabilities.
pub fn nonempty_slices(n: usize, k: usize) -> Result<Vec<ExactDist<usize>>> {
    ensure!(k >= 1, OutOfRange, "bus count must be >= 1");
    let mut slices = vec![ExactDist::point(0usize)];
    for _ in 0..n {
        let mut next: BTreeMap<usize, Rational> = BTreeMap::new();
        for (&i, mass) in slices.last().expect("nonempty").iter() {
            let r = forward_birth_prob(k, i)?;
            let stay = Rational::one() - &r;
            *next.entry(i + 1).or_insert_with(Rational::zero) += mass * r;
            *next.entry(i).or_insert_with(Rational::zero) += mass * stay;
        }
        slices.push(ExactDist::from_masses(next)?);
    }
    Ok(slices)
}

/// Exact law of the full path `N_0..N_n` of the birth chain with `k` buses.
pub fn forward_path_law(n: usize, k: usize) -> Result<ExactDist<Path>> {
    ensure!(k >= 1, OutOfRange, "bus count must be >= 1");
    let mut layer: Vec<(Path, Rational)> = vec![(vec![0], Rational::one())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(layer.len() * 2);
        for (path, mass) in layer {
            let i = *path.last().expect("nonempty");
            let r = forward_birth_prob(k, i)?;
            if !r.is_zero() {
                let mut up = path.clone();
                up.push(i + 1);
                next.push((up, &mass * &r));
            }
            let stay = Rational::one() - r;
            if !stay.is_zero() {
                let mut flat = path;
                flat.push(i);
                next.push((flat, mass * stay));
            }
        }
        layer = next;
    }
    ExactDist::from_masses(layer)
}

/// The birth chain with `l` buses conditioned on ending with all `l` buses
/// nonempty after `n` arrivals, as an h-transform.
///
/// `h(m, i) = P(N_n = l | N_m = i)` is tabulated by backward recursion.
#[derive(Debug, Clone)]
pub struct HTransform {
    l: usize,
    n: usize,
    h: Vec<Vec<Rational>>,
}

impl HTransform {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        ensure!(l >= 1, OutOfRange, "target bus count must be >= 1");
        let mut h = vec![vec![Rational::zero(); l + 1]; n + 1];
        h[n][l] = Rational::one();
        for m in (0..n).rev() {
            for i in 0..=l {
                let r = forward_birth_prob(l, i)?;
                let grow = if i < l {
                    &r * &h[m + 1][i + 1]
                } else {
                    Rational::zero()
                };
                h[m][i] = grow + (Rational::one() - r) * &h[m + 1][i];
            }
        }
        Ok(HTransform { l, n, h })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self, m: usize, i: usize) -> Result<Rational> {
        ensure!(m <= self.n, OutOfRange, "time {m} beyond horizon {}", self.n);
        ensure!(i <= self.l, OutOfRange, "state {i} beyond target {}", self.l);
        Ok(self.h[m][i].clone())
    }

    /// Birth probability of the conditioned chain from state `i` at time `m`.
    pub fn birth_prob(&self, m: usize, i: usize) -> Result<Rational> {
        ensure!(m < self.n, OutOfRange, "no step leaves the horizon time {m}");
        let here = self.h(m, i)?;
        if here.is_zero() {
            return Err(Error::NullConditioning(format!(
                "state {i} at time {m} cannot reach {} by time {}",
                self.l, self.n
            )));
        }
        if i == self.l {
            return Ok(Rational::zero());
        }
        Ok(forward_birth_prob(self.l, i)? * &self.h[m + 1][i + 1] / here)
    }

    fn ensure_feasible(&self) -> Result<()> {
        if self.h[0][0].is_zero() {
            return Err(Error::NullConditioning(format!(
                "{} passengers cannot fill {} buses",
                self.n, self.l
            )));
        }
        Ok(())
    }

    /// Laws of the conditioned count at every time `0..=n`, by forward
    /// iteration of the h-transformed kernel.
    pub fn nonempty_slices(&self) -> Result<Vec<ExactDist<usize>>> {
        self.ensure_feasible()?;
        let mut slices = vec![ExactDist::point(0usize)];
        for m in 0..self.n {
            let mut next: BTreeMap<usize, Rational> = BTreeMap::new();
            for (&i, mass) in slices[m].iter() {
                let q = self.birth_prob(m, i)?;
                let stay = Rational::one() - &q;
                *next.entry(i + 1).or_insert_with(Rational::zero) += mass * q;
                *next.entry(i).or_insert_with(Rational::zero) += mass * stay;
            }
            slices.push(ExactDist::from_masses(next)?);
        }
        Ok(slices)
    }

    /// Exact law of the conditioned path `N_0..N_n`.
    pub fn path_law(&self) -> Result<ExactDist<Path>> {
        self.ensure_feasible()?;
        let mut layer: Vec<(Path, Rational)> = vec![(vec![0], Rational::one())];
        for m in 0..self.n {
            let mut next = Vec::with_capacity(layer.len() * 2);
            for (path, mass) in layer {
                let i = *path.last().expect("nonempty");
                let q = self.birth_prob(m, i)?;
                if !q.is_zero() {
                    let mut up = path.clone();
                    up.push(i + 1);
                    next.push((up, &mass * &q));
                }
                let stay = Rational::one() - q;
                if !stay.is_zero() {
                    let mut flat = path;
                    flat.push(i);
                    next.push((flat, mass * stay));
                }
            }
            layer = next;
        }
        ExactDist::from_masses(layer)
    }

    /// Successors of a joint conditioned state: a new bus makes the arrival
    /// lonely; otherwise the arrival joins a uniform nonempty bus and ends a
    /// lonely passenger's solitude with probability `L / N`.
    fn joint_successors(&self, s: PairState) -> Result<Vec<(PairState, Rational)>> {
        let q = self.birth_prob(s.m, s.n_buses)?;
        let stay = Rational::one() - &q;
        let mut out = Vec::with_capacity(3);
        if !q.is_zero() {
            out.push((PairState::new(s.m + 1, s.n_buses + 1, s.lonely + 1), q));
        }
        if !stay.is_zero() {
            let companion = ratio(s.lonely, s.n_buses);
            if s.lonely > 0 {
                out.push((
                    PairState::new(s.m + 1, s.n_buses, s.lonely - 1),
                    &stay * &companion,
                ));
            }
            let keep = Rational::one() - companion;
            if !keep.is_zero() {
                out.push((PairState::new(s.m + 1, s.n_buses, s.lonely), stay * keep));
            }
        }
        Ok(out)
    }

    /// Laws of the conditioned joint `(N_m, L_m)` for `m = 0..=n`.
    pub fn joint_slices(&self) -> Result<Vec<ExactDist<PairState>>> {
        self.ensure_feasible()?;
        let mut slices = vec![ExactDist::point(PairState::START)];
        for m in 0..self.n {
            let mut next: BTreeMap<PairState, Rational> = BTreeMap::new();
            for (s, mass) in slices[m].iter() {
                for (succ, p) in self.joint_successors(*s)? {
                    *next.entry(succ).or_insert_with(Rational::zero) += mass * p;
                }
            }
            slices.push(ExactDist::from_masses(next)?);
        }
        Ok(slices)
    }

    /// Exact law of the conditioned lonely-count path `L_0..L_n`.
    pub fn lonely_path_law(&self) -> Result<ExactDist<Path>> {
        self.ensure_feasible()?;
        let mut layer: BTreeMap<(usize, Path), Rational> = BTreeMap::new();
        layer.insert((0, vec![0]), Rational::one());
        for m in 0..self.n {
            let mut next: BTreeMap<(usize, Path), Rational> = BTreeMap::new();
            for ((n_buses, path), mass) in layer {
                let s = PairState::new(m, n_buses, *path.last().expect("nonempty"));
                for (succ, p) in self.joint_successors(s)? {
                    let mut extended = path.clone();
                    extended.push(succ.lonely);
                    *next
                        .entry((succ.n_buses, extended))
                        .or_insert_with(Rational::zero) += &mass * p;
                }
            }
            layer = next;
        }
        ExactDist::from_masses(layer.into_iter().map(|((_, path), m)| (path, m)))
    }
}

/// `P(N_n = l | N_m = i)` for the birth chain with `l` buses.
pub fn h_value(l: usize, n: usize, m: usize, i: usize) -> Result<Rational> {
    ensure!(m <= n, OutOfRange, "time {m} beyond horizon {n}");
    HTransform::new(l, n)?.h(m, i)
}

/// Birth probability at time `m`, state `i`, of the chain conditioned on
/// `N_n = l`.
pub fn conditioned_birth_prob(l: usize, n: usize, m: usize, i: usize) -> Result<Rational> {
    HTransform::new(l, n)?.birth_prob(m, i)
}

/// Law of the final joint `(N_n, L_n)` under the no-empty-bus measure with
/// `l` buses.
pub fn ne_joint_dist(l: usize, n: usize) -> Result<ExactDist<PairState>> {
    Ok(HTransform::new(l, n)?
        .joint_slices()?
        .pop()
        .expect("slice 0 always present"))
}

/// Law of the final lonely count under the no-empty-bus measure.
pub fn ne_lonely_dist(l: usize, n: usize) -> Result<ExactDist<usize>> {
    Ok(ne_joint_dist(l, n)?.map(|s| s.lonely))
}

/// Jump probabilities `i -> i-1` of the reversed conditioned chain at
/// reverse time `m`, for `i = 1..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseKernel {
    m: usize,
    probs: Vec<Rational>,
}

impl ReverseKernel {
    pub fn at(m: usize) -> Result<Self> {
        ensure!(m >= 1, OutOfRange, "reverse kernel needs m >= 1");
        let probs = (1..=m)
            .map(|i| lonely_first_prob_ne(m, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReverseKernel { m, probs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn death_prob(&self, i: usize) -> Result<Rational> {
        ensure!(
            i >= 1 && i <= self.m,
            OutOfRange,
            "state {i} outside 1..={}",
            self.m
        );
        Ok(self.probs[i - 1].clone())
    }

    /// Probabilities for `i = 1..=m`, in order.
    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }
}

/// `S(m-1, i-1) / S(m, i)`: the chance that the `m`-th arrival opened the
/// `i`-th bus, given `i` nonempty buses at time `m`.
pub fn reverse_death_prob(m: usize, i: usize) -> Result<Rational> {
    lonely_first_prob_ne(m, i)
}

/// `P(N_{m-1} = i-1 | N_m = i)` computed from the forward law of the chain
/// conditioned on `N_n = l`. `None` when `N_m = i` has probability zero.
pub fn reverse_prob_from_conditioned(
    l: usize,
    n: usize,
    m: usize,
    i: usize,
) -> Result<Option<Rational>> {
    ensure!(m >= 1 && m <= n, OutOfRange, "time {m} outside 1..={n}");
    ensure!(i >= 1, OutOfRange, "state must be >= 1");
    let chain = HTransform::new(l, n)?;
    let slices = chain.nonempty_slices()?;
    let here = slices[m].mass(&i);
    if here.is_zero() {
        return Ok(None);
    }
    let before = slices[m - 1].mass(&(i - 1));
    if before.is_zero() {
        return Ok(Some(Rational::zero()));
    }
    Ok(Some(before * chain.birth_prob(m - 1, i - 1)? / here))
}

/// Law of the conditioned nonempty count at time `m`, in closed form:
/// `C(l,i) i! S(m,i) cover(n-m, l, l-i) / (l! S(n,l))`, where `cover(r, l, e)`
/// counts maps of `r` passengers to `l` buses hitting `e` prescribed buses.
pub fn ne_nonempty_dist(l: usize, n: usize, m: usize) -> Result<ExactDist<usize>> {
    ensure!(l >= 1 && l <= n, OutOfRange, "need 1 <= l <= n, got l={l}, n={n}");
    ensure!(m <= n, OutOfRange, "time {m} beyond horizon {n}");
    let total = factorial(l) * stirling2(n, l);
    let masses = (0..=m.min(l)).map(|i| {
        let count = binomial(l, i) * factorial(i) * stirling2(m, i) * cover(n - m, l, l - i);
        (i, nat_ratio(&count, &total))
    });
    ExactDist::from_masses(masses)
}

fn cover(r: usize, l: usize, e: usize) -> num_bigint::BigUint {
    let mut acc = BigInt::zero();
    for t in 0..=e {
        let term = BigInt::from(binomial(e, t) * pow(l - t, r));
        if t % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc.to_biguint().expect("covering count is nonnegative")
}

/// Law of the conditioned nonempty count at time `m` via the h-transform:
/// mass at `i` proportional to `P(N_m = i) h(m, i)`.
pub fn ne_nonempty_dist_h(l: usize, n: usize, m: usize) -> Result<ExactDist<usize>> {
    ensure!(m <= n, OutOfRange, "time {m} beyond horizon {n}");
    let chain = HTransform::new(l, n)?;
    let prior = nonempty_slices(m, l)?.pop().expect("slice 0 always present");
    let weighted: Vec<(usize, Rational)> = prior
        .iter()
        .map(|(&i, p)| Ok((i, p * chain.h(m, i)?)))
        .collect::<Result<_>>()?;
    let total: Rational = weighted.iter().map(|(_, w)| w).sum();
    if total.is_zero() {
        return Err(Error::NullConditioning(format!(
            "{n} passengers cannot fill {l} buses"
        )));
    }
    ExactDist::from_masses(weighted.into_iter().map(|(i, w)| (i, w / &total)))
}

/// Conditional probability that passenger 1 is still alone after the whole
/// nonempty-count path: the product of `1 - 1/i_m` over the steps where no
/// new bus is opened.
pub fn lonely_survival_product(path: &[usize]) -> Result<Rational> {
    if path.len() < 2 || path[0] != 0 || path[1] != 1 {
        return Err(Error::MalformedPath(format!(
            "{path:?} must start with 0, 1"
        )));
    }
    let mut acc = Rational::one();
    for w in path.windows(2).skip(1) {
        match w[1].checked_sub(w[0]) {
            Some(0) => acc *= Rational::one() - ratio(1, w[1]),
            Some(1) => {}
            _ => {
                return Err(Error::MalformedPath(format!(
                    "{path:?} is not a pure birth sequence"
                )))
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist<T: Ord + Clone>(entries: Vec<(T, Rational)>) -> ExactDist<T> {
        ExactDist::from_masses(entries).unwrap()
    }

    #[test]
    fn birth_probabilities() {
        for k in 1..6 {
            assert_eq!(forward_birth_prob(k, 0).unwrap(), ratio(1, 1));
            assert_eq!(forward_birth_prob(k, k).unwrap(), ratio(0, 1));
        }
        assert_eq!(forward_birth_prob(4, 1).unwrap(), ratio(3, 4));
        assert!(forward_birth_prob(3, 4).is_err());
        assert!(forward_birth_prob(0, 0).is_err());
    }

    #[test]
    fn pair_steps() {
        let s = |m, n, l| PairState::new(m, n, l);
        assert_eq!(
            pair_step_dist(2, PairState::START).unwrap(),
            ExactDist::point(s(1, 1, 1))
        );
        assert_eq!(
            pair_step_dist(2, s(1, 1, 1)).unwrap(),
            dist(vec![(s(2, 2, 2), ratio(1, 2)), (s(2, 1, 0), ratio(1, 2))])
        );
        assert_eq!(
            pair_step_dist(3, s(2, 2, 1)).unwrap(),
            dist(vec![
                (s(3, 3, 2), ratio(1, 3)),
                (s(3, 2, 0), ratio(1, 3)),
                (s(3, 2, 1), ratio(1, 3)),
            ])
        );
        assert!(pair_step_dist(2, s(1, 1, 2)).is_err());
        assert!(pair_step_dist(2, s(3, 3, 1)).is_err());
        assert!(pair_step_dist(2, s(1, 2, 0)).is_err());
    }

    #[test]
    fn joint_distributions() {
        let s = |m, n, l| PairState::new(m, n, l);
        for k in 1..5 {
            assert_eq!(exact_joint_dist(1, k).unwrap(), ExactDist::point(s(1, 1, 1)));
        }
        assert_eq!(
            exact_joint_dist(3, 2).unwrap(),
            dist(vec![(s(3, 1, 0), ratio(1, 4)), (s(3, 2, 1), ratio(3, 4))])
        );
        assert_eq!(
            exact_joint_dist(3, 3).unwrap(),
            dist(vec![
                (s(3, 1, 0), ratio(1, 9)),
                (s(3, 2, 1), ratio(2, 3)),
                (s(3, 3, 3), ratio(2, 9)),
            ])
        );
        assert_eq!(exact_joint_dist(0, 3).unwrap(), ExactDist::point(PairState::START));
    }

    #[test]
    fn lonely_probabilities() {
        for k in 1..8 {
            assert_eq!(p_lonely(1, k).unwrap(), ratio(1, 1));
        }
        assert_eq!(p_lonely(2, 2).unwrap(), ratio(1, 2));
        assert_eq!(p_lonely(3, 2).unwrap(), ratio(3, 4));
        assert_eq!(p_lonely(3, 3).unwrap(), ratio(8, 9));
        assert!(p_lonely(0, 3).is_err());
    }

    #[test]
    fn h_values() {
        for l in 1..5 {
            for n in l..7 {
                assert_eq!(h_value(l, n, n, l).unwrap(), ratio(1, 1));
                for i in 0..l {
                    assert_eq!(h_value(l, n, n, i).unwrap(), ratio(0, 1));
                }
            }
        }
        assert_eq!(h_value(2, 3, 1, 1).unwrap(), ratio(3, 4));
        assert!(h_value(2, 3, 4, 1).is_err());
        assert!(h_value(2, 3, 1, 3).is_err());
    }

    #[test]
    fn conditioned_births() {
        for l in 1..5 {
            for n in l..7 {
                assert_eq!(conditioned_birth_prob(l, n, n - 1, l - 1).unwrap(), ratio(1, 1));
            }
        }
        for n in 1..7 {
            for m in 0..n {
                assert_eq!(conditioned_birth_prob(n, n, m, m).unwrap(), ratio(1, 1));
            }
        }
        assert_eq!(conditioned_birth_prob(2, 3, 1, 1).unwrap(), ratio(2, 3));
        // one step left from state 0 cannot reach 2
        assert!(matches!(
            conditioned_birth_prob(2, 3, 2, 0),
            Err(Error::NullConditioning(_))
        ));
        assert!(conditioned_birth_prob(2, 3, 3, 2).is_err());
    }

    #[test]
    fn reverse_kernel() {
        assert_eq!(reverse_death_prob(2, 2).unwrap(), ratio(1, 1));
        assert_eq!(reverse_death_prob(3, 2).unwrap(), ratio(1, 3));
        for m in 2..10 {
            assert_eq!(reverse_death_prob(m, 1).unwrap(), ratio(0, 1));
        }
        assert!(reverse_death_prob(2, 3).is_err());
        let kernel = ReverseKernel::at(3).unwrap();
        assert_eq!(kernel.probs(), &[ratio(0, 1), ratio(1, 3), ratio(1, 1)]);
        assert!(kernel.death_prob(4).is_err());
        assert!(ReverseKernel::at(0).is_err());
    }

    #[test]
    fn reverse_kernel_from_conditioned_chain() {
        assert_eq!(
            reverse_prob_from_conditioned(2, 3, 2, 2).unwrap(),
            Some(ratio(1, 1))
        );
        assert_eq!(
            reverse_prob_from_conditioned(3, 5, 3, 2).unwrap(),
            Some(ratio(1, 3))
        );
        // N_2 = 1 is impossible when 2 passengers must fill 2 buses
        assert_eq!(reverse_prob_from_conditioned(2, 2, 2, 1).unwrap(), None);
    }

    #[test]
    fn ne_nonempty_closed_form() {
        for l in 1..5 {
            for n in l..7 {
                assert_eq!(ne_nonempty_dist(l, n, 0).unwrap(), ExactDist::point(0));
                assert_eq!(ne_nonempty_dist(l, n, n).unwrap(), ExactDist::point(l));
            }
        }
        let expected = dist(vec![(1usize, ratio(1, 3)), (2, ratio(2, 3))]);
        assert_eq!(ne_nonempty_dist(2, 3, 2).unwrap(), expected);
        assert_eq!(ne_nonempty_dist_h(2, 3, 2).unwrap(), expected);
        assert!(ne_nonempty_dist(4, 3, 1).is_err());
        assert!(ne_nonempty_dist_h(4, 3, 1).is_err());
    }

    #[test]
    fn h_transform_matches_closed_form() {
        for n in 1..=12 {
            for l in 1..=n {
                let chain = HTransform::new(l, n).unwrap();
                let slices = chain.nonempty_slices().unwrap();
                for (m, slice) in slices.iter().enumerate() {
                    let closed = ne_nonempty_dist(l, n, m).unwrap();
                    assert_eq!(&closed, slice, "l={l} n={n} m={m}");
                    assert_eq!(closed, ne_nonempty_dist_h(l, n, m).unwrap());
                }
            }
        }
    }

    #[test]
    fn survival_product() {
        assert_eq!(lonely_survival_product(&[0, 1, 2, 3]).unwrap(), ratio(1, 1));
        assert_eq!(lonely_survival_product(&[0, 1, 1]).unwrap(), ratio(0, 1));
        assert_eq!(lonely_survival_product(&[0, 1, 2, 2]).unwrap(), ratio(1, 2));
        assert_eq!(lonely_survival_product(&[0, 1, 2, 2, 3, 3]).unwrap(), ratio(1, 3));
        assert!(lonely_survival_product(&[0]).is_err());
        assert!(lonely_survival_product(&[1, 1]).is_err());
        assert!(lonely_survival_product(&[0, 1, 3]).is_err());
        assert!(lonely_survival_product(&[0, 1, 0]).is_err());
    }

    #[test]
    fn survival_expectation_is_first_passenger_probability() {
        for n in 1..=10 {
            for l in 1..=n {
                let law = HTransform::new(l, n).unwrap().path_law().unwrap();
                let expected = law.expect(|p| lonely_survival_product(p).unwrap());
                assert_eq!(expected, lonely_first_prob_ne(n, l).unwrap(), "l={l} n={n}");
            }
        }
    }

    #[test]
    fn ne_lonely_examples() {
        assert_eq!(ne_lonely_dist(2, 2).unwrap(), ExactDist::point(2));
        assert_eq!(ne_lonely_dist(2, 3).unwrap(), ExactDist::point(1));
        assert_eq!(ne_lonely_dist(1, 2).unwrap(), ExactDist::point(0));
        let law = HTransform::new(1, 2).unwrap().lonely_path_law().unwrap();
        assert_eq!(law, ExactDist::point(vec![0, 1, 0]));
    }

    #[test]
    fn forward_paths() {
        let law = forward_path_law(2, 2).unwrap();
        assert_eq!(
            law,
            dist(vec![(vec![0, 1, 1], ratio(1, 2)), (vec![0, 1, 2], ratio(1, 2))])
        );
        let k1 = forward_path_law(4, 1).unwrap();
        assert_eq!(k1, ExactDist::point(vec![0, 1, 1, 1, 1]));
    }
}
