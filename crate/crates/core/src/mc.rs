//! Seeded Monte Carlo estimates of the lonely-passenger probability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::chain::p_lonely;
use crate::dist::{fmt_rational, to_f64, Rational};
use crate::error::{ensure, Result};
use crate::exec::Execution;
use crate::oracle::Configuration;

/// Samples per independent stream.
pub const BATCH: u64 = 4096;

/// Largest `n` for which the exact reference is computed alongside an estimate.
pub const EXACT_REF_MAX_N: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// `sqrt(v(1-v)/samples)` with `v` the estimate.
    pub stderr: f64,
    pub samples: u64,
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact_ref: Option<Rational>,
}

fn ser_opt_rational<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&fmt_rational(r)),
        None => s.serialize_none(),
    }
}

impl Estimate {
    fn from_count(hits: u64, samples: u64, exact_ref: Option<Rational>) -> Self {
        let value = hits as f64 / samples as f64;
        Estimate {
            value,
            stderr: (value * (1.0 - value) / samples as f64).sqrt(),
            samples,
            exact_ref,
        }
    }

    /// Standard error under the exact value, `sqrt(p(1-p)/samples)`.
    pub fn reference_stderr(&self) -> Option<f64> {
        let p = to_f64(self.exact_ref.as_ref()?);
        Some((p * (1.0 - p) / self.samples as f64).sqrt())
    }

    /// Distance from the exact value in reference standard errors. A degenerate
    /// reference gives 0 on an exact hit and infinity otherwise.
    pub fn z_score(&self) -> Option<f64> {
        let p = to_f64(self.exact_ref.as_ref()?);
        let sigma = self.reference_stderr()?;
        let diff = self.value - p;
        Some(if sigma > 0.0 {
            diff / sigma
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        })
    }

    pub fn within(&self, sigmas: f64) -> Option<bool> {
        self.z_score().map(|z| z.abs() <= sigmas)
    }
}

fn check_args(n: usize, k: usize) -> Result<()> {
    ensure!(n >= 1, OutOfRange, "n must be at least 1");
    ensure!(k >= 1, OutOfRange, "k must be at least 1");
    Ok(())
}

fn draw(rng: &mut ChaCha8Rng, k: usize, buf: &mut [usize]) {
    for b in buf.iter_mut() {
        *b = rng.random_range(1..=k);
    }
}

/// One uniform configuration of `n` passengers on `k` buses.
pub fn simulate_arrivals(n: usize, k: usize, seed: u64) -> Result<Configuration> {
    check_args(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buses = vec![0; n];
    draw(&mut rng, k, &mut buses);
    Configuration::new(buses, k)
}

fn has_lonely(buf: &mut [usize]) -> bool {
    buf.sort_unstable();
    buf.chunk_by(|a, b| a == b).any(|run| run.len() == 1)
}

fn count_batch(n: usize, k: usize, seed: u64, batch: u64, size: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    let mut buf = vec![0; n];
    let mut hits = 0;
    for _ in 0..size {
        draw(&mut rng, k, &mut buf);
        hits += u64::from(has_lonely(&mut buf));
    }
    hits
}

/// Fraction of samples with at least one lonely passenger. Batch `b` uses
/// stream `b` of `seed`, so the result does not depend on `exec`.
pub fn estimate_p(n: usize, k: usize, samples: u64, seed: u64, exec: Execution) -> Result<Estimate> {
    check_args(n, k)?;
    ensure!(samples >= 1, OutOfRange, "samples must be at least 1");
    let batches = samples.div_ceil(BATCH);
    let hits = exec.map_reduce(
        batches,
        || 0u64,
        |b| count_batch(n, k, seed, b, BATCH.min(samples - b * BATCH)),
        |a, b| a + b,
    );
    let exact_ref = if n <= EXACT_REF_MAX_N {
        Some(p_lonely(n, k)?)
    } else {
        None
    };
    Ok(Estimate::from_count(hits, samples, exact_ref))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowRow {
    pub k: usize,
    pub estimate: Estimate,
    /// `(p_k - p_{k-1})` in combined standard errors; absent for the first row.
    pub step_sigmas: Option<f64>,
    /// No drop larger than the tolerance.
    pub consistent: bool,
}

/// Estimates `p_{n,k}` for `k = 1..=k_max` and flags any decrease larger than
/// `sigmas` combined standard errors. Row `k` uses seed `seed + k`.
pub fn monotonicity_shadow(
    n: usize,
    k_max: usize,
    samples: u64,
    seed: u64,
    sigmas: f64,
    exec: Execution,
) -> Result<Vec<ShadowRow>> {
    let mut rows: Vec<ShadowRow> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let estimate = estimate_p(n, k, samples, seed.wrapping_add(k as u64), exec)?;
        let step_sigmas = rows.last().map(|prev| {
            let se = (prev.estimate.stderr.powi(2) + estimate.stderr.powi(2)).sqrt();
            let diff = estimate.value - prev.estimate.value;
            if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        });
        rows.push(ShadowRow {
            k,
            consistent: step_sigmas.is_none_or(|s| s >= -sigmas),
            estimate,
            step_sigmas,
        });
    }
    Ok(rows)
}
