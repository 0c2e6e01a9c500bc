use num_bigint::{BigInt, RandBigInt};
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classify::{dirichlet_verdicts, Status};
use crate::psi::PsiFunction;
use crate::ratcf::{cf_expand_certified, CFState};
use crate::{elementary, Precision, RatInterval, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub window: (usize, usize),
    pub seed: u64,
    /// Each sample is a dyadic interval of width `2^-sample_bits`.
    pub sample_bits: u32,
    pub precision: Precision,
}

impl MonteCarloConfig {
    pub fn new(samples: usize, window: (usize, usize), seed: u64) -> Self {
        MonteCarloConfig {
            samples,
            window,
            seed,
            sample_bits: 256,
            precision: Precision::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    /// Samples with no certified violation in the window.
    pub no_violation: usize,
    pub with_violation: usize,
    /// Samples without violations but with at least one Indeterminate verdict.
    pub indeterminate_samples: usize,
    pub indeterminate_verdicts: usize,
    /// Samples whose certified prefix ended before the window did.
    pub short_prefix: usize,
}

impl MonteCarloReport {
    /// `no_violation / samples`.
    pub fn fraction(&self) -> Rational {
        Rational::new(
            BigInt::from(self.no_violation),
            BigInt::from(self.config.samples.max(1)),
        )
    }

    pub fn fraction_f64(&self) -> f64 {
        self.no_violation as f64 / self.config.samples.max(1) as f64
    }
}

/// Per-sample generator: the seed picks the key, the sample index picks the stream, so
/// results do not depend on scheduling.
fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A uniform dyadic interval `[m, m+1] / 2^bits` inside `(0, 1)`.
fn sample_interval(seed: u64, index: u64, bits: u32) -> RatInterval {
    let mut rng = sample_rng(seed, index);
    let scale = BigInt::one() << bits;
    // m in [1, 2^bits - 2] keeps both endpoints strictly inside (0, 1)
    let m = rng.gen_bigint_range(&BigInt::one(), &(&scale - 1u32));
    RatInterval::new(
        Rational::new(m.clone(), scale.clone()),
        Rational::new(m + 1u32, scale),
    )
}

#[derive(Default)]
struct Tally {
    violated: bool,
    indeterminate: usize,
    short: bool,
}

fn run_sample(psi: &PsiFunction, cfg: &MonteCarloConfig, index: u64) -> Tally {
    let x = sample_interval(cfg.seed, index, cfg.sample_bits);
    let (n0, n1) = cfg.window;
    let cf = match cf_expand_certified(&x, n1 + 2) {
        Ok(cf) => cf,
        Err(_) => {
            return Tally {
                short: true,
                indeterminate: 1,
                ..Tally::default()
            }
        }
    };
    let top = n1.min(cf.depth());
    if top < n0 {
        return Tally {
            short: true,
            indeterminate: 1,
            ..Tally::default()
        };
    }
    match dirichlet_verdicts(&cf, psi, (n0, top), cfg.precision) {
        Ok(rep) => Tally {
            violated: rep.count(Status::Violated) > 0,
            indeterminate: rep.count(Status::Indeterminate),
            short: top < n1,
        },
        Err(_) => Tally {
            indeterminate: 1,
            short: top < n1,
            ..Tally::default()
        },
    }
}

/// Fraction of random reals with no certified violation of the convergent criterion
/// in the window; the finite stand-in for "psi-Dirichlet".
pub fn monte_carlo_zero_one(psi: &PsiFunction, cfg: MonteCarloConfig) -> MonteCarloReport {
    let tallies: Vec<Tally> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| run_sample(psi, &cfg, i))
        .collect();
    let mut rep = MonteCarloReport {
        config: cfg,
        no_violation: 0,
        with_violation: 0,
        indeterminate_samples: 0,
        indeterminate_verdicts: 0,
        short_prefix: 0,
    };
    for t in &tallies {
        if t.violated {
            rep.with_violation += 1;
        } else {
            rep.no_violation += 1;
            if t.indeterminate > 0 {
                rep.indeterminate_samples += 1;
            }
        }
        rep.indeterminate_verdicts += t.indeterminate;
        rep.short_prefix += t.short as usize;
    }
    rep
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevyReport {
    pub samples: usize,
    pub depth: usize,
    pub seed: u64,
    /// Statistics of `log q_depth / depth` over the samples.
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// `exp(max)`, an empirical common base with `q_n <= B^n`.
    pub empirical_b: f64,
    /// Whether `q_n^2 >= 2^n` held exactly for every `n >= 2` of every sample.
    pub lower_bound_certified: bool,
    pub lower_bound_failures: usize,
}

/// `(q_n^2 >= 2^n for all 2 <= n <= k, log q_k / k)` for one expansion.
pub fn growth_statistics(cf: &CFState) -> (bool, f64) {
    let k = cf.depth();
    let ok = (2..=k).all(|n| {
        let q = cf.q(n);
        q * q >= BigInt::one() << n
    });
    let rate = if k == 0 {
        0.0
    } else {
        let q = Rational::from_integer(cf.q(k).clone());
        elementary::log(&q, 40).approx() / k as f64
    };
    (ok, rate)
}

/// Growth of `q_n` for random reals: certifies the lower bound `q_n >= sqrt(2)^n` and
/// reports the empirical exponential rate (near the Levy constant for typical reals).
pub fn levy_growth_probe(samples: usize, depth: usize, seed: u64) -> LevyReport {
    let bits = (8 * depth as u32).max(256) + 64;
    let stats: Vec<(bool, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_interval(seed, i, bits);
            match cf_expand_certified(&x, depth) {
                Ok(cf) => growth_statistics(&cf),
                Err(_) => (true, f64::NAN),
            }
        })
        .collect();
    let rates: Vec<f64> = stats
        .iter()
        .map(|s| s.1)
        .filter(|r| r.is_finite())
        .collect();
    let failures = stats.iter().filter(|s| !s.0).count();
    let (min, max, mean) = if rates.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            rates.iter().cloned().fold(f64::INFINITY, f64::min),
            rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            rates.iter().sum::<f64>() / rates.len() as f64,
        )
    };
    LevyReport {
        samples,
        depth,
        seed,
        min,
        mean,
        max,
        empirical_b: max.exp(),
        lower_bound_certified: failures == 0,
        lower_bound_failures: failures,
    }
}
