//! Continued-fraction engine.
//!
//! Indexing follows Khintchine: `q_0 = 1`, `q_1 = a_1`, and
//! `q_n = a_n q_{n-1} + q_{n-2}` with the virtual start `(p_{-1}, q_{-1}) = (1, 0)`.
//!
//! A [`CFState`] is either *terminal* (the exact expansion of a rational number) or a
//! *prefix*: the set of all reals whose first `k` entries are the stored ones. Every
//! quantity derived from a prefix is an enclosure valid for every real in its cylinder.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::{exact, interval::RatInterval, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CfError {
    #[error("value {0} is outside [0, 1)")]
    OutOfUnitInterval(Rational),
    #[error("interval endpoints share no continued-fraction entry")]
    EmptyPrefix,
    #[error("interval must satisfy 0 <= lo < hi < 1")]
    BadInterval,
    #[error("continued-fraction entries must be positive integers")]
    NonPositiveEntry,
    #[error("terminal expansion must end in an entry >= 2")]
    NonCanonical,
    #[error("index {index} outside the valid range {min}..={max}")]
    IndexOutOfRange {
        index: usize,
        min: usize,
        max: usize,
    },
}

/// A finite continued-fraction expansion with its convergents and cylinder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CFState {
    entries: Vec<BigInt>,
    // p[i], q[i] hold p_i, q_i for i = 0..=k
    p: Vec<BigInt>,
    q: Vec<BigInt>,
    terminal: bool,
    cylinder: RatInterval,
}

impl CFState {
    /// Builds the state for the prefix `a_1..a_k`.
    ///
    /// With `terminal = true` the entries are the full expansion of the rational
    /// `p_k/q_k`; the canonical form (last entry `>= 2`) is required.
    pub fn from_entries(entries: Vec<BigInt>, terminal: bool) -> Result<CFState, CfError> {
        if entries.iter().any(|a| !a.is_positive()) {
            return Err(CfError::NonPositiveEntry);
        }
        if terminal {
            if let Some(last) = entries.last() {
                if last.is_one() {
                    return Err(CfError::NonCanonical);
                }
            }
        }
        let mut p = Vec::with_capacity(entries.len() + 1);
        let mut q = Vec::with_capacity(entries.len() + 1);
        p.push(BigInt::zero());
        q.push(BigInt::one());
        let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
        for a in &entries {
            let pn = a * p.last().unwrap() + &p_prev;
            let qn = a * q.last().unwrap() + &q_prev;
            p_prev = p.last().unwrap().clone();
            q_prev = q.last().unwrap().clone();
            p.push(pn);
            q.push(qn);
        }
        let k = entries.len();
        // consecutive convergents are coprime, and so is their mediant
        let end = exact::ratio_coprime(p[k].clone(), q[k].clone());
        let cylinder = if terminal {
            RatInterval::point(end)
        } else {
            let other = exact::ratio_coprime(&p[k] + &p_prev, &q[k] + &q_prev);
            RatInterval::spanning(end, other)
        };
        Ok(CFState {
            entries,
            p,
            q,
            terminal,
            cylinder,
        })
    }

    /// Convenience constructor for small entries.
    pub fn from_u64s(entries: &[u64], terminal: bool) -> Result<CFState, CfError> {
        Self::from_entries(entries.iter().map(|&a| BigInt::from(a)).collect(), terminal)
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    /// Entry `a_n`, 1-based.
    pub fn entry(&self, n: usize) -> &BigInt {
        &self.entries[n - 1]
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn p(&self, n: usize) -> &BigInt {
        &self.p[n]
    }

    pub fn q(&self, n: usize) -> &BigInt {
        &self.q[n]
    }

    pub fn convergent(&self, n: usize) -> Rational {
        exact::ratio_coprime(self.p[n].clone(), self.q[n].clone())
    }

    pub fn denominators(&self) -> &[BigInt] {
        &self.q
    }

    /// The exact value for terminal states.
    pub fn value(&self) -> Option<Rational> {
        self.terminal.then(|| self.convergent(self.depth()))
    }

    /// Closed interval of reals sharing these entries (a point when terminal).
    ///
    /// For a prefix the endpoints are `p_k/q_k` and `(p_k+p_{k-1})/(q_k+q_{k-1})`.
    pub fn cylinder(&self) -> &RatInterval {
        &self.cylinder
    }

    /// Keeps the first `k` entries as a (non-terminal) prefix.
    pub fn truncate(&self, k: usize) -> CFState {
        let k = k.min(self.depth());
        Self::from_entries(self.entries[..k].to_vec(), false).expect("valid entries")
    }

    /// Drops the first `j` entries; the state of `T^j x` under the Gauss map.
    pub fn shift(&self, j: usize) -> CFState {
        let j = j.min(self.depth());
        let terminal = self.terminal && j < self.depth();
        Self::from_entries(self.entries[j..].to_vec(), terminal).expect("valid entries")
    }

    fn check_index(&self, n: usize, min: usize, max: usize) -> Result<(), CfError> {
        if n < min || n > max {
            Err(CfError::IndexOutOfRange { index: n, min, max })
        } else {
            Ok(())
        }
    }

    /// Enclosure of `|q_j x - p_j|` over the cylinder, `0 <= j <= k`.
    ///
    /// The expression is affine with constant sign on the cylinder of depth `j`, so
    /// its range is spanned by the two cylinder endpoints.
    pub fn residual(&self, j: usize) -> Result<RatInterval, CfError> {
        self.check_index(j, 0, self.depth())?;
        let at = |x: &Rational| {
            let num = &self.q[j] * x.numer() - &self.p[j] * x.denom();
            exact::ratio(num.abs(), x.denom().clone())
        };
        Ok(RatInterval::spanning(
            at(self.cylinder.lo()),
            at(self.cylinder.hi()),
        ))
    }

    /// Enclosure of `<q_{n-1} x> = |q_{n-1} x - p_{n-1}|`, valid for `1 <= n <= k`.
    ///
    /// For `n >= 2` this is the distance to the nearest integer; at `n = 1` it is `x`.
    pub fn best_approx_distance(&self, n: usize) -> Result<RatInterval, CfError> {
        self.check_index(n, 1, self.depth())?;
        self.residual(n - 1)
    }

    /// `phi_n = [a_n, ..., a_1]` exactly and an enclosure of
    /// `theta_{n+1} = [a_{n+1}, a_{n+2}, ...]`, for `1 <= n < k`.
    pub fn tail_bounds(&self, n: usize) -> Result<TailBounds, CfError> {
        if n < 1 || n >= self.depth() {
            return Err(CfError::IndexOutOfRange {
                index: n,
                min: 1,
                max: self.depth().saturating_sub(1),
            });
        }
        let phi = exact::ratio_coprime(self.q[n - 1].clone(), self.q[n].clone());
        let block = CFState::from_entries(self.entries[n..].to_vec(), self.terminal)
            .expect("suffix of valid entries");
        Ok(TailBounds {
            theta: block.cylinder().clone(),
            phi,
        })
    }
}

/// Tail/head quantities at an index: `theta` encloses `[a_{n+1}, ...]`, `phi` is
/// `[a_n, ..., a_1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailBounds {
    pub theta: RatInterval,
    pub phi: Rational,
}

impl TailBounds {
    /// Enclosure of `(1 + theta * phi)^-1`.
    pub fn product_form(&self) -> RatInterval {
        let one = RatInterval::one();
        let denom = &one + &self.theta.scale(&self.phi);
        denom.recip().expect("positive")
    }
}

fn expansion(x: &Rational, max_depth: usize) -> (Vec<BigInt>, bool) {
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    let mut out = Vec::new();
    while !num.is_zero() && out.len() < max_depth {
        let (a, r) = den.div_rem(&num);
        out.push(a);
        den = num;
        num = r;
    }
    (out, num.is_zero())
}

/// Euclidean expansion of `x` in `[0, 1)`, at most `max_depth` entries.
///
/// When the expansion finishes within `max_depth` the state is terminal and exact.
pub fn cf_expand(x: &Rational, max_depth: usize) -> Result<CFState, CfError> {
    if x.is_negative() || x >= &Rational::one() {
        return Err(CfError::OutOfUnitInterval(x.clone()));
    }
    let (entries, done) = expansion(x, max_depth);
    CFState::from_entries(entries, done)
}

/// Longest common prefix of the expansions of every real in `[x.lo, x.hi]`.
pub fn cf_expand_certified(x: &RatInterval, max_depth: usize) -> Result<CFState, CfError> {
    if x.lo().is_negative() || x.hi() >= &Rational::one() || x.lo() >= x.hi() {
        return Err(CfError::BadInterval);
    }
    let (a, _) = expansion(x.lo(), max_depth);
    let (b, _) = expansion(x.hi(), max_depth);
    let common: Vec<BigInt> = a
        .into_iter()
        .zip(b)
        .take_while(|(u, v)| u == v)
        .map(|(u, _)| u)
        .collect();
    if common.is_empty() {
        return Err(CfError::EmptyPrefix);
    }
    CFState::from_entries(common, false)
}

/// Rebuilds `[a_1, ..., a_k]` as an exact rational.
pub fn reconstruct(entries: &[BigInt]) -> Rational {
    let mut acc = Rational::zero();
    for a in entries.iter().rev() {
        acc = (Rational::from_integer(a.clone()) + acc).recip();
    }
    acc
}
