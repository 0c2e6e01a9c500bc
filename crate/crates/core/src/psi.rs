//! Approximating functions `psi` and the derived `Psi(t) = (1 - t psi(t))^-1`.
//!
//! Every built-in family has the shape `psi(t) = g(t) / t` where `g = t psi` is a
//! bounded, slowly varying factor. Evaluation works on `g` to an absolute precision
//! and divides by `t` exactly, so enclosures of `psi(q)` stay sharp relative to `1/q`
//! even for very large `q`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::{elementary, exact, interval::RatInterval, parse_rational, Precision, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PsiError {
    #[error("t = {t} lies below the domain start t0 = {t0}")]
    OutOfDomain { t: Rational, t0: Rational },
    #[error("t psi(t) < 1 cannot be certified at t = {t}")]
    DirichletViolatesBound { t: Rational },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("table values increase at breakpoint t = {0}")]
    NotMonotone(Rational),
    #[error("cannot parse psi specification: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// `c / t`
    ScaledDirichlet { c: Rational },
    /// `(1 - a t^-k) / t`
    PowerGap { a: Rational, k: Rational },
    /// `(1 - a (log t)^-k) / t`
    LogGap { a: Rational, k: Rational },
    /// Right-continuous step function through `(t_i, v_i)`.
    Table { points: Vec<(Rational, Rational)> },
}

/// A non-increasing approximating function with certified evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiFunction {
    family: Family,
    t0: Rational,
    // start of the range where psi is certified non-increasing
    t_mono: Rational,
    t_psi_nondecreasing: bool,
    explicit_t0: bool,
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn ceil_int(x: &Rational) -> Rational {
    Rational::from_integer(x.ceil().to_integer())
}

/// Smallest integer `t >= start` for which `holds(t)`; `holds` must be monotone.
/// Searches stop past this many bits and report the parameters as unusable.
const SEARCH_BITS: u32 = 256;

fn first_integer_where(
    start: &Rational,
    holds: impl Fn(&Rational) -> bool,
) -> Result<Rational, PsiError> {
    let mut lo = ceil_int(start);
    if holds(&lo) {
        return Ok(lo);
    }
    let cap = Rational::from_integer(BigInt::from(1) << SEARCH_BITS);
    let mut step = int(1);
    let mut hi = &lo + &step;
    while !holds(&hi) {
        if hi > cap {
            return Err(PsiError::InvalidParameter(format!(
                "domain start lies beyond 2^{SEARCH_BITS}"
            )));
        }
        lo = hi.clone();
        step = &step * int(2);
        hi = &hi + &step;
    }
    // holds(hi), !holds(lo)
    while &hi - &lo > int(1) {
        let mid = ((&lo + &hi) / int(2)).floor();
        if holds(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

impl PsiFunction {
    pub fn scaled_dirichlet(c: Rational) -> Result<PsiFunction, PsiError> {
        if !c.is_positive() {
            return Err(PsiError::InvalidParameter("c must be positive".into()));
        }
        Ok(PsiFunction {
            family: Family::ScaledDirichlet { c },
            t0: int(1),
            t_mono: int(1),
            t_psi_nondecreasing: true,
            explicit_t0: false,
        })
    }

    /// `psi_1(t) = 1/t`.
    pub fn dirichlet() -> PsiFunction {
        Self::scaled_dirichlet(int(1)).unwrap()
    }

    pub fn power_gap(a: Rational, k: Rational) -> Result<PsiFunction, PsiError> {
        if !a.is_positive() || k.is_negative() {
            return Err(PsiError::InvalidParameter(
                "power_gap needs a > 0, k >= 0".into(),
            ));
        }
        let (t0, t_mono) = if k.is_zero() {
            if a >= int(1) {
                return Err(PsiError::InvalidParameter(
                    "power_gap with k = 0 needs a < 1".into(),
                ));
            }
            (int(1), int(1))
        } else {
            // psi >= 0 iff t^k >= a; psi decreasing iff t^k >= a (k + 1)
            let pos = |t: &Rational| elementary::pow(t, &k, 64).lo() >= &a;
            let target = &a * (&k + int(1));
            let dec = |t: &Rational| elementary::pow(t, &k, 64).lo() >= &target;
            let t0 = first_integer_where(&int(1), pos)?;
            let t_mono = first_integer_where(&t0, dec)?;
            (t0, t_mono)
        };
        Ok(PsiFunction {
            family: Family::PowerGap { a, k },
            t0,
            t_mono,
            t_psi_nondecreasing: true,
            explicit_t0: false,
        })
    }

    pub fn log_gap(a: Rational, k: Rational) -> Result<PsiFunction, PsiError> {
        if !a.is_positive() || k.is_negative() {
            return Err(PsiError::InvalidParameter(
                "log_gap needs a > 0, k >= 0".into(),
            ));
        }
        let (t0, t_mono) = if k.is_zero() {
            if a >= int(1) {
                return Err(PsiError::InvalidParameter(
                    "log_gap with k = 0 needs a < 1".into(),
                ));
            }
            (int(1), int(1))
        } else {
            let lk = |t: &Rational| -> RatInterval {
                let l = elementary::log(t, 64);
                log_power(&l, &k, 64)
            };
            // psi >= 0 iff (log t)^k >= a
            let pos = |t: &Rational| t > &int(1) && lk(t).lo() >= &a;
            // psi non-increasing iff a (log t)^-k (1 + k / log t) <= 1
            let dec = |t: &Rational| {
                let l = elementary::log(t, 64);
                let lhs = (&RatInterval::one() + &l.recip().unwrap().scale(&k))
                    .scale(&a)
                    .checked_div(&log_power(&l, &k, 64))
                    .unwrap();
                lhs.hi() <= &int(1)
            };
            let t0 = first_integer_where(&int(2), pos)?;
            let t_mono = first_integer_where(&t0, dec)?;
            (t0, t_mono)
        };
        Ok(PsiFunction {
            family: Family::LogGap { a, k },
            t0,
            t_mono,
            t_psi_nondecreasing: true,
            explicit_t0: false,
        })
    }

    /// Step function; breakpoints must be increasing, values positive and
    /// non-increasing.
    pub fn table(points: Vec<(Rational, Rational)>) -> Result<PsiFunction, PsiError> {
        let f = Self::table_unchecked(points)?;
        if let Family::Table { points } = &f.family {
            for w in points.windows(2) {
                if w[1].1 > w[0].1 {
                    return Err(PsiError::NotMonotone(w[1].0.clone()));
                }
            }
        }
        Ok(f)
    }

    /// Step function without the monotonicity check, for diagnosing tables.
    pub fn table_unchecked(points: Vec<(Rational, Rational)>) -> Result<PsiFunction, PsiError> {
        if points.is_empty() {
            return Err(PsiError::InvalidParameter(
                "table needs at least one point".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(PsiError::InvalidParameter(
                "table breakpoints must increase".into(),
            ));
        }
        if points.iter().any(|(_, v)| !v.is_positive()) {
            return Err(PsiError::InvalidParameter(
                "table values must be positive".into(),
            ));
        }
        if points[0].0 < int(1) {
            return Err(PsiError::InvalidParameter(
                "table must start at t >= 1".into(),
            ));
        }
        let t0 = points[0].0.clone();
        Ok(PsiFunction {
            family: Family::Table { points },
            t0: t0.clone(),
            t_mono: t0,
            t_psi_nondecreasing: false,
            explicit_t0: false,
        })
    }

    /// Moves the domain start to `t0`, which may not precede the family's own start.
    pub fn with_t0(mut self, t0: Rational) -> Result<PsiFunction, PsiError> {
        if t0 < self.t0 {
            return Err(PsiError::InvalidParameter(format!(
                "t0 = {t0} precedes the family's domain start {}",
                self.t0
            )));
        }
        if t0 > self.t_mono {
            self.t_mono = t0.clone();
        }
        self.t0 = t0;
        self.explicit_t0 = true;
        Ok(self)
    }

    /// Marks `t psi(t)` as non-decreasing (only meaningful for tables).
    pub fn assert_t_psi_nondecreasing(mut self) -> PsiFunction {
        self.t_psi_nondecreasing = true;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn t0(&self) -> &Rational {
        &self.t0
    }

    /// Start of the range on which `psi` is non-increasing.
    pub fn monotone_from(&self) -> &Rational {
        &self.t_mono
    }

    pub fn t_psi_nondecreasing(&self) -> bool {
        self.t_psi_nondecreasing
    }

    fn check_domain(&self, t: &Rational) -> Result<(), PsiError> {
        if t < &self.t0 {
            Err(PsiError::OutOfDomain {
                t: t.clone(),
                t0: self.t0.clone(),
            })
        } else {
            Ok(())
        }
    }

    fn table_value(points: &[(Rational, Rational)], t: &Rational) -> Rational {
        let idx = points.partition_point(|(b, _)| b <= t);
        points[idx.saturating_sub(1)].1.clone()
    }

    /// Enclosure of `t psi(t)` with absolute width at most `2^-bits`.
    pub fn eval_t_psi(&self, t: &Rational, bits: u32) -> Result<RatInterval, PsiError> {
        self.check_domain(t)?;
        Ok(match &self.family {
            Family::ScaledDirichlet { c } => RatInterval::point(c.clone()),
            Family::PowerGap { a, k } => {
                let guard = bits + 4 + a.numer().bits() as u32;
                let tk = elementary::pow(t, &-k, guard);
                let g = (&RatInterval::one() - &tk.scale(a)).round_out_inexact(bits + 2);
                g
            }
            Family::LogGap { a, k } => {
                let guard =
                    bits + 8 + a.numer().bits() as u32 + k.ceil().to_integer().bits() as u32;
                let l = elementary::log(t, guard + 8);
                let lk = log_power(&l, k, guard);
                let g = &RatInterval::one() - &lk.recip().expect("log t > 0").scale(a);
                g.round_out_inexact(bits + 2)
            }
            Family::Table { points } => {
                RatInterval::point(exact::mul(t, &Self::table_value(points, t)))
            }
        })
    }

    /// Enclosure of `psi(t)` with width at most `2^-bits`.
    pub fn eval(&self, t: &Rational, bits: u32) -> Result<RatInterval, PsiError> {
        let g = self.eval_t_psi(t, bits)?;
        Ok(g.scale(&exact::recip(t)))
    }

    /// Enclosure of `psi` over every `t` in `ts` (natural interval extension).
    pub fn eval_interval(&self, ts: &RatInterval, bits: u32) -> Result<RatInterval, PsiError> {
        if ts.is_point() {
            return self.eval(ts.lo(), bits);
        }
        self.check_domain(ts.lo())?;
        if let Family::Table { points } = &self.family {
            let first = points
                .partition_point(|(b, _)| b <= ts.lo())
                .saturating_sub(1);
            let last = points
                .partition_point(|(b, _)| b <= ts.hi())
                .saturating_sub(1);
            let vals = &points[first..=last];
            let lo = vals.iter().map(|(_, v)| v).min().unwrap().clone();
            let hi = vals.iter().map(|(_, v)| v).max().unwrap().clone();
            return Ok(RatInterval::new(lo, hi));
        }
        // g is non-decreasing in t for every analytic family
        let g_lo = self.eval_t_psi(ts.lo(), bits)?;
        let g_hi = self.eval_t_psi(ts.hi(), bits)?;
        let g = g_lo.hull(&g_hi);
        Ok(&g * &ts.recip().expect("t >= 1"))
    }

    /// Enclosure of `Psi(t) = (1 - t psi(t))^-1`, escalating precision when
    /// `t psi(t) < 1` is not yet certified.
    pub fn eval_bigpsi(&self, t: &Rational, prec: Precision) -> Result<RatInterval, PsiError> {
        for bits in prec.ladder() {
            let g = self.eval_t_psi(t, bits)?;
            if exact::lt(g.hi(), &int(1)) {
                let one = RatInterval::one();
                return Ok((&one - &g).recip().expect("1 - t psi > 0"));
            }
            if exact::le(&int(1), g.lo()) {
                break;
            }
        }
        Err(PsiError::DirichletViolatesBound { t: t.clone() })
    }

    /// Grid-witnessed violations of the two monotonicity assumptions.
    ///
    /// Only violations certified by the enclosures are reported.
    pub fn check_monotonicity(
        &self,
        grid: &[Rational],
        bits: u32,
    ) -> Result<MonotonicityReport, PsiError> {
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PsiError::InvalidParameter("grid must be increasing".into()));
        }
        let mut report = MonotonicityReport::default();
        let vals: Vec<(RatInterval, RatInterval)> = grid
            .iter()
            .map(|t| Ok((self.eval(t, bits)?, self.eval_t_psi(t, bits)?)))
            .collect::<Result<_, PsiError>>()?;
        for (i, w) in vals.windows(2).enumerate() {
            let (psi_a, g_a) = &w[0];
            let (psi_b, g_b) = &w[1];
            if psi_a.certainly_lt(psi_b) {
                report
                    .psi_increases
                    .push((grid[i].clone(), grid[i + 1].clone()));
            }
            if g_b.certainly_lt(g_a) {
                report
                    .t_psi_decreases
                    .push((grid[i].clone(), grid[i + 1].clone()));
            }
        }
        Ok(report)
    }
}

/// `l^k` for a positive interval `l` and rational `k >= 0`.
fn log_power(l: &RatInterval, k: &Rational, bits: u32) -> RatInterval {
    if k.is_integer() {
        return l.powi(k.to_integer().to_u32().expect("exponent fits"));
    }
    let ll = elementary::log_interval(l, bits + 8);
    elementary::exp_interval(&ll.scale(k), bits + 4)
}

trait RoundInexact {
    fn round_out_inexact(&self, bits: u32) -> RatInterval;
}

impl RoundInexact for RatInterval {
    // exact points stay exact; genuine enclosures get small denominators
    fn round_out_inexact(&self, bits: u32) -> RatInterval {
        if self.is_point() {
            self.clone()
        } else {
            self.round_out(bits)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MonotonicityReport {
    /// Consecutive grid points `(t, t')` with `psi(t) < psi(t')` certified.
    pub psi_increases: Vec<(Rational, Rational)>,
    /// Consecutive grid points with `t' psi(t') < t psi(t)` certified.
    pub t_psi_decreases: Vec<(Rational, Rational)>,
}

impl MonotonicityReport {
    pub fn non_increasing_ok(&self) -> bool {
        self.psi_increases.is_empty()
    }

    pub fn t_psi_nondecreasing_ok(&self) -> bool {
        self.t_psi_decreases.is_empty()
    }
}

impl fmt::Display for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::ScaledDirichlet { c } => write!(f, "scaled_dirichlet c={c}")?,
            Family::PowerGap { a, k } => write!(f, "power_gap a={a} k={k}")?,
            Family::LogGap { a, k } => write!(f, "log_gap a={a} k={k}")?,
            Family::Table { points } => {
                let body: Vec<String> = points.iter().map(|(t, v)| format!("{t}:{v}")).collect();
                write!(f, "table {}", body.join(","))?;
            }
        }
        if self.explicit_t0 {
            write!(f, " t0={}", self.t0)?;
        }
        Ok(())
    }
}

impl FromStr for PsiFunction {
    type Err = PsiError;

    /// Parses `family key=value ...`, e.g. `power_gap a=1 k=1/2` or
    /// `table 1:1/2,10:1/20 t0=2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut words = s.split_whitespace();
        let name = words
            .next()
            .ok_or_else(|| PsiError::Parse("empty".into()))?;
        let mut params: Vec<(String, String)> = Vec::new();
        let mut table_body: Option<String> = None;
        for w in words {
            match w.split_once('=') {
                Some((k, v)) => params.push((k.to_string(), v.to_string())),
                None if name == "table" && table_body.is_none() => table_body = Some(w.to_string()),
                None => return Err(PsiError::Parse(format!("unexpected token '{w}'"))),
            }
        }
        let rat = |v: &str| parse_rational(v).map_err(PsiError::Parse);
        let take = |key: &str| -> Result<Rational, PsiError> {
            let v = params
                .iter()
                .find(|(k, _)| k == key)
                .ok_or_else(|| PsiError::Parse(format!("missing parameter {key}")))?;
            rat(&v.1)
        };
        let allowed: &[&str] = match name {
            "scaled_dirichlet" => &["c", "t0"],
            "power_gap" | "log_gap" => &["a", "k", "t0"],
            "table" => &["t0"],
            other => return Err(PsiError::Parse(format!("unknown family '{other}'"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(PsiError::Parse(format!(
                "unknown parameter '{k}' for {name}"
            )));
        }
        let f = match name {
            "scaled_dirichlet" => PsiFunction::scaled_dirichlet(take("c")?)?,
            "power_gap" => PsiFunction::power_gap(take("a")?, take("k")?)?,
            "log_gap" => PsiFunction::log_gap(take("a")?, take("k")?)?,
            _ => {
                let body =
                    table_body.ok_or_else(|| PsiError::Parse("table needs points".into()))?;
                let points = body
                    .split(',')
                    .map(|p| {
                        let (t, v) = p
                            .split_once(':')
                            .ok_or_else(|| PsiError::Parse(format!("bad table point '{p}'")))?;
                        Ok((rat(t)?, rat(v)?))
                    })
                    .collect::<Result<Vec<_>, PsiError>>()?;
                PsiFunction::table(points)?
            }
        };
        match params.iter().find(|(k, _)| k == "t0") {
            Some((_, v)) => f.with_t0(rat(v)?),
            None => Ok(f),
        }
    }
}
