//! Closed intervals with exact rational endpoints.
//!
//! Every certified quantity in the crate is carried as a [`RatInterval`]. Arithmetic is
//! plain interval arithmetic over exact rationals, so enclosures are sound without any
//! rounding-mode bookkeeping. [`RatInterval::round_out`] snaps endpoints outward onto a
//! dyadic grid when denominators need to be kept small.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exact;
use crate::Rational;

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Debug)]
pub struct RatInterval {
    lo: Rational,
    hi: Rational,
}

impl RatInterval {
    /// Panics if `lo > hi`.
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(exact::le(&lo, &hi), "interval endpoints out of order");
        RatInterval { lo, hi }
    }

    /// Builds the interval spanned by two endpoints given in either order.
    pub fn spanning(a: Rational, b: Rational) -> Self {
        if exact::le(&a, &b) {
            RatInterval { lo: a, hi: b }
        } else {
            RatInterval { lo: b, hi: a }
        }
    }

    pub fn point(x: Rational) -> Self {
        RatInterval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn zero() -> Self {
        Self::point(Rational::zero())
    }

    pub fn one() -> Self {
        Self::point(Rational::one())
    }

    pub fn from_integer(n: i64) -> Self {
        Self::point(Rational::from_integer(BigInt::from(n)))
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn into_bounds(self) -> (Rational, Rational) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> Rational {
        exact::sub(&self.hi, &self.lo)
    }

    pub fn mid(&self) -> Rational {
        exact::mul(
            &exact::add(&self.lo, &self.hi),
            &Rational::new(BigInt::one(), BigInt::from(2)),
        )
    }

    pub fn is_point(&self) -> bool {
        exact::cmp(&self.lo, &self.hi) == Ordering::Equal
    }

    pub fn contains(&self, x: &Rational) -> bool {
        exact::le(&self.lo, x) && exact::le(x, &self.hi)
    }

    pub fn contains_interval(&self, other: &RatInterval) -> bool {
        exact::le(&self.lo, &other.lo) && exact::le(&other.hi, &self.hi)
    }

    pub fn intersects(&self, other: &RatInterval) -> bool {
        exact::le(&self.lo, &other.hi) && exact::le(&other.lo, &self.hi)
    }

    pub fn intersection(&self, other: &RatInterval) -> Option<RatInterval> {
        let lo = exact::max(&self.lo, &other.lo).clone();
        let hi = exact::min(&self.hi, &other.hi).clone();
        exact::le(&lo, &hi).then_some(RatInterval { lo, hi })
    }

    pub fn hull(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: exact::min(&self.lo, &other.lo).clone(),
            hi: exact::max(&self.hi, &other.hi).clone(),
        }
    }

    /// True when every point of `self` is strictly below every point of `other`.
    pub fn certainly_lt(&self, other: &RatInterval) -> bool {
        exact::lt(&self.hi, &other.lo)
    }

    pub fn certainly_le(&self, other: &RatInterval) -> bool {
        exact::le(&self.hi, &other.lo)
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn abs(&self) -> RatInterval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            -self
        } else {
            let neg = -&self.lo;
            RatInterval {
                lo: Rational::zero(),
                hi: exact::max(&neg, &self.hi).clone(),
            }
        }
    }

    pub fn scale(&self, k: &Rational) -> RatInterval {
        RatInterval::spanning(exact::mul(&self.lo, k), exact::mul(&self.hi, k))
    }

    pub fn shift(&self, k: &Rational) -> RatInterval {
        RatInterval {
            lo: exact::add(&self.lo, k),
            hi: exact::add(&self.hi, k),
        }
    }

    /// `1 / self`; `None` when the interval contains zero.
    pub fn recip(&self) -> Option<RatInterval> {
        if self.contains_zero() {
            return None;
        }
        Some(RatInterval {
            lo: exact::recip(&self.hi),
            hi: exact::recip(&self.lo),
        })
    }

    pub fn checked_div(&self, other: &RatInterval) -> Option<RatInterval> {
        other.recip().map(|r| self * &r)
    }

    pub fn powi(&self, n: u32) -> RatInterval {
        if self.is_point() {
            return RatInterval::point(exact::powi(&self.lo, n));
        }
        let mut acc = RatInterval::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Widens the endpoints outward onto the grid `2^-bits`.
    pub fn round_out(&self, bits: u32) -> RatInterval {
        RatInterval {
            lo: floor_to_grid(&self.lo, bits),
            hi: ceil_to_grid(&self.hi, bits),
        }
    }

    pub fn max(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: exact::max(&self.lo, &other.lo).clone(),
            hi: exact::max(&self.hi, &other.hi).clone(),
        }
    }

    pub fn min(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: exact::min(&self.lo, &other.lo).clone(),
            hi: exact::min(&self.hi, &other.hi).clone(),
        }
    }

    /// Approximate midpoint as `f64`; for display only.
    pub fn approx(&self) -> f64 {
        let m = exact::tidy(self.mid());
        match m.to_f64() {
            Some(v) if v.is_finite() => v,
            _ => {
                // scale both parts down to a representable range
                let shift = m.numer().bits().max(m.denom().bits()).saturating_sub(900);
                let n = (m.numer() >> shift).to_f64().unwrap_or(f64::NAN);
                let d = (m.denom() >> shift).to_f64().unwrap_or(f64::NAN);
                n / d
            }
        }
    }

    /// Three-way certified comparison; `None` when the intervals overlap.
    pub fn certified_cmp(&self, other: &RatInterval) -> Option<Ordering> {
        if exact::lt(&self.hi, &other.lo) {
            Some(Ordering::Less)
        } else if exact::lt(&other.hi, &self.lo) {
            Some(Ordering::Greater)
        } else if self.is_point() && other.is_point() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
}

pub(crate) fn floor_to_grid(x: &Rational, bits: u32) -> Rational {
    let scaled = x.numer() << bits;
    let f = scaled.div_floor(x.denom());
    Rational::new(f, BigInt::one() << bits)
}

pub(crate) fn ceil_to_grid(x: &Rational, bits: u32) -> Rational {
    let scaled = x.numer() << bits;
    let c = scaled.div_ceil(x.denom());
    Rational::new(c, BigInt::one() << bits)
}

impl PartialEq for RatInterval {
    fn eq(&self, other: &RatInterval) -> bool {
        exact::cmp(&self.lo, &other.lo) == Ordering::Equal
            && exact::cmp(&self.hi, &other.hi) == Ordering::Equal
    }
}

impl Eq for RatInterval {}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<Rational> for RatInterval {
    fn from(x: Rational) -> Self {
        RatInterval::point(x)
    }
}

impl<'a> Add<&'a RatInterval> for &'a RatInterval {
    type Output = RatInterval;
    fn add(self, rhs: &RatInterval) -> RatInterval {
        RatInterval {
            lo: exact::add(&self.lo, &rhs.lo),
            hi: exact::add(&self.hi, &rhs.hi),
        }
    }
}

impl Add for RatInterval {
    type Output = RatInterval;
    fn add(self, rhs: RatInterval) -> RatInterval {
        &self + &rhs
    }
}

impl<'a> Sub<&'a RatInterval> for &'a RatInterval {
    type Output = RatInterval;
    fn sub(self, rhs: &RatInterval) -> RatInterval {
        RatInterval {
            lo: exact::sub(&self.lo, &rhs.hi),
            hi: exact::sub(&self.hi, &rhs.lo),
        }
    }
}

impl Sub for RatInterval {
    type Output = RatInterval;
    fn sub(self, rhs: RatInterval) -> RatInterval {
        &self - &rhs
    }
}

impl Neg for &RatInterval {
    type Output = RatInterval;
    fn neg(self) -> RatInterval {
        RatInterval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }
}

impl Neg for RatInterval {
    type Output = RatInterval;
    fn neg(self) -> RatInterval {
        -&self
    }
}

impl<'a> Mul<&'a RatInterval> for &'a RatInterval {
    type Output = RatInterval;
    fn mul(self, rhs: &RatInterval) -> RatInterval {
        if self.is_point() && rhs.is_point() {
            return RatInterval::point(exact::mul(&self.lo, &rhs.lo));
        }
        if !self.lo.is_negative() && !rhs.lo.is_negative() {
            return RatInterval {
                lo: exact::mul(&self.lo, &rhs.lo),
                hi: exact::mul(&self.hi, &rhs.hi),
            };
        }
        let c = [
            exact::mul(&self.lo, &rhs.lo),
            exact::mul(&self.lo, &rhs.hi),
            exact::mul(&self.hi, &rhs.lo),
            exact::mul(&self.hi, &rhs.hi),
        ];
        let lo = c.iter().fold(&c[0], |m, x| exact::min(m, x)).clone();
        let hi = c.iter().fold(&c[0], |m, x| exact::max(m, x)).clone();
        RatInterval { lo, hi }
    }
}

impl Mul for RatInterval {
    type Output = RatInterval;
    fn mul(self, rhs: RatInterval) -> RatInterval {
        &self * &rhs
    }
}
