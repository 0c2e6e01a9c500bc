//! Size-adaptive rational kernel.
//!
//! `BigRational` normalizes every result with a binary gcd, which is quadratic in the
//! operand length. Continued fractions built by the greedy construction reach
//! denominators with millions of bits, so above [`REDUCE_LIMIT`] combined bits the
//! kernel keeps fractions unreduced and compares by cross-multiplication. Values are
//! always exact; only their representation differs.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::Rational;

/// Operands with more combined numerator and denominator bits stay unreduced.
pub const REDUCE_LIMIT: u64 = 4096;

fn size(x: &Rational) -> u64 {
    x.numer().bits() + x.denom().bits()
}

fn small(x: &Rational) -> bool {
    size(x) <= REDUCE_LIMIT
}

/// `n / d` for `d != 0`, reduced only when cheap.
pub fn ratio(n: BigInt, d: BigInt) -> Rational {
    assert!(!d.is_zero(), "zero denominator");
    let (n, d) = if d.is_negative() { (-n, -d) } else { (n, d) };
    if n.bits() + d.bits() <= REDUCE_LIMIT {
        Rational::new(n, d)
    } else if n.is_zero() {
        Rational::zero()
    } else {
        Rational::new_raw(n, d)
    }
}

/// `n / d` for coprime `n` and `d > 0`.
pub fn ratio_coprime(n: BigInt, d: BigInt) -> Rational {
    debug_assert!(d.is_positive());
    if n.is_zero() {
        Rational::zero()
    } else {
        Rational::new_raw(n, d)
    }
}

/// Reduces a fraction if it has become small enough.
pub fn tidy(x: Rational) -> Rational {
    if x.is_integer() || !small(&x) {
        x
    } else {
        let (n, d) = x.into_raw();
        Rational::new(n, d)
    }
}

pub fn cmp(a: &Rational, b: &Rational) -> Ordering {
    if small(a) && small(b) {
        return a.cmp(b);
    }
    if a.denom() == b.denom() {
        return a.numer().cmp(b.numer());
    }
    let (sa, sb) = (a.numer().sign(), b.numer().sign());
    if sa != sb {
        return sa.cmp(&sb);
    }
    (a.numer() * b.denom()).cmp(&(b.numer() * a.denom()))
}

pub fn lt(a: &Rational, b: &Rational) -> bool {
    cmp(a, b) == Ordering::Less
}

pub fn le(a: &Rational, b: &Rational) -> bool {
    cmp(a, b) != Ordering::Greater
}

pub fn min<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if le(a, b) {
        a
    } else {
        b
    }
}

pub fn max<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if le(a, b) {
        b
    } else {
        a
    }
}

pub fn add(a: &Rational, b: &Rational) -> Rational {
    if small(a) && small(b) {
        return a + b;
    }
    if a.denom() == b.denom() {
        return ratio(a.numer() + b.numer(), a.denom().clone());
    }
    ratio(
        a.numer() * b.denom() + b.numer() * a.denom(),
        a.denom() * b.denom(),
    )
}

pub fn sub(a: &Rational, b: &Rational) -> Rational {
    add(a, &-b)
}

pub fn mul(a: &Rational, b: &Rational) -> Rational {
    if small(a) && small(b) {
        return a * b;
    }
    if a.is_zero() || b.is_zero() {
        return Rational::zero();
    }
    // cheap cancellations that the greedy construction produces constantly
    if a.numer() == b.denom() {
        return ratio(b.numer().clone(), a.denom().clone());
    }
    if b.numer() == a.denom() {
        return ratio(a.numer().clone(), b.denom().clone());
    }
    ratio(a.numer() * b.numer(), a.denom() * b.denom())
}

/// Panics when `a` is zero.
pub fn recip(a: &Rational) -> Rational {
    assert!(!a.is_zero(), "reciprocal of zero");
    if a.numer().is_negative() {
        Rational::new_raw(-a.denom(), -a.numer())
    } else {
        Rational::new_raw(a.denom().clone(), a.numer().clone())
    }
}

pub fn div(a: &Rational, b: &Rational) -> Rational {
    mul(a, &recip(b))
}

pub fn abs(a: &Rational) -> Rational {
    if a.numer().is_negative() {
        -a
    } else {
        a.clone()
    }
}

/// `a^n` without reductions; numerator and denominator stay coprime.
pub fn powi(a: &Rational, n: u32) -> Rational {
    let num = num_traits::pow(a.numer().clone(), n as usize);
    let den = num_traits::pow(a.denom().clone(), n as usize);
    if num.bits() + den.bits() <= REDUCE_LIMIT {
        Rational::new(num, den)
    } else {
        Rational::new_raw(num, den)
    }
}

pub fn from_int(n: BigInt) -> Rational {
    Rational::from_integer(n)
}

pub fn is_one(a: &Rational) -> bool {
    a.numer() == a.denom()
}

/// `floor(a)` as an integer.
pub fn floor(a: &Rational) -> BigInt {
    num_integer::Integer::div_floor(a.numer(), a.denom())
}

pub fn ceil(a: &Rational) -> BigInt {
    -num_integer::Integer::div_floor(&-a.numer(), a.denom())
}

pub fn one() -> Rational {
    Rational::one()
}
