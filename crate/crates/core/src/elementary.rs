//! Outward-rounded `log` and `exp` on exact rationals.
//!
//! Internally values are carried as fixed-point intervals `[lo, hi] * 2^-w` with integer
//! mantissas; every truncation rounds `lo` down and `hi` up, so the final enclosure
//! always contains the true value. Results are handed back as [`RatInterval`]s.
//!
//! * [`log`] guarantees an absolute width of at most `2^-bits`.
//! * [`exp`] guarantees a relative width of at most `2^-bits`.

use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{exact, interval::RatInterval, Rational};

/// Fixed-point interval: value in `[lo, hi] / 2^w`.
#[derive(Clone, Debug)]
struct Fix {
    lo: BigInt,
    hi: BigInt,
}

fn shr_floor(x: &BigInt, n: u32) -> BigInt {
    // `>>` on BigInt rounds toward negative infinity.
    x >> n
}

fn shr_ceil(x: &BigInt, n: u32) -> BigInt {
    -((-x) >> n)
}

impl Fix {
    fn from_rational(x: &Rational, w: u32) -> Fix {
        let scaled = x.numer() << w;
        Fix {
            lo: scaled.div_floor(x.denom()),
            hi: scaled.div_ceil(x.denom()),
        }
    }

    fn from_int(n: &BigInt, w: u32) -> Fix {
        let v = n << w;
        Fix {
            lo: v.clone(),
            hi: v,
        }
    }

    fn add(&self, o: &Fix) -> Fix {
        Fix {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    fn sub(&self, o: &Fix) -> Fix {
        Fix {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    fn mul(&self, o: &Fix, w: u32) -> Fix {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().unwrap();
        let hi = c.iter().max().unwrap();
        Fix {
            lo: shr_floor(lo, w),
            hi: shr_ceil(hi, w),
        }
    }

    fn scale_int(&self, k: &BigInt) -> Fix {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            Fix { lo: a, hi: b }
        } else {
            Fix { lo: b, hi: a }
        }
    }

    fn div_u(&self, d: u64) -> Fix {
        let d = BigInt::from(d);
        Fix {
            lo: self.lo.div_floor(&d),
            hi: self.hi.div_ceil(&d),
        }
    }

    fn shr(&self, n: u32) -> Fix {
        Fix {
            lo: shr_floor(&self.lo, n),
            hi: shr_ceil(&self.hi, n),
        }
    }

    fn mag(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }

    fn widen(&self, r: &BigInt) -> Fix {
        Fix {
            lo: &self.lo - r,
            hi: &self.hi + r,
        }
    }

    fn to_interval(&self, w: u32) -> RatInterval {
        let d = BigInt::one() << w;
        RatInterval::new(
            Rational::new(self.lo.clone(), d.clone()),
            Rational::new(self.hi.clone(), d),
        )
    }
}

/// `sum_{i>=0} z^(2i+1) / (2i+1)` for `|z| <= 1/5`.
fn atanh_series(z: &Fix, w: u32) -> Fix {
    let z2 = z.mul(z, w);
    let z2_hi = z2.mag();
    let mut sum = z.clone();
    let mut pow = z.clone();
    let mut i: u64 = 1;
    loop {
        pow = pow.mul(&z2, w);
        sum = sum.add(&pow.div_u(2 * i + 1));
        // tail after this term is below 2 * |pow| * z^2 since 1/(1-z^2) < 2
        let tail = (pow.mag() * &z2_hi * 2u32 >> w) + 1u32;
        if tail <= BigInt::from(4) {
            return sum.widen(&tail);
        }
        i += 1;
    }
}

fn ln2_compute(w: u32) -> Fix {
    let third = Fix::from_rational(&Rational::new(1.into(), 3.into()), w);
    let a = atanh_series(&third, w);
    Fix {
        lo: a.lo * 2,
        hi: a.hi * 2,
    }
}

static LN2_CACHE: OnceLock<Mutex<Option<(u32, Fix)>>> = OnceLock::new();

fn ln2_fix(w: u32) -> Fix {
    let cache = LN2_CACHE.get_or_init(|| Mutex::new(None));
    let mut guard = cache.lock().unwrap();
    let (cw, cv) = match guard.as_ref() {
        Some((cw, cv)) if *cw >= w => (*cw, cv.clone()),
        _ => {
            let cw = (w + 64).max(256);
            let v = ln2_compute(cw + 16).shr(16);
            *guard = Some((cw, v.clone()));
            (cw, v)
        }
    };
    drop(guard);
    cv.shr(cw - w)
}

/// Enclosure of `ln 2` with width at most `2^-bits`.
pub fn ln2(bits: u32) -> RatInterval {
    ln2_fix(bits + 4).to_interval(bits + 4)
}

fn bitlen(n: &BigInt) -> u32 {
    n.bits() as u32
}

/// `floor(log2 x)` for positive rational `x`.
fn floor_log2(x: &Rational) -> i64 {
    let n = x.numer();
    let d = x.denom();
    let mut e = n.bits() as i64 - d.bits() as i64;
    // 2^e <= n/d < 2^(e+1) after adjustment
    let ge = |e: i64| -> bool {
        if e >= 0 {
            n >= &(d << e as u32)
        } else {
            (n << (-e) as u32) >= *d
        }
    };
    while !ge(e) {
        e -= 1;
    }
    while ge(e + 1) {
        e += 1;
    }
    e
}

/// Natural logarithm of a positive rational, absolute width at most `2^-bits`.
///
/// Panics if `x <= 0`.
pub fn log(x: &Rational, bits: u32) -> RatInterval {
    assert!(x.is_positive(), "log of non-positive value {x}");
    if x.is_one() {
        return RatInterval::zero();
    }
    let mut e = floor_log2(x);
    // m = x / 2^e in [1, 2); pull into [1/sqrt2, sqrt2]
    let (mn, md) = if e >= 0 {
        (x.numer().clone(), x.denom() << e as u32)
    } else {
        (x.numer() << (-e) as u32, x.denom().clone())
    };
    let (mn, md) = if &mn * &mn > &md * &md * 2u32 {
        e += 1;
        (mn, md * 2u32)
    } else {
        (mn, md)
    };
    let e_big = BigInt::from(e);
    let w = bits + 12 + bitlen(&e_big);
    let z = exact::ratio(&mn - &md, &mn + &md);
    let mut acc = Fix::from_rational(&z, w);
    if !z.is_zero() {
        acc = atanh_series(&acc, w);
        acc = Fix {
            lo: acc.lo * 2,
            hi: acc.hi * 2,
        };
    }
    if e != 0 {
        acc = acc.add(&ln2_fix(w).scale_int(&e_big));
    }
    acc.to_interval(w)
}

/// Enclosure of `log` over an interval with positive lower endpoint.
pub fn log_interval(x: &RatInterval, bits: u32) -> RatInterval {
    if x.is_point() {
        return log(x.lo(), bits);
    }
    let lo = log(x.lo(), bits);
    let hi = log(x.hi(), bits);
    RatInterval::new(lo.lo().clone(), hi.hi().clone())
}

const SQUARINGS: u32 = 8;

/// `exp(x)` with relative width at most `2^-bits`.
pub fn exp(x: &Rational, bits: u32) -> RatInterval {
    if x.is_zero() {
        return RatInterval::one();
    }
    // k ~ x / ln 2; any integer works, this one keeps the reduced argument small
    let inv_ln2 = Rational::new(1_442_695_040_889u64.into(), 1_000_000_000_000u64.into());
    let k = (x * inv_ln2 + Rational::new(1.into(), 2.into()))
        .floor()
        .to_integer();
    let w = bits + 24 + SQUARINGS;
    let l2 = ln2_fix(w + bitlen(&k) + 2);
    let l2 = l2.shr(bitlen(&k) + 2);
    let f = Fix::from_rational(x, w).sub(&l2.scale_int(&k));
    let y = f.shr(SQUARINGS);

    let one = Fix::from_int(&BigInt::one(), w);
    let mut sum = one.clone();
    let mut term = one;
    let mut i: u64 = 1;
    loop {
        term = term.mul(&y, w).div_u(i);
        sum = sum.add(&term);
        // |y| < 1/2 so the remaining tail is below 2 * |term| * |y|
        let tail = ((term.mag() * y.mag()) >> (w - 1)) + 1u32;
        if tail <= BigInt::from(4) || term.mag().is_zero() {
            sum = sum.widen(&tail);
            break;
        }
        i += 1;
    }
    for _ in 0..SQUARINGS {
        sum = sum.mul(&sum, w);
    }
    let base = sum.to_interval(w);
    let k_i64 = k.to_i64().expect("exp argument too large");
    let scale = if k_i64 >= 0 {
        Rational::from_integer(BigInt::one() << k_i64 as u32)
    } else {
        Rational::new(BigInt::one(), BigInt::one() << (-k_i64) as u32)
    };
    base.scale(&scale)
}

/// Enclosure of `exp` over an interval.
pub fn exp_interval(x: &RatInterval, bits: u32) -> RatInterval {
    if x.is_point() {
        return exp(x.lo(), bits);
    }
    let lo = exp(x.lo(), bits);
    let hi = exp(x.hi(), bits);
    RatInterval::new(lo.lo().clone(), hi.hi().clone())
}

/// `t^k` for positive rational `t` and rational exponent `k`.
///
/// Exact when `k` is an integer; otherwise an enclosure with relative width about
/// `2^-bits`.
pub fn pow(t: &Rational, k: &Rational, bits: u32) -> RatInterval {
    if k.is_integer() {
        let e = k.to_integer();
        let base = if e.is_negative() {
            exact::recip(t)
        } else {
            t.clone()
        };
        let n = e.abs().to_u32().expect("integer exponent too large");
        return RatInterval::point(exact::powi(&base, n));
    }
    let lt = log(
        t,
        bits + 8 + bitlen(&k.numer().abs()) + bitlen(&k.to_integer().abs()),
    );
    exp_interval(&lt.scale(k), bits + 4)
}
