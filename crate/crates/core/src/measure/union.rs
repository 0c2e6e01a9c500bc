use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::{elementary, RatInterval, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnionError {
    #[error("interval ({0}, {1}) is empty or leaves [0, 1]")]
    BadInterval(Rational, Rational),
    #[error("intervals overlap or are out of order near {0}")]
    Overlap(Rational),
    #[error("Psi = {0} must be at least {1}")]
    PsiTooSmall(Rational, Rational),
    #[error("Psi = {0} is too large for the summation (floor must be at most 10^9)")]
    PsiTooLarge(Rational),
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Disjoint, ordered union of open intervals inside `(0, 1)` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalUnion {
    parts: Vec<(Rational, Rational)>,
}

impl IntervalUnion {
    pub fn new(parts: Vec<(Rational, Rational)>) -> Result<IntervalUnion, UnionError> {
        for (lo, hi) in &parts {
            if lo >= hi || lo.is_negative() || hi > &int(1) {
                return Err(UnionError::BadInterval(lo.clone(), hi.clone()));
            }
        }
        for w in parts.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(UnionError::Overlap(w[1].0.clone()));
            }
        }
        Ok(IntervalUnion { parts })
    }

    /// Sorts the parts first; they must still be disjoint.
    pub fn from_unsorted(
        mut parts: Vec<(Rational, Rational)>,
    ) -> Result<IntervalUnion, UnionError> {
        parts.sort_by(|a, b| a.0.cmp(&b.0));
        Self::new(parts)
    }

    pub fn full() -> IntervalUnion {
        IntervalUnion {
            parts: vec![(int(0), int(1))],
        }
    }

    pub fn empty() -> IntervalUnion {
        IntervalUnion { parts: Vec::new() }
    }

    pub fn single(lo: Rational, hi: Rational) -> Result<IntervalUnion, UnionError> {
        Self::new(vec![(lo, hi)])
    }

    pub fn parts(&self) -> &[(Rational, Rational)] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Membership in the open union.
    pub fn contains(&self, x: &Rational) -> bool {
        let i = self.parts.partition_point(|(lo, _)| lo < x);
        i > 0 && x < &self.parts[i - 1].1
    }

    pub fn lebesgue(&self) -> Rational {
        self.parts
            .iter()
            .fold(Rational::zero(), |acc, (lo, hi)| acc + (hi - lo))
    }

    /// Enclosure of the Gauss measure `(1/log 2) sum log((1+b)/(1+a))`, width at most
    /// `2^-bits`.
    pub fn gauss(&self, bits: u32) -> RatInterval {
        gauss_sum(self.parts.iter().map(|(a, b)| (a, b)), bits)
    }

    /// The gaps of the union inside `(0, 1)`, as open intervals.
    pub fn complement(&self) -> IntervalUnion {
        let mut out = Vec::new();
        let mut cursor = int(0);
        for (lo, hi) in &self.parts {
            if lo > &cursor {
                out.push((cursor.clone(), lo.clone()));
            }
            cursor = hi.clone();
        }
        if cursor < int(1) {
            out.push((cursor, int(1)));
        }
        IntervalUnion { parts: out }
    }

    /// Whether every part of `other` lies inside some part of `self`.
    pub fn covers(&self, other: &IntervalUnion) -> bool {
        other
            .parts
            .iter()
            .all(|(lo, hi)| self.parts.iter().any(|(a, b)| a <= lo && hi <= b))
    }
}

/// Gauss measure of `(a, b)`: `log2((1 + b)/(1 + a))`; exact when the ratio is a power
/// of two.
pub fn gauss_interval(a: &Rational, b: &Rational, bits: u32) -> RatInterval {
    gauss_sum(std::iter::once((a, b)), bits)
}

fn gauss_sum<'a>(
    parts: impl Iterator<Item = (&'a Rational, &'a Rational)>,
    bits: u32,
) -> RatInterval {
    let ratios: Vec<Rational> = parts.map(|(a, b)| (b + int(1)) / (a + int(1))).collect();
    if ratios.is_empty() {
        return RatInterval::zero();
    }
    // exact powers of two contribute integers
    let mut exact_part = Rational::zero();
    let mut rest = Vec::new();
    for r in ratios {
        match power_of_two(&r) {
            Some(k) => exact_part += int(k),
            None => rest.push(r),
        }
    }
    if rest.is_empty() {
        return RatInterval::point(exact_part);
    }
    let extra = 64 - (rest.len() as u64).leading_zeros() + 4;
    let w = bits + extra + 4;
    let mut sum = RatInterval::zero();
    for r in &rest {
        sum = (&sum + &elementary::log(r, w)).round_out(w + 8);
    }
    let l2 = elementary::ln2(w + 4);
    let q = sum.checked_div(&l2).expect("ln 2 > 0");
    q.shift(&exact_part).round_out(bits + 2)
}

fn power_of_two(r: &Rational) -> Option<i64> {
    let (n, d) = (r.numer(), r.denom());
    let is_pow2 = |x: &BigInt| x.is_positive() && (x & (x - BigInt::one())).is_zero();
    if is_pow2(n) && d.is_one() {
        Some(n.bits() as i64 - 1)
    } else if n.is_one() && is_pow2(d) {
        Some(-(d.bits() as i64 - 1))
    } else {
        None
    }
}

/// `A(Psi) = {x : a_1(x) a_2(x) > Psi}` as an exact union:
/// `(0, 1/(F+1))` together with `(1/(a + 1/b_a), 1/a)` for `a = F, ..., 1`, where
/// `F = floor(Psi)` and `b_a = floor(Psi/a) + 1`.
pub fn a_n_set(big_psi: &Rational) -> Result<IntervalUnion, UnionError> {
    if big_psi < &int(1) {
        return Err(UnionError::PsiTooSmall(big_psi.clone(), int(1)));
    }
    let f = big_psi.floor().to_integer();
    let f_u = f
        .to_u64()
        .filter(|&f| f <= 10_000_000)
        .ok_or_else(|| UnionError::PsiTooLarge(big_psi.clone()))?;
    let mut parts = Vec::with_capacity(f_u as usize + 1);
    parts.push((int(0), Rational::new(BigInt::one(), &f + 1)));
    for a in (1..=f_u).rev() {
        let a_r = Rational::from_integer(BigInt::from(a));
        let b = (big_psi / &a_r).floor() + int(1);
        let lo = (&a_r + b.recip()).recip();
        parts.push((lo, a_r.recip()));
    }
    Ok(IntervalUnion { parts })
}

/// Enclosure of `lambda(A(Psi)) = 1/(F+1) + sum_{a<=F} 1/(a (a b_a + 1))`, accumulated in
/// fixed point with directed rounding; fast for `Psi` up to about `10^8`.
pub fn lambda_a_n_enclosure(big_psi: &Rational) -> Result<RatInterval, UnionError> {
    if big_psi < &int(1) {
        return Err(UnionError::PsiTooSmall(big_psi.clone(), int(1)));
    }
    let too_large = || UnionError::PsiTooLarge(big_psi.clone());
    let num = big_psi.numer().to_u128().ok_or_else(too_large)?;
    let den = big_psi.denom().to_u128().ok_or_else(too_large)?;
    let f = num / den;
    if f > 1_000_000_000 || num >= 1 << 64 || den >= 1 << 40 {
        return Err(too_large());
    }
    const W: u32 = 100;
    let one: u128 = 1 << W;
    let (mut lo, mut hi) = (one / (f + 1), one.div_ceil(f + 1));
    for a in 1..=f {
        let b = num / (den * a) + 1;
        let d = a * (a * b + 1);
        lo += one / d;
        hi += one.div_ceil(d);
    }
    let scale = BigInt::one() << W;
    Ok(RatInterval::new(
        Rational::new(BigInt::from(lo), scale.clone()),
        Rational::new(BigInt::from(hi), scale),
    ))
}

/// One row of the `lambda(A(Psi)) ~ log Psi / Psi` table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsymptoticRow {
    pub big_psi: Rational,
    pub lambda: RatInterval,
    /// Exact measure, computed when `Psi <= 2000`.
    pub lambda_exact: Option<Rational>,
    /// `lambda Psi / log Psi`.
    pub ratio: RatInterval,
}

pub fn asymptotic_check(values: &[Rational], bits: u32) -> Result<Vec<AsymptoticRow>, UnionError> {
    values
        .iter()
        .map(|psi| {
            if psi < &int(2) {
                return Err(UnionError::PsiTooSmall(psi.clone(), int(2)));
            }
            let lambda = lambda_a_n_enclosure(psi)?;
            let lambda_exact = if psi <= &int(2000) {
                Some(a_n_set(psi)?.lebesgue())
            } else {
                None
            };
            let log = elementary::log(psi, bits + 8);
            let ratio = lambda
                .scale(psi)
                .checked_div(&log)
                .expect("log Psi > 0")
                .round_out(bits);
            Ok(AsymptoticRow {
                big_psi: psi.clone(),
                lambda,
                lambda_exact,
                ratio,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratcf::{cf_expand, CFState};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn psi_one_is_complement_of_cylinder() {
        let a = a_n_set(&r(1, 1)).unwrap();
        assert_eq!(a.parts(), &[(r(0, 1), r(1, 2)), (r(2, 3), r(1, 1))]);
        assert_eq!(a.lebesgue(), r(5, 6));
        let gap = a.complement();
        let cyl = CFState::from_u64s(&[1, 1], false).unwrap();
        assert_eq!(
            gap.parts(),
            &[(cyl.cylinder().lo().clone(), cyl.cylinder().hi().clone())]
        );
    }

    #[test]
    fn psi_two_by_formula() {
        // a = 1: b = 3, (3/4, 1); a = 2: b = 2, (2/5, 1/2); tail (0, 1/3)
        let a = a_n_set(&r(2, 1)).unwrap();
        assert_eq!(
            a.parts(),
            &[(r(0, 1), r(1, 3)), (r(2, 5), r(1, 2)), (r(3, 4), r(1, 1))]
        );
        assert_eq!(a.lebesgue(), r(1, 3) + r(1, 10) + r(1, 4));
        assert!(lambda_a_n_enclosure(&r(2, 1))
            .unwrap()
            .contains(&a.lebesgue()));
    }

    #[test]
    fn membership_matches_predicate() {
        let psi = r(7, 2);
        let set = a_n_set(&psi).unwrap();
        for d in 2..60i64 {
            for n in 1..d {
                let x = r(n, d);
                let cf = cf_expand(&x, 100).unwrap();
                let boundary = set.parts().iter().any(|(a, b)| a == &x || b == &x);
                if cf.depth() < 2 || boundary {
                    continue;
                }
                let prod = Rational::from_integer(cf.entry(1) * cf.entry(2));
                assert_eq!(set.contains(&x), prod > psi, "x = {x}");
            }
        }
    }

    #[test]
    fn gauss_measure_values() {
        assert_eq!(
            IntervalUnion::full().gauss(64),
            RatInterval::from_integer(1)
        );
        let half = IntervalUnion::single(r(0, 1), r(1, 2)).unwrap();
        let g = half.gauss(100);
        assert!(g.width() <= Rational::new(1.into(), BigInt::one() << 100u32));
        // log2(3/2) = 0.5849625007211561814537389439478165087598...
        let ten34: BigInt = num_traits::pow(BigInt::from(10), 34);
        let digits: BigInt = "5849625007211561814537389439478165".parse().unwrap();
        let reference = RatInterval::new(
            Rational::new(digits.clone(), ten34.clone()),
            Rational::new(digits + 1, ten34),
        );
        assert!(g.intersects(&reference));
    }

    #[test]
    fn asymptotic_ratios() {
        let rows = asymptotic_check(&[r(100, 1), r(1_000_000, 1)], 64).unwrap();
        let lo = r(1, 2);
        let hi = r(2, 1);
        assert!(rows[0].ratio.lo() >= &lo && rows[0].ratio.hi() <= &hi);
        assert!(rows[1].ratio.lo() >= &r(9, 10) && rows[1].ratio.hi() <= &r(11, 10));
        assert!(rows[0]
            .lambda
            .contains(rows[0].lambda_exact.as_ref().unwrap()));
    }

    #[test]
    fn complement_and_cover() {
        let u = IntervalUnion::new(vec![(r(1, 4), r(1, 2))]).unwrap();
        assert_eq!(
            u.complement().parts(),
            &[(r(0, 1), r(1, 4)), (r(1, 2), r(1, 1))]
        );
        assert!(IntervalUnion::full().covers(&u));
        assert!(IntervalUnion::new(vec![(r(1, 2), r(1, 3))]).is_err());
        assert!(IntervalUnion::new(vec![(r(0, 1), r(1, 2)), (r(1, 3), r(2, 3))]).is_err());
    }
}
