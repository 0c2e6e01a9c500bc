//! Certified tools for Dirichlet-improvable approximation: continued fractions,
//! approximating functions, per-index classification, constructions, Gauss-measure
//! estimates and the lattice-flow (Dani) side of the correspondence.

pub mod classify;
pub mod construct;
pub mod elementary;
pub mod exact;
pub mod interval;
pub mod lattice;
pub mod measure;
pub mod psi;
pub mod ratcf;

pub type Rational = num_rational::BigRational;
pub use interval::RatInterval;

use num_bigint::BigInt;

/// Working precision in bits plus the number of doublings tried before a
/// comparison is declared indeterminate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub bits: u32,
    pub retries: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            bits: 128,
            retries: 3,
        }
    }
}

impl Precision {
    pub fn new(bits: u32, retries: u32) -> Self {
        Precision { bits, retries }
    }

    /// `bits, 2 bits, 4 bits, ...` with `retries` doublings.
    pub fn ladder(&self) -> impl Iterator<Item = u32> {
        let bits = self.bits.max(8);
        (0..=self.retries).map(move |i| bits.saturating_mul(1 << i.min(16)))
    }

    pub fn max_bits(&self) -> u32 {
        self.ladder().last().unwrap_or(self.bits)
    }
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.7` or `-1.25e-3`.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let bad = || format!("not a rational number: '{s}'");
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d == BigInt::from(0) {
            return Err(format!("zero denominator in '{s}'"));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all: BigInt = format!("{int_part}{frac_part}0")
        .parse::<BigInt>()
        .map_err(|_| bad())?
        / 10;
    let shift = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if shift >= 0 {
        Rational::from_integer(all * num_traits::pow(ten, shift as usize))
    } else {
        Rational::new(all, num_traits::pow(ten, (-shift) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        let r = |n: i64, d: i64| Rational::new(n.into(), d.into());
        assert_eq!(parse_rational("7/10").unwrap(), r(7, 10));
        assert_eq!(parse_rational("0.7").unwrap(), r(7, 10));
        assert_eq!(parse_rational("-1.25e-3").unwrap(), r(-1, 800));
        assert_eq!(parse_rational("12").unwrap(), r(12, 1));
        assert_eq!(parse_rational("3e2").unwrap(), r(300, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn ladder_doubles() {
        let p = Precision::new(64, 2);
        assert_eq!(p.ladder().collect::<Vec<_>>(), vec![64, 128, 256]);
    }
}
