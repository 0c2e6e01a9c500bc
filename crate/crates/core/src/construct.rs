//! Greedy construction of a real that is not psi-Dirichlet: every partial quotient
//! is chosen so that `a_n a_{n+1}` exceeds the product threshold at `q_n`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::classify::product_threshold;
use crate::psi::{PsiError, PsiFunction};
use crate::ratcf::CFState;
use crate::{exact, Precision, Rational};

/// Entries above this many bits abort the construction by default.
pub const DEFAULT_ENTRY_BIT_CAP: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error("t psi(t) < 1 cannot be certified at t = {0}")]
    PsiTooLarge(Rational),
    #[error("entry a_{index} needs {bits} bits, above the cap of {cap}")]
    EntryTooLarge { index: usize, bits: u64, cap: u64 },
    #[error("depth must be at least 2")]
    DepthTooSmall,
    #[error(transparent)]
    Psi(PsiError),
}

impl From<PsiError> for ConstructError {
    fn from(e: PsiError) -> Self {
        match e {
            PsiError::DirichletViolatesBound { t } => ConstructError::PsiTooLarge(t),
            other => ConstructError::Psi(other),
        }
    }
}

/// `a_1 = 1` and `a_{n+1} = floor(U_n / a_n) + 1`, the least integer with
/// `a_n a_{n+1} > U_n`, where `U_n` is the certified upper end of
/// `((q_n psi(q_n))^-1 - 1)^-1`.
pub fn build_counterexample(
    psi: &PsiFunction,
    depth: usize,
    prec: Precision,
) -> Result<CFState, ConstructError> {
    build_counterexample_capped(psi, depth, prec, DEFAULT_ENTRY_BIT_CAP)
}

pub fn build_counterexample_capped(
    psi: &PsiFunction,
    depth: usize,
    prec: Precision,
    entry_bit_cap: u64,
) -> Result<CFState, ConstructError> {
    if depth < 2 {
        return Err(ConstructError::DepthTooSmall);
    }
    let mut entries: Vec<BigInt> = vec![BigInt::one()];
    let (mut q_prev, mut q) = (BigInt::one(), BigInt::one());
    while entries.len() < depth {
        let a_n = entries.last().unwrap().clone();
        let an = Rational::from_integer(a_n.clone());
        // refine until the greedy choice no longer depends on the enclosure
        let threshold = product_threshold(psi, &Rational::from_integer(q.clone()), prec, |t| {
            exact::floor(&exact::div(t.lo(), &an)) == exact::floor(&exact::div(t.hi(), &an))
        })?;
        let mut next = exact::floor(&exact::div(threshold.hi(), &an)) + BigInt::one();
        if next.is_zero() {
            next = BigInt::one();
        }
        let bits = next.bits();
        if bits > entry_bit_cap {
            return Err(ConstructError::EntryTooLarge {
                index: entries.len() + 1,
                bits,
                cap: entry_bit_cap,
            });
        }
        let q_next = &next * &q + &q_prev;
        q_prev = std::mem::replace(&mut q, q_next);
        entries.push(next);
    }
    Ok(CFState::from_entries(entries, false).expect("positive entries"))
}

/// Indices `n` at which the greedy step is provably minimal: `(a_{n+1} - 1) a_n`
/// does not exceed the certified lower end of the threshold.
pub fn minimality_holds(
    cf: &CFState,
    psi: &PsiFunction,
    n: usize,
    prec: Precision,
) -> Result<bool, ConstructError> {
    let q = Rational::from_integer(cf.q(n).clone());
    let t = product_threshold(psi, &q, prec, |_| false)?;
    let reduced = (cf.entry(n + 1) - BigInt::one()) * cf.entry(n);
    Ok(exact::le(&Rational::from_integer(reduced), t.lo()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{dirichlet_verdicts, product_criterion, ProductOutcome, Status};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn u64s(cf: &CFState) -> Vec<u64> {
        cf.entries()
            .iter()
            .map(|a| u64::try_from(a).unwrap())
            .collect()
    }

    #[test]
    fn scaled_half_alternates() {
        let psi = PsiFunction::scaled_dirichlet(r(1, 2)).unwrap();
        let cf = build_counterexample(&psi, 8, Precision::default()).unwrap();
        assert_eq!(u64s(&cf), vec![1, 2, 1, 2, 1, 2, 1, 2]);
    }

    #[test]
    fn power_gap_grows() {
        let psi = PsiFunction::power_gap(r(1, 1), r(1, 1)).unwrap();
        let cf = build_counterexample(&psi, 8, Precision::default()).unwrap();
        // threshold q_n - 1: q = 1, 2, 5, 17, 107, 1943, ...
        assert_eq!(u64s(&cf), vec![1, 1, 2, 3, 6, 18, 108, 1944]);
        let qs: Vec<u64> = (1..=6).map(|n| u64::try_from(cf.q(n)).unwrap()).collect();
        assert_eq!(qs, vec![1, 2, 5, 17, 107, 1943]);
    }

    #[test]
    fn dirichlet_function_is_rejected() {
        let err = build_counterexample(&PsiFunction::dirichlet(), 5, Precision::default());
        assert!(matches!(err, Err(ConstructError::PsiTooLarge(_))));
    }

    #[test]
    fn entry_cap_aborts() {
        let psi = PsiFunction::power_gap(r(1, 1), r(1, 1)).unwrap();
        let err = build_counterexample_capped(&psi, 20, Precision::default(), 64);
        assert!(matches!(err, Err(ConstructError::EntryTooLarge { .. })));
    }

    #[test]
    fn construction_is_certified_violating() {
        let p = Precision::default();
        let psi = PsiFunction::scaled_dirichlet(r(3, 4)).unwrap();
        let cf = build_counterexample(&psi, 20, p).unwrap();
        for n in 1..20 {
            let v = product_criterion(&cf, &psi, n, p).unwrap();
            assert_eq!(v.outcome, ProductOutcome::ImpliesViolationHere, "n = {n}");
            assert!(minimality_holds(&cf, &psi, n, p).unwrap());
        }
        let rep = dirichlet_verdicts(&cf, &psi, (2, 20), p).unwrap();
        assert_eq!(rep.count(Status::Satisfied), 0);
    }

    #[test]
    fn power_gap_with_irrational_exponent_is_minimal() {
        let p = Precision::default();
        let psi = PsiFunction::power_gap(r(1, 1), r(1, 2)).unwrap();
        let cf = build_counterexample(&psi, 12, p).unwrap();
        for n in 1..12 {
            assert!(minimality_holds(&cf, &psi, n, p).unwrap(), "n = {n}");
        }
    }
}
