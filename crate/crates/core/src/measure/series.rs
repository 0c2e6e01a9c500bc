use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::psi::{Family, PsiError, PsiFunction};
use crate::{elementary, exact, RatInterval, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnalyticClass {
    Convergent,
    Divergent,
    Unknown,
}

impl fmt::Display for AnalyticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalyticClass::Convergent => "Convergent",
            AnalyticClass::Divergent => "Divergent",
            AnalyticClass::Unknown => "Unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesReport {
    /// First summation index (the integer domain start of psi).
    pub start: u64,
    pub n_max: u64,
    /// `(n, enclosure of the partial sum up to n)` at powers of two and at `n_max`.
    pub partial_sums: Vec<(u64, RatInterval)>,
    pub analytic_class: AnalyticClass,
    pub reason: String,
}

impl SeriesReport {
    /// Measure of D(psi) implied by the class: `Some(true)` for full measure,
    /// `Some(false)` for measure zero.
    pub fn full_measure(&self) -> Option<bool> {
        match self.analytic_class {
            AnalyticClass::Convergent => Some(true),
            AnalyticClass::Divergent => Some(false),
            AnalyticClass::Unknown => None,
        }
    }
}

/// Closed-form class of `sum -log(1 - n psi(n)) (1 - n psi(n)) / n` for the built-in
/// families. With `h(t) = 1 - t psi(t)` the terms are `h log(1/h) / n`.
pub fn analytic_class(psi: &PsiFunction) -> (AnalyticClass, String) {
    match psi.family() {
        Family::ScaledDirichlet { c } => {
            if c < &Rational::from_integer(1.into()) {
                (
                    AnalyticClass::Divergent,
                    format!("h = 1 - {c} is constant, so the terms are a multiple of 1/n"),
                )
            } else {
                (AnalyticClass::Unknown, "t psi(t) < 1 fails".into())
            }
        }
        Family::PowerGap { k, .. } => {
            if k.is_positive() {
                (
                    AnalyticClass::Convergent,
                    format!("h = a t^-{k}: terms are O(log n / n^(1+{k}))"),
                )
            } else {
                (
                    AnalyticClass::Divergent,
                    "k = 0: h is constant, harmonic terms".into(),
                )
            }
        }
        Family::LogGap { k, .. } => {
            let one = Rational::from_integer(1.into());
            if k > &one {
                (
                    AnalyticClass::Convergent,
                    format!("h = a (log t)^-{k}: terms ~ log log n / (n (log n)^{k}), k > 1"),
                )
            } else {
                (
                    AnalyticClass::Divergent,
                    format!("h = a (log t)^-{k}: terms ~ log log n / (n (log n)^{k}), k <= 1"),
                )
            }
        }
        Family::Table { .. } => (
            AnalyticClass::Unknown,
            "tables are decided by no closed-form rule".into(),
        ),
    }
}

/// Certified partial sums of `sum_{n <= N} -log(1 - n psi(n)) (1 - n psi(n)) / n`.
pub fn main_series(psi: &PsiFunction, n_max: u64, bits: u32) -> Result<SeriesReport, PsiError> {
    let start = exact::ceil(psi.t0()).max(BigInt::from(1));
    let start: u64 = start.try_into().unwrap_or(u64::MAX);
    let (class, reason) = analytic_class(psi);
    let w = bits + 8 + 64 - n_max.max(1).leading_zeros();
    let mut sum = RatInterval::zero();
    let mut partial_sums = Vec::new();
    let mut next_mark = start.next_power_of_two();
    for n in start..=n_max {
        let t = Rational::from_integer(n.into());
        let g = psi.eval_t_psi(&t, w)?;
        let h = &RatInterval::one() - &g;
        if !h.is_positive() {
            return Err(PsiError::DirichletViolatesBound { t });
        }
        let term = if h.is_point() && h.lo() == &Rational::from_integer(1.into()) {
            RatInterval::zero()
        } else {
            let log_h = elementary::log_interval(&h, w);
            let neg = -&log_h;
            // -log h >= 0 on (0, 1]
            let neg = RatInterval::new(neg.lo().max(&Rational::zero()).clone(), neg.hi().clone());
            (&neg * &h).scale(&Rational::new(1.into(), n.into()))
        };
        sum = (&sum + &term).round_out(w + 4);
        if n == next_mark || n == n_max {
            partial_sums.push((n, sum.round_out(bits)));
            next_mark = next_mark.saturating_mul(2);
        }
    }
    if partial_sums.is_empty() {
        partial_sums.push((n_max, RatInterval::zero()));
    }
    debug_assert!(partial_sums
        .iter()
        .all(|(_, s)| !s.lo().is_negative() || s.lo().is_zero()));
    Ok(SeriesReport {
        start,
        n_max,
        partial_sums,
        analytic_class: class,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn classes_follow_the_families() {
        let c = |p: PsiFunction| analytic_class(&p).0;
        assert_eq!(
            c(PsiFunction::scaled_dirichlet(r(7, 10)).unwrap()),
            AnalyticClass::Divergent
        );
        assert_eq!(
            c(PsiFunction::power_gap(r(1, 1), r(1, 2)).unwrap()),
            AnalyticClass::Convergent
        );
        assert_eq!(
            c(PsiFunction::power_gap(r(1, 2), r(0, 1)).unwrap()),
            AnalyticClass::Divergent
        );
        assert_eq!(
            c(PsiFunction::log_gap(r(1, 1), r(2, 1)).unwrap()),
            AnalyticClass::Convergent
        );
        assert_eq!(
            c(PsiFunction::log_gap(r(1, 1), r(1, 1)).unwrap()),
            AnalyticClass::Divergent
        );
        assert_eq!(
            c(PsiFunction::log_gap(r(1, 1), r(1, 2)).unwrap()),
            AnalyticClass::Divergent
        );
        let t = PsiFunction::table(vec![(r(1, 1), r(1, 2))]).unwrap();
        assert_eq!(c(t), AnalyticClass::Unknown);
    }

    #[test]
    fn scaled_series_is_harmonic_multiple() {
        // terms are -(1/2) log(1/2) / n = (log 2 / 2) / n
        let psi = PsiFunction::scaled_dirichlet(r(1, 2)).unwrap();
        let rep = main_series(&psi, 8, 64).unwrap();
        let (n, s) = rep.partial_sums.last().unwrap();
        assert_eq!(*n, 8);
        let h8 = r(761, 280);
        let expect = elementary::ln2(80).scale(&(h8 / r(2, 1)));
        assert!(s.intersects(&expect));
        assert_eq!(rep.full_measure(), Some(false));
    }

    #[test]
    fn partial_sums_increase() {
        let psi = PsiFunction::power_gap(r(1, 1), r(1, 1)).unwrap();
        let rep = main_series(&psi, 300, 64).unwrap();
        for w in rep.partial_sums.windows(2) {
            assert!(w[0].1.lo() <= w[1].1.hi());
            assert!(w[0].1.lo() <= w[1].1.lo());
        }
        assert_eq!(rep.start, 1);
    }

    #[test]
    fn dirichlet_function_has_no_series() {
        assert!(main_series(&PsiFunction::dirichlet(), 10, 64).is_err());
    }
}
