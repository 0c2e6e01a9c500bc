//! Per-index certified classification: the convergent criterion for D(psi), the
//! product thresholds `a_n a_{n+1}` versus `Psi(q_n) - 1`, and the comparison test for
//! psi-approximability.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use rayon::prelude::*;
use thiserror::Error;

use crate::psi::{PsiError, PsiFunction};
use crate::ratcf::{CFState, CfError};
use crate::{exact, Precision, RatInterval, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("window reaches index {n_max} but only {depth} entries are known")]
    WindowTooDeep { n_max: usize, depth: usize },
    #[error("invalid window [{0}, {1}]")]
    InvalidWindow(usize, usize),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Psi(#[from] PsiError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Satisfied,
    Violated,
    Indeterminate,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Satisfied => "Satisfied",
            Status::Violated => "Violated",
            Status::Indeterminate => "Indeterminate",
        })
    }
}

/// Outcome at one index: `lhs < rhs` certified, refuted, or unresolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexVerdict {
    pub n: usize,
    pub status: Status,
    pub lhs: RatInterval,
    pub rhs: RatInterval,
    /// Bits used for the final comparison.
    pub bits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Summary {
    /// Every verdict from this index on is Satisfied.
    AllSatisfiedFrom(usize),
    ViolationsAt(Vec<usize>),
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationReport {
    pub window: (usize, usize),
    pub verdicts: Vec<IndexVerdict>,
    /// Depth of a terminating (rational) expansion.
    pub terminal_index: Option<usize>,
    pub summary: Summary,
}

impl ClassificationReport {
    fn new(
        window: (usize, usize),
        verdicts: Vec<IndexVerdict>,
        terminal_index: Option<usize>,
    ) -> Self {
        let summary = summarize(window.0, &verdicts, terminal_index.is_some());
        ClassificationReport {
            window,
            verdicts,
            terminal_index,
            summary,
        }
    }

    pub fn count(&self, status: Status) -> usize {
        self.verdicts.iter().filter(|v| v.status == status).count()
    }

    pub fn violated_indices(&self) -> Vec<usize> {
        self.verdicts
            .iter()
            .filter(|v| v.status == Status::Violated)
            .map(|v| v.n)
            .collect()
    }
}

/// Summary as a function of the verdicts; a terminating expansion is satisfied past
/// its last index even when the window stops earlier.
pub fn summarize(n_min: usize, verdicts: &[IndexVerdict], terminal: bool) -> Summary {
    let last_bad = verdicts.iter().rposition(|v| v.status != Status::Satisfied);
    let tail_ok = terminal || matches!(verdicts.last(), Some(v) if v.status == Status::Satisfied);
    if tail_ok {
        return match last_bad {
            Some(i) => Summary::AllSatisfiedFrom(verdicts[i].n + 1),
            None => Summary::AllSatisfiedFrom(n_min),
        };
    }
    let violated: Vec<usize> = verdicts
        .iter()
        .filter(|v| v.status == Status::Violated)
        .map(|v| v.n)
        .collect();
    if violated.is_empty() {
        Summary::Inconclusive
    } else {
        Summary::ViolationsAt(violated)
    }
}

/// Certified strict comparison `lhs < rhs`, refining `rhs` along the precision ladder.
fn compare(
    n: usize,
    lhs: RatInterval,
    prec: Precision,
    rhs_at: impl Fn(u32) -> Result<RatInterval, ClassifyError>,
) -> Result<IndexVerdict, ClassifyError> {
    let mut last = None;
    for bits in prec.ladder() {
        let rhs = rhs_at(bits)?;
        let status = if exact::lt(lhs.hi(), rhs.lo()) {
            Status::Satisfied
        } else if exact::le(rhs.hi(), lhs.lo()) {
            Status::Violated
        } else {
            Status::Indeterminate
        };
        let exact = rhs.is_point();
        last = Some(IndexVerdict {
            n,
            status,
            lhs: lhs.clone(),
            rhs,
            bits,
        });
        if status != Status::Indeterminate || exact {
            break;
        }
    }
    Ok(last.expect("ladder is never empty"))
}

fn big(q: &BigInt) -> Rational {
    Rational::from_integer(q.clone())
}

fn check_window(cf: &CFState, window: (usize, usize), first: usize) -> Result<(), ClassifyError> {
    let (lo, hi) = window;
    if lo < first || lo > hi {
        return Err(ClassifyError::InvalidWindow(lo, hi));
    }
    if !cf.is_terminal() && hi > cf.depth() {
        return Err(ClassifyError::WindowTooDeep {
            n_max: hi,
            depth: cf.depth(),
        });
    }
    Ok(())
}

/// Exact rule for a terminating expansion beyond its depth: the denominator `q_k`
/// itself solves the system, so `<q_k x> = 0 < psi(t)` for every `t > q_k`.
fn rational_tail_verdict(
    cf: &CFState,
    psi: &PsiFunction,
    n: usize,
    prec: Precision,
) -> Result<IndexVerdict, ClassifyError> {
    let past = big(cf.q(cf.depth())) + Rational::one();
    let t = if &past > psi.t0() {
        past
    } else {
        psi.t0().clone()
    };
    compare(n, RatInterval::zero(), prec, |bits| Ok(psi.eval(&t, bits)?))
}

/// Convergent criterion: compares `<q_{n-1} x>` (over the whole cylinder) with
/// `psi(q_n)` for every `n` in the window.
pub fn dirichlet_verdicts(
    cf: &CFState,
    psi: &PsiFunction,
    window: (usize, usize),
    prec: Precision,
) -> Result<ClassificationReport, ClassifyError> {
    check_window(cf, window, 1)?;
    let verdicts = (window.0..=window.1)
        .into_par_iter()
        .map(|n| {
            if n > cf.depth() {
                return rational_tail_verdict(cf, psi, n, prec);
            }
            let lhs = cf.best_approx_distance(n)?;
            let qn = big(cf.q(n));
            compare(n, lhs, prec, |bits| Ok(psi.eval(&qn, bits)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClassificationReport::new(
        window,
        verdicts,
        cf.is_terminal().then(|| cf.depth()),
    ))
}

/// Comparison test for W(psi): `<q_n x> < psi(q_n)` at each `n` in the window.
pub fn approximable_verdicts(
    cf: &CFState,
    psi: &PsiFunction,
    window: (usize, usize),
    prec: Precision,
) -> Result<ClassificationReport, ClassifyError> {
    check_window(cf, window, 1)?;
    let verdicts = (window.0..=window.1)
        .into_par_iter()
        .map(|n| {
            if n > cf.depth() {
                return rational_tail_verdict(cf, psi, n, prec);
            }
            let lhs = cf.residual(n)?;
            let qn = big(cf.q(n));
            compare(n, lhs, prec, |bits| Ok(psi.eval(&qn, bits)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClassificationReport::new(
        window,
        verdicts,
        cf.is_terminal().then(|| cf.depth()),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProductOutcome {
    ImpliesDirichletHere,
    ImpliesViolationHere,
    Gap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductVerdict {
    pub n: usize,
    /// `a_n a_{n+1}`.
    pub product: BigInt,
    /// Enclosure of `((q_n psi(q_n))^-1 - 1)^-1 = Psi(q_n) - 1`.
    pub threshold: RatInterval,
    pub outcome: ProductOutcome,
}

/// Enclosure of `((q psi(q))^-1 - 1)^-1` for `q psi(q) < 1`, refined along the ladder
/// until `decided` accepts it.
pub fn product_threshold(
    psi: &PsiFunction,
    q: &Rational,
    prec: Precision,
    decided: impl Fn(&RatInterval) -> bool,
) -> Result<RatInterval, PsiError> {
    let mut best = None;
    for bits in prec.ladder() {
        let g = psi.eval_t_psi(q, bits)?;
        if exact::le(&Rational::one(), g.hi()) {
            if exact::le(&Rational::one(), g.lo()) {
                break;
            }
            continue;
        }
        let one = RatInterval::one();
        let t = &g * &(&one - &g).recip().expect("g < 1");
        let done = decided(&t) || t.is_point();
        best = Some(t);
        if done {
            break;
        }
    }
    best.ok_or_else(|| PsiError::DirichletViolatesBound { t: q.clone() })
}

/// Product thresholds at index `n`: `a_n a_{n+1} <= T/4` forces the convergent
/// inequality at `n + 1`, and `a_n a_{n+1} > T` breaks it, with
/// `T = ((q_n psi(q_n))^-1 - 1)^-1`.
pub fn product_criterion(
    cf: &CFState,
    psi: &PsiFunction,
    n: usize,
    prec: Precision,
) -> Result<ProductVerdict, ClassifyError> {
    if n < 1 || n + 1 > cf.depth() {
        return Err(CfError::IndexOutOfRange {
            index: n,
            min: 1,
            max: cf.depth().saturating_sub(1),
        }
        .into());
    }
    let product = cf.entry(n) * cf.entry(n + 1);
    let p = big(&product);
    let four = Rational::from_integer(4.into());
    let outcome_of = |t: &RatInterval| {
        if exact::le(&p, &exact::div(t.lo(), &four)) {
            Some(ProductOutcome::ImpliesDirichletHere)
        } else if exact::lt(t.hi(), &p) {
            Some(ProductOutcome::ImpliesViolationHere)
        } else if exact::lt(&exact::div(t.hi(), &four), &p) && exact::le(&p, t.lo()) {
            Some(ProductOutcome::Gap)
        } else {
            None
        }
    };
    let threshold = product_threshold(psi, &big(cf.q(n)), prec, |t| outcome_of(t).is_some())?;
    let outcome = outcome_of(&threshold).unwrap_or(ProductOutcome::Gap);
    Ok(ProductVerdict {
        n,
        product,
        threshold,
        outcome,
    })
}
