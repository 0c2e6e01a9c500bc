use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::union::{gauss_interval, IntervalUnion};
use crate::ratcf::{cf_expand, CFState, CfError};
use crate::{RatInterval, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrbitError {
    #[error("orbit reached 0 after {step} steps")]
    OrbitTerminated { step: usize, orbit: Vec<Rational> },
    #[error("prefix of depth {depth} cannot be shifted {steps} times")]
    PrefixExhausted { depth: usize, steps: usize },
    #[error(transparent)]
    Cf(#[from] CfError),
}

/// `T x = 1/x - floor(1/x)`; `None` at `x = 0`.
pub fn gauss_map(x: &Rational) -> Option<Rational> {
    if x.is_zero() {
        return None;
    }
    let inv = x.recip();
    Some(&inv - inv.floor())
}

/// `x, T x, ..., T^steps x` by direct iteration, checked against the shift of the
/// continued-fraction entries.
pub fn gauss_map_orbit(x: &Rational, steps: usize) -> Result<Vec<Rational>, OrbitError> {
    let cf = cf_expand(x, usize::MAX)?;
    let mut orbit = vec![x.clone()];
    for step in 1..=steps {
        let next = match gauss_map(orbit.last().unwrap()) {
            Some(v) => v,
            None => {
                return Err(OrbitError::OrbitTerminated {
                    step: step - 1,
                    orbit,
                })
            }
        };
        let shifted = cf.shift(step).value().unwrap_or_else(Rational::zero);
        assert_eq!(next, shifted, "Gauss map disagrees with the entry shift");
        orbit.push(next);
    }
    Ok(orbit)
}

/// Orbit of a prefix: the states `[a_{j+1}, ..., a_k]` for `j = 0..=steps`.
pub fn gauss_map_orbit_cf(cf: &CFState, steps: usize) -> Result<Vec<CFState>, OrbitError> {
    if steps > cf.depth() {
        return Err(OrbitError::PrefixExhausted {
            depth: cf.depth(),
            steps,
        });
    }
    Ok((0..=steps).map(|j| cf.shift(j)).collect())
}

/// The cylinder `E_r` of reals whose expansion starts with the word `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSet {
    pub word: Vec<u64>,
    pub state: CFState,
}

impl CylinderSet {
    pub fn new(word: &[u64]) -> Result<CylinderSet, CfError> {
        Ok(CylinderSet {
            word: word.to_vec(),
            state: CFState::from_u64s(word, false)?,
        })
    }

    pub fn interval(&self) -> &RatInterval {
        self.state.cylinder()
    }

    pub fn gauss(&self, bits: u32) -> RatInterval {
        gauss_interval(self.interval().lo(), self.interval().hi(), bits)
    }

    /// Inverse branch `y -> [r_1, ..., r_k + y]`, mapping `(0, 1)` onto `E_r`.
    pub fn branch(&self, y: &Rational) -> Rational {
        let k = self.state.depth();
        let (pk, qk) = (self.state.p(k), self.state.q(k));
        let (pk1, qk1) = if k == 0 {
            (BigInt::one(), BigInt::zero())
        } else {
            (self.state.p(k - 1).clone(), self.state.q(k - 1).clone())
        };
        let num = Rational::from_integer(pk.clone()) + y * Rational::from_integer(pk1);
        let den = Rational::from_integer(qk.clone()) + y * Rational::from_integer(qk1);
        num / den
    }

    /// `E_r ∩ T^-k(G)` as the image of `G` under the inverse branch.
    pub fn pull(&self, g: &IntervalUnion) -> IntervalUnion {
        let parts = g
            .parts()
            .iter()
            .map(|(a, b)| {
                let (u, v) = (self.branch(a), self.branch(b));
                if u < v {
                    (u, v)
                } else {
                    (v, u)
                }
            })
            .collect();
        IntervalUnion::from_unsorted(parts).expect("branch images stay disjoint")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PreimageOptions {
    /// Branches `a = 1..=K` kept for each interval.
    pub branches: u64,
    /// Narrowest intervals beyond this count are dropped after each step.
    pub max_intervals: usize,
}

impl Default for PreimageOptions {
    fn default() -> Self {
        PreimageOptions {
            branches: 64,
            max_intervals: 1 << 14,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreimageResult {
    pub union: IntervalUnion,
    /// Upper bound on the Lebesgue measure of `T^-n u` missing from `union`.
    pub lebesgue_defect: Rational,
    /// Upper bound on the Gauss measure of the same missing set.
    pub gauss_defect: Rational,
}

/// Lebesgue measure of `⋃_{a > K} (1/(a+b), 1/(a+a0))`, bounded above.
fn branch_tail_bound(alpha: &Rational, beta: &Rational, k: u64) -> Rational {
    let kk = Rational::from_integer(k.into());
    let d = beta - alpha;
    let half = Rational::new(1.into(), 2.into());
    let by_width = &d / (&kk + alpha + half);
    let by_telescope = (kk + alpha + Rational::one()).recip();
    by_width.min(by_telescope)
}

/// `T^-n u` with truncated branches.
///
/// One step maps `(a0, b)` to `⋃_{a >= 1} (1/(a+b), 1/(a+a0))`; only `a <= K` is kept.
/// Mass discarded at step `j` is pulled back `n - j` more times; the Gauss measure is
/// invariant and `lambda <= 2 log 2 mu`, so it contributes at most twice its Lebesgue
/// measure afterwards, and at most `3/2` of it in Gauss measure.
pub fn preimage(u: &IntervalUnion, iterations: usize, opts: PreimageOptions) -> PreimageResult {
    let mut current = u.clone();
    let mut dropped: Vec<Rational> = Vec::new();
    for _ in 0..iterations {
        let mut parts = Vec::with_capacity(current.len() * opts.branches as usize);
        let mut lost = Rational::zero();
        for (alpha, beta) in current.parts() {
            for a in 1..=opts.branches {
                let a = Rational::from_integer(a.into());
                parts.push(((&a + beta).recip(), (&a + alpha).recip()));
            }
            lost += branch_tail_bound(alpha, beta, opts.branches);
        }
        if parts.len() > opts.max_intervals {
            parts.sort_by(|x, y| (&y.1 - &y.0).cmp(&(&x.1 - &x.0)));
            for (lo, hi) in parts.drain(opts.max_intervals..) {
                lost += hi - lo;
            }
        }
        dropped.push(lost);
        current = IntervalUnion::from_unsorted(parts).expect("branches are disjoint");
    }
    let two = Rational::from_integer(2.into());
    let lebesgue_defect = match dropped.split_last() {
        Some((last, earlier)) => earlier.iter().fold(last.clone(), |acc, d| acc + &two * d),
        None => Rational::zero(),
    };
    let gauss_defect =
        dropped.iter().fold(Rational::zero(), |acc, d| acc + d) * Rational::new(3.into(), 2.into());
    PreimageResult {
        union: current,
        lebesgue_defect,
        gauss_defect,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixingReport {
    pub word: Vec<u64>,
    pub gap: usize,
    pub mu_cylinder: RatInterval,
    pub mu_target: RatInterval,
    /// Enclosure of `mu(E_r ∩ T^-(n+k) F)`, truncation defect included.
    pub mu_intersection: RatInterval,
    /// Enclosure of `|mu(E_r ∩ T^-(n+k) F) - mu(E_r) mu(F)| / (mu(E_r) mu(F))`.
    pub ratio: RatInterval,
}

/// Measures the decorrelation of `E_r` and `T^-(n+k) F`. Observational only: no
/// bound is asserted.
pub fn mixing_probe(
    word: &[u64],
    target: &IntervalUnion,
    gap: usize,
    opts: PreimageOptions,
    bits: u32,
) -> Result<MixingReport, CfError> {
    let cyl = CylinderSet::new(word)?;
    let mu_cylinder = cyl.gauss(bits);
    let mu_target = target.gauss(bits);
    let pre = preimage(target, gap, opts);
    let image = cyl.pull(&pre.union);
    let core = image.gauss(bits);
    // the inverse branch shrinks lengths by at least q_k^2 and mu <= lambda / log 2
    let qk = Rational::from_integer(cyl.state.q(cyl.state.depth()).clone());
    let slack = &pre.lebesgue_defect * Rational::new(3.into(), 2.into()) / (&qk * &qk);
    let upper = (core.hi() + &slack).min(mu_cylinder.hi().clone());
    let mu_intersection = RatInterval::new(core.lo().clone(), upper.max(core.lo().clone()));
    let product = &mu_cylinder * &mu_target;
    let diff = (&mu_intersection - &product).abs();
    let ratio = diff
        .checked_div(&product)
        .expect("positive measures")
        .round_out(bits);
    Ok(MixingReport {
        word: word.to_vec(),
        gap,
        mu_cylinder,
        mu_target,
        mu_intersection,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn orbit_of_five_eighths() {
        let orbit = gauss_map_orbit(&r(5, 8), 3).unwrap();
        assert_eq!(orbit, vec![r(5, 8), r(3, 5), r(2, 3), r(1, 2)]);
        let err = gauss_map_orbit(&r(1, 3), 3).unwrap_err();
        assert!(matches!(err, OrbitError::OrbitTerminated { step: 1, .. }));
    }

    #[test]
    fn constant_word_is_shift_invariant() {
        let cf = CFState::from_u64s(&[2; 10], false).unwrap();
        let orbit = gauss_map_orbit_cf(&cf, 3).unwrap();
        assert_eq!(orbit[3].entries(), &cf.entries()[..7]);
        assert!(gauss_map_orbit_cf(&cf, 11).is_err());
    }

    #[test]
    fn one_step_of_the_full_interval() {
        let res = preimage(
            &IntervalUnion::full(),
            1,
            PreimageOptions {
                branches: 10,
                max_intervals: 100,
            },
        );
        assert_eq!(res.union.len(), 10);
        assert_eq!(res.union.lebesgue(), r(10, 11));
        // everything beyond the tenth branch is (0, 1/11), and the bound is sharp here
        assert_eq!(res.lebesgue_defect, r(1, 11));
    }

    #[test]
    fn right_half_preimage() {
        let u = IntervalUnion::single(r(1, 2), r(1, 1)).unwrap();
        let res = preimage(
            &u,
            1,
            PreimageOptions {
                branches: 3,
                max_intervals: 100,
            },
        );
        assert_eq!(
            res.union.parts(),
            &[(r(1, 4), r(2, 7)), (r(1, 3), r(2, 5)), (r(1, 2), r(2, 3))]
        );
    }

    #[test]
    fn gauss_measure_is_invariant_up_to_defect() {
        let u = IntervalUnion::new(vec![(r(1, 5), r(1, 3)), (r(3, 5), r(7, 10))]).unwrap();
        let res = preimage(
            &u,
            1,
            PreimageOptions {
                branches: 200,
                max_intervals: 1000,
            },
        );
        let before = u.gauss(80);
        let after = res.union.gauss(80);
        assert!(after.hi() <= before.hi());
        assert!(before.lo() <= &(after.hi() + &res.gauss_defect));
    }

    #[test]
    fn mixing_with_full_target() {
        let rep = mixing_probe(
            &[1, 2],
            &IntervalUnion::full(),
            2,
            PreimageOptions::default(),
            64,
        )
        .unwrap();
        assert!(rep.ratio.contains(&Rational::zero()));
    }

    #[test]
    fn mixing_at_gap_zero() {
        let f = IntervalUnion::single(r(0, 1), r(1, 2)).unwrap();
        let rep = mixing_probe(&[1], &f, 0, PreimageOptions::default(), 80).unwrap();
        // E_1 ∩ T^-1 (0, 1/2) = (2/3, 1)
        let expect = gauss_interval(&r(2, 3), &r(1, 1), 80);
        assert_eq!(rep.mu_intersection, expect);
        let v = rep.ratio.approx();
        // log2(6/5) / (log2(4/3) log2(3/2)) - 1
        let exact = (1.2f64).log2() / ((4.0f64 / 3.0).log2() * 1.5f64.log2()) - 1.0;
        assert!((v - exact.abs()).abs() < 1e-12, "{v} vs {exact}");
    }
}
