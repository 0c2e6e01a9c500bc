//! Lattices `Lambda_Y`, the diagonal flow `g_s`, the function `Delta` (minus log of the
//! shortest sup-norm vector) and the Dani correspondence `r_psi(s)`.
//!
//! A lattice vector is written through its integer coordinates `z = (p, q)` in the
//! basis `[[I_m, Y], [0, I_n]]`, so `v = (p + Y q, q)` and
//! `-log |g_s v| = min(-s/m - log |p + Yq|, s/n - log |q|)`. Working with this form
//! keeps `Delta` exact whenever the norms involved are exact powers of `e`, in
//! particular for `Delta(Z^2) = 0` and `Delta(g_1 Z^2) = 1`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::classify::{
    dirichlet_verdicts, summarize, ClassifyError, IndexVerdict, Status, Summary,
};
use crate::interval::{ceil_to_grid, floor_to_grid};
use crate::psi::{PsiError, PsiFunction};
use crate::ratcf::{CFState, CfError};
use crate::{elementary, exact, Precision, RatInterval, Rational};

pub const DEFAULT_DIMENSION_CAP: usize = 5;
/// Largest coefficient box `delta` is willing to enumerate.
pub const ENUMERATION_CAP: u64 = 4_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("m + n = {0} exceeds the dimension cap {1}")]
    DimensionCap(usize, usize),
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("s = {s} lies below s_0 = {s0}")]
    BelowS0 { s: Rational, s0: RatInterval },
    #[error("coefficient box of {0} vectors is too large to enumerate")]
    EnumerationTooLarge(u64),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("horizon [{0}, {1}] is invalid or starts before psi is monotone")]
    Horizon(Rational, Rational),
    #[error("only m = n = 1 is supported here")]
    NotOneByOne,
    #[error("inconsistent verdicts: {0}")]
    InconsistencyFound(String),
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Cf(#[from] CfError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dimensions {
    pub m: usize,
    pub n: usize,
}

impl Dimensions {
    pub fn new(m: usize, n: usize) -> Result<Self, LatticeError> {
        Self::with_cap(m, n, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(m: usize, n: usize, cap: usize) -> Result<Self, LatticeError> {
        if m == 0 || n == 0 {
            return Err(LatticeError::Shape(format!(
                "m = {m}, n = {n} must be positive"
            )));
        }
        if m + n > cap {
            return Err(LatticeError::DimensionCap(m + n, cap));
        }
        Ok(Dimensions { m, n })
    }

    pub fn total(&self) -> usize {
        self.m + self.n
    }
}

/// An `m x n` matrix of exact rationals, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetMatrix {
    dims: Dimensions,
    entries: Vec<Rational>,
}

impl TargetMatrix {
    pub fn new(dims: Dimensions, entries: Vec<Rational>) -> Result<Self, LatticeError> {
        if entries.len() != dims.m * dims.n {
            return Err(LatticeError::Shape(format!(
                "{} entries for a {}x{} matrix",
                entries.len(),
                dims.m,
                dims.n
            )));
        }
        Ok(TargetMatrix { dims, entries })
    }

    pub fn scalar(x: Rational) -> Self {
        TargetMatrix {
            dims: Dimensions { m: 1, n: 1 },
            entries: vec![x],
        }
    }

    pub fn zero(dims: Dimensions) -> Self {
        TargetMatrix {
            dims,
            entries: vec![Rational::zero(); dims.m * dims.n],
        }
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.dims.n + j]
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    /// `(p + Y q, q)` for integer coordinates `z = (p, q)`.
    fn split<'z>(&self, z: &'z [BigInt]) -> (Vec<Rational>, &'z [BigInt]) {
        let Dimensions { m, n } = self.dims;
        let (p, q) = z.split_at(m);
        let a = (0..m)
            .map(|i| {
                let mut acc = Rational::from_integer(p[i].clone());
                for j in 0..n {
                    if !q[j].is_zero() {
                        acc += self.get(i, j) * Rational::from_integer(q[j].clone());
                    }
                }
                acc
            })
            .collect();
        (a, q)
    }
}

fn sup_rat(v: &[Rational]) -> Rational {
    v.iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

fn sup_int(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn frac(n: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(n))
}

/// `g_s` applied to the basis of `Lambda_Y`, entry-wise enclosures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowedBasis {
    pub s: Rational,
    pub dims: Dimensions,
    /// Row-major `(m+n) x (m+n)`; column `k` is the image of the `k`-th basis vector.
    pub entries: Vec<RatInterval>,
}

impl FlowedBasis {
    pub fn new(y: &TargetMatrix, s: &Rational, bits: u32) -> Self {
        let dims = y.dims;
        let d = dims.total();
        let up = elementary::exp(&(s * frac(dims.m)), bits);
        let down = elementary::exp(&-(s * frac(dims.n)), bits);
        let mut entries = vec![RatInterval::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let raw = if i < dims.m {
                    if k < dims.m {
                        if i == k {
                            int(1)
                        } else {
                            Rational::zero()
                        }
                    } else {
                        y.get(i, k - dims.m).clone()
                    }
                } else if i == k {
                    int(1)
                } else {
                    Rational::zero()
                };
                let f = if i < dims.m { &up } else { &down };
                entries[i * d + k] = f.scale(&raw);
            }
        }
        FlowedBasis {
            s: s.clone(),
            dims,
            entries,
        }
    }

    pub fn entry(&self, i: usize, k: usize) -> &RatInterval {
        &self.entries[i * self.dims.total() + k]
    }

    /// Leibniz expansion over interval entries; contains 1 for every flowed basis.
    pub fn determinant(&self) -> RatInterval {
        let d = self.dims.total();
        let mut total = RatInterval::zero();
        let mut perm: Vec<usize> = (0..d).collect();
        permutations(&mut perm, 0, &mut |p, sign| {
            let mut prod = RatInterval::from_integer(sign);
            for (i, &k) in p.iter().enumerate() {
                let e = self.entry(i, k);
                if e.is_point() && e.lo().is_zero() {
                    return;
                }
                prod = &prod * e;
            }
            total = &total + &prod;
        });
        total
    }
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize], i64)) {
    if k == p.len() {
        let mut sign = 1;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    sign = -sign;
                }
            }
        }
        f(p, sign);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_schmidt(cols: &[Vec<Rational>]) -> (Vec<Rational>, Vec<Vec<Rational>>) {
    let d = cols.len();
    let mut star: Vec<Vec<Rational>> = Vec::with_capacity(d);
    let mut norms = Vec::with_capacity(d);
    let mut mu = vec![vec![Rational::zero(); d]; d];
    for i in 0..d {
        let mut v = cols[i].clone();
        for j in 0..i {
            if norms[j] == Rational::zero() {
                continue;
            }
            mu[i][j] = dot(&cols[i], &star[j]) / &norms[j];
            for (x, y) in v.iter_mut().zip(&star[j]) {
                *x -= &mu[i][j] * y;
            }
        }
        norms.push(dot(&v, &v));
        star.push(v);
    }
    (norms, mu)
}

fn round_half(x: &Rational) -> BigInt {
    (x + Rational::new(1.into(), 2.into())).floor().to_integer()
}

/// LLL reduction (`delta = 3/4`) of the columns `cols`; returns the unimodular
/// transform `U` as columns, so that the reduced basis is `cols * U`.
pub fn lll_reduce(cols: &mut [Vec<Rational>]) -> Vec<Vec<BigInt>> {
    let d = cols.len();
    let mut u: Vec<Vec<BigInt>> = (0..d)
        .map(|k| (0..d).map(|i| BigInt::from((i == k) as i64)).collect())
        .collect();
    if d < 2 {
        return u;
    }
    let three_quarters = Rational::new(3.into(), 4.into());
    let half = Rational::new(1.into(), 2.into());
    let mut k = 1;
    let mut guard = 0usize;
    while k < d && guard < 100_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (_, mu) = gram_schmidt(cols);
            if mu[k][j].abs() > half {
                let r = round_half(&mu[k][j]);
                let rr = Rational::from_integer(r.clone());
                let (head, tail) = cols.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= &rr * y;
                }
                let (uh, ut) = u.split_at_mut(k);
                for (x, y) in ut[0].iter_mut().zip(&uh[j]) {
                    *x -= &r * y;
                }
            }
        }
        let (norms, mu) = gram_schmidt(cols);
        let lovasz = (&three_quarters - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1];
        if norms[k] >= lovasz {
            k += 1;
        } else {
            cols.swap(k, k - 1);
            u.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    u
}

/// Exact inverse of a unimodular integer matrix given by columns; returned row-major.
fn unimodular_inverse(u_cols: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let d = u_cols.len();
    // a[i][k] = U_{ik}
    let mut a: Vec<Vec<Rational>> = (0..d)
        .map(|i| {
            let mut row: Vec<Rational> = (0..d)
                .map(|k| Rational::from_integer(u_cols[k][i].clone()))
                .collect();
            row.extend((0..d).map(|k| int((i == k) as i64)));
            row
        })
        .collect();
    for c in 0..d {
        let piv = (c..d).find(|&r| !a[r][c].is_zero()).expect("unimodular");
        a.swap(c, piv);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for r in 0..d {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                let pivot_row = a[c].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    a.into_iter()
        .map(|row| {
            row[d..]
                .iter()
                .map(|x| {
                    assert!(x.is_integer(), "transform is not unimodular");
                    x.to_integer()
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaValue {
    pub s: Rational,
    pub enclosure: RatInterval,
    /// Integer coordinates `(p, q)` of a vector attaining the lower end of the enclosure.
    pub minimizer: Vec<BigInt>,
    /// Number of coefficient vectors enumerated.
    pub enumerated: u64,
}

/// `-log |g_s v|` for `v = (a, q)`, with `None` standing for `+infinity`.
fn neg_log_norm(
    a_norm: &Rational,
    q_norm: &BigInt,
    s: &Rational,
    dims: Dimensions,
    bits: u32,
) -> RatInterval {
    let first = (!a_norm.is_zero()).then(|| {
        let l = elementary::log(a_norm, bits);
        (-&l).shift(&-(s * frac(dims.m)))
    });
    let second = (!q_norm.is_zero()).then(|| {
        let l = elementary::log(&Rational::from_integer(q_norm.clone()), bits);
        (-&l).shift(&(s * frac(dims.n)))
    });
    match (first, second) {
        (Some(a), Some(b)) => a.min(&b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => unreachable!("zero vector"),
    }
}

/// Certified enclosure of `Delta(g_s Lambda_Y)` with width about `2^-bits`.
pub fn delta(y: &TargetMatrix, s: &Rational, bits: u32) -> Result<DeltaValue, LatticeError> {
    let dims = y.dims;
    let d = dims.total();
    let (m, n) = (dims.m, dims.n);
    let coarse = 64;
    let up = elementary::exp(&(s * frac(m)), coarse);
    let down = elementary::exp(&-(s * frac(n)), coarse);

    // rounded copy for the reduction; precision only affects the box size
    let spread = (s.abs() * (frac(m) + frac(n)) * int(3) / int(2))
        .ceil()
        .to_integer();
    let grid = 48 + spread.to_u32().unwrap_or(4096);
    let basis = FlowedBasis::new(y, s, coarse);
    let mut cols: Vec<Vec<Rational>> = (0..d)
        .map(|k| {
            (0..d)
                .map(|i| floor_to_grid(&basis.entry(i, k).mid(), grid))
                .collect()
        })
        .collect();
    let u = lll_reduce(&mut cols);
    let u_inv = unimodular_inverse(&u);

    let norm_hi = |z: &[BigInt]| -> Rational {
        let (a, q) = y.split(z);
        let x = up.scale(&sup_rat(&a));
        let w = down.scale(&Rational::from_integer(sup_int(q)));
        x.max(&w).hi().clone()
    };
    // Minkowski: the shortest vector has sup-norm at most 1
    let mut radius = int(1);
    for col in &u {
        radius = exact::min(&radius, &norm_hi(col)).clone();
    }

    // C^{-1} = U^{-1} [[e^{-s/m} I, -Y e^{s/n}], [0, e^{s/n} I]]
    let up_inv = elementary::exp(&-(s * frac(m)), coarse);
    let down_inv = elementary::exp(&(s * frac(n)), coarse);
    let flow_inv = |k: usize, j: usize| -> RatInterval {
        if k < m {
            if j < m {
                if k == j {
                    up_inv.clone()
                } else {
                    RatInterval::zero()
                }
            } else {
                down_inv.scale(&-y.get(k, j - m).clone())
            }
        } else if k == j {
            down_inv.clone()
        } else {
            RatInterval::zero()
        }
    };
    let mut bounds = Vec::with_capacity(d);
    let mut count: u64 = 1;
    for row in &u_inv {
        let mut sum = Rational::zero();
        for j in 0..d {
            let mut e = RatInterval::zero();
            for (k, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    e = &e + &flow_inv(k, j).scale(&Rational::from_integer(c.clone()));
                }
            }
            sum += e.abs().hi();
        }
        let w = (sum * &radius).floor().to_integer();
        let w = w
            .to_i64()
            .filter(|w| *w < 1 << 40)
            .ok_or(LatticeError::EnumerationTooLarge(u64::MAX))?;
        count = count.saturating_mul(2 * w as u64 + 1);
        bounds.push(w);
    }
    if count > ENUMERATION_CAP {
        return Err(LatticeError::EnumerationTooLarge(count));
    }

    // enumerate the half-space of the box, keeping Pareto-minimal (|a|, |q|)
    let mut cands: Vec<(Rational, BigInt, Vec<BigInt>)> = Vec::new();
    let mut w: Vec<i64> = bounds.iter().map(|b| -b).collect();
    let mut enumerated = 0u64;
    loop {
        if let Some(first) = w.iter().find(|x| **x != 0) {
            if *first > 0 {
                enumerated += 1;
                let z: Vec<BigInt> = (0..d)
                    .map(|i| {
                        u.iter()
                            .zip(&w)
                            .filter(|(_, c)| **c != 0)
                            .map(|(col, c)| &col[i] * BigInt::from(*c))
                            .sum()
                    })
                    .collect();
                let (a, q) = y.split(&z);
                cands.push((sup_rat(&a), sup_int(q), z));
            }
        }
        let mut i = 0;
        while i < d {
            if w[i] < bounds[i] {
                w[i] += 1;
                break;
            }
            w[i] = -bounds[i];
            i += 1;
        }
        if i == d {
            break;
        }
    }
    cands.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut front: Vec<&(Rational, BigInt, Vec<BigInt>)> = Vec::new();
    for c in &cands {
        if front.last().map_or(true, |f| c.1 < f.1) {
            front.push(c);
        }
    }
    let mut best: Option<(RatInterval, &Vec<BigInt>)> = None;
    let mut hi = None::<Rational>;
    for (a, q, z) in front {
        let f = neg_log_norm(a, q, s, dims, bits + 4);
        hi = Some(match hi {
            Some(h) => exact::max(&h, f.hi()).clone(),
            None => f.hi().clone(),
        });
        if best
            .as_ref()
            .map_or(true, |(b, _)| exact::lt(b.lo(), f.lo()))
        {
            best = Some((f, z));
        }
    }
    let (b, z) = best.expect("the box contains the basis vectors");
    Ok(DeltaValue {
        s: s.clone(),
        enclosure: RatInterval::new(b.lo().clone(), hi.expect("nonempty")),
        minimizer: z.clone(),
        enumerated,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaniCheck {
    pub grid: Vec<(Rational, RatInterval)>,
    /// `s - n r(s)` certified strictly increasing between every pair of grid points.
    pub time_increasing: bool,
    /// No pair of grid points certifies a decrease of `s + m r(s)`.
    pub scale_nondecreasing: bool,
}

fn phi(
    psi: &PsiFunction,
    dims: Dimensions,
    s: &Rational,
    r: &Rational,
    t_start: &Rational,
    w: u32,
) -> Result<RatInterval, LatticeError> {
    let u = s - Rational::from_integer(dims.n.into()) * r;
    let t = elementary::exp(&u, w);
    let t = RatInterval::new(
        exact::max(t.lo(), t_start).clone(),
        exact::max(t.hi(), t_start).clone(),
    );
    let p = psi.eval_interval(&t, w)?;
    if !p.is_positive() {
        return Err(LatticeError::PrecisionExhausted(format!(
            "psi({t}) not certified positive"
        )));
    }
    let l = elementary::log_interval(&p, w);
    Ok(l.shift(&(s + Rational::from_integer(dims.m.into()) * r)))
}

/// Enclosure of `s_0 = (m log t - n log psi(t)) / (m + n)` at the start of the
/// monotone range of `psi`.
pub fn dani_s0(
    psi: &PsiFunction,
    dims: Dimensions,
    bits: u32,
) -> Result<RatInterval, LatticeError> {
    let t = psi.monotone_from();
    let lt = elementary::log(t, bits + 4);
    let lp = elementary::log_interval(&psi.eval(t, bits + 4)?, bits + 4);
    let num = &lt.scale(&int(dims.m as i64)) - &lp.scale(&int(dims.n as i64));
    Ok(num.scale(&frac(dims.total())))
}

/// The unique `r` with `psi(e^(s - n r)) = e^(-s - m r)`, enclosed to width
/// `2^-tol_bits`.
///
/// Bisection on `phi(r) = log psi(e^(s - n r)) + s + m r`, which increases with slope at
/// least `m`; each evaluation also pins the root to within `|phi|/m`.
pub fn dani_r(
    psi: &PsiFunction,
    dims: Dimensions,
    s: &Rational,
    tol_bits: u32,
) -> Result<RatInterval, LatticeError> {
    let s0 = dani_s0(psi, dims, tol_bits + 8)?;
    if exact::lt(s, s0.lo()) {
        return Err(LatticeError::BelowS0 { s: s.clone(), s0 });
    }
    let t_start = psi.monotone_from().clone();
    let nn = int(dims.n as i64);
    let inv_m = frac(dims.m);
    // the root satisfies e^(s - n r) >= t_start
    let r_max = (elementary::log(&t_start, tol_bits + 8).neg_shift(s)).scale(&nn.recip());
    let mut hi = ceil_to_grid(r_max.hi(), tol_bits + 8);
    let tol = Rational::new(BigInt::one(), BigInt::one() << tol_bits);
    let base_bits = tol_bits + 16;

    let mut step = int(1);
    let mut lo = loop {
        let cand = floor_to_grid(&(&hi - &step), tol_bits + 8);
        let f = phi(psi, dims, s, &cand, &t_start, 64)?;
        if f.hi() < &Rational::zero() {
            break cand;
        }
        step *= int(2);
        if step > int(1 << 40) {
            return Err(LatticeError::PrecisionExhausted(
                "no lower bracket for r".into(),
            ));
        }
    };

    let mut w = base_bits;
    let mut iterations = 0;
    let mut last: Vec<(Rational, Rational)> = Vec::new();
    let mut bisect_next = false;
    while &hi - &lo > tol {
        iterations += 1;
        if iterations > 8 * tol_bits as usize + 400 {
            return Err(LatticeError::PrecisionExhausted(format!(
                "r({s}) bracket [{lo}, {hi}]"
            )));
        }
        let half = (&lo + &hi) / int(2);
        let secant = match last.as_slice() {
            [.., (x0, f0), (x1, f1)] if !bisect_next && f1 != f0 => {
                Some(x1 - f1 * (x1 - x0) / (f1 - f0))
            }
            _ => None,
        };
        let mid = secant
            .map(|c| floor_to_grid(&c, tol_bits + 8))
            .filter(|c| c > &lo && c < &hi)
            .unwrap_or_else(|| {
                let g = floor_to_grid(&half, tol_bits + 8);
                if g > lo {
                    g
                } else {
                    half.clone()
                }
            });
        let width_before = &hi - &lo;
        let f = phi(psi, dims, s, &mid, &t_start, w)?;
        let zero = Rational::zero();
        let (new_lo, new_hi) = if f.lo() > &zero {
            (&mid - f.hi() * &inv_m, mid.clone())
        } else if f.hi() < &zero {
            (mid.clone(), &mid - f.lo() * &inv_m)
        } else {
            (&mid - f.hi() * &inv_m, &mid - f.lo() * &inv_m)
        };
        let undecided = f.contains_zero();
        if new_lo > lo {
            lo = new_lo;
        }
        if new_hi < hi {
            hi = new_hi;
        }
        bisect_next = (&hi - &lo) * int(2) > width_before;
        last.push((mid, f.mid()));
        if undecided && &hi - &lo > tol {
            if w >= base_bits * 4 {
                return Err(LatticeError::PrecisionExhausted(format!(
                    "r({s}) bracket [{lo}, {hi}]"
                )));
            }
            w *= 2;
        }
    }
    Ok(RatInterval::new(lo, hi))
}

/// `r` on a grid of `s` values, with spot checks of the two monotonicity properties of
/// the correspondence.
pub fn dani_check(
    psi: &PsiFunction,
    dims: Dimensions,
    grid: &[Rational],
    tol_bits: u32,
) -> Result<DaniCheck, LatticeError> {
    let rs = grid
        .par_iter()
        .map(|s| dani_r(psi, dims, s, tol_bits).map(|r| (s.clone(), r)))
        .collect::<Result<Vec<_>, _>>()?;
    let (m, n) = (int(dims.m as i64), int(dims.n as i64));
    let mut time_increasing = true;
    let mut scale_nondecreasing = true;
    for p in rs.windows(2) {
        let (s1, r1) = &p[0];
        let (s2, r2) = &p[1];
        let t1 = r1.scale(&-n.clone()).shift(s1);
        let t2 = r2.scale(&-n.clone()).shift(s2);
        time_increasing &= t1.hi() < t2.lo();
        let a1 = r1.scale(&m).shift(s1);
        let a2 = r2.scale(&m).shift(s2);
        scale_nondecreasing &= a2.hi() >= a1.lo();
    }
    Ok(DaniCheck {
        grid: rs,
        time_increasing,
        scale_nondecreasing,
    })
}

/// `t(s) = e^(s - n r(s))`.
pub fn dani_time(s: &Rational, r: &RatInterval, dims: Dimensions, bits: u32) -> RatInterval {
    let u = r.scale(&-int(dims.n as i64)).shift(s);
    elementary::exp_interval(&u, bits)
}

/// Grid of `count` points from `s_min` to `s_max` with constant ratio (`s_min > 0`).
pub fn geometric_s_grid(s_min: &Rational, s_max: &Rational, count: usize) -> Vec<Rational> {
    if count <= 1 {
        return vec![s_min.clone()];
    }
    let ratio = (s_max / s_min)
        .to_f64()
        .unwrap_or(1.0)
        .powf(1.0 / (count - 1) as f64);
    let mut out = Vec::with_capacity(count);
    let mut cur = s_min.to_f64().unwrap_or(1.0);
    for i in 0..count {
        let v = if i + 1 == count {
            s_max.clone()
        } else {
            floor_to_grid(
                &Rational::from_float(cur).unwrap_or_else(|| s_min.clone()),
                20,
            )
        };
        if out.last().map_or(true, |l: &Rational| &v > l) {
            out.push(v);
        }
        cur *= ratio;
    }
    out
}

/// For `m = n = 1`: one `s` per convergent, just below the solution of
/// `e^(s - r(s)) = q_k`, so that `t(s)` probes the scale `(q_(k-1), q_k)`.
pub fn s_grid_from_convergents(
    cf: &CFState,
    psi: &PsiFunction,
    window: (usize, usize),
    bits: u32,
) -> Result<Vec<(usize, Rational)>, LatticeError> {
    let mut out = Vec::new();
    for k in window.0.max(1)..=window.1.min(cf.depth()) {
        let q = Rational::from_integer(cf.q(k).clone());
        if exact::lt(&q, psi.monotone_from()) || cf.q(k) == cf.q(k - 1) {
            continue;
        }
        let lq = elementary::log(&q, bits);
        let lp = elementary::log_interval(&psi.eval(&q, bits)?, bits);
        let f = (&lq - &lp).scale(&Rational::new(1.into(), 2.into()));
        let s = floor_to_grid(f.lo(), 40) - Rational::new(BigInt::one(), BigInt::one() << 40u32);
        out.push((k, s));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynVerdict {
    pub s: Rational,
    pub status: Status,
    pub delta: RatInterval,
    pub r: RatInterval,
    pub bits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynReport {
    pub verdicts: Vec<DynVerdict>,
    /// Indices refer to grid positions.
    pub summary: Summary,
}

fn dyn_verdict(
    y: &TargetMatrix,
    psi: &PsiFunction,
    s: &Rational,
    prec: Precision,
) -> Result<DynVerdict, LatticeError> {
    let mut last = None;
    for bits in prec.ladder() {
        let r = dani_r(psi, y.dims, s, bits)?;
        let dv = delta(y, s, bits)?;
        let status = if exact::lt(r.hi(), dv.enclosure.lo()) {
            Status::Satisfied
        } else if exact::le(dv.enclosure.hi(), r.lo()) {
            Status::Violated
        } else {
            Status::Indeterminate
        };
        let v = DynVerdict {
            s: s.clone(),
            status,
            delta: dv.enclosure,
            r,
            bits,
        };
        if status != Status::Indeterminate {
            return Ok(v);
        }
        last = Some(v);
    }
    Ok(last.expect("nonempty ladder"))
}

/// `Delta(g_s Lambda_Y) > r_psi(s)` at each grid point, three-valued.
pub fn dynamical_verdicts(
    y: &TargetMatrix,
    psi: &PsiFunction,
    s_grid: &[Rational],
    prec: Precision,
) -> Result<DynReport, LatticeError> {
    if s_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LatticeError::Shape("s grid must increase".into()));
    }
    let verdicts = s_grid
        .par_iter()
        .map(|s| dyn_verdict(y, psi, s, prec))
        .collect::<Result<Vec<_>, _>>()?;
    let as_index: Vec<IndexVerdict> = verdicts
        .iter()
        .enumerate()
        .map(|(i, v)| IndexVerdict {
            n: i,
            status: v.status,
            lhs: v.r.clone(),
            rhs: v.delta.clone(),
            bits: v.bits,
        })
        .collect();
    Ok(DynReport {
        summary: summarize(0, &as_index, false),
        verdicts,
    })
}

/// A nonzero `q` that improves on every `q'` of smaller norm: the only ones whose
/// witness intervals matter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessRecord {
    pub q: Vec<BigInt>,
    /// `|q|^n`, the left end of the witness interval.
    pub start: BigInt,
    /// `(max_i <(Yq)_i>)^m`.
    pub r: Rational,
}

enum Coeffs {
    Small { num: Vec<i128>, den: i128 },
    Big { num: Vec<BigInt>, den: BigInt },
}

/// Records of `max_i <(Yq)_i>` over nonzero `q` with `|q|^n < horizon`, by
/// increasing norm; `q` and `-q` are interchangeable so only a half-space is scanned.
pub fn witness_records(
    y: &TargetMatrix,
    horizon: &Rational,
) -> Result<Vec<WitnessRecord>, LatticeError> {
    let Dimensions { m, n } = y.dims;
    let den = y
        .entries
        .iter()
        .fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
    let num: Vec<BigInt> = y
        .entries
        .iter()
        .map(|e| e.numer() * (&den / e.denom()))
        .collect();
    // |q| < horizon^(1/n)
    let guess = horizon.to_f64().unwrap_or(f64::MAX).powf(1.0 / n as f64);
    if !(guess < (1u64 << 40) as f64) {
        return Err(LatticeError::EnumerationTooLarge(u64::MAX));
    }
    let mut qmax: i64 = (guess as i64 - 2).max(0);
    while Rational::from_integer(BigInt::from(qmax + 1).pow(n as u32)) < *horizon {
        qmax += 1;
    }
    while qmax > 0 && Rational::from_integer(BigInt::from(qmax).pow(n as u32)) >= *horizon {
        qmax -= 1;
    }
    let total = (2 * qmax as u128 + 1).pow(n as u32) / 2;
    if total > 200_000_000 {
        return Err(LatticeError::EnumerationTooLarge(total as u64));
    }
    let small_ok = den.bits() < 60
        && num.iter().all(|x| x.bits() < 60)
        && (qmax as u128) < (1u128 << 30)
        && n <= 8;
    let coeffs = if small_ok {
        Coeffs::Small {
            num: num.iter().map(|x| x.to_i128().unwrap()).collect(),
            den: den.to_i128().unwrap(),
        }
    } else {
        Coeffs::Big {
            num,
            den: den.clone(),
        }
    };
    let mut best: Option<BigInt> = None;
    let mut out = Vec::new();
    let mut q = vec![0i64; n];
    for norm in 1..=qmax {
        // all q with |q| = norm in the half-space (first nonzero coordinate positive)
        let mut shell_best: Option<(BigInt, Vec<i64>)> = None;
        // the shell splits by the first coordinate b with |q_b| = norm
        for b in 0..n {
            for (i, x) in q.iter_mut().enumerate() {
                *x = if i < b { 1 - norm } else { -norm };
            }
            let lower = |i: usize| if i < b { 1 - norm } else { -norm };
            let upper = |i: usize| if i < b { norm - 1 } else { norm };
            loop {
                let positive = q.iter().find(|x| **x != 0).map_or(false, |x| *x > 0);
                if q[b].abs() == norm && positive {
                    let dist = match &coeffs {
                        Coeffs::Small { num, den } => {
                            let mut worst = 0i128;
                            for i in 0..m {
                                let mut acc = 0i128;
                                for j in 0..n {
                                    acc += num[i * n + j] * q[j] as i128;
                                }
                                let r = acc.rem_euclid(*den);
                                worst = worst.max(r.min(den - r));
                            }
                            BigInt::from(worst)
                        }
                        Coeffs::Big { num, den } => {
                            let mut worst = BigInt::zero();
                            for i in 0..m {
                                let mut acc = BigInt::zero();
                                for j in 0..n {
                                    acc += &num[i * n + j] * q[j];
                                }
                                let r = acc.mod_floor(den);
                                let r = std::cmp::min(r.clone(), den - r);
                                if r > worst {
                                    worst = r;
                                }
                            }
                            worst
                        }
                    };
                    if shell_best.as_ref().map_or(true, |(b, _)| &dist < b) {
                        shell_best = Some((dist, q.clone()));
                    }
                }
                // odometer; coordinate b only takes the values -norm and norm
                let mut i = 0;
                while i < n {
                    if i == b {
                        if q[i] == -norm {
                            q[i] = norm;
                            break;
                        }
                        q[i] = -norm;
                    } else if q[i] < upper(i) {
                        q[i] += 1;
                        break;
                    } else {
                        q[i] = lower(i);
                    }
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        if let Some((dist, qv)) = shell_best {
            if best.as_ref().map_or(true, |b| &dist < b) {
                let zero = dist.is_zero();
                best = Some(dist.clone());
                out.push(WitnessRecord {
                    q: qv.iter().map(|x| BigInt::from(*x)).collect(),
                    start: BigInt::from(norm).pow(n as u32),
                    r: exact::powi(&Rational::new(dist, den.clone()), m as u32),
                });
                if zero {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Simplest rational (smallest denominator) strictly between `lo` and `hi`, for
/// `0 <= lo < hi`; `hi = None` stands for infinity.
pub fn simplest_between(lo: &Rational, hi: Option<&Rational>) -> Rational {
    let f = lo.floor();
    let next = &f + int(1);
    match hi {
        None => next,
        Some(h) if &next < h => next,
        Some(h) => {
            let frac_lo = lo - &f;
            let inner_hi = (!frac_lo.is_zero()).then(|| frac_lo.recip());
            let inner_lo = (h - &f).recip();
            f + simplest_between(&inner_lo, inner_hi.as_ref()).recip()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessInterval {
    pub record: WitnessRecord,
    /// `psi > r` certified on `[start, inner]`; `None` if it holds through the horizon.
    pub inner: Option<Rational>,
    /// `psi <= r` certified from `outer` on; `None` if no such point inside the horizon.
    pub outer: Option<Rational>,
    /// False when `psi(max(start, T0)) <= r` already, so the interval misses the horizon.
    pub nonempty: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessReport {
    pub horizon: (Rational, Rational),
    pub intervals: Vec<WitnessInterval>,
    /// `[T0, T1]` is certainly covered by the witness intervals.
    pub covered: bool,
    /// Parts of the horizon certainly outside every witness interval.
    pub gaps: Vec<RatInterval>,
    /// Parts not certified covered (contains the gaps).
    pub uncertain: Vec<RatInterval>,
}

enum Side {
    Above,
    AtOrBelow,
    Unknown,
}

fn psi_vs(
    psi: &PsiFunction,
    t: &Rational,
    r: &Rational,
    prec: Precision,
) -> Result<Side, LatticeError> {
    for bits in prec.ladder() {
        let v = psi.eval(t, bits)?;
        if exact::lt(r, v.lo()) {
            return Ok(Side::Above);
        }
        if exact::le(v.hi(), r) {
            return Ok(Side::AtOrBelow);
        }
        if v.is_point() {
            break;
        }
    }
    Ok(Side::Unknown)
}

/// Complement in `[t0, t1]` of a union of open intervals `(a, b)`, `b = None` meaning
/// infinity; returned as closed intervals (possibly single points).
fn uncovered(
    parts: &[(Rational, Option<Rational>)],
    t0: &Rational,
    t1: &Rational,
) -> Vec<RatInterval> {
    let mut out = Vec::new();
    let mut p = t0.clone();
    let mut closed = true;
    loop {
        if &p > t1 || (&p == t1 && !closed) {
            break;
        }
        let reach = parts
            .iter()
            .filter(|(a, b)| {
                (a < &p || (a == &p && !closed)) && b.as_ref().map_or(true, |b| b > &p)
            })
            .map(|(_, b)| b.clone())
            .max_by(|x, y| match (x, y) {
                (None, None) => std::cmp::Ordering::Equal,
                (None, _) => std::cmp::Ordering::Greater,
                (_, None) => std::cmp::Ordering::Less,
                (Some(x), Some(y)) => x.cmp(y),
            });
        match reach {
            Some(None) => break,
            Some(Some(b)) => {
                p = b;
                closed = true;
            }
            None => {
                let next = parts
                    .iter()
                    .filter(|(a, b)| a >= &p && b.as_ref().map_or(true, |b| b > a))
                    .map(|(a, _)| a.clone())
                    .min();
                match next {
                    Some(a) if &a <= t1 => {
                        out.push(RatInterval::new(p.clone(), a.clone()));
                        p = a;
                        closed = false;
                    }
                    _ => {
                        out.push(RatInterval::new(p.clone(), t1.clone()));
                        break;
                    }
                }
            }
        }
    }
    out
}

fn witness_interval(
    psi: &PsiFunction,
    rec: WitnessRecord,
    t0: &Rational,
    t1: &Rational,
    prec: Precision,
) -> Result<WitnessInterval, LatticeError> {
    let start = exact::max(&Rational::from_integer(rec.start.clone()), t0).clone();
    let mut wi = WitnessInterval {
        record: rec,
        inner: None,
        outer: None,
        nonempty: true,
    };
    if &start > t1 {
        wi.nonempty = false;
        return Ok(wi);
    }
    let r = wi.record.r.clone();
    if r.is_zero() {
        return Ok(wi);
    }
    let mut lo = match psi_vs(psi, &start, &r, prec)? {
        Side::Above => Some(start.clone()),
        Side::AtOrBelow => {
            wi.nonempty = false;
            wi.outer = Some(start);
            return Ok(wi);
        }
        Side::Unknown => None,
    };
    let mut hi = match psi_vs(psi, t1, &r, prec)? {
        Side::Above => {
            // covers through the horizon
            return Ok(wi);
        }
        Side::AtOrBelow => Some(t1.clone()),
        Side::Unknown => None,
    };
    let (Some(mut a), Some(mut b)) = (lo.clone(), hi.clone()) else {
        wi.inner = lo.or(Some(start.clone()));
        wi.outer = hi;
        return Ok(wi);
    };
    let steps = 2 * prec.bits as usize;
    for i in 0..steps {
        if a == b {
            break;
        }
        let mid = if i % 2 == 0 {
            simplest_between(&a, Some(&b))
        } else {
            (&a + &b) / int(2)
        };
        match psi_vs(psi, &mid, &r, prec)? {
            Side::Above => a = mid,
            Side::AtOrBelow => b = mid,
            Side::Unknown => break,
        }
    }
    lo = Some(a);
    hi = Some(b);
    wi.inner = lo;
    wi.outer = hi;
    Ok(wi)
}

/// Solvability of `|Yq - p|^m < psi(t)`, `|q|^n < t` over `t` in `[T0, T1]`, by
/// exhaustive enumeration of `q`.
pub fn direct_witness_check(
    y: &TargetMatrix,
    psi: &PsiFunction,
    horizon: (&Rational, &Rational),
    prec: Precision,
) -> Result<WitnessReport, LatticeError> {
    let (t0, t1) = horizon;
    if t0 > t1 || exact::lt(t0, psi.monotone_from()) {
        return Err(LatticeError::Horizon(t0.clone(), t1.clone()));
    }
    let records = witness_records(y, t1)?;
    let intervals = records
        .into_par_iter()
        .map(|rec| witness_interval(psi, rec, t0, t1, prec))
        .collect::<Result<Vec<_>, _>>()?;
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for wi in &intervals {
        let a = Rational::from_integer(wi.record.start.clone());
        if !wi.nonempty {
            continue;
        }
        let full = wi.inner.is_none() && wi.outer.is_none();
        if full {
            inner.push((a.clone(), None));
            outer.push((a, None));
            continue;
        }
        if let Some(i) = &wi.inner {
            // psi > r on [start, inner], so (a, inner] is covered; use the open part
            inner.push((a.clone(), Some(i.clone())));
        }
        outer.push((a, wi.outer.clone()));
    }
    let uncertain = uncovered(&inner, t0, t1);
    let gaps = uncovered(&outer, t0, t1);
    Ok(WitnessReport {
        horizon: (t0.clone(), t1.clone()),
        covered: uncertain.is_empty(),
        intervals,
        gaps,
        uncertain,
    })
}

/// Witness status at a single time `t`, from precomputed records.
pub fn witness_status_at(
    records: &[WitnessRecord],
    psi: &PsiFunction,
    t: &RatInterval,
    prec: Precision,
) -> Result<Status, LatticeError> {
    // Satisfied: some q with |q|^n < t and psi(t) > r_q for all t in the enclosure
    for rec in records {
        let a = Rational::from_integer(rec.start.clone());
        if exact::lt(&a, t.lo()) {
            if rec.r.is_zero() {
                return Ok(Status::Satisfied);
            }
            if let Side::Above = psi_vs(psi, t.hi(), &rec.r, prec)? {
                return Ok(Status::Satisfied);
            }
        }
    }
    // Violated: every q with |q|^n < t has psi(t) <= r_q
    for rec in records {
        let a = Rational::from_integer(rec.start.clone());
        if exact::lt(&a, t.hi()) {
            if rec.r.is_zero() {
                return Ok(Status::Indeterminate);
            }
            match psi_vs(psi, t.lo(), &rec.r, prec)? {
                Side::AtOrBelow => {}
                _ => return Ok(Status::Indeterminate),
            }
        }
    }
    Ok(Status::Violated)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeCheck {
    /// Convergent index whose scale `(q_(k-1), q_k]` contains the time probed.
    pub index: usize,
    pub s: Option<Rational>,
    pub t: RatInterval,
    pub cf: Status,
    pub dynamical: Option<Status>,
    pub witness: Status,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub window: (usize, usize),
    pub checks: Vec<TimeCheck>,
    /// Grid points whose time could not be placed between two convergents.
    pub skipped: usize,
    /// Pairs of certified verdicts compared.
    pub agreements: usize,
}

impl fmt::Display for TimeCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "index {} t in {} cf {} witness {}",
            self.index, self.t, self.cf, self.witness
        )?;
        if let (Some(s), Some(d)) = (&self.s, self.dynamical) {
            write!(f, " s {s} dynamical {d}")?;
        }
        Ok(())
    }
}

/// Horizon up to which the witness path enumerates `q` in `cross_validate`.
pub const WITNESS_HORIZON: u64 = 4_000_000;

fn conflict(a: Status, b: Status) -> bool {
    matches!(
        (a, b),
        (Status::Satisfied, Status::Violated) | (Status::Violated, Status::Satisfied)
    )
}

/// Runs the convergent criterion, the lattice criterion and the direct witness check on
/// matched times and fails on any certified disagreement (`m = n = 1`).
///
/// At `t = q_k` the convergent verdict at `k` and the witness check decide the same
/// statement. A grid point `s` probes `t(s) = e^(s - r(s))`; when `q_(k-1) < t(s) <= q_k`
/// a Satisfied convergent verdict at `k` rules out a Violated lattice verdict, and the
/// lattice and witness verdicts at `t(s)` must agree outright.
pub fn cross_validate(
    x: &CFState,
    psi: &PsiFunction,
    window: (usize, usize),
    s_grid: Option<&[Rational]>,
    prec: Precision,
) -> Result<ConsistencyReport, LatticeError> {
    let cf_report = dirichlet_verdicts(x, psi, window, prec)?;
    let cf_at = |k: usize| {
        cf_report
            .verdicts
            .iter()
            .find(|v| v.n == k)
            .map(|v| v.status)
    };
    let y = TargetMatrix::scalar(x.value().unwrap_or_else(|| x.cylinder().mid()));
    let dims = y.dims;
    let top = window.1.min(x.depth());
    let qmax = x.q(top).clone();
    let horizon = Rational::from_integer(std::cmp::min(qmax + 1, BigInt::from(WITNESS_HORIZON)));
    let records = witness_records(&y, &horizon)?;
    let t_mono = psi.monotone_from().clone();

    let grid: Vec<Rational> = match s_grid {
        Some(g) => g.to_vec(),
        None => s_grid_from_convergents(x, psi, window, prec.bits)?
            .into_iter()
            .map(|(_, s)| s)
            .collect(),
    };
    let s0 = dani_s0(psi, dims, prec.bits)?;
    let grid: Vec<Rational> = grid.into_iter().filter(|s| exact::le(s0.hi(), s)).collect();
    let dyn_report = dynamical_verdicts(&y, psi, &grid, prec)?;

    let mut checks = Vec::new();
    let mut problems = Vec::new();
    let mut skipped = 0;
    let mut agreements = 0;

    // convergent scale checks at t = q_k
    for k in window.0.max(1)..=top {
        let q = Rational::from_integer(x.q(k).clone());
        if q > horizon
            || x.q(k - 1) == x.q(k)
            || exact::lt(&Rational::from_integer(x.q(k - 1).clone()), &t_mono)
        {
            continue;
        }
        let Some(cf) = cf_at(k) else { continue };
        let witness = witness_status_at(&records, psi, &RatInterval::point(q.clone()), prec)?;
        if conflict(cf, witness) {
            problems.push(format!(
                "index {k}: convergent {cf} vs witness {witness} at t = {q}"
            ));
        } else if cf != Status::Indeterminate && witness != Status::Indeterminate {
            agreements += 1;
        }
        checks.push(TimeCheck {
            index: k,
            s: None,
            t: RatInterval::point(q),
            cf,
            dynamical: None,
            witness,
        });
    }

    // grid checks at t(s)
    for v in &dyn_report.verdicts {
        let t = dani_time(&v.s, &v.r, dims, prec.bits);
        let k =
            (1..=x.depth()).find(|&k| exact::le(t.hi(), &Rational::from_integer(x.q(k).clone())));
        let placed = k.filter(|&k| exact::lt(&Rational::from_integer(x.q(k - 1).clone()), t.lo()));
        let Some(k) = placed else {
            skipped += 1;
            continue;
        };
        if exact::lt(t.lo(), &t_mono) || exact::lt(&horizon, t.hi()) {
            skipped += 1;
            continue;
        }
        let cf = cf_at(k).unwrap_or(Status::Indeterminate);
        let witness = witness_status_at(&records, psi, &t, prec)?;
        if cf == Status::Satisfied && v.status == Status::Violated {
            problems.push(format!(
                "s = {}: lattice Violated but convergent index {k} Satisfied",
                v.s
            ));
        }
        if conflict(v.status, witness) {
            problems.push(format!(
                "s = {}: lattice {} vs witness {witness} at t in {t}",
                v.s, v.status
            ));
        }
        if v.status != Status::Indeterminate && witness != Status::Indeterminate {
            agreements += 1;
        }
        checks.push(TimeCheck {
            index: k,
            s: Some(v.s.clone()),
            t,
            cf,
            dynamical: Some(v.status),
            witness,
        });
    }
    if !problems.is_empty() {
        return Err(LatticeError::InconsistencyFound(problems.join("; ")));
    }
    Ok(ConsistencyReport {
        window,
        checks,
        skipped,
        agreements,
    })
}

trait NegShift {
    fn neg_shift(&self, s: &Rational) -> RatInterval;
}

impl NegShift for RatInterval {
    /// `s - self`.
    fn neg_shift(&self, s: &Rational) -> RatInterval {
        (-self).shift(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn one_by_one() -> Dimensions {
        Dimensions::new(1, 1).unwrap()
    }

    #[test]
    fn dimension_cap() {
        assert!(Dimensions::new(2, 3).is_ok());
        assert_eq!(Dimensions::new(3, 3), Err(LatticeError::DimensionCap(6, 5)));
        assert!(Dimensions::with_cap(3, 3, 6).is_ok());
    }

    #[test]
    fn integer_lattice_has_delta_zero() {
        for (m, n) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let dims = Dimensions::new(m, n).unwrap();
            let d = delta(&TargetMatrix::zero(dims), &Rational::zero(), 64).unwrap();
            assert_eq!(d.enclosure, RatInterval::zero());
        }
    }

    #[test]
    fn flowed_integer_lattice() {
        let y = TargetMatrix::zero(one_by_one());
        assert_eq!(
            delta(&y, &r(1, 1), 64).unwrap().enclosure,
            RatInterval::point(r(1, 1))
        );
        assert_eq!(
            delta(&y, &r(-3, 2), 64).unwrap().enclosure,
            RatInterval::point(r(3, 2))
        );
        let y = TargetMatrix::zero(Dimensions::new(2, 1).unwrap());
        assert_eq!(
            delta(&y, &r(1, 2), 64).unwrap().enclosure,
            RatInterval::point(r(1, 2))
        );
    }

    #[test]
    fn determinant_contains_one() {
        let dims = Dimensions::new(2, 2).unwrap();
        let y = TargetMatrix::new(dims, vec![r(1, 3), r(-2, 7), r(5, 11), r(1, 2)]).unwrap();
        let b = FlowedBasis::new(&y, &r(5, 2), 64);
        assert!(b.determinant().contains(&r(1, 1)));
    }

    #[test]
    fn lll_unimodular() {
        let mut cols = vec![vec![r(1, 1), r(0, 1)], vec![r(1000, 1), r(1, 1000)]];
        let orig = cols.clone();
        let u = lll_reduce(&mut cols);
        let inv = unimodular_inverse(&u);
        for k in 0..2 {
            for i in 0..2 {
                let direct: Rational = (0..2)
                    .map(|j| &orig[j][i] * Rational::from_integer(u[k][j].clone()))
                    .sum();
                assert_eq!(direct, cols[k][i]);
                let id: BigInt = (0..2).map(|j| &inv[i][j] * &u[k][j]).sum();
                assert_eq!(id, BigInt::from((i == k) as i64));
            }
        }
        assert!(cols.iter().all(|c| c[0].abs() <= r(1, 1)));
    }

    #[test]
    fn delta_of_rational_point_grows() {
        // x = 3/7: the vector q = 7 lies on the q-axis, so Delta = s - log 7 for large s
        let y = TargetMatrix::scalar(r(3, 7));
        let s = r(20, 1);
        let d = delta(&y, &s, 64).unwrap();
        let expect = elementary::log(&r(7, 1), 70).neg_shift(&s);
        assert!(d.enclosure.intersects(&expect));
        assert_eq!(d.minimizer[1].abs(), BigInt::from(7));
    }

    #[test]
    fn delta_matches_convergent_candidates() {
        // golden truncation: compare with the best of -log max(e^-s q, e^s <q x>) over convergents
        let cf = CFState::from_u64s(&[1; 25], false).unwrap();
        let x = cf.convergent(25);
        let y = TargetMatrix::scalar(x.clone());
        for s in [r(2, 1), r(9, 2), r(7, 1)] {
            let d = delta(&y, &s, 64).unwrap();
            let mut best: Option<RatInterval> = None;
            for k in 0..=20 {
                let q = cf.q(k).clone();
                let dist = (Rational::from_integer(q.clone()) * &x
                    - Rational::from_integer(cf.p(k).clone()))
                .abs();
                let f = neg_log_norm(&dist, &q, &s, one_by_one(), 68);
                best = Some(match best {
                    None => f,
                    Some(b) => b.max(&f),
                });
            }
            assert!(d.enclosure.intersects(&best.unwrap()), "s = {s}");
            assert!(d.enclosure.lo() >= &Rational::zero());
        }
    }

    #[test]
    fn dani_scaled_is_constant() {
        let psi = PsiFunction::scaled_dirichlet(r(7, 10)).unwrap();
        let expect = elementary::log(&r(10, 7), 80).scale(&r(1, 2));
        for s in [r(1, 1), r(5, 1), r(40, 3)] {
            let got = dani_r(&psi, one_by_one(), &s, 60).unwrap();
            assert!(got.width() <= Rational::new(1.into(), BigInt::one() << 60u32));
            assert!(got.intersects(&expect));
        }
        let psi1 = PsiFunction::dirichlet();
        let got = dani_r(&psi1, Dimensions::new(2, 1).unwrap(), &r(3, 1), 60).unwrap();
        assert!(got.contains(&Rational::zero()));
    }

    #[test]
    fn dani_identity_residual() {
        let psi = PsiFunction::power_gap(r(1, 1), r(1, 1)).unwrap();
        let s = floor_to_grid(elementary::log(&r(10, 1), 80).lo(), 60);
        let rr = dani_r(&psi, one_by_one(), &s, 50).unwrap();
        let mid = rr.mid();
        let lhs = psi
            .eval_interval(&elementary::exp(&(&s - &mid), 80), 80)
            .unwrap();
        let rhs = elementary::exp(&(-&s - &mid), 80);
        let resid = (&lhs - &rhs).abs();
        assert!(resid.hi() < &r(1, 1 << 40));
    }

    #[test]
    fn dani_below_s0() {
        let psi = PsiFunction::power_gap(r(1, 1), r(1, 1)).unwrap();
        assert!(matches!(
            dani_r(&psi, one_by_one(), &r(-1, 1), 40),
            Err(LatticeError::BelowS0 { .. })
        ));
    }

    #[test]
    fn dani_monotone_on_grid() {
        let psi = PsiFunction::power_gap(r(1, 1), r(1, 2)).unwrap();
        let grid = geometric_s_grid(&r(2, 1), &r(20, 1), 8);
        let chk = dani_check(&psi, Dimensions::new(1, 2).unwrap(), &grid, 40).unwrap();
        assert!(chk.time_increasing);
        assert!(chk.scale_nondecreasing);
    }

    #[test]
    fn simplest_rationals() {
        assert_eq!(simplest_between(&r(7, 2), Some(&r(9, 1))), r(4, 1));
        assert_eq!(simplest_between(&r(1, 3), Some(&r(1, 2))), r(2, 5));
        assert_eq!(simplest_between(&r(3, 1), Some(&r(16, 5))), r(19, 6));
        assert_eq!(simplest_between(&r(0, 1), None), r(1, 1));
    }

    #[test]
    fn witness_for_five_eighths() {
        let y = TargetMatrix::scalar(r(5, 8));
        let psi = PsiFunction::dirichlet();
        let rep =
            direct_witness_check(&y, &psi, (&r(2, 1), &r(50, 1)), Precision::default()).unwrap();
        // q = 3 leaves 1/8 and covers (3, 8); q = 8 only starts after t = 8
        assert!(!rep.covered);
        assert_eq!(rep.gaps, vec![RatInterval::point(r(8, 1))]);
        let recs = witness_records(&y, &r(50, 1)).unwrap();
        let qs: Vec<i64> = recs.iter().map(|w| w.q[0].to_i64().unwrap()).collect();
        assert_eq!(qs, vec![1, 2, 3, 8]);
    }

    #[test]
    fn witness_symmetric_records() {
        let dims = Dimensions::new(1, 2).unwrap();
        let y = TargetMatrix::new(dims, vec![r(2, 5), r(3, 7)]).unwrap();
        let recs = witness_records(&y, &r(200, 1)).unwrap();
        for w in &recs {
            let first = w.q.iter().find(|c| !c.is_zero()).unwrap();
            assert!(first.is_positive());
        }
        assert!(recs.last().unwrap().r.is_zero());
    }

    #[test]
    fn psi_one_dynamical() {
        let y = TargetMatrix::scalar(r(13, 21));
        let grid: Vec<Rational> = (1..6).map(|k| r(k, 1)).collect();
        let rep =
            dynamical_verdicts(&y, &PsiFunction::dirichlet(), &grid, Precision::default()).unwrap();
        for v in &rep.verdicts {
            assert_ne!(v.status, Status::Violated);
        }
    }

    #[test]
    fn cross_validation_agrees() {
        let cf = CFState::from_u64s(&[2, 3, 1, 4, 2, 7, 1, 1, 3], true).unwrap();
        for psi in [
            PsiFunction::dirichlet(),
            PsiFunction::scaled_dirichlet(r(7, 10)).unwrap(),
            PsiFunction::power_gap(r(1, 1), r(1, 1)).unwrap(),
        ] {
            let rep = cross_validate(&cf, &psi, (1, 9), None, Precision::default()).unwrap();
            assert!(rep.agreements > 0);
        }
    }
}
