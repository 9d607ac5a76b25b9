//! Exact arithmetic for weight vectors, multi-indices, weighted degrees,
//! the increasing sequence of achievable degrees, Z-linear dependence, and
//! the root-test convergence criterion.
//!
//! Weights live in a Q-vector space with basis `(1, tau_1, ..., tau_r)`
//! where the `tau_i` are user-declared, Q-linearly-independent positive
//! irrationals. Equality of weighted degrees is decided coordinate-wise
//! over Q, never by floating comparison; ordering uses the floating
//! approximation with exact tie-breaking so that sorting is total and
//! reproducible.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A declared irrational basis element with its floating approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrationalBasis {
    pub name: String,
    pub approx: f64,
}

/// An exact element of the Q-vector space spanned by `(1, tau_1, ..., tau_r)`.
///
/// `coords[0]` is the rational part; `coords[i]` for `i >= 1` is the
/// coefficient of `tau_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exact {
    pub coords: Vec<BigRational>,
}

impl Exact {
    pub fn zero(r: usize) -> Self {
        Exact {
            coords: vec![BigRational::zero(); r + 1],
        }
    }

    pub fn from_rational(num: i64, den: i64, r: usize) -> Self {
        let mut coords = vec![BigRational::zero(); r + 1];
        coords[0] = BigRational::new(BigInt::from(num), BigInt::from(den));
        Exact { coords }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// True when all irrational coordinates vanish.
    pub fn is_rational(&self) -> bool {
        self.coords[1..].iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &Exact) -> Exact {
        Exact {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Exact) -> Exact {
        Exact {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale_u32(&self, s: u32) -> Exact {
        let f = BigRational::from(BigInt::from(s));
        Exact {
            coords: self.coords.iter().map(|c| c * &f).collect(),
        }
    }

    pub fn approx(&self, basis: &[IrrationalBasis]) -> f64 {
        let mut v = self.coords[0].to_f64().unwrap_or(f64::NAN);
        for (c, b) in self.coords[1..].iter().zip(basis) {
            v += c.to_f64().unwrap_or(f64::NAN) * b.approx;
        }
        v
    }

    /// Sign of the element. Exact when the irrational part vanishes,
    /// decided through the floating approximation otherwise.
    pub fn sign(&self, basis: &[IrrationalBasis]) -> Ordering {
        if self.is_zero() {
            return Ordering::Equal;
        }
        if self.is_rational() {
            if self.coords[0].is_positive() {
                return Ordering::Greater;
            }
            return Ordering::Less;
        }
        let a = self.approx(basis);
        if a > 0.0 {
            Ordering::Greater
        } else if a < 0.0 {
            Ordering::Less
        } else {
            // Approximation exactly zero for a nonzero element: fall back to
            // lexicographic rational comparison to keep the order total.
            for c in &self.coords {
                match c.cmp(&BigRational::zero()) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        }
    }
}

/// Weight vector with exact entries, `entries[0] == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda {
    pub n: usize,
    pub basis: Vec<IrrationalBasis>,
    pub entries: Vec<Exact>,
}

impl Lambda {
    pub fn new(entries: Vec<Exact>, basis: Vec<IrrationalBasis>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("lambda entries"));
        }
        let r = basis.len();
        for e in &entries {
            if e.coords.len() != r + 1 {
                return Err(Error::DimensionMismatch {
                    expected: r + 1,
                    got: e.coords.len(),
                });
            }
        }
        let one = {
            let mut e = Exact::zero(r);
            e.coords[0] = BigRational::from(BigInt::from(1));
            e
        };
        if entries[0] != one {
            return Err(Error::InvalidInput(
                "lambda_1 must equal 1 exactly".into(),
            ));
        }
        for e in &entries {
            if e.sign(&basis) != Ordering::Greater {
                return Err(Error::InvalidInput("every weight must be positive".into()));
            }
        }
        Ok(Lambda {
            n: entries.len(),
            basis,
            entries,
        })
    }

    /// Purely rational weight vector given as (numerator, denominator) pairs.
    pub fn rational(weights: &[(i64, i64)]) -> Result<Self> {
        let entries = weights
            .iter()
            .map(|&(p, q)| Exact::from_rational(p, q, 0))
            .collect();
        Lambda::new(entries, Vec::new())
    }

    /// Integer weight vector.
    pub fn integer(weights: &[i64]) -> Result<Self> {
        let pairs: Vec<(i64, i64)> = weights.iter().map(|&w| (w, 1)).collect();
        Lambda::rational(&pairs)
    }

    pub fn approx_entries(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.approx(&self.basis)).collect()
    }

    pub fn min_approx(&self) -> f64 {
        self.approx_entries().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_approx(&self) -> f64 {
        self.approx_entries()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn degree(&self, k: &MultiIndex) -> Result<WeightedDegree> {
        weighted_degree(self, k)
    }

    pub fn zero_degree(&self) -> WeightedDegree {
        WeightedDegree {
            exact: Exact::zero(self.basis.len()),
            approx: 0.0,
        }
    }

    pub fn degree_from_exact(&self, exact: Exact) -> WeightedDegree {
        let approx = exact.approx(&self.basis);
        WeightedDegree { exact, approx }
    }

    pub fn degree_from_rational(&self, num: i64, den: i64) -> WeightedDegree {
        self.degree_from_exact(Exact::from_rational(num, den, self.basis.len()))
    }
}

/// Multi-index of nonnegative integer exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree |k|.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// Exact weighted degree with a cached floating approximation.
#[derive(Debug, Clone)]
pub struct WeightedDegree {
    pub exact: Exact,
    pub approx: f64,
}

impl WeightedDegree {
    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    /// Total order: floating value first, exact coordinates break ties.
    pub fn total_cmp(&self, other: &WeightedDegree) -> Ordering {
        if self.exact == other.exact {
            return Ordering::Equal;
        }
        let d = self.exact.sub(&other.exact);
        if d.is_rational() {
            return if d.coords[0].is_positive() {
                Ordering::Greater
            } else {
                Ordering::Less
            };
        }
        match self.approx.total_cmp(&other.approx) {
            Ordering::Equal => {
                for (a, b) in self.exact.coords.iter().zip(&other.exact.coords) {
                    match a.cmp(b) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                Ordering::Equal
            }
            o => o,
        }
    }

    pub fn add(&self, other: &WeightedDegree) -> WeightedDegree {
        WeightedDegree {
            exact: self.exact.add(&other.exact),
            approx: self.approx + other.approx,
        }
    }
}

impl PartialEq for WeightedDegree {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}
impl Eq for WeightedDegree {}

/// One level of the rho-sequence: a degree and every multi-index achieving it.
#[derive(Debug, Clone)]
pub struct RhoEntry {
    pub rho: WeightedDegree,
    pub multiindices: Vec<MultiIndex>,
}

/// Strictly increasing, exhaustive list of achievable weighted degrees up to a cap.
#[derive(Debug, Clone)]
pub struct RhoSequence {
    pub lambda: Lambda,
    pub cap: WeightedDegree,
    pub entries: Vec<RhoEntry>,
}

impl RhoSequence {
    /// Entry whose degree equals `rho` exactly, if present.
    pub fn find(&self, rho: &WeightedDegree) -> Option<&RhoEntry> {
        self.entries.iter().find(|e| e.rho == *rho)
    }
}

/// Outcome of the Z-dependence decision.
#[derive(Debug, Clone, PartialEq)]
pub enum DependenceVerdict {
    Independent,
    Dependent(Relation),
}

/// Integer relation in the normal form: after `permutation`, indices split
/// into a first group carrying exponents `alpha` and a second carrying
/// `beta`, with `sum alpha_i lambda_i = sum beta_j lambda_j = gamma > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    /// Original indices of the alpha group, then the beta group, then the rest.
    pub permutation: Vec<usize>,
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub gamma_approx: f64,
}

/// Root-test verdict carrying the tail-window maximum of |a_j|^(1/rho_j).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvergenceVerdict {
    Converges(f64),
    Diverges(f64),
    Inconclusive(f64),
}

impl ConvergenceVerdict {
    pub fn r_hat(&self) -> f64 {
        match *self {
            ConvergenceVerdict::Converges(r)
            | ConvergenceVerdict::Diverges(r)
            | ConvergenceVerdict::Inconclusive(r) => r,
        }
    }
}

/// Weighted degree (lambda, k) as an exact element.
pub fn weighted_degree(lambda: &Lambda, k: &MultiIndex) -> Result<WeightedDegree> {
    if k.len() != lambda.n {
        return Err(Error::DimensionMismatch {
            expected: lambda.n,
            got: k.len(),
        });
    }
    let mut acc = Exact::zero(lambda.basis.len());
    for (e, &ki) in lambda.entries.iter().zip(&k.0) {
        if ki != 0 {
            acc = acc.add(&e.scale_u32(ki));
        }
    }
    Ok(lambda.degree_from_exact(acc))
}

/// Enumerate every multi-index k with (lambda, k) <= cap, grouped by exact
/// degree in increasing order.
pub fn enumerate_rho(lambda: &Lambda, cap: &WeightedDegree) -> Result<RhoSequence> {
    if cap.exact.sign(&lambda.basis) == Ordering::Less {
        return Err(Error::NegativeCap);
    }
    let approxs = lambda.approx_entries();
    // Safe per-coordinate bound; exactness is enforced by the final check.
    let bounds: Vec<u32> = approxs
        .iter()
        .map(|&a| ((cap.approx / a) + 1.0).max(0.0).min(u32::MAX as f64) as u32)
        .collect();

    let mut groups: Vec<(WeightedDegree, Vec<MultiIndex>)> = Vec::new();
    let mut k = vec![0u32; lambda.n];
    collect(lambda, cap, &bounds, 0, &mut k, &lambda.zero_degree(), &mut groups);
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut entries: Vec<RhoEntry> = Vec::new();
    for (rho, mut idxs) in groups {
        idxs.sort();
        match entries.last_mut() {
            Some(last) if last.rho == rho => last.multiindices.extend(idxs),
            _ => entries.push(RhoEntry {
                rho,
                multiindices: idxs,
            }),
        }
    }
    for e in &mut entries {
        e.multiindices.sort();
    }
    Ok(RhoSequence {
        lambda: lambda.clone(),
        cap: cap.clone(),
        entries,
    })
}

fn collect(
    lambda: &Lambda,
    cap: &WeightedDegree,
    bounds: &[u32],
    i: usize,
    k: &mut Vec<u32>,
    partial: &WeightedDegree,
    out: &mut Vec<(WeightedDegree, Vec<MultiIndex>)>,
) {
    if i == lambda.n {
        if partial.total_cmp(cap) != Ordering::Greater {
            match out.iter_mut().find(|(r, _)| *r == *partial) {
                Some((_, v)) => v.push(MultiIndex(k.clone())),
                None => out.push((partial.clone(), vec![MultiIndex(k.clone())])),
            }
        }
        return;
    }
    let step = lambda.degree_from_exact(lambda.entries[i].clone());
    let mut cur = partial.clone();
    for ki in 0..=bounds[i] {
        if cur.total_cmp(cap) == Ordering::Greater {
            break;
        }
        k[i] = ki;
        collect(lambda, cap, bounds, i + 1, k, &cur, out);
        cur = cur.add(&step);
    }
    k[i] = 0;
}

/// Exact count of multi-indices with (lambda, k) <= j together with the
/// polynomial growth bound p_n(j) = prod_k (j*m_k + j + 1), where m_k is the
/// largest integer with lambda_k * m_k <= 1.
pub fn count_below(lambda: &Lambda, j: u32) -> (u64, f64) {
    let cap = lambda.degree_from_rational(j as i64, 1);
    let seq = enumerate_rho(lambda, &cap).expect("nonnegative cap");
    let count: u64 = seq.entries.iter().map(|e| e.multiindices.len() as u64).sum();
    let mut bound = 1.0f64;
    for e in &lambda.entries {
        let a = e.approx(&lambda.basis);
        let mut m = (1.0 / a).floor().max(0.0) as i64;
        // Adjust for floating error near an exact hit.
        loop {
            let fits = |m: i64| {
                let scaled = e.scale_u32(m.max(0) as u32);
                let one = Exact::from_rational(1, 1, lambda.basis.len());
                scaled.sub(&one).sign(&lambda.basis) != Ordering::Greater
            };
            if m > 0 && !fits(m) {
                m -= 1;
            } else if fits(m + 1) {
                m += 1;
            } else {
                break;
            }
        }
        bound *= (j as f64) * (m as f64) + (j as f64) + 1.0;
    }
    (count, bound)
}

/// Decide Z-linear dependence of the weights exactly via rational
/// elimination on their Q-coordinates.
pub fn is_z_dependent(lambda: &Lambda) -> DependenceVerdict {
    // Columns are the coordinate vectors of the weights; an integer nullspace
    // vector is an integer relation among them.
    let rows = lambda.basis.len() + 1;
    let cols = lambda.n;
    let mut m: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| (0..cols).map(|c| lambda.entries[c].coords[r].clone()).collect())
        .collect();

    // Gauss-Jordan, tracking pivot columns.
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut row = 0usize;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].clone();
        for c in col..cols {
            m[row][c] = &m[row][c] / &inv;
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..cols {
                    m[r][c] = &m[r][c] - &f * &m[row][c];
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    if free_cols.is_empty() {
        return DependenceVerdict::Independent;
    }

    // Nullspace vector for the first free column.
    let fc = free_cols[0];
    let mut c_rat = vec![BigRational::zero(); cols];
    c_rat[fc] = BigRational::from(BigInt::from(1));
    for (ri, &pc) in pivot_cols.iter().enumerate() {
        c_rat[pc] = -m[ri][fc].clone();
    }
    // Clear denominators, reduce to a primitive integer vector.
    let mut lcm = BigInt::from(1);
    for v in &c_rat {
        lcm = num_integer::lcm(lcm, v.denom().clone());
    }
    let mut ints: Vec<BigInt> = c_rat.iter().map(|v| (v * BigRational::from(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for v in &ints {
        g = num_integer::gcd(g, v.abs());
    }
    if !g.is_zero() {
        for v in &mut ints {
            *v = &*v / &g;
        }
    }
    // Orient so the first nonzero coefficient is positive.
    if let Some(first) = ints.iter().find(|v| !v.is_zero()) {
        if first.is_negative() {
            for v in &mut ints {
                *v = -v.clone();
            }
        }
    }

    let mut alpha_idx = Vec::new();
    let mut beta_idx = Vec::new();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for (i, v) in ints.iter().enumerate() {
        if v.is_positive() {
            alpha_idx.push(i);
            alpha.push(v.to_u32().expect("small relation coefficient"));
        } else if v.is_negative() {
            beta_idx.push(i);
            beta.push((-v).to_u32().expect("small relation coefficient"));
        }
    }
    debug_assert!(!alpha_idx.is_empty() && !beta_idx.is_empty());
    let approxs = lambda.approx_entries();
    let gamma: f64 = alpha_idx
        .iter()
        .zip(&alpha)
        .map(|(&i, &a)| approxs[i] * a as f64)
        .sum();
    let mut permutation: Vec<usize> = alpha_idx.clone();
    permutation.extend(&beta_idx);
    permutation.extend((0..cols).filter(|i| !alpha_idx.contains(i) && !beta_idx.contains(i)));
    DependenceVerdict::Dependent(Relation {
        permutation,
        alpha,
        beta,
        gamma_approx: gamma,
    })
}

/// Tail-window approximation of limsup |a_j|^(1/rho_j) with a dead band
/// around 1. `window` defaults to half the list, `delta` to 1e-6.
pub fn root_test(
    terms: &[(WeightedDegree, Complex64)],
    window: Option<usize>,
    delta: Option<f64>,
) -> Result<ConvergenceVerdict> {
    if terms.is_empty() {
        return Err(Error::EmptyInput("root test terms"));
    }
    let delta = delta.unwrap_or(1e-6);
    let w = window.unwrap_or((terms.len() + 1) / 2).max(1).min(terms.len());
    let tail = &terms[terms.len() - w..];
    let mut r_hat = 0.0f64;
    let mut seen = false;
    for (rho, a) in tail {
        if rho.approx <= 0.0 {
            continue;
        }
        seen = true;
        r_hat = r_hat.max(a.norm().powf(1.0 / rho.approx));
    }
    if !seen {
        // Only rho = 0 terms in the window: widen to the whole list.
        for (rho, a) in terms {
            if rho.approx > 0.0 {
                seen = true;
                r_hat = r_hat.max(a.norm().powf(1.0 / rho.approx));
            }
        }
    }
    if !seen {
        return Err(Error::EmptyInput("no terms with positive rho"));
    }
    Ok(if r_hat < 1.0 - delta {
        ConvergenceVerdict::Converges(r_hat)
    } else if r_hat > 1.0 + delta {
        ConvergenceVerdict::Diverges(r_hat)
    } else {
        ConvergenceVerdict::Inconclusive(r_hat)
    })
}
