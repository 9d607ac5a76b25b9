//! Formal series of quasi-homogeneous blocks: Dirichlet-type evaluation
//! along flow leaves, convergence-region estimation, and the explicit
//! divergent-series construction on a pluripolar witness family.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extremal::{capacity, green_estimate, psi_estimate};
use crate::qhpoly::{series_decompose, HoloQHPolynomial, MixedPolynomial, QHComponent};
use crate::suspension::{sphere_points, SampledSet, Suspension};
use crate::weights::{root_test, ConvergenceVerdict, Lambda, MultiIndex, WeightedDegree};

/// Strict margin on region thresholds, absorbing estimate noise.
pub const REGION_DELTA: f64 = 1e-3;

/// Default truncation order (number of leading blocks used by evaluators).
pub const DEFAULT_TRUNCATION: usize = 64;

/// Formal sum of holomorphic quasi-homogeneous blocks with strictly
/// increasing weighted degrees.
#[derive(Debug, Clone)]
pub struct FormalSeries {
    pub lambda: Lambda,
    pub blocks: Vec<(WeightedDegree, HoloQHPolynomial)>,
    /// Truncation order: evaluators use at most this many leading blocks.
    pub truncation: usize,
}

impl FormalSeries {
    pub fn new(lambda: Lambda, blocks: Vec<HoloQHPolynomial>) -> Result<Self> {
        let tagged: Vec<(WeightedDegree, HoloQHPolynomial)> = blocks
            .into_iter()
            .map(|q| (q.rho().clone(), q))
            .collect();
        for w in tagged.windows(2) {
            if w[1].0.total_cmp(&w[0].0) != std::cmp::Ordering::Greater {
                return Err(Error::InvalidInput(
                    "block degrees must be strictly increasing".into(),
                ));
            }
        }
        Ok(FormalSeries {
            lambda,
            blocks: tagged,
            truncation: DEFAULT_TRUNCATION,
        })
    }

    /// Series of the quasi-homogeneous blocks of a holomorphic polynomial.
    pub fn from_polynomial(f: &MixedPolynomial, lambda: &Lambda) -> Result<Self> {
        FormalSeries::new(lambda.clone(), series_decompose(f, lambda)?)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Leading blocks up to the truncation order.
    pub fn active_blocks(&self) -> &[(WeightedDegree, HoloQHPolynomial)] {
        &self.blocks[..self.blocks.len().min(self.truncation)]
    }
}

/// Partial sums of sum_m q_m(z) e^{-rho_m t} together with a root-test
/// verdict on the terms.  Requires Re t > 0.
pub fn dirichlet_eval(
    s: &FormalSeries,
    z: &[Complex64],
    t: Complex64,
) -> Result<(Vec<Complex64>, ConvergenceVerdict)> {
    if t.re <= 0.0 {
        return Err(Error::NotInRightHalfPlane);
    }
    if s.is_empty() {
        return Err(Error::EmptyInput("series blocks"));
    }
    let terms: Vec<(WeightedDegree, Complex64)> = s
        .active_blocks()
        .iter()
        .map(|(rho, q)| {
            let a = q.evaluate(z) * (-rho.approx * t).exp();
            (rho.clone(), a)
        })
        .collect();
    let mut partial = Vec::with_capacity(terms.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (_, a) in &terms {
        acc += a;
        partial.push(acc);
    }
    let verdict = root_test(&terms, None, None)?;
    Ok((partial, verdict))
}

/// Per-point convergence-region estimate.  `values` carries the tail-window
/// max of |q_m(z)|^{1/rho_m} (or a Psi/Green-based value for the domain
/// estimators); `inside` is the sublevel flag and `ball_radius` the capacity
/// ball when one was computed.  `truncation` reports how many blocks fed
/// the estimate so truncation bias can be assessed.
#[derive(Debug, Clone)]
pub struct RegionEstimate {
    pub grid: Vec<Vec<Complex64>>,
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
    pub ball_radius: Option<f64>,
    pub truncation: usize,
}

/// Tail-window estimate of limsup |q_m(z)|^{1/rho_m} on a grid; inside
/// means value < 1 - delta.  Needs at least 4 blocks so the tail window
/// (the trailing half) is nonempty and clear of leading transients.
pub fn convergence_region(s: &FormalSeries, grid: &[Vec<Complex64>]) -> Result<RegionEstimate> {
    let blocks = s.active_blocks();
    if blocks.len() < 4 {
        return Err(Error::TooFewBlocks {
            need: 4,
            got: blocks.len(),
        });
    }
    let tail = &blocks[blocks.len() / 2..];
    let mut values = Vec::with_capacity(grid.len());
    let mut inside = Vec::with_capacity(grid.len());
    for z in grid {
        let mut v = 0.0f64;
        for (rho, q) in tail {
            if rho.approx <= 0.0 {
                continue;
            }
            v = v.max(q.evaluate(z).norm().powf(1.0 / rho.approx));
        }
        values.push(v);
        inside.push(v < 1.0 - REGION_DELTA);
    }
    Ok(RegionEstimate {
        grid: grid.to_vec(),
        values,
        inside,
        ball_radius: None,
        truncation: tail.len(),
    })
}

const CAPACITY_GRID: usize = 60;

/// Radius of the guaranteed convergence ball: the capacity estimate of the
/// suspension of F, raised to max(lambda), clamped into (0, 1].
pub fn omega_from_capacity(
    f: &SampledSet,
    lambda: &Lambda,
    rho_cap: &WeightedDegree,
) -> Result<f64> {
    let susp = Suspension::new(lambda.clone(), f.clone())?;
    let leaves = susp.leaf_set();
    let grid = SampledSet::from_points(lambda.n, sphere_points(lambda.n, CAPACITY_GRID))?;
    let est = capacity(&leaves, lambda, &grid, rho_cap)?;
    Ok(est.rho_lambda.powf(lambda.max_approx()).min(1.0))
}

/// Sadullaev-type region estimate: at z != 0 set
/// z_lambda = (z_i ||z||^{-lambda_i/max}), and
/// value = ||z||^{min/max} * green(suspension, z_lambda)^{1/min};
/// inside means value < 1 - delta.
pub fn omega_prime(
    f: &SampledSet,
    lambda: &Lambda,
    grid: &[Vec<Complex64>],
    degree_cap: u32,
) -> Result<RegionEstimate> {
    let susp = Suspension::new(lambda.clone(), f.clone())?;
    let leaves = susp.leaf_set();
    let lmin = lambda.min_approx();
    let lmax = lambda.max_approx();
    let entries = lambda.approx_entries();
    let mut values = Vec::with_capacity(grid.len());
    let mut inside = Vec::with_capacity(grid.len());
    for z in grid {
        let nz = crate::suspension::norm(z);
        if nz == 0.0 {
            return Err(Error::ZeroGridPoint);
        }
        let z_lambda: Vec<Complex64> = z
            .iter()
            .zip(&entries)
            .map(|(zi, &li)| zi * nz.powf(-li / lmax))
            .collect();
        let green = green_estimate(&leaves, &z_lambda, degree_cap)?.value;
        let v = nz.powf(lmin / lmax) * green.powf(1.0 / lmin);
        values.push(v);
        inside.push(v < 1.0 - REGION_DELTA);
    }
    Ok(RegionEstimate {
        grid: grid.to_vec(),
        values,
        inside,
        ball_radius: None,
        truncation: degree_cap as usize,
    })
}

/// Sublevel region {Psi-estimate over base union extra < 1} on a grid.
/// Sampled points of the union sit exactly on the level 1, so membership is
/// taken with the + delta guard.
pub fn omega_hat(
    base: &SampledSet,
    extra: &SampledSet,
    lambda: &Lambda,
    grid: &[Vec<Complex64>],
    rho_cap: &WeightedDegree,
) -> Result<RegionEstimate> {
    if base.n != lambda.n || (!extra.is_empty() && extra.n != lambda.n) {
        return Err(Error::DimensionMismatch {
            expected: lambda.n,
            got: if base.n != lambda.n { base.n } else { extra.n },
        });
    }
    let mut points = base.points.clone();
    points.extend(extra.points.iter().cloned());
    let union = SampledSet::from_points(lambda.n, points)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut inside = Vec::with_capacity(grid.len());
    for z in grid {
        let v = psi_estimate(&union, lambda, z, rho_cap)?.value;
        values.push(v);
        inside.push(v < 1.0 + REGION_DELTA);
    }
    Ok(RegionEstimate {
        grid: grid.to_vec(),
        values,
        inside,
        ball_radius: None,
        truncation: 0,
    })
}

/// Outcome of the divergent-series construction.
#[derive(Debug, Clone)]
pub struct DivergentSeries {
    pub series: FormalSeries,
    /// b_k = (a_1/k^{lambda_1}, ..., a_n/k^{lambda_n}) for k = 1..
    pub divergence_points: Vec<Vec<Complex64>>,
    /// Indices n_m into the supplied family, one per block.
    pub selected: Vec<usize>,
}

/// Builds the explicitly divergent series q_m = m^{rho_{n_m}} p_{n_m} /
/// p_{n_m}(a) over a subsequence of the supplied family: index n is
/// accepted for slot m when p_n(a) != 0, sup over K_m of |p_n|^{1/rho_n}
/// is at most 1/m^2, and the degree strictly increases.  Verifies the
/// exact-value identity q_m(b_k) = (m/k)^{rho_{n_m}} on the returned
/// divergence points to 1e-9 relative.
pub fn build_divergent_series(
    p_seq: &[HoloQHPolynomial],
    a: &[Complex64],
    k_family: &[SampledSet],
) -> Result<DivergentSeries> {
    if p_seq.is_empty() {
        return Err(Error::EmptyInput("witness family"));
    }
    if k_family.is_empty() {
        return Err(Error::EmptyInput("K family"));
    }
    let lambda = p_seq[0].lambda().clone();
    if a.len() != lambda.n {
        return Err(Error::DimensionMismatch {
            expected: lambda.n,
            got: a.len(),
        });
    }
    let mut blocks = Vec::new();
    let mut selected = Vec::new();
    let mut last_rho: Option<WeightedDegree> = None;
    let mut next = 0usize;
    let mut worst_bound = 0.0f64;
    let mut m = 1usize;
    while next < p_seq.len() {
        let k_m = &k_family[(m - 1).min(k_family.len() - 1)];
        let mut chosen = None;
        while next < p_seq.len() {
            let p = &p_seq[next];
            next += 1;
            let rho = p.rho().approx;
            if rho <= 0.0 {
                continue;
            }
            if let Some(prev) = &last_rho {
                if p.rho().total_cmp(prev) != std::cmp::Ordering::Greater {
                    continue;
                }
            }
            let pa = p.evaluate(a);
            if pa.norm() < 1e-300 {
                continue;
            }
            let sup = k_m
                .points
                .iter()
                .map(|x| p.evaluate(x).norm())
                .fold(0.0f64, f64::max)
                .powf(1.0 / rho);
            if sup > 1.0 / (m as f64 * m as f64) {
                worst_bound = worst_bound.max(sup);
                continue;
            }
            // q_m = m^{rho} p / p(a); its value at b_k is (m/k)^{rho}.
            let scale = Complex64::new((m as f64).powf(rho), 0.0) / pa;
            let q = HoloQHPolynomial::new(QHComponent {
                poly: p.poly().scale(scale),
                d1: p.rho().clone(),
                d2: lambda.zero_degree(),
                lambda: lambda.clone(),
            })?;
            last_rho = Some(p.rho().clone());
            selected.push(next - 1);
            chosen = Some(q);
            break;
        }
        match chosen {
            Some(q) => blocks.push(q),
            None => break,
        }
        m += 1;
    }
    if blocks.is_empty() {
        return Err(Error::NoValidSubsequence(format!(
            "no family member met p(a) != 0 and sup|p|^(1/rho) <= 1/m^2 \
             (worst sup seen {worst_bound:e})"
        )));
    }
    let series = FormalSeries::new(lambda.clone(), blocks)?;
    let entries = lambda.approx_entries();
    let divergence_points: Vec<Vec<Complex64>> = (1..=10usize)
        .map(|k| {
            a.iter()
                .zip(&entries)
                .map(|(ai, &li)| ai / (k as f64).powf(li))
                .collect()
        })
        .collect();
    for (midx, (rho, q)) in series.blocks.iter().enumerate() {
        let m = midx + 1;
        for (kidx, b) in divergence_points.iter().enumerate() {
            let k = kidx + 1;
            let want = (m as f64 / k as f64).powf(rho.approx);
            let got = q.evaluate(b).norm();
            if (got - want).abs() > 1e-9 * want.max(1.0) {
                return Err(Error::NoValidSubsequence(format!(
                    "identity q_m(b_k) = (m/k)^rho failed at m={m} k={k}: \
                     got {got:e}, want {want:e}"
                )));
            }
        }
    }
    Ok(DivergentSeries {
        series,
        divergence_points,
        selected,
    })
}

/// Canonical built-in witness family for lambda = (1,1): p_m = (z1 - z2)^m
/// with base point a = (1, 0) and K_m sampled from the diagonal circle
/// {(e^{i theta}/sqrt 2, e^{i theta}/sqrt 2)}, on which every p_m vanishes
/// identically.
pub fn builtin_divergent_family(
    count: usize,
) -> Result<(Vec<HoloQHPolynomial>, Vec<Complex64>, Vec<SampledSet>)> {
    if count == 0 {
        return Err(Error::EmptyInput("family size"));
    }
    let lambda = Lambda::integer(&[1, 1])?;
    let mut family = Vec::with_capacity(count);
    for m in 1..=count as u32 {
        // (z1 - z2)^m expanded; binomials up to C(64,32) stay exact in f64.
        let mut poly = MixedPolynomial::zero(2);
        let mut binom = 1.0f64;
        for j in 0..=m {
            let sign = if (m - j) % 2 == 0 { 1.0 } else { -1.0 };
            poly.add_term(
                MultiIndex(vec![j, m - j]),
                MultiIndex::zero(2),
                Complex64::new(sign * binom, 0.0),
            );
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
        family.push(HoloQHPolynomial::new(QHComponent {
            poly,
            d1: lambda.degree_from_rational(m as i64, 1),
            d2: lambda.zero_degree(),
            lambda: lambda.clone(),
        })?);
    }
    let a = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let diag: Vec<Vec<Complex64>> = (0..16)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
            let w = Complex64::from_polar(s, th);
            vec![w, w]
        })
        .collect();
    let k_m = SampledSet::from_points(2, diag)?;
    Ok((family, a, vec![k_m]))
}
