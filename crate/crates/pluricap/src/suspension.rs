//! Sample-based sets on the unit sphere, suspensions along the flow,
//! direction sets with branch cuts, vanishing systems for sparseness
//! classification, and the holomorphic-type obstruction on Taylor jets.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qhpoly::{MixedPolynomial, TaylorJet};
use crate::weights::{enumerate_rho, is_z_dependent, DependenceVerdict, Lambda, MultiIndex, Relation, WeightedDegree};

pub const SPHERE_TOL: f64 = 1e-10;
pub const ZERO_COORD_TOL: f64 = 1e-12;
pub const NULLSPACE_REL_TOL: f64 = 1e-8;
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-8;

/// Parametrized coordinate function on a circle family.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum CircleFn {
    /// theta -> e^{i * freq * theta}
    Exp { freq: i64 },
    /// theta -> cos(theta)
    Cos,
    /// theta -> sin(theta)
    Sin,
    /// theta -> 1
    One,
}

impl CircleFn {
    fn eval(&self, theta: f64) -> Complex64 {
        match self {
            CircleFn::Exp { freq } => Complex64::from_polar(1.0, *freq as f64 * theta),
            CircleFn::Cos => Complex64::new(theta.cos(), 0.0),
            CircleFn::Sin => Complex64::new(theta.sin(), 0.0),
            CircleFn::One => Complex64::new(1.0, 0.0),
        }
    }
}

/// One coordinate of a circle family: scale * g(theta).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CircleCoord {
    pub scale_re: f64,
    pub scale_im: f64,
    #[serde(flatten)]
    pub f: CircleFn,
}

impl CircleCoord {
    pub fn scale(&self) -> Complex64 {
        Complex64::new(self.scale_re, self.scale_im)
    }
}

/// Symbolic generator of a sampled set.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetDescriptor {
    Explicit,
    /// theta in [0, 2pi) -> (scale_1 g_1(theta), ..., scale_n g_n(theta)).
    CircleFamily { coords: Vec<CircleCoord> },
    /// Sphere points whose listed coordinates are constrained to R.
    RealSlice { n: usize, real_coords: Vec<usize> },
    Union { parts: Vec<SetDescriptor> },
    /// Cartesian product scaled back to the sphere by the given weights.
    Product { parts: Vec<SetDescriptor>, weights: Vec<f64> },
}

/// Finite point sample of a set F, optionally on the unit sphere.
#[derive(Debug, Clone)]
pub struct SampledSet {
    pub n: usize,
    pub points: Vec<Vec<Complex64>>,
    pub descriptor: Option<SetDescriptor>,
    pub on_sphere: bool,
    pub sphere_tol: f64,
}

impl SampledSet {
    pub fn from_points(n: usize, points: Vec<Vec<Complex64>>) -> Result<Self> {
        for p in &points {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
        }
        Ok(SampledSet {
            n,
            points,
            descriptor: None,
            on_sphere: false,
            sphere_tol: SPHERE_TOL,
        })
    }

    /// Flags the set as on-sphere, checking every point against the tolerance.
    pub fn assert_on_sphere(mut self) -> Result<Self> {
        for p in &self.points {
            let norm = norm(p);
            if (norm - 1.0).abs() > self.sphere_tol {
                return Err(Error::InvalidInput(format!(
                    "point off the unit sphere by {:e}",
                    (norm - 1.0).abs()
                )));
            }
        }
        self.on_sphere = true;
        Ok(self)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Samples a descriptor deterministically. `count` is a target; circle
    /// families use exactly `count` equispaced angles.
    pub fn sample(descriptor: &SetDescriptor, count: usize, seed: u64) -> Result<Self> {
        let points = sample_descriptor(descriptor, count, seed)?;
        let n = points.first().map(|p| p.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::EmptyInput("descriptor produced no points"));
        }
        let mut set = SampledSet::from_points(n, points)?;
        set.descriptor = Some(descriptor.clone());
        Ok(set)
    }
}

pub fn norm(p: &[Complex64]) -> f64 {
    p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn sample_descriptor(
    descriptor: &SetDescriptor,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<Complex64>>> {
    match descriptor {
        SetDescriptor::Explicit => Err(Error::InvalidInput(
            "explicit descriptor carries no generator; supply points directly".into(),
        )),
        SetDescriptor::CircleFamily { coords } => {
            Ok(circle_family_points(coords, count, 0.0))
        }
        SetDescriptor::RealSlice { n, real_coords } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pts = Vec::with_capacity(count);
            while pts.len() < count {
                let mut p: Vec<Complex64> = (0..*n)
                    .map(|i| {
                        let re: f64 = rng.sample(rand_distr_standard());
                        let im: f64 = if real_coords.contains(&i) {
                            0.0
                        } else {
                            rng.sample(rand_distr_standard())
                        };
                        Complex64::new(re, im)
                    })
                    .collect();
                let nr = norm(&p);
                if nr < 1e-6 {
                    continue;
                }
                for c in &mut p {
                    *c /= nr;
                }
                pts.push(p);
            }
            Ok(pts)
        }
        SetDescriptor::Union { parts } => {
            let mut pts = Vec::new();
            let per = (count / parts.len().max(1)).max(1);
            for (i, part) in parts.iter().enumerate() {
                pts.extend(sample_descriptor(part, per, seed.wrapping_add(i as u64))?);
            }
            Ok(pts)
        }
        SetDescriptor::Product { parts, weights } => {
            if parts.len() != weights.len() {
                return Err(Error::InvalidInput("product weights mismatch".into()));
            }
            let per = (count as f64).powf(1.0 / parts.len() as f64).ceil() as usize;
            let mut factor_points: Vec<Vec<Vec<Complex64>>> = Vec::new();
            for (i, part) in parts.iter().enumerate() {
                factor_points.push(sample_descriptor(part, per, seed.wrapping_add(i as u64))?);
            }
            let mut pts: Vec<Vec<Complex64>> = vec![Vec::new()];
            for (fp, w) in factor_points.iter().zip(weights) {
                let mut next = Vec::new();
                for base in &pts {
                    for f in fp {
                        let mut p = base.clone();
                        p.extend(f.iter().map(|c| c * w));
                        next.push(p);
                    }
                }
                pts = next;
            }
            pts.truncate(count.max(1));
            Ok(pts)
        }
    }
}

fn rand_distr_standard() -> rand::distributions::Uniform<f64> {
    rand::distributions::Uniform::new(-1.0, 1.0)
}

/// Points of a circle family at `count` equispaced angles offset by `phase0`.
pub fn circle_family_points(
    coords: &[CircleCoord],
    count: usize,
    phase0: f64,
) -> Vec<Vec<Complex64>> {
    (0..count)
        .map(|j| {
            let theta = phase0 + 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            coords.iter().map(|c| c.scale() * c.f.eval(theta)).collect()
        })
        .collect()
}

/// Default leaf-sampling grid over the right half-plane: Re t log-spaced
/// in {2^-4, ..., 2^3}, Im t uniform in [0, 2pi).
pub fn default_t_grid() -> Vec<Complex64> {
    let mut grid = Vec::with_capacity(8 * 16);
    for e in -4..=3 {
        let re = 2.0f64.powi(e);
        for j in 0..16 {
            let im = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
            grid.push(Complex64::new(re, im));
        }
    }
    grid
}

/// Suspension of a sampled generator set: leaf samples are flow images
/// of F over a t-grid in the right half-plane.
#[derive(Debug, Clone)]
pub struct Suspension {
    pub lambda: Lambda,
    pub generator: SampledSet,
    pub t_grid: Vec<Complex64>,
}

impl Suspension {
    pub fn new(lambda: Lambda, generator: SampledSet) -> Result<Self> {
        if generator.n != lambda.n {
            return Err(Error::DimensionMismatch {
                expected: lambda.n,
                got: generator.n,
            });
        }
        Ok(Suspension {
            lambda,
            generator,
            t_grid: default_t_grid(),
        })
    }

    /// Flow images of every generator point over the t-grid.
    pub fn leaf_samples(&self) -> Vec<Vec<Complex64>> {
        let approx = self.lambda.approx_entries();
        let mut out = Vec::with_capacity(self.generator.len() * self.t_grid.len());
        for z in &self.generator.points {
            for &t in &self.t_grid {
                out.push(
                    approx
                        .iter()
                        .zip(z)
                        .map(|(&lk, &zk)| zk * (-lk * t).exp())
                        .collect(),
                );
            }
        }
        out
    }

    /// Leaf samples as a SampledSet (not on the sphere).
    pub fn leaf_set(&self) -> SampledSet {
        SampledSet {
            n: self.lambda.n,
            points: self.leaf_samples(),
            descriptor: None,
            on_sphere: false,
            sphere_tol: SPHERE_TOL,
        }
    }
}

/// Direction-set images under the two logarithm branches, with provenance.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    pub branch1: Vec<Vec<Complex64>>,
    pub branch2: Vec<Vec<Complex64>>,
    /// (source index in F.points, branch used) for each emitted point,
    /// branch1 entries first.
    pub provenance: Vec<(usize, u8)>,
}

/// Principal logarithm, cut on the nonpositive reals.
fn log_branch1(z: Complex64) -> Complex64 {
    Complex64::new(z.norm().ln(), z.arg())
}

/// Logarithm with argument in (0, 2pi), cut on the nonnegative reals.
fn log_branch2(z: Complex64) -> Complex64 {
    let mut arg = z.arg();
    if arg <= 0.0 {
        arg += 2.0 * std::f64::consts::PI;
    }
    Complex64::new(z.norm().ln(), arg)
}

fn on_cut1(z: Complex64) -> bool {
    z.im.abs() <= ZERO_COORD_TOL && z.re <= 0.0
}

fn on_cut2(z: Complex64) -> bool {
    z.im.abs() <= ZERO_COORD_TOL && z.re >= 0.0
}

/// Lambda-direction set of F: (z_2/z_1^{lambda_2}, ..., z_n/z_1^{lambda_n})
/// under each logarithm branch, omitting points with z_1 = 0 or z_1 on the cut.
pub fn direction_set(f: &SampledSet, lambda: &Lambda) -> Result<DirectionSet> {
    if lambda.n < 2 || f.n < 2 {
        return Err(Error::DirectionSetDimension);
    }
    if f.n != lambda.n {
        return Err(Error::DimensionMismatch {
            expected: lambda.n,
            got: f.n,
        });
    }
    let approx = lambda.approx_entries();
    let mut branch1 = Vec::new();
    let mut branch2 = Vec::new();
    let mut prov1 = Vec::new();
    let mut prov2 = Vec::new();
    for (idx, p) in f.points.iter().enumerate() {
        let z1 = p[0];
        if z1.norm() <= ZERO_COORD_TOL {
            continue;
        }
        if !on_cut1(z1) {
            let lg = log_branch1(z1);
            branch1.push(project(p, &approx, lg));
            prov1.push((idx, 1u8));
        }
        if !on_cut2(z1) {
            let lg = log_branch2(z1);
            branch2.push(project(p, &approx, lg));
            prov2.push((idx, 2u8));
        }
    }
    let mut provenance = prov1;
    provenance.extend(prov2);
    Ok(DirectionSet {
        branch1,
        branch2,
        provenance,
    })
}

fn project(p: &[Complex64], approx: &[f64], log_z1: Complex64) -> Vec<Complex64> {
    (1..p.len())
        .map(|k| p[k] * (-approx[k] * log_z1).exp())
        .collect()
}

/// Linear system q(z) = 0 over the monomial basis of a fixed bidegree.
#[derive(Debug, Clone)]
pub struct VanishingSystem {
    pub lambda: Lambda,
    pub d1: WeightedDegree,
    pub d2: WeightedDegree,
    /// Complete monomial basis (k, m) with (lambda,k)=d1, (lambda,m)=d2.
    pub basis: Vec<(MultiIndex, MultiIndex)>,
    pub singular_values: Vec<f64>,
    /// Orthonormal coefficient vectors spanning the numeric nullspace.
    pub nullspace: Vec<Vec<Complex64>>,
}

impl VanishingSystem {
    pub fn nullspace_dim(&self) -> usize {
        self.nullspace.len()
    }

    /// Mixed polynomial built from a nullspace coefficient vector.
    pub fn witness_poly(&self, coeffs: &[Complex64]) -> MixedPolynomial {
        let n = self.lambda.n;
        let mut p = MixedPolynomial::zero(n);
        for ((k, m), &c) in self.basis.iter().zip(coeffs) {
            if c.norm() > 0.0 {
                p.add_term(k.clone(), m.clone(), c);
            }
        }
        p
    }
}

/// Monomial pairs (k, m) with (lambda,k) = d1 and (lambda,m) = d2 exactly.
pub fn bidegree_basis(
    lambda: &Lambda,
    d1: &WeightedDegree,
    d2: &WeightedDegree,
) -> Result<Vec<(MultiIndex, MultiIndex)>> {
    let ks = enumerate_rho(lambda, d1)?
        .find(d1)
        .map(|e| e.multiindices.clone())
        .unwrap_or_default();
    let ms = enumerate_rho(lambda, d2)?
        .find(d2)
        .map(|e| e.multiindices.clone())
        .unwrap_or_default();
    let mut basis = Vec::with_capacity(ks.len() * ms.len());
    for k in &ks {
        for m in &ms {
            basis.push((k.clone(), m.clone()));
        }
    }
    Ok(basis)
}

/// Assemble and solve the vanishing system for one bidegree via SVD;
/// singular values at or below 1e-8 times the largest are declared null.
pub fn vanishing_system(
    f: &SampledSet,
    lambda: &Lambda,
    d1: &WeightedDegree,
    d2: &WeightedDegree,
) -> Result<VanishingSystem> {
    if d2.is_zero() {
        return Err(Error::InvalidInput("vanishing system requires d2 != 0".into()));
    }
    if f.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    let basis = bidegree_basis(lambda, d1, d2)?;
    if basis.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty monomial basis for bidegree ({}, {})",
            d1.approx, d2.approx
        )));
    }
    let cols = basis.len();
    // Pad with zero rows so the SVD returns the complete right singular basis.
    let rows = f.len().max(cols);
    let mut a = DMatrix::<Complex64>::zeros(rows, cols);
    for (i, p) in f.points.iter().enumerate() {
        for (j, (k, m)) in basis.iter().enumerate() {
            a[(i, j)] = eval_monomial(p, k, m);
        }
    }
    let svd = a.svd(false, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let v_t = svd.v_t.expect("requested V^T");
    let mut nullspace = Vec::new();
    for (j, &s) in sv.iter().enumerate() {
        if s <= NULLSPACE_REL_TOL * smax || smax == 0.0 {
            // Row j of V^H conjugated is the right singular vector.
            let vec: Vec<Complex64> = (0..cols).map(|c| v_t[(j, c)].conj()).collect();
            nullspace.push(vec);
        }
    }
    Ok(VanishingSystem {
        lambda: lambda.clone(),
        d1: d1.clone(),
        d2: d2.clone(),
        basis,
        singular_values: sv,
        nullspace,
    })
}

fn eval_monomial(p: &[Complex64], k: &MultiIndex, m: &MultiIndex) -> Complex64 {
    let mut t = Complex64::new(1.0, 0.0);
    for i in 0..p.len() {
        for _ in 0..k.0[i] {
            t *= p[i];
        }
        for _ in 0..m.0[i] {
            t *= p[i].conj();
        }
    }
    t
}

/// Per-bidegree record of a sparseness scan.
#[derive(Debug, Clone)]
pub struct BidegreeRecord {
    pub d1: WeightedDegree,
    pub d2: WeightedDegree,
    pub basis_size: usize,
    pub nullspace_dim: usize,
    pub witness: Option<MixedPolynomial>,
    /// Max |q| over F.points for the witness, if any.
    pub residual: Option<f64>,
    /// Max |q| over descriptor re-verification samples, if available.
    pub reverified_residual: Option<f64>,
}

/// Bounded verdict of a sparseness scan.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanVerdict {
    /// Some witness vanishes on the samples below tolerance. Not a proof of
    /// sparseness of the closure, only a candidate obstruction.
    SparseCandidate,
    /// No obstruction found up to the cap. Explicitly not a proof of
    /// nonsparseness.
    NoObstructionUpToCap,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub cap: WeightedDegree,
    pub records: Vec<BidegreeRecord>,
    pub verdict: ScanVerdict,
}

impl ScanReport {
    /// The first record carrying a witness below tolerance, if any.
    pub fn best_witness(&self) -> Option<&BidegreeRecord> {
        self.records
            .iter()
            .filter(|r| r.witness.is_some() && r.residual.map_or(false, |x| x < WITNESS_RESIDUAL_TOL))
            .min_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
    }
}

pub fn max_abs_on(points: &[Vec<Complex64>], q: &MixedPolynomial) -> f64 {
    points
        .iter()
        .map(|p| q.evaluate(p).norm())
        .fold(0.0f64, f64::max)
}

/// Deterministic re-verification samples from a symbolic descriptor:
/// rational angle parameters p/64 for circle families, a fixed-seed redraw
/// for real slices.
fn reverification_points(descriptor: &SetDescriptor) -> Option<Vec<Vec<Complex64>>> {
    match descriptor {
        SetDescriptor::CircleFamily { coords } => {
            let mut pts = Vec::new();
            for q in [64usize, 63, 61] {
                for p in 0..q {
                    let theta = 2.0 * std::f64::consts::PI * p as f64 / q as f64;
                    pts.push(coords.iter().map(|c| c.scale() * c.f.eval(theta)).collect());
                }
            }
            Some(pts)
        }
        SetDescriptor::RealSlice { .. } => {
            sample_descriptor(descriptor, 512, 0xA5A5_5A5A).ok()
        }
        SetDescriptor::Union { parts } => {
            let mut pts = Vec::new();
            for p in parts {
                pts.extend(reverification_points(p)?);
            }
            Some(pts)
        }
        _ => None,
    }
}

/// Scan all bidegrees (d1, d2), d2 != 0, with d1 + d2 <= cap for
/// quasi-homogeneous polynomials vanishing on the samples.
pub fn sparseness_scan(f: &SampledSet, lambda: &Lambda, cap: &WeightedDegree) -> Result<ScanReport> {
    if f.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    let seq = enumerate_rho(lambda, cap)?;
    let reverify = f.descriptor.as_ref().and_then(reverification_points);
    let mut records = Vec::new();
    for e1 in &seq.entries {
        for e2 in &seq.entries {
            if e2.rho.is_zero() {
                continue;
            }
            let total = e1.rho.add(&e2.rho);
            if total.total_cmp(cap) == std::cmp::Ordering::Greater {
                continue;
            }
            let sys = vanishing_system(f, lambda, &e1.rho, &e2.rho)?;
            let mut witness = None;
            let mut residual = None;
            let mut reverified_residual = None;
            if sys.nullspace_dim() > 0 {
                // Best nullspace vector by residual over the samples.
                let (best, res) = sys
                    .nullspace
                    .iter()
                    .map(|c| {
                        let q = sys.witness_poly(c);
                        let r = max_abs_on(&f.points, &q);
                        (q, r)
                    })
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                // Unit coefficient norm.
                let nrm = best.coeff_norm_l2();
                let best = if nrm > 0.0 {
                    best.scale(Complex64::new(1.0 / nrm, 0.0))
                } else {
                    best
                };
                let res = if nrm > 0.0 { res / nrm } else { res };
                if let Some(rv) = &reverify {
                    reverified_residual = Some(max_abs_on(rv, &best));
                }
                witness = Some(best);
                residual = Some(res);
            }
            records.push(BidegreeRecord {
                d1: e1.rho.clone(),
                d2: e2.rho.clone(),
                basis_size: sys.basis.len(),
                nullspace_dim: sys.nullspace_dim(),
                witness,
                residual,
                reverified_residual,
            });
        }
    }
    let verdict = if records
        .iter()
        .any(|r| r.residual.map_or(false, |x| x < WITNESS_RESIDUAL_TOL))
    {
        ScanVerdict::SparseCandidate
    } else {
        ScanVerdict::NoObstructionUpToCap
    };
    Ok(ScanReport {
        cap: cap.clone(),
        records,
        verdict,
    })
}

/// The closed-form witness q = Im(z^alpha zbar^beta) from an integer
/// relation; bidegree (gamma, gamma); vanishes on the all-real locus.
pub fn sparse_witness_from_relation(n: usize, relation: &Relation) -> Result<MixedPolynomial> {
    let na = relation.alpha.len();
    let nb = relation.beta.len();
    if na == 0 || nb == 0 {
        return Err(Error::IndependentLambda);
    }
    let mut a_exp = vec![0u32; n];
    let mut b_exp = vec![0u32; n];
    for (j, &idx) in relation.permutation[..na].iter().enumerate() {
        a_exp[idx] = relation.alpha[j];
    }
    for (j, &idx) in relation.permutation[na..na + nb].iter().enumerate() {
        b_exp[idx] = relation.beta[j];
    }
    // Im w = (w - conj w) / 2i with w = z^alpha zbar^beta.
    let half_i = Complex64::new(0.0, 0.5);
    let mut q = MixedPolynomial::zero(n);
    q.add_term(MultiIndex(a_exp.clone()), MultiIndex(b_exp.clone()), -half_i);
    q.add_term(MultiIndex(b_exp), MultiIndex(a_exp), half_i);
    Ok(q)
}

/// Verdict for the independent-weights nonsparseness certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum NonsparseVerdict {
    CertifiedNonsparse,
    NotCertified { zero_coordinate: usize },
}

/// For Z-independent lambda, a point with all coordinates nonzero generates
/// a nonsparse leaf: every bidegree's monomial space is one-dimensional, so
/// vanishing at the point forces the zero polynomial.
pub fn nonsparse_certificate_independent(
    lambda: &Lambda,
    w: &[Complex64],
) -> Result<NonsparseVerdict> {
    if is_z_dependent(lambda) != DependenceVerdict::Independent {
        return Err(Error::DependentLambda);
    }
    if w.len() != lambda.n {
        return Err(Error::DimensionMismatch {
            expected: lambda.n,
            got: w.len(),
        });
    }
    for (i, c) in w.iter().enumerate() {
        if c.norm() <= ZERO_COORD_TOL {
            return Ok(NonsparseVerdict::NotCertified { zero_coordinate: i });
        }
    }
    Ok(NonsparseVerdict::CertifiedNonsparse)
}

/// One (mu, nu != 0) block of a jet, with its vanishing behaviour on F.
#[derive(Debug, Clone)]
pub struct ObstructionBlock {
    pub mu: WeightedDegree,
    pub nu: WeightedDegree,
    pub block: MixedPolynomial,
    pub max_residual_on_f: f64,
    /// Residual below tolerance while carrying nonzero coefficients.
    pub vanishes_on_f_but_not_identically: bool,
}

#[derive(Debug, Clone)]
pub struct ObstructionReport {
    pub blocks: Vec<ObstructionBlock>,
    /// True when the jet has no nu != 0 blocks at all.
    pub formal_holomorphic_type: bool,
}

/// Assemble S^mu_nu for every (mu, nu != 0) present in the jet and evaluate
/// it over F.points.
pub fn forelli_obstruction(
    jet: &TaylorJet,
    f: &SampledSet,
    lambda: &Lambda,
) -> Result<ObstructionReport> {
    // Group jet terms by exact (mu, nu).
    let mut groups: Vec<(WeightedDegree, WeightedDegree, MixedPolynomial)> = Vec::new();
    for (k, m, c) in jet.0.terms() {
        let mu = lambda.degree(k)?;
        let nu = lambda.degree(m)?;
        if nu.is_zero() {
            continue;
        }
        match groups.iter_mut().find(|(a, b, _)| *a == mu && *b == nu) {
            Some((_, _, p)) => p.add_term(k.clone(), m.clone(), c),
            None => {
                let mut p = MixedPolynomial::zero(jet.0.n);
                p.add_term(k.clone(), m.clone(), c);
                groups.push((mu, nu, p));
            }
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));
    let blocks: Vec<ObstructionBlock> = groups
        .into_iter()
        .map(|(mu, nu, block)| {
            let res = max_abs_on(&f.points, &block);
            let vanishes = res < WITNESS_RESIDUAL_TOL && !block.is_zero();
            ObstructionBlock {
                mu,
                nu,
                block,
                max_residual_on_f: res,
                vanishes_on_f_but_not_identically: vanishes,
            }
        })
        .collect();
    Ok(ObstructionReport {
        formal_holomorphic_type: blocks.is_empty(),
        blocks,
    })
}

/// Checks closure of the samples under the imaginary-axis flow within
/// tolerance: for a few rotation times, each flow image must be near some
/// sample point.
pub fn check_lambda_circular(set: &SampledSet, lambda: &Lambda, tol: f64) -> bool {
    if set.is_empty() {
        return true;
    }
    let approx = lambda.approx_entries();
    let probes = 4usize;
    for j in 1..=probes {
        let tau = 2.0 * std::f64::consts::PI * j as f64 / (probes as f64 + 1.0);
        for p in &set.points {
            let img: Vec<Complex64> = approx
                .iter()
                .zip(p)
                .map(|(&lk, &zk)| zk * Complex64::new(0.0, -lk * tau).exp())
                .collect();
            let nearest = set
                .points
                .iter()
                .map(|q| {
                    img.iter()
                        .zip(q)
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            if nearest > tol {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Built-in deterministic grids.
// ---------------------------------------------------------------------------

/// Deterministic sample of the unit sphere S^{2n-1}. For n = 2 a structured
/// Hopf-style grid (closed under diagonal rotation up to grid spacing);
/// seeded Gaussian directions otherwise.
pub fn sphere_points(n: usize, count: usize) -> Vec<Vec<Complex64>> {
    if n == 1 {
        return (0..count)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
                vec![Complex64::from_polar(1.0, th)]
            })
            .collect();
    }
    if n == 2 {
        // (e^{i a} cos eta, e^{i b} sin eta) over a grid in (a, b, eta).
        let bands = ((count as f64) / 16.0).cbrt().ceil().max(2.0) as usize + 1;
        let per_angle = ((count as f64 / bands as f64).sqrt().ceil() as usize).max(2);
        let mut pts = Vec::new();
        for bi in 0..bands {
            let eta = std::f64::consts::FRAC_PI_2 * (bi as f64 + 0.5) / bands as f64;
            let (c, s) = (eta.cos(), eta.sin());
            for ai in 0..per_angle {
                let a = 2.0 * std::f64::consts::PI * ai as f64 / per_angle as f64;
                for bj in 0..per_angle {
                    let b = 2.0 * std::f64::consts::PI * bj as f64 / per_angle as f64;
                    pts.push(vec![
                        Complex64::from_polar(c, a),
                        Complex64::from_polar(s, b),
                    ]);
                }
            }
        }
        // Poles of the eta range.
        pts.push(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        pts.push(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        return pts;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let normal = rand_distr_normal();
    (0..count)
        .map(|_| {
            loop {
                let p: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rng.sample(normal), rng.sample(normal)))
                    .collect();
                let nr = norm(&p);
                if nr > 1e-6 {
                    return p.into_iter().map(|c| c / nr).collect();
                }
            }
        })
        .collect()
}

fn rand_distr_normal() -> rand::distributions::Uniform<f64> {
    // Uniform cube directions normalized to the sphere are adequate for
    // the deterministic builtin grids.
    rand::distributions::Uniform::new(-1.0, 1.0)
}

/// Deterministic closed-ball sample: an on-sphere shell (the sphere grid)
/// plus interior shells of decreasing radius.
pub fn ball_points(n: usize, count: usize) -> Vec<Vec<Complex64>> {
    let shell = sphere_points(n, count * 2 / 5);
    let mut pts = shell.clone();
    let interior = count.saturating_sub(pts.len());
    let shells = 4usize;
    let per = (interior / shells).max(1);
    for s in 0..shells {
        let r = 1.0 - (s as f64 + 1.0) / (shells as f64 + 1.0);
        for p in sphere_points(n, per).into_iter().take(per) {
            pts.push(p.into_iter().map(|c| c * r).collect());
        }
    }
    pts
}

/// Equispaced points on the segment [-1, 1] of the real line in C.
pub fn line_points(count: usize) -> Vec<Vec<Complex64>> {
    (0..count)
        .map(|j| {
            let x = -1.0 + 2.0 * j as f64 / (count.max(2) - 1) as f64;
            vec![Complex64::new(x, 0.0)]
        })
        .collect()
}

/// Torus {(e^{i a}/sqrt 2, e^{i b}/sqrt 2)} sampled on a k x k angle grid.
pub fn torus_points(k: usize) -> Vec<Vec<Complex64>> {
    let s = 1.0 / 2.0f64.sqrt();
    let mut pts = Vec::with_capacity(k * k);
    for ai in 0..k {
        let a = 2.0 * std::f64::consts::PI * ai as f64 / k as f64;
        for bi in 0..k {
            let b = 2.0 * std::f64::consts::PI * bi as f64 / k as f64;
            pts.push(vec![Complex64::from_polar(s, a), Complex64::from_polar(s, b)]);
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::IrrationalBasis;
    use approx::assert_abs_diff_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn circle_fn(freq: i64, scale: f64) -> CircleCoord {
        CircleCoord {
            scale_re: scale,
            scale_im: 0.0,
            f: CircleFn::Exp { freq },
        }
    }

    /// F_n = {(e^{i theta}/sqrt 2, e^{i n theta}/sqrt 2)}.
    fn f_n_descriptor(n: i64) -> SetDescriptor {
        let s = 1.0 / 2.0f64.sqrt();
        SetDescriptor::CircleFamily {
            coords: vec![circle_fn(1, s), circle_fn(n, s)],
        }
    }

    #[test]
    fn direction_set_circle_family() {
        // lambda_m = (1, m): direction set {(sqrt 2)^{m-1} e^{i(n-m)theta}},
        // a single point when m = n.
        for (m, n) in [(2i64, 2i64), (2, 3), (1, 3)] {
            let f = SampledSet::sample(&f_n_descriptor(n), 64, 0).unwrap();
            let l = Lambda::integer(&[1, m]).unwrap();
            let ds = direction_set(&f, &l).unwrap();
            let r_expect = 2.0f64.sqrt().powi((m - 1) as i32);
            for p in ds.branch1.iter().chain(&ds.branch2) {
                assert_abs_diff_eq!(p[0].norm(), r_expect, epsilon = 1e-10);
            }
            // Distinct direction values: one when m = n, many otherwise.
            let mut vals: Vec<(i64, i64)> = ds
                .branch1
                .iter()
                .map(|p| ((p[0].re * 1e8).round() as i64, (p[0].im * 1e8).round() as i64))
                .collect();
            vals.sort();
            vals.dedup();
            if m == n {
                assert_eq!(vals.len(), 1);
            } else {
                assert!(vals.len() > 8);
            }
        }
    }

    #[test]
    fn direction_set_basis_point() {
        let f = SampledSet::from_points(2, vec![vec![c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let ds = direction_set(&f, &l).unwrap();
        // z1 = 1 is on the branch-2 cut; only branch 1 emits.
        assert_eq!(ds.branch1.len(), 1);
        assert_eq!(ds.branch2.len(), 0);
        assert_abs_diff_eq!(ds.branch1[0][0].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn direction_set_excludes_zero_first_coordinate() {
        let f = SampledSet::from_points(2, vec![vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let ds = direction_set(&f, &l).unwrap();
        assert!(ds.branch1.is_empty() && ds.branch2.is_empty());
    }

    #[test]
    fn direction_set_dimension_one_rejected() {
        let f = SampledSet::from_points(1, vec![vec![c(1.0, 0.0)]]).unwrap();
        let l = Lambda::integer(&[1]).unwrap();
        assert!(matches!(direction_set(&f, &l), Err(Error::DirectionSetDimension)));
    }

    #[test]
    fn branch_consistency_for_integer_weights() {
        // Off both cuts, integer weights: branches agree.
        let l = Lambda::integer(&[1, 3]).unwrap();
        let pts: Vec<Vec<Complex64>> = (0..32)
            .map(|j| {
                let th = 0.1 + (std::f64::consts::PI - 0.2) * j as f64 / 31.0;
                vec![Complex64::from_polar(0.8, th), c(0.5, -0.2)]
            })
            .collect();
        let f = SampledSet::from_points(2, pts).unwrap();
        let ds = direction_set(&f, &l).unwrap();
        assert_eq!(ds.branch1.len(), ds.branch2.len());
        for (a, b) in ds.branch1.iter().zip(&ds.branch2) {
            assert_abs_diff_eq!((a[0] - b[0]).norm(), 0.0, epsilon = 1e-9);
        }
    }

    fn real_slice_c3() -> SetDescriptor {
        // Example family: S^5 points with Im z1 = Im z2 = 0.
        SetDescriptor::RealSlice {
            n: 3,
            real_coords: vec![0, 1],
        }
    }

    fn lambda_12_tau() -> Lambda {
        // lambda = (1, 2, tau3) with tau3 declared irrational.
        let tau = IrrationalBasis {
            name: "tau3".into(),
            approx: 2.0f64.sqrt() + 1.0,
        };
        let mut l3 = crate::weights::Exact::zero(1);
        l3.coords[1] = BigRational::from(BigInt::from(1));
        Lambda::new(
            vec![
                crate::weights::Exact::from_rational(1, 1, 1),
                crate::weights::Exact::from_rational(2, 1, 1),
                l3,
            ],
            vec![tau],
        )
        .unwrap()
    }

    #[test]
    fn vanishing_system_example_family() {
        // Real slice of S^5, lambda = (1, 2, tau), bidegree (2, 2): the
        // nullspace contains z1^2 zbar2 - zbar1^2 z2.
        let f = SampledSet::sample(&real_slice_c3(), 200, 17).unwrap();
        let l = lambda_12_tau();
        let d2 = l.degree_from_rational(2, 1);
        let sys = vanishing_system(&f, &l, &d2, &d2).unwrap();
        assert!(sys.nullspace_dim() >= 1);
        // Cosine similarity with the normalized expected witness.
        let mut expect = vec![Complex64::zero(); sys.basis.len()];
        for (j, (k, m)) in sys.basis.iter().enumerate() {
            if *k == mi(&[2, 0, 0]) && *m == mi(&[0, 1, 0]) {
                expect[j] = c(1.0 / 2.0f64.sqrt(), 0.0);
            }
            if *k == mi(&[0, 1, 0]) && *m == mi(&[2, 0, 0]) {
                expect[j] = c(-1.0 / 2.0f64.sqrt(), 0.0);
            }
        }
        let best = sys
            .nullspace
            .iter()
            .map(|v| {
                let dot: Complex64 = v.iter().zip(&expect).map(|(a, b)| a.conj() * b).sum();
                dot.norm()
            })
            .fold(0.0f64, f64::max);
        assert!(best > 1.0 - 1e-8, "cosine similarity {best}");
    }

    #[test]
    fn vanishing_system_dense_sphere_trivial_nullspace() {
        let pts = sphere_points(2, 600);
        let f = SampledSet::from_points(2, pts).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let d1 = l.degree_from_rational(1, 1);
        let sys = vanishing_system(&f, &l, &d1, &d1).unwrap();
        assert_eq!(sys.basis.len(), 4);
        assert_eq!(sys.nullspace_dim(), 0);
    }

    #[test]
    fn vanishing_system_single_point() {
        let f = SampledSet::from_points(2, vec![vec![c(0.6, 0.0), c(0.8, 0.0)]]).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let d1 = l.degree_from_rational(1, 1);
        let sys = vanishing_system(&f, &l, &d1, &d1).unwrap();
        assert_eq!(sys.nullspace_dim(), sys.basis.len() - 1);
    }

    #[test]
    fn sparseness_scan_example_integer_weight() {
        // lambda2 = 2 integer: the scan finds the witness at bidegree (2,2).
        let f = SampledSet::sample(&real_slice_c3(), 200, 23).unwrap();
        let mut l3 = crate::weights::Exact::zero(1);
        l3.coords[1] = BigRational::from(BigInt::from(1));
        let l = lambda_12_tau();
        let cap = l.degree_from_rational(4, 1);
        let report = sparseness_scan(&f, &l, &cap).unwrap();
        assert_eq!(report.verdict, ScanVerdict::SparseCandidate);
        let best = report.best_witness().unwrap();
        assert_eq!(best.d1, l.degree_from_rational(2, 1));
        assert_eq!(best.d2, l.degree_from_rational(2, 1));
        assert!(best.residual.unwrap() < 1e-10);
    }

    #[test]
    fn sparseness_scan_dense_sphere_no_obstruction() {
        let pts = sphere_points(2, 500);
        let f = SampledSet::from_points(2, pts).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(4, 1);
        let report = sparseness_scan(&f, &l, &cap).unwrap();
        assert_eq!(report.verdict, ScanVerdict::NoObstructionUpToCap);
    }

    #[test]
    fn sparse_witness_recipes() {
        use crate::weights::is_z_dependent;
        // lambda=(1,1): q = Im(z1 zbar2), bideg (1,1).
        let l = Lambda::integer(&[1, 1]).unwrap();
        let DependenceVerdict::Dependent(rel) = is_z_dependent(&l) else {
            panic!()
        };
        let q = sparse_witness_from_relation(2, &rel).unwrap();
        assert_eq!(q.num_terms(), 2);
        // Vanishes at real points.
        assert_abs_diff_eq!(q.evaluate(&[c(0.3, 0.0), c(-0.7, 0.0)]).norm(), 0.0, epsilon = 1e-15);
        // Equals Im(z1 zbar2).
        let z = [c(0.3, 0.5), c(-0.2, 0.9)];
        let expect = (z[0] * z[1].conj()).im;
        assert_abs_diff_eq!(q.evaluate(&z).re, expect, epsilon = 1e-14);

        // lambda=(1,2): q = Im(z1^2 zbar2), bideg (2,2).
        let l = Lambda::integer(&[1, 2]).unwrap();
        let DependenceVerdict::Dependent(rel) = is_z_dependent(&l) else {
            panic!()
        };
        let q = sparse_witness_from_relation(2, &rel).unwrap();
        let z = [c(0.4, -0.6), c(0.8, 0.1)];
        let expect = (z[0] * z[0] * z[1].conj()).im;
        assert_abs_diff_eq!(q.evaluate(&z).re, expect, epsilon = 1e-14);
    }

    #[test]
    fn nonsparse_certificate() {
        let l = lambda_one_tau();
        let s = 1.0 / 2.0f64.sqrt();
        assert_eq!(
            nonsparse_certificate_independent(&l, &[c(s, 0.0), c(s, 0.0)]).unwrap(),
            NonsparseVerdict::CertifiedNonsparse
        );
        assert_eq!(
            nonsparse_certificate_independent(&l, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(),
            NonsparseVerdict::NotCertified { zero_coordinate: 1 }
        );
        let dep = Lambda::integer(&[1, 2]).unwrap();
        assert!(matches!(
            nonsparse_certificate_independent(&dep, &[c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::DependentLambda)
        ));
    }

    fn lambda_one_tau() -> Lambda {
        let tau = IrrationalBasis {
            name: "tau".into(),
            approx: std::f64::consts::SQRT_2,
        };
        let mut l2 = crate::weights::Exact::zero(1);
        l2.coords[1] = BigRational::from(BigInt::from(1));
        Lambda::new(
            vec![crate::weights::Exact::from_rational(1, 1, 1), l2],
            vec![tau],
        )
        .unwrap()
    }

    #[test]
    fn obstruction_holomorphic_jet() {
        let l = Lambda::integer(&[1, 1]).unwrap();
        let jet = TaylorJet(MixedPolynomial::holo_monomial(2, mi(&[2, 1]), c(1.0, 0.0)));
        let f = SampledSet::from_points(2, sphere_points(2, 50)).unwrap();
        let rep = forelli_obstruction(&jet, &f, &l).unwrap();
        assert!(rep.formal_holomorphic_type);
    }

    #[test]
    fn obstruction_flags_vanishing_block() {
        // q = z1^2 zbar2 - zbar1^2 z2 against the real slice: block (2,2)
        // vanishes on F with nonzero coefficients.
        let l = lambda_12_tau();
        let f = SampledSet::sample(&real_slice_c3(), 150, 3).unwrap();
        let mut q = MixedPolynomial::zero(3);
        q.add_term(mi(&[2, 0, 0]), mi(&[0, 1, 0]), c(1.0, 0.0));
        q.add_term(mi(&[0, 1, 0]), mi(&[2, 0, 0]), c(-1.0, 0.0));
        let rep = forelli_obstruction(&TaylorJet(q), &f, &l).unwrap();
        assert!(!rep.formal_holomorphic_type);
        assert_eq!(rep.blocks.len(), 1);
        assert!(rep.blocks[0].vanishes_on_f_but_not_identically);
    }

    #[test]
    fn obstruction_reports_nonvanishing_block() {
        let l = Lambda::integer(&[1, 1]).unwrap();
        let jet = TaylorJet(MixedPolynomial::monomial(2, mi(&[1, 0]), mi(&[1, 0]), c(1.0, 0.0)));
        let f = SampledSet::from_points(2, sphere_points(2, 200)).unwrap();
        let rep = forelli_obstruction(&jet, &f, &l).unwrap();
        assert_eq!(rep.blocks.len(), 1);
        assert!(rep.blocks[0].max_residual_on_f > 1e-2);
        assert!(!rep.blocks[0].vanishes_on_f_but_not_identically);
    }

    #[test]
    fn monotonicity_of_nullspace_dimension() {
        // Adding sample points can only shrink the nullspace.
        let l = lambda_12_tau();
        let d2 = l.degree_from_rational(2, 1);
        let all = SampledSet::sample(&real_slice_c3(), 120, 5).unwrap();
        let few = SampledSet::from_points(3, all.points[..20].to_vec()).unwrap();
        let dim_few = vanishing_system(&few, &l, &d2, &d2).unwrap().nullspace_dim();
        let dim_all = vanishing_system(&all, &l, &d2, &d2).unwrap().nullspace_dim();
        assert!(dim_all <= dim_few);
    }

    #[test]
    fn suspension_leaf_samples_are_flow_images() {
        let l = Lambda::integer(&[1, 2]).unwrap();
        let f = SampledSet::from_points(2, vec![vec![c(0.6, 0.0), c(0.8, 0.0)]]).unwrap();
        let susp = Suspension::new(l.clone(), f).unwrap();
        let leaves = susp.leaf_samples();
        assert_eq!(leaves.len(), susp.t_grid.len());
        // Every leaf point has norm below 1 (Re t > 0 contracts).
        for p in &leaves {
            assert!(norm(p) < 1.0);
        }
    }

    #[test]
    fn torus_is_lambda_circular() {
        let l = Lambda::integer(&[1, 1]).unwrap();
        let set = SampledSet::from_points(2, torus_points(24)).unwrap();
        assert!(check_lambda_circular(&set, &l, 0.3));
    }
}
