//! Chebyshev-type convex programs: lower estimates of the weighted extremal
//! function, the pluricomplex Green function, the projective capacity, hull
//! membership, the sandwich inequality, and regularity diagnostics.
//!
//! All estimates are lower bounds of the corresponding suprema up to
//! sampling bias; no upper-bound certification is attempted.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qhpoly::MixedPolynomial;
use crate::suspension::{check_lambda_circular, SampledSet};
use crate::weights::{enumerate_rho, Lambda, MultiIndex, WeightedDegree};

/// Default l1 bound on the (column-scaled) coefficient vector; reaching it
/// flags a degenerate (near-unbounded) program in the diagnostics.
pub const COEFF_BOX: f64 = 1e8;
/// Per-level box base for the extremal sweeps: level rho uses BOX_BASE^rho,
/// so degenerate programs produce values that grow with the cap instead of
/// saturating at a level-independent bound.
pub const BOX_BASE: f64 = 1e6;
const CUT_TOL: f64 = 1e-12;
const PIVOT_EPS: f64 = 1e-11;
const MAX_CUT_ROUNDS: usize = 30;
const MAX_POOL: usize = 220;
const MAX_PIVOTS: usize = 1_500;
/// Consecutive degenerate pivots before switching from Dantzig to Bland.
const DEGENERATE_SWITCH: usize = 60;

#[derive(Debug, Clone)]
pub struct ChebyshevProblem {
    pub target: Vec<Complex64>,
    pub constraints: Vec<Vec<Complex64>>,
    /// Holomorphic monomial basis.
    pub basis: Vec<MultiIndex>,
    pub polygon_order: usize,
    pub phase_count: usize,
    /// l1 bound on the column-scaled coefficient vector.
    pub coeff_box: f64,
}

impl ChebyshevProblem {
    pub fn new(
        target: Vec<Complex64>,
        constraints: Vec<Vec<Complex64>>,
        basis: Vec<MultiIndex>,
    ) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::EmptyInput("monomial basis"));
        }
        if constraints.is_empty() {
            return Err(Error::EmptyInput("constraint samples"));
        }
        Ok(ChebyshevProblem {
            target,
            constraints,
            basis,
            polygon_order: 16,
            phase_count: 32,
            coeff_box: COEFF_BOX,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.basis.is_empty() || self.constraints.is_empty() {
            return Err(Error::EmptyInput("Chebyshev problem"));
        }
        if self.polygon_order < 8 {
            return Err(Error::InvalidInput("polygon order below 8".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimateMode {
    SampleEstimate,
    /// True sup over the set bounded by sampled sup * (1 + grad_bound * mesh).
    CertifiedLower { mesh: f64, grad_bound: f64 },
}

#[derive(Debug, Clone, Default)]
pub struct SolverDiagnostics {
    pub pivots: usize,
    pub lp_solves: usize,
    pub cuts: usize,
    pub status: String,
    /// The coefficient box bound was active at the optimum: the program is
    /// degenerate (nearly unbounded) and values grow with the cap.
    pub box_active: bool,
}

#[derive(Debug, Clone)]
pub struct ExtremalEstimate {
    /// Root-scaled estimate (value^{1/level} of the LP ratio).
    pub value: f64,
    /// LP-level ratio |q(z0)| / sampled sup, before the 1/level root.
    pub raw_ratio: f64,
    /// Witness normalized to sampled sup-norm 1 over the constraints.
    pub witness: MixedPolynomial,
    pub level: f64,
    pub mode: EstimateMode,
    pub diagnostics: SolverDiagnostics,
}

impl ExtremalEstimate {
    fn trivial(n: usize) -> Self {
        ExtremalEstimate {
            value: 0.0,
            raw_ratio: 0.0,
            witness: MixedPolynomial::zero(n),
            level: 1.0,
            mode: EstimateMode::SampleEstimate,
            diagnostics: SolverDiagnostics {
                status: "no-levels".into(),
                ..Default::default()
            },
        }
    }
}

/// Downgrades a sampled estimate to a certified lower bound: the true sup
/// over the set is at most sampled * (1 + G*h) with G a gradient bound from
/// the witness coefficients and h the caller-supplied sample mesh.
pub fn certify_lower(est: &mut ExtremalEstimate, mesh: f64, radius_bound: f64) {
    let mut g = 0.0f64;
    for (k, m, c) in est.witness.terms() {
        let deg = (k.total() + m.total()) as f64;
        if deg > 0.0 {
            g += c.norm() * deg * radius_bound.powf(deg - 1.0);
        }
    }
    let factor = 1.0 + g * mesh;
    est.witness = est.witness.scale(Complex64::new(1.0 / factor, 0.0));
    est.raw_ratio /= factor;
    est.value = if est.level > 0.0 {
        est.raw_ratio.max(0.0).powf(1.0 / est.level)
    } else {
        est.raw_ratio
    };
    est.mode = EstimateMode::CertifiedLower {
        mesh,
        grad_bound: g,
    };
}

// ---------------------------------------------------------------------------
// Dense simplex, Bland's rule.  max c.x  s.t.  A x <= b, x >= 0, b >= 0.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum LpStatus {
    Optimal,
    /// No objective progress over many pivots; current vertex returned.
    Stalled,
    /// Pivot budget exhausted; current vertex returned.
    IterLimit,
    /// Numerically unbounded direction; current vertex returned.  A true
    /// unbounded ray is impossible with the l1 coefficient box in place.
    UnboundedDirection,
}

struct LpResult {
    x: Vec<f64>,
    pivots: usize,
    status: LpStatus,
}

/// max c.x  s.t.  A x <= b, x >= 0, with b >= 0 so the slack basis starts
/// feasible.  Always returns a primal-feasible point; the status reports
/// whether optimality was reached.
fn simplex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpResult {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    // Tableau rows: [A | I | b]; cost row holds negated reduced costs.
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[width - 1] = b[i];
            row
        })
        .collect();
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(c);
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut pivots = 0usize;
    let mut degenerate_run = 0usize;
    let mut bland = false;
    let mut status = LpStatus::Optimal;
    let mut best_obj = 0.0f64;
    let mut stall = 0usize;
    loop {
        // Dantzig rule until degeneracy stalls, then Bland for termination.
        let enter = if bland {
            (0..n + m).find(|&j| cost[j] > 1e-9)
        } else {
            (0..n + m)
                .filter(|&j| cost[j] > 1e-9)
                .max_by(|&a, &b| cost[a].partial_cmp(&cost[b]).unwrap().then(b.cmp(&a)))
        };
        let Some(enter) = enter else {
            break; // optimal
        };
        // Ratio test; ties broken by smallest basis variable (Bland).
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = t[i][enter];
            if aij > PIVOT_EPS {
                let ratio = t[i][width - 1] / aij;
                let better = ratio < best - 1e-12
                    || (ratio < best + 1e-12
                        && leave.map_or(true, |l| basis[i] < basis[l]));
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            status = LpStatus::UnboundedDirection;
            break;
        };
        if best <= 1e-12 {
            degenerate_run += 1;
            if degenerate_run > DEGENERATE_SWITCH {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        // Pivot on (r, enter).
        let piv = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..m {
            if i != r {
                let f = t[i][enter];
                if f != 0.0 {
                    for j in 0..width {
                        t[i][j] -= f * t[r][j];
                    }
                }
            }
        }
        let f = cost[enter];
        if f != 0.0 {
            for j in 0..width {
                cost[j] -= f * t[r][j];
            }
        }
        basis[r] = enter;
        pivots += 1;
        // The cost row's rhs tracks the negated objective.
        let obj = -cost[width - 1];
        if obj > best_obj + 1e-10 * (1.0 + best_obj.abs()) {
            best_obj = obj;
            stall = 0;
        } else {
            stall += 1;
            if stall > 80 {
                status = LpStatus::Stalled;
                break;
            }
        }
        if pivots > MAX_PIVOTS {
            status = LpStatus::IterLimit;
            break;
        }
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][width - 1];
        }
    }
    LpResult { x, pivots, status }
}

// ---------------------------------------------------------------------------
// Cutting-plane Chebyshev solver.
// ---------------------------------------------------------------------------

fn eval_monomials(basis: &[MultiIndex], z: &[Complex64]) -> Vec<Complex64> {
    basis
        .iter()
        .map(|k| {
            let mut t = Complex64::new(1.0, 0.0);
            for (i, &e) in k.0.iter().enumerate() {
                for _ in 0..e {
                    t *= z[i];
                }
            }
            t
        })
        .collect()
}

/// Row of real LP coefficients for Re(e^{i phi} q_c(x)) from the basis
/// values at x; variables ordered (Re c_0, Im c_0, Re c_1, ...).
fn phase_row(gx: &[Complex64], phi: f64) -> Vec<f64> {
    let e = Complex64::from_polar(1.0, phi);
    let mut row = Vec::with_capacity(2 * gx.len());
    for g in gx {
        let w = e * g;
        row.push(w.re);
        row.push(-w.im);
    }
    row
}

fn split_cols(row: &[f64]) -> Vec<f64> {
    // y = u - v with u, v >= 0.
    let mut out = Vec::with_capacity(2 * row.len());
    for &r in row {
        out.push(r);
        out.push(-r);
    }
    out
}

struct ChebySolver<'a> {
    problem: &'a ChebyshevProblem,
    /// Basis values at the target, column-scaled.
    g0: Vec<Complex64>,
    /// Basis values at the constraints, column-scaled so each column has
    /// sampled sup 1 (conditioning; undone when coefficients are read out).
    gx: Vec<Vec<Complex64>>,
    col_scale: Vec<f64>,
    /// Cut pool: (sample index, phase).
    pool: Vec<(usize, f64)>,
    diagnostics: SolverDiagnostics,
}

impl<'a> ChebySolver<'a> {
    fn new(problem: &'a ChebyshevProblem) -> Result<Self> {
        problem.validate()?;
        let mut g0 = eval_monomials(&problem.basis, &problem.target);
        let mut gx: Vec<Vec<Complex64>> = problem
            .constraints
            .iter()
            .map(|x| eval_monomials(&problem.basis, x))
            .collect();
        let nb = problem.basis.len();
        let col_scale: Vec<f64> = (0..nb)
            .map(|b| {
                let sup = gx.iter().map(|row| row[b].norm()).fold(0.0f64, f64::max);
                if sup > 0.0 {
                    1.0 / sup
                } else {
                    1.0
                }
            })
            .collect();
        for row in gx.iter_mut() {
            for (b, v) in row.iter_mut().enumerate() {
                *v *= col_scale[b];
            }
        }
        for (b, v) in g0.iter_mut().enumerate() {
            *v *= col_scale[b];
        }
        let smax = gx
            .iter()
            .flat_map(|r| r.iter())
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        if smax == 0.0 {
            return Err(Error::DegenerateProgram(
                "constraint samples annihilate the entire basis".into(),
            ));
        }
        // Seed cuts: full polygon at the sample of largest row norm.
        let seed = gx
            .iter()
            .enumerate()
            .max_by(|a, b| {
                let na: f64 = a.1.iter().map(|c| c.norm_sqr()).sum();
                let nb: f64 = b.1.iter().map(|c| c.norm_sqr()).sum();
                na.partial_cmp(&nb).unwrap().then(b.0.cmp(&a.0))
            })
            .map(|(i, _)| i)
            .unwrap();
        let p = problem.polygon_order;
        let pool = (0..p)
            .map(|j| (seed, 2.0 * std::f64::consts::PI * j as f64 / p as f64))
            .collect();
        Ok(ChebySolver {
            problem,
            g0,
            gx,
            col_scale,
            pool,
            diagnostics: SolverDiagnostics::default(),
        })
    }

    fn num_real_vars(&self) -> usize {
        2 * self.problem.basis.len()
    }

    fn lp_solve(&mut self, theta: f64) -> Result<Vec<Complex64>> {
        let nv = self.num_real_vars();
        let mut a: Vec<Vec<f64>> = Vec::with_capacity(self.pool.len() + 2 * nv);
        let mut b: Vec<f64> = Vec::with_capacity(self.pool.len() + 2 * nv);
        for &(i, phi) in &self.pool {
            a.push(split_cols(&phase_row(&self.gx[i], phi)));
            b.push(1.0);
        }
        // Single l1 box sum(u_j + v_j) <= COEFF_BOX keeps every program
        // bounded; activity flags a degenerate (near-unbounded) program.
        a.push(vec![1.0; 2 * nv]);
        b.push(self.problem.coeff_box);
        let c = split_cols(&phase_row(&self.g0, theta));
        let res = simplex(&a, &b, &c);
        self.diagnostics.pivots += res.pivots;
        self.diagnostics.lp_solves += 1;
        if res.status != LpStatus::Optimal {
            self.diagnostics.status = format!("{:?}", res.status);
        }
        let mut coeffs = Vec::with_capacity(self.problem.basis.len());
        for bidx in 0..self.problem.basis.len() {
            let re = res.x[4 * bidx] - res.x[4 * bidx + 1];
            let im = res.x[4 * bidx + 2] - res.x[4 * bidx + 3];
            coeffs.push(Complex64::new(re, im));
        }
        Ok(coeffs)
    }

    fn sample_values(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        self.gx
            .iter()
            .map(|row| row.iter().zip(coeffs).map(|(g, c)| g * c).sum())
            .collect()
    }

    fn target_value(&self, coeffs: &[Complex64]) -> Complex64 {
        self.g0.iter().zip(coeffs).map(|(g, c)| g * c).sum()
    }

    fn prune_pool(&mut self, coeffs: &[Complex64]) {
        // A vertex touches at most 2*num_real_vars rows; a modest multiple
        // keeps the tableau small without thrashing recently useful cuts.
        let cap = MAX_POOL.min((6 * self.num_real_vars()).max(48));
        if self.pool.len() <= cap {
            return;
        }
        let vals = self.sample_values(coeffs);
        let mut ranked: Vec<(f64, usize, (usize, f64))> = self
            .pool
            .iter()
            .copied()
            .enumerate()
            .map(|(ord, (i, phi))| {
                let slack = 1.0 - (Complex64::from_polar(1.0, phi) * vals[i]).re;
                (slack, ord, (i, phi))
            })
            .collect();
        ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        ranked.truncate(cap);
        ranked.sort_by_key(|r| r.1);
        self.pool = ranked.into_iter().map(|r| r.2).collect();
    }

    /// Solves at fixed theta, adding supporting-hyperplane cuts for samples
    /// whose modulus exceeds 1 until the polygon relaxation is tight.
    fn cut_converge(&mut self, theta: f64) -> Result<Vec<Complex64>> {
        let mut coeffs = self.lp_solve(theta)?;
        for _ in 0..MAX_CUT_ROUNDS {
            let vals = self.sample_values(&coeffs);
            // Worst violations of |q(x_i)| <= 1.
            let mut violated: Vec<(usize, f64)> = vals
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm() > 1.0 + CUT_TOL)
                .map(|(i, v)| (i, v.norm()))
                .collect();
            if violated.is_empty() {
                break;
            }
            violated.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            for &(i, _) in violated.iter().take(24) {
                let phi = -vals[i].arg();
                if !self
                    .pool
                    .iter()
                    .any(|&(j, p)| j == i && (p - phi).abs() < 1e-12)
                {
                    self.pool.push((i, phi));
                    self.diagnostics.cuts += 1;
                }
            }
            self.prune_pool(&coeffs);
            coeffs = self.lp_solve(theta)?;
        }
        Ok(coeffs)
    }

    /// Estimate |q(z0)| / max(sampled sup, 1) for a coefficient vector.
    /// Dividing by at least 1 keeps the value finite (and a valid lower
    /// bound of the true sup-ratio) when the witness cancels on every
    /// sample, the degenerate-program regime.
    fn value(&self, coeffs: &[Complex64]) -> (f64, f64) {
        let sup = self
            .sample_values(coeffs)
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        let denom = sup.max(1.0);
        (self.target_value(coeffs).norm() / denom, denom)
    }
}

/// Maximizes |q_c(z0)| over coefficient vectors subject to a sampled
/// sup-norm bound on the constraint set.  The modulus constraints are
/// linearized by polygon cuts and refined with supporting hyperplanes until
/// tight; the objective phase is swept and then driven to its fixed point.
/// The returned value is the exact ratio |q(z0)| / sampled sup of the best
/// witness found, and the witness is rescaled to sampled sup-norm 1.
pub fn cheby_maximize(problem: &ChebyshevProblem) -> Result<ExtremalEstimate> {
    let mut solver = ChebySolver::new(problem)?;
    // Phase 1: converge cuts at theta = 0, then sweep phases on the pool.
    let mut best_coeffs = solver.cut_converge(0.0)?;
    let (mut best_value, _) = solver.value(&best_coeffs);
    let mut best_theta = 0.0;
    for j in 1..problem.phase_count {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / problem.phase_count as f64;
        let coeffs = solver.lp_solve(theta)?;
        let (v, _) = solver.value(&coeffs);
        if v > best_value * (1.0 + 1e-15) {
            best_value = v;
            best_coeffs = coeffs;
            best_theta = theta;
        }
    }
    // Phase 2: fixed-point refinement theta <- -arg q(z0) with full cut
    // convergence at each step.
    for _ in 0..10 {
        let tv = solver.target_value(&best_coeffs);
        let theta = if tv.norm() > 0.0 { -tv.arg() } else { best_theta };
        let coeffs = solver.cut_converge(theta)?;
        let (v, _) = solver.value(&coeffs);
        let improved = v > best_value * (1.0 + 1e-14);
        if v > best_value {
            best_value = v;
            best_coeffs = coeffs;
            best_theta = theta;
        }
        if !improved {
            break;
        }
    }
    let (value, denom) = solver.value(&best_coeffs);
    // Degeneracy flag: the winning coefficient vector leaned on the box.
    let l1: f64 = best_coeffs.iter().map(|c| c.norm()).sum();
    if l1 >= 0.1 * problem.coeff_box {
        solver.diagnostics.box_active = true;
    }
    let mut witness = MixedPolynomial::zero(problem.target.len());
    let zero = MultiIndex::zero(problem.target.len());
    for ((k, &c), &sigma) in problem.basis.iter().zip(&best_coeffs).zip(&solver.col_scale) {
        let sc = c * sigma / denom;
        if sc.norm() > 0.0 {
            witness.add_term(k.clone(), zero.clone(), sc);
        }
    }
    let mut diagnostics = solver.diagnostics;
    if diagnostics.status.is_empty() {
        diagnostics.status = "optimal".into();
    }
    Ok(ExtremalEstimate {
        value,
        raw_ratio: value,
        witness,
        level: 1.0,
        mode: EstimateMode::SampleEstimate,
        diagnostics,
    })
}

// ---------------------------------------------------------------------------
// Extremal-function estimates.
// ---------------------------------------------------------------------------

/// Lower estimate of the weighted extremal function at z0: the max over
/// levels rho <= rho_cap of (Chebyshev ratio)^{1/rho} over the holomorphic
/// quasi-homogeneous basis of each level.  The zero level is skipped.
pub fn psi_estimate(
    e: &SampledSet,
    lambda: &Lambda,
    z0: &[Complex64],
    rho_cap: &WeightedDegree,
) -> Result<ExtremalEstimate> {
    if e.is_empty() {
        return Err(Error::EmptyInput("constraint set"));
    }
    if z0.len() != lambda.n {
        return Err(Error::DimensionMismatch {
            expected: lambda.n,
            got: z0.len(),
        });
    }
    let seq = enumerate_rho(lambda, rho_cap)?;
    let mut best: Option<ExtremalEstimate> = None;
    for entry in &seq.entries {
        if entry.rho.is_zero() || entry.multiindices.is_empty() {
            continue;
        }
        let rho = entry.rho.approx;
        let mut problem = ChebyshevProblem::new(
            z0.to_vec(),
            e.points.clone(),
            entry.multiindices.clone(),
        )?;
        problem.coeff_box = BOX_BASE.powf(rho.max(1.0));
        // A coarse sweep suffices here: the fixed-point phase refinement in
        // cheby_maximize recovers the optimal phase from any nearby start.
        problem.phase_count = 12;
        let mut est = cheby_maximize(&problem)?;
        est.level = rho;
        est.value = est.raw_ratio.max(0.0).powf(1.0 / rho);
        let better = match &best {
            None => true,
            // Ties resolve toward the deeper witness (larger LP ratio).
            Some(b) => {
                est.value > b.value + 1e-12
                    || (est.value > b.value - 1e-12 && est.raw_ratio > b.raw_ratio)
            }
        };
        if better {
            best = Some(est);
        }
    }
    Ok(best.unwrap_or_else(|| ExtremalEstimate::trivial(lambda.n)))
}

/// All holomorphic monomials of total degree <= d, lexicographic order.
pub fn monomials_up_to(n: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, left: u32) {
        if pos == cur.len() {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur[pos] = e;
            rec(out, cur, pos + 1, left - e);
        }
        cur[pos] = 0;
    }
    rec(&mut out, &mut cur, 0, d);
    out
}

/// Lower estimate of the pluricomplex Green function exp V_E at z0: the max
/// over degrees d <= degree_cap of (Chebyshev ratio)^{1/d} over the full
/// holomorphic basis of total degree <= d, floored at 1.
pub fn green_estimate(
    e: &SampledSet,
    z0: &[Complex64],
    degree_cap: u32,
) -> Result<ExtremalEstimate> {
    if e.is_empty() {
        return Err(Error::EmptyInput("constraint set"));
    }
    if degree_cap < 1 {
        return Err(Error::InvalidInput("degree cap below 1".into()));
    }
    let n = e.n;
    let mut best: Option<ExtremalEstimate> = None;
    for d in 1..=degree_cap {
        let mut problem =
            ChebyshevProblem::new(z0.to_vec(), e.points.clone(), monomials_up_to(n, d))?;
        problem.coeff_box = BOX_BASE.powi(d as i32);
        problem.phase_count = 12;
        let mut est = cheby_maximize(&problem)?;
        est.level = d as f64;
        est.value = est.raw_ratio.max(0.0).powf(1.0 / d as f64);
        let better = match &best {
            None => true,
            Some(b) => est.value > b.value,
        };
        if better {
            best = Some(est);
        }
    }
    let mut best = best.unwrap_or_else(|| ExtremalEstimate::trivial(n));
    if best.value < 1.0 {
        // The constant witness certifies the definitional floor.
        best.value = 1.0;
        best.raw_ratio = 1.0;
        best.level = 1.0;
        best.witness = MixedPolynomial::holo_monomial(n, MultiIndex::zero(n), Complex64::new(1.0, 0.0));
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct CapacityEstimate {
    pub rho_lambda: f64,
    pub psi_sup: f64,
    pub grid_size: usize,
    pub argmax_index: usize,
    pub argmax_point: Vec<Complex64>,
    pub rho_cap: f64,
}

/// Projective-capacity estimate: 1 / (max over the sphere grid of the
/// extremal-function estimate).  Grid points are processed in parallel and
/// merged deterministically by index.
pub fn capacity(
    e: &SampledSet,
    lambda: &Lambda,
    sphere_grid: &SampledSet,
    rho_cap: &WeightedDegree,
) -> Result<CapacityEstimate> {
    if sphere_grid.is_empty() {
        return Err(Error::EmptyInput("sphere grid"));
    }
    for p in &sphere_grid.points {
        let nr = crate::suspension::norm(p);
        if (nr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "grid point off the sphere by {:e}",
                (nr - 1.0).abs()
            )));
        }
    }
    let values: Vec<f64> = sphere_grid
        .points
        .par_iter()
        .map(|z0| psi_estimate(e, lambda, z0, rho_cap).map(|est| est.value))
        .collect::<Result<Vec<_>>>()?;
    let (argmax_index, &psi_sup) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .unwrap();
    if psi_sup <= 0.0 {
        return Err(Error::DegenerateProgram(
            "extremal estimate vanished on the whole grid".into(),
        ));
    }
    Ok(CapacityEstimate {
        rho_lambda: 1.0 / psi_sup,
        psi_sup,
        grid_size: sphere_grid.len(),
        argmax_index,
        argmax_point: sphere_grid.points[argmax_index].clone(),
        rho_cap: rho_cap.approx,
    })
}

#[derive(Debug, Clone)]
pub enum HullVerdict {
    /// Bounded claim: no separating witness up to the cap.
    Inside,
    Outside,
}

#[derive(Debug, Clone)]
pub struct HullReport {
    pub verdict: HullVerdict,
    pub psi_hat: f64,
    /// Separating witness with |q(z0)| > sampled sup over K, when Outside.
    pub witness: Option<MixedPolynomial>,
    pub witness_ratio: Option<f64>,
    pub circular_on_samples: bool,
}

/// Membership of z0 in the weighted-circular hull of K, up to the cap:
/// Outside iff the extremal estimate exceeds 1 + 1e-6.
pub fn hull_membership(
    k: &SampledSet,
    lambda: &Lambda,
    z0: &[Complex64],
    rho_cap: &WeightedDegree,
) -> Result<HullReport> {
    let circular = check_lambda_circular(k, lambda, 0.25);
    let est = psi_estimate(k, lambda, z0, rho_cap)?;
    if est.value > 1.0 + 1e-6 {
        let ratio = est.raw_ratio;
        Ok(HullReport {
            verdict: HullVerdict::Outside,
            psi_hat: est.value,
            witness: Some(est.witness),
            witness_ratio: Some(ratio),
            circular_on_samples: circular,
        })
    } else {
        Ok(HullReport {
            verdict: HullVerdict::Inside,
            psi_hat: est.value,
            witness: None,
            witness_ratio: None,
            circular_on_samples: circular,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SandwichRow {
    pub point: Vec<Complex64>,
    pub psi_hat: f64,
    pub phi_hat: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    pub violations: usize,
    pub slack: f64,
}

/// One-sided sandwich checks at each grid point: since both estimates are
/// lower bounds, the assertable implications at matched caps are
/// phi >= max(1, psi)^{min lambda} - slack and
/// max(1, psi) >= phi^{1/max lambda} - slack.
pub fn sandwich_check(
    e: &SampledSet,
    lambda: &Lambda,
    grid: &[Vec<Complex64>],
    rho_cap: &WeightedDegree,
    degree_cap: u32,
    slack: f64,
) -> Result<SandwichReport> {
    let lmin = lambda.min_approx();
    let lmax = lambda.max_approx();
    let rows: Vec<SandwichRow> = grid
        .par_iter()
        .map(|z0| -> Result<SandwichRow> {
            let psi = psi_estimate(e, lambda, z0, rho_cap)?.value;
            let phi = green_estimate(e, z0, degree_cap)?.value;
            let p1 = psi.max(1.0);
            let lower_ok = phi >= p1.powf(lmin) - slack;
            let upper_ok = p1 >= phi.powf(1.0 / lmax) - slack;
            Ok(SandwichRow {
                point: z0.clone(),
                psi_hat: psi,
                phi_hat: phi,
                lower_ok,
                upper_ok,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = rows.iter().filter(|r| !r.lower_ok || !r.upper_ok).count();
    Ok(SandwichReport {
        rows,
        violations,
        slack,
    })
}

#[derive(Debug, Clone)]
pub struct LRegSample {
    pub radius: f64,
    /// Mean of log green estimate over the probe ring; None if no samples
    /// fell inside the ball (that radius is skipped).
    pub v: Option<f64>,
    pub constraints_used: usize,
    /// Some probe hit the coefficient box: the local program is nearly
    /// unbounded, the strongest pluripolar indicator.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct LRegReport {
    pub samples: Vec<LRegSample>,
    pub half_cap_samples: Vec<LRegSample>,
    /// Diagnostic string, never a proof.
    pub verdict: String,
}

/// Local regularity diagnostic at `a`: for each radius, the mean of
/// log green_estimate over an 8-point probe ring of radius r/10, using only
/// samples within B(a, r).  Growth with the cap is the pluripolar signature.
pub fn l_regularity_estimate(
    e: &SampledSet,
    a: &[Complex64],
    radii: &[f64],
    degree_cap: u32,
) -> Result<LRegReport> {
    if e.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    if a.len() != e.n {
        return Err(Error::DimensionMismatch {
            expected: e.n,
            got: a.len(),
        });
    }
    let near = e
        .points
        .iter()
        .map(|p| dist(p, a))
        .fold(f64::INFINITY, f64::min);
    if near > 1e-6 + radii.iter().cloned().fold(0.0, f64::max) {
        return Err(Error::InvalidInput(
            "probe center far from every sample".into(),
        ));
    }
    let run = |cap: u32| -> Result<Vec<LRegSample>> {
        radii
            .iter()
            .map(|&r| {
                let local: Vec<Vec<Complex64>> = e
                    .points
                    .iter()
                    .filter(|p| dist(p, a) <= r)
                    .cloned()
                    .collect();
                if local.is_empty() {
                    return Ok(LRegSample {
                        radius: r,
                        v: None,
                        constraints_used: 0,
                        degenerate: false,
                    });
                }
                let local_set = SampledSet::from_points(e.n, local)?;
                let mut acc = 0.0;
                let mut degenerate = false;
                for j in 0..8 {
                    let ang = 2.0 * std::f64::consts::PI * j as f64 / 8.0;
                    let mut probe = a.to_vec();
                    let coord = j % e.n;
                    probe[coord] += Complex64::from_polar(r / 10.0, ang);
                    let est = green_estimate(&local_set, &probe, cap)?;
                    degenerate |= est.diagnostics.box_active;
                    acc += est.value.ln();
                }
                Ok(LRegSample {
                    radius: r,
                    v: Some(acc / 8.0),
                    constraints_used: local_set.len(),
                    degenerate,
                })
            })
            .collect()
    };
    let samples = run(degree_cap)?;
    let half_cap_samples = run((degree_cap / 2).max(1))?;
    let grown = samples.iter().any(|s| s.degenerate)
        || samples
            .iter()
            .zip(&half_cap_samples)
            .any(|(f, h)| match (f.v, h.v) {
                (Some(vf), Some(vh)) => vf > vh + 0.5,
                _ => false,
            });
    let small = samples
        .iter()
        .all(|s| s.v.map_or(true, |v| v < 0.1));
    let verdict = if grown {
        "pluripolar signature".to_string()
    } else if small {
        "consistent with local L-regularity at the probe center".to_string()
    } else {
        "inconclusive".to_string()
    };
    Ok(LRegReport {
        samples,
        half_cap_samples,
        verdict,
    })
}

fn dist(p: &[Complex64], q: &[Complex64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrendVerdict {
    PluripolarSignature,
    NonpluripolarSignature,
    Indeterminate,
}

#[derive(Debug, Clone)]
pub struct TrendReport {
    /// (cap, capacity estimate) per requested cap.
    pub entries: Vec<(f64, f64)>,
    pub verdict: TrendVerdict,
}

/// Capacity estimates across increasing caps on a fixed builtin sphere
/// grid; monotone decay toward 0 is the pluripolar signature.
pub fn pluripolar_diagnostic(
    e: &SampledSet,
    lambda: &Lambda,
    caps: &[WeightedDegree],
) -> Result<TrendReport> {
    if e.is_empty() {
        return Err(Error::EmptyInput("sample set"));
    }
    if caps.is_empty() {
        return Err(Error::EmptyInput("cap list"));
    }
    let grid = SampledSet::from_points(lambda.n, crate::suspension::sphere_points(lambda.n, 60))?;
    let mut entries = Vec::with_capacity(caps.len());
    for cap in caps {
        let est = capacity(e, lambda, &grid, cap)?;
        entries.push((cap.approx, est.rho_lambda));
    }
    let first = entries.first().unwrap().1;
    let last = entries.last().unwrap().1;
    let nonincreasing = entries.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    // Decay toward 0, or outright collapse near 0, is the pluripolar
    // signature; stabilization away from 0 is the nonpluripolar one.
    let verdict = if last < 0.05 || (nonincreasing && last <= 0.7 * first) {
        TrendVerdict::PluripolarSignature
    } else if last >= 0.85 * first {
        TrendVerdict::NonpluripolarSignature
    } else {
        TrendVerdict::Indeterminate
    };
    Ok(TrendReport { entries, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suspension::{ball_points, sphere_points, torus_points};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn circle(n_pts: usize, r: f64) -> Vec<Vec<Complex64>> {
        (0..n_pts)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n_pts as f64;
                vec![Complex64::from_polar(r, th)]
            })
            .collect()
    }

    #[test]
    fn simplex_basic() {
        // max x + y, x <= 1, y <= 2.
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = vec![1.0, 2.0];
        let c = vec![1.0, 1.0];
        let r = simplex(&a, &b, &c);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.x[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn simplex_shared_constraint() {
        // max 2x + y, x + y <= 4, x <= 3.
        let a = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        let b = vec![4.0, 3.0];
        let c = vec![2.0, 1.0];
        let r = simplex(&a, &b, &c);
        assert_abs_diff_eq!(2.0 * r.x[0] + r.x[1], 7.0, epsilon = 1e-12);
    }

    #[test]
    fn cheby_single_monomial_oracle() {
        for d in [1u32, 3, 5] {
            let problem =
                ChebyshevProblem::new(vec![c(2.0, 0.0)], circle(64, 1.0), vec![mi(&[d])]).unwrap();
            let est = cheby_maximize(&problem).unwrap();
            assert_abs_diff_eq!(est.value, 2.0f64.powi(d as i32), epsilon = 1e-9);
            // Witness is sampled-sup normalized.
            let sup = problem
                .constraints
                .iter()
                .map(|x| est.witness.evaluate(x).norm())
                .fold(0.0f64, f64::max);
            assert!(sup <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn cheby_target_among_constraints() {
        let pts = circle(32, 1.0);
        let problem =
            ChebyshevProblem::new(pts[3].clone(), pts.clone(), vec![mi(&[0]), mi(&[1]), mi(&[2])])
                .unwrap();
        let est = cheby_maximize(&problem).unwrap();
        assert!(est.value <= 1.0 + 1e-9);
    }

    #[test]
    fn cheby_constant_basis() {
        let problem =
            ChebyshevProblem::new(vec![c(5.0, 1.0)], circle(16, 1.0), vec![mi(&[0])]).unwrap();
        let est = cheby_maximize(&problem).unwrap();
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn cheby_rejects_zero_samples() {
        let problem = ChebyshevProblem::new(
            vec![c(1.0, 0.0)],
            vec![vec![c(0.0, 0.0)]],
            vec![mi(&[2])],
        )
        .unwrap();
        assert!(matches!(
            cheby_maximize(&problem),
            Err(Error::DegenerateProgram(_))
        ));
    }

    #[test]
    fn psi_monomial_oracle() {
        let e = SampledSet::from_points(1, circle(256, 1.0)).unwrap();
        let l = Lambda::integer(&[1]).unwrap();
        let cap = l.degree_from_rational(4, 1);
        let est = psi_estimate(&e, &l, &[c(2.0, 0.0)], &cap).unwrap();
        assert_abs_diff_eq!(est.value, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn psi_ball_linear_witness() {
        let e = SampledSet::from_points(2, ball_points(2, 600)).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(3, 1);
        let est = psi_estimate(&e, &l, &[c(2.0, 0.0), c(0.0, 0.0)], &cap).unwrap();
        assert!(est.value >= 2.0 - 1e-6, "psi {}", est.value);
    }

    #[test]
    fn psi_vanishes_at_origin() {
        let e = SampledSet::from_points(2, torus_points(12)).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(3, 1);
        let est = psi_estimate(&e, &l, &[c(0.0, 0.0), c(0.0, 0.0)], &cap).unwrap();
        assert_abs_diff_eq!(est.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn green_circle_oracle() {
        let e = SampledSet::from_points(1, circle(128, 0.5)).unwrap();
        let est = green_estimate(&e, &[c(1.0, 0.0)], 8).unwrap();
        assert!((est.value - 2.0).abs() <= 0.1, "green {}", est.value);
    }

    #[test]
    fn green_inside_is_one() {
        let pts = circle(64, 1.0);
        let e = SampledSet::from_points(1, pts.clone()).unwrap();
        let est = green_estimate(&e, &pts[5], 4).unwrap();
        assert!(est.value <= 1.0 + 1e-9);
        assert!(est.value >= 1.0);
    }

    #[test]
    fn green_single_point_grows_with_cap() {
        let e = SampledSet::from_points(1, vec![vec![c(0.5, 0.0)]]).unwrap();
        let e2 = green_estimate(&e, &[c(2.0, 0.0)], 2).unwrap();
        let e4 = green_estimate(&e, &[c(2.0, 0.0)], 4).unwrap();
        assert!(e4.value > e2.value * 1.05, "v2 {} v4 {}", e2.value, e4.value);
        assert!(e4.diagnostics.box_active);
    }

    #[test]
    fn monomial_enumeration() {
        let ms = monomials_up_to(2, 2);
        assert_eq!(ms.len(), 6);
        assert!(ms.contains(&mi(&[0, 0])));
        assert!(ms.contains(&mi(&[1, 1])));
        assert!(ms.contains(&mi(&[0, 2])));
    }

    #[test]
    fn hull_torus() {
        let k = SampledSet::from_points(2, torus_points(24)).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(4, 1);
        let origin = hull_membership(&k, &l, &[c(0.0, 0.0), c(0.0, 0.0)], &cap).unwrap();
        assert!(matches!(origin.verdict, HullVerdict::Inside));
        let outside = hull_membership(&k, &l, &[c(1.0, 0.0), c(1.0, 0.0)], &cap).unwrap();
        assert!(
            matches!(outside.verdict, HullVerdict::Outside),
            "psi_hat {}",
            outside.psi_hat
        );
        assert!(
            outside.witness_ratio.unwrap() >= 2.0 - 1e-3,
            "ratio {} psi {}",
            outside.witness_ratio.unwrap(),
            outside.psi_hat
        );
        // Sample point of K is inside.
        let on_k = hull_membership(&k, &l, &k.points[7], &cap).unwrap();
        assert!(matches!(on_k.verdict, HullVerdict::Inside));
    }

    #[test]
    fn anti_monotonicity_small() {
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(3, 1);
        let big = torus_points(16);
        let small: Vec<_> = big.iter().step_by(3).cloned().collect();
        let ea = SampledSet::from_points(2, small).unwrap();
        let eb = SampledSet::from_points(2, big).unwrap();
        for z0 in [
            vec![c(1.2, 0.3), c(-0.5, 0.8)],
            vec![c(0.9, 0.0), c(0.4, 0.4)],
        ] {
            let va = psi_estimate(&ea, &l, &z0, &cap).unwrap().value;
            let vb = psi_estimate(&eb, &l, &z0, &cap).unwrap().value;
            assert!(vb <= va + 1e-9, "va {va} vb {vb}");
        }
    }

    #[test]
    fn determinism() {
        let e = SampledSet::from_points(2, torus_points(12)).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(3, 1);
        let z0 = vec![c(1.3, 0.2), c(0.1, -0.7)];
        let a = psi_estimate(&e, &l, &z0, &cap).unwrap();
        let b = psi_estimate(&e, &l, &z0, &cap).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn capacity_sphere_reference_small() {
        // Grid points are a subset of the sample shell, so psi is exactly 1.
        let ball = ball_points(2, 500);
        let grid_pts = sphere_points(2, 200);
        let e = SampledSet::from_points(2, ball).unwrap();
        let grid = SampledSet::from_points(2, grid_pts).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(3, 1);
        let est = capacity(&e, &l, &grid, &cap).unwrap();
        assert!(est.rho_lambda >= 0.95 && est.rho_lambda <= 1.0 + 1e-6, "rho {}", est.rho_lambda);
        assert_abs_diff_eq!(est.rho_lambda, 1.0 / est.psi_sup, epsilon = 1e-15);
    }

    #[test]
    fn capacity_shrinks_under_flow() {
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(3, 1);
        let grid = SampledSet::from_points(2, sphere_points(2, 60)).unwrap();
        let base = torus_points(14);
        let shrunk: Vec<Vec<Complex64>> = base
            .iter()
            .map(|p| crate::qhpoly::flow_map(&l, p, c(0.5, 0.0)))
            .collect();
        let e1 = SampledSet::from_points(2, base).unwrap();
        let e2 = SampledSet::from_points(2, shrunk).unwrap();
        let c1 = capacity(&e1, &l, &grid, &cap).unwrap().rho_lambda;
        let c2 = capacity(&e2, &l, &grid, &cap).unwrap().rho_lambda;
        assert!(c2 < c1, "c1 {c1} c2 {c2}");
    }

    #[test]
    fn sandwich_degenerate_weights_agree() {
        let e = SampledSet::from_points(2, torus_points(20)).unwrap();
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(3, 1);
        let grid = vec![
            vec![c(1.1, 0.2), c(0.8, -0.3)],
            vec![c(0.9, 0.9), c(0.2, 0.5)],
        ];
        let report = sandwich_check(&e, &l, &grid, &cap, 3, 0.05).unwrap();
        assert_eq!(report.violations, 0);
        for row in &report.rows {
            assert_abs_diff_eq!(row.psi_hat.max(1.0), row.phi_hat, epsilon = 1e-6);
        }
    }

    #[test]
    fn lreg_real_line() {
        let pts: Vec<Vec<Complex64>> = (0..401)
            .map(|j| vec![c(-1.0 + j as f64 / 200.0, 0.0)])
            .collect();
        let e = SampledSet::from_points(1, pts).unwrap();
        let report = l_regularity_estimate(&e, &[c(0.0, 0.0)], &[0.5, 1.0], 6).unwrap();
        for s in &report.samples {
            assert!(s.v.unwrap() < 0.1, "v {:?}", s.v);
        }
        assert!(report.verdict.contains("L-regularity"));
    }

    #[test]
    fn lreg_single_point_pluripolar() {
        let e = SampledSet::from_points(1, vec![vec![c(0.1, 0.0)]]).unwrap();
        let report = l_regularity_estimate(&e, &[c(0.1, 0.0)], &[0.5], 6).unwrap();
        assert_eq!(report.verdict, "pluripolar signature");
    }

    #[test]
    fn pluripolar_trend_single_leaf() {
        let l = Lambda::integer(&[1, 1]).unwrap();
        // One leaf through a single generator point.
        let gen = SampledSet::from_points(
            2,
            vec![vec![c(0.6, 0.0), c(0.8, 0.0)]],
        )
        .unwrap();
        let susp = crate::suspension::Suspension::new(l.clone(), gen).unwrap();
        let e = susp.leaf_set();
        let caps: Vec<WeightedDegree> = [2, 3, 4]
            .iter()
            .map(|&v| l.degree_from_rational(v, 1))
            .collect();
        let report = pluripolar_diagnostic(&e, &l, &caps).unwrap();
        assert!(report.entries.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9));
        assert_eq!(report.verdict, TrendVerdict::PluripolarSignature);
    }

    #[test]
    fn certified_mode_rescales() {
        let e = SampledSet::from_points(1, circle(256, 1.0)).unwrap();
        let l = Lambda::integer(&[1]).unwrap();
        let cap = l.degree_from_rational(3, 1);
        let mut est = psi_estimate(&e, &l, &[c(2.0, 0.0)], &cap).unwrap();
        let sample_value = est.value;
        certify_lower(&mut est, 0.05, 1.0);
        assert!(matches!(est.mode, EstimateMode::CertifiedLower { .. }));
        assert!(est.value < sample_value);
        assert!(est.value > 0.0);
    }

    #[test]
    fn empty_set_rejected() {
        let e = SampledSet::from_points(1, vec![]).unwrap();
        let l = Lambda::integer(&[1]).unwrap();
        let cap = l.degree_from_rational(2, 1);
        assert!(matches!(
            psi_estimate(&e, &l, &[c(1.0, 0.0)], &cap),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            pluripolar_diagnostic(&e, &l, &[cap]),
            Err(Error::EmptyInput(_))
        ));
    }
}
