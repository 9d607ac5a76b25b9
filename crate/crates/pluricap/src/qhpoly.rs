//! Polynomials in z and z-bar, quasi-homogeneous decomposition, flow-map
//! evaluation, equivariance checks, and asymptotic-expansion grouping of
//! Taylor jets.
//!
//! Coefficients are floating complex; exactness lives in multi-indices and
//! weighted degrees. Terms are kept in lexicographic (k, m) order so
//! evaluation and serialization are bit-reproducible.

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::weights::{Lambda, MultiIndex, WeightedDegree};


/// Finitely supported polynomial in z_1..z_n and their conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPolynomial {
    pub n: usize,
    terms: BTreeMap<(MultiIndex, MultiIndex), Complex64>,
}

impl MixedPolynomial {
    pub fn zero(n: usize) -> Self {
        MixedPolynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(n: usize, k: MultiIndex, m: MultiIndex, coeff: Complex64) -> Self {
        let mut p = MixedPolynomial::zero(n);
        p.add_term(k, m, coeff);
        p
    }

    /// Holomorphic monomial c * z^k.
    pub fn holo_monomial(n: usize, k: MultiIndex, coeff: Complex64) -> Self {
        let m = MultiIndex::zero(n);
        MixedPolynomial::monomial(n, k, m, coeff)
    }

    pub fn add_term(&mut self, k: MultiIndex, m: MultiIndex, coeff: Complex64) {
        assert_eq!(k.len(), self.n);
        assert_eq!(m.len(), self.n);
        let key = (k, m);
        let entry = self
            .terms
            .entry(key.clone())
            .or_insert(Complex64::new(0.0, 0.0));
        *entry += coeff;
        if entry.re == 0.0 && entry.im == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, Complex64)> {
        self.terms.iter().map(|((k, m), &c)| (k, m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(|(_, m)| m.is_zero())
    }

    /// Total degree max |k| + |m|; 0 for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|(k, m)| k.total() + m.total())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &MixedPolynomial) -> MixedPolynomial {
        let mut out = self.clone();
        for (k, m, c) in other.terms() {
            out.add_term(k.clone(), m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &MixedPolynomial) -> MixedPolynomial {
        let mut out = self.clone();
        for (k, m, c) in other.terms() {
            out.add_term(k.clone(), m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> MixedPolynomial {
        let mut out = MixedPolynomial::zero(self.n);
        if s == Complex64::new(0.0, 0.0) {
            return out;
        }
        for (k, m, c) in self.terms() {
            out.add_term(k.clone(), m.clone(), c * s);
        }
        out
    }

    /// Sum of coefficient moduli.
    pub fn coeff_norm_l1(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm_l2(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Direct summation sum coeff * z^k * conj(z)^m in sorted term order.
    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.n);
        let mut acc = Complex64::new(0.0, 0.0);
        for ((k, m), c) in &self.terms {
            let mut t = *c;
            for i in 0..self.n {
                for _ in 0..k.0[i] {
                    t *= z[i];
                }
                for _ in 0..m.0[i] {
                    t *= z[i].conj();
                }
            }
            acc += t;
        }
        acc
    }
}

/// Quasi-homogeneous piece of a mixed polynomial with its exact bidegree.
#[derive(Debug, Clone)]
pub struct QHComponent {
    pub poly: MixedPolynomial,
    pub d1: WeightedDegree,
    pub d2: WeightedDegree,
    pub lambda: Lambda,
}

impl QHComponent {
    /// Checks that every term has the tagged bidegree exactly.
    pub fn validate(&self) -> Result<()> {
        for (k, m, _) in self.poly.terms() {
            let dk = self.lambda.degree(k)?;
            let dm = self.lambda.degree(m)?;
            if dk != self.d1 || dm != self.d2 {
                return Err(Error::InvalidInput(format!(
                    "term {k}{m} has bidegree ({},{}) != ({},{})",
                    dk.approx, dm.approx, self.d1.approx, self.d2.approx
                )));
            }
        }
        Ok(())
    }
}

/// Holomorphic quasi-homogeneous polynomial: bidegree (rho, 0), no z-bar.
#[derive(Debug, Clone)]
pub struct HoloQHPolynomial {
    component: QHComponent,
}

impl HoloQHPolynomial {
    pub fn new(component: QHComponent) -> Result<Self> {
        if !component.poly.is_holomorphic() || !component.d2.is_zero() {
            return Err(Error::NotHolomorphic);
        }
        Ok(HoloQHPolynomial { component })
    }

    pub fn rho(&self) -> &WeightedDegree {
        &self.component.d1
    }

    pub fn poly(&self) -> &MixedPolynomial {
        &self.component.poly
    }

    pub fn component(&self) -> &QHComponent {
        &self.component
    }

    pub fn lambda(&self) -> &Lambda {
        &self.component.lambda
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        self.component.poly.evaluate(z)
    }
}

/// Formal Taylor coefficients a_{km} at the origin, finitely supported.
#[derive(Debug, Clone)]
pub struct TaylorJet(pub MixedPolynomial);

/// One grouped level of an asymptotic expansion: all (mu, nu) rows with
/// mu + nu = rho, each carrying the summed coefficient at the given point.
#[derive(Debug, Clone)]
pub struct AsymptoticEntry {
    pub rho: WeightedDegree,
    pub rows: Vec<(WeightedDegree, WeightedDegree, Complex64)>,
}

/// Componentwise flow map (z_1 e^{-lambda_1 t}, ..., z_n e^{-lambda_n t}).
pub fn flow_map(lambda: &Lambda, z: &[Complex64], t: Complex64) -> Vec<Complex64> {
    lambda
        .approx_entries()
        .iter()
        .zip(z)
        .map(|(&lk, &zk)| zk * (-lk * t).exp())
        .collect()
}

/// Partition the terms of `p` by exact bidegree ((lambda,k), (lambda,m)).
pub fn bidegree_decompose(p: &MixedPolynomial, lambda: &Lambda) -> Result<Vec<QHComponent>> {
    let mut comps: Vec<QHComponent> = Vec::new();
    for (k, m, c) in p.terms() {
        let d1 = lambda.degree(k)?;
        let d2 = lambda.degree(m)?;
        match comps.iter_mut().find(|q| q.d1 == d1 && q.d2 == d2) {
            Some(q) => q.poly.add_term(k.clone(), m.clone(), c),
            None => {
                let mut poly = MixedPolynomial::zero(p.n);
                poly.add_term(k.clone(), m.clone(), c);
                comps.push(QHComponent {
                    poly,
                    d1,
                    d2,
                    lambda: lambda.clone(),
                });
            }
        }
    }
    comps.sort_by(|a, b| {
        a.d1.total_cmp(&b.d1)
            .then_with(|| a.d2.total_cmp(&b.d2))
    });
    Ok(comps)
}

/// |q(Phi(z,t)) - e^{-d1 t - d2 conj(t)} q(z)| for a tagged component.
pub fn flow_equivariance_residual(q: &QHComponent, z: &[Complex64], t: Complex64) -> f64 {
    let flowed = flow_map(&q.lambda, z, t);
    let lhs = q.poly.evaluate(&flowed);
    let factor = (-q.d1.approx * t - q.d2.approx * t.conj()).exp();
    (lhs - factor * q.poly.evaluate(z)).norm()
}

/// Group jet coefficients a_{km} z^k zbar^m by rho = (lambda,k)+(lambda,m),
/// rows keyed by the exact pair ((lambda,k), (lambda,m)).
pub fn taylor_to_asymptotic(
    jet: &TaylorJet,
    lambda: &Lambda,
    z: &[Complex64],
) -> Result<Vec<AsymptoticEntry>> {
    let mut entries: Vec<AsymptoticEntry> = Vec::new();
    for (k, m, a) in jet.0.terms() {
        let mu = lambda.degree(k)?;
        let nu = lambda.degree(m)?;
        let rho = mu.add(&nu);
        let mut zval = a;
        for i in 0..jet.0.n {
            for _ in 0..k.0[i] {
                zval *= z[i];
            }
            for _ in 0..m.0[i] {
                zval *= z[i].conj();
            }
        }
        let entry = match entries.iter_mut().find(|e| e.rho == rho) {
            Some(e) => e,
            None => {
                entries.push(AsymptoticEntry {
                    rho,
                    rows: Vec::new(),
                });
                entries.last_mut().unwrap()
            }
        };
        match entry.rows.iter_mut().find(|(m2, n2, _)| *m2 == mu && *n2 == nu) {
            Some((_, _, c)) => *c += zval,
            None => entry.rows.push((mu, nu, zval)),
        }
    }
    entries.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    for e in &mut entries {
        e.rows
            .sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));
    }
    Ok(entries)
}

/// Decompose a holomorphic polynomial into quasi-homogeneous blocks with
/// bidegrees (rho_m, 0); reassembly is exact.
pub fn series_decompose(f: &MixedPolynomial, lambda: &Lambda) -> Result<Vec<HoloQHPolynomial>> {
    if !f.is_holomorphic() {
        return Err(Error::NotHolomorphic);
    }
    bidegree_decompose(f, lambda)?
        .into_iter()
        .map(HoloQHPolynomial::new)
        .collect()
}

/// |q(z)| - normK * max(1, ||z||/r)^{deg q}; nonpositive when normK is a
/// true sup norm of |q| over the closed ball of radius r.
pub fn bernstein_walsh_residual(
    q: &MixedPolynomial,
    r: f64,
    norm_k: f64,
    z: &[Complex64],
) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::NonPositiveRadius);
    }
    if !q.is_holomorphic() {
        return Err(Error::NotHolomorphic);
    }
    let nz = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let bound = norm_k * (nz / r).max(1.0).powi(q.total_degree() as i32);
    Ok(q.evaluate(z).norm() - bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one() -> Complex64 {
        c(1.0, 0.0)
    }

    #[test]
    fn flow_map_identity_at_zero() {
        let l = Lambda::integer(&[1, 3]).unwrap();
        let z = vec![c(0.3, -0.2), c(1.5, 0.7)];
        let w = flow_map(&l, &z, c(0.0, 0.0));
        assert_eq!(w, z);
    }

    #[test]
    fn flow_map_diagonal_point() {
        // z0 = (1/sqrt(n), ..., 1/sqrt(n)), t = 1.
        let l = Lambda::integer(&[1, 2]).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let w = flow_map(&l, &[c(s, 0.0), c(s, 0.0)], one());
        assert_abs_diff_eq!(w[0].re, s * (-1.0f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(w[1].re, s * (-2.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn flow_map_log_two() {
        let l = Lambda::integer(&[1, 2]).unwrap();
        let w = flow_map(&l, &[one(), one()], c(2.0f64.ln(), 0.0));
        assert_abs_diff_eq!(w[0].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1].re, 0.25, epsilon = 1e-14);
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn decompose_two_bidegrees() {
        // p = z1*zbar2 + z2, lambda = (1,2).
        let l = Lambda::integer(&[1, 2]).unwrap();
        let mut p = MixedPolynomial::zero(2);
        p.add_term(mi(&[1, 0]), mi(&[0, 1]), one());
        p.add_term(mi(&[0, 1]), mi(&[0, 0]), one());
        let comps = bidegree_decompose(&p, &l).unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].d1, l.degree_from_rational(1, 1));
        assert_eq!(comps[0].d2, l.degree_from_rational(2, 1));
        assert_eq!(comps[1].d1, l.degree_from_rational(2, 1));
        assert!(comps[1].d2.is_zero());
        for q in &comps {
            q.validate().unwrap();
        }
    }

    #[test]
    fn decompose_already_homogeneous() {
        let l = Lambda::integer(&[1, 2]).unwrap();
        let p = MixedPolynomial::holo_monomial(2, mi(&[2, 1]), c(3.0, -1.0));
        let comps = bidegree_decompose(&p, &l).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].poly, p);
    }

    #[test]
    fn decompose_zero() {
        let l = Lambda::integer(&[1, 2]).unwrap();
        assert!(bidegree_decompose(&MixedPolynomial::zero(2), &l)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn evaluate_modulus_squared() {
        let p = MixedPolynomial::monomial(1, mi(&[1]), mi(&[1]), one());
        assert_abs_diff_eq!(p.evaluate(&[c(3.0, 4.0)]).re, 25.0, epsilon = 1e-12);
    }

    #[test]
    fn evaluate_sparse_witness_vanishes_on_reals() {
        // q = z1^2 zbar2 - zbar1^2 z2 vanishes at real points.
        let mut q = MixedPolynomial::zero(2);
        q.add_term(mi(&[2, 0]), mi(&[0, 1]), one());
        q.add_term(mi(&[0, 1]), mi(&[2, 0]), -one());
        let v = q.evaluate(&[c(0.6, 0.0), c(-0.8, 0.0)]);
        assert_abs_diff_eq!(v.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn evaluate_linear() {
        let mut p = MixedPolynomial::zero(2);
        p.add_term(mi(&[1, 0]), mi(&[0, 0]), one());
        p.add_term(mi(&[0, 1]), mi(&[0, 0]), one());
        let v = p.evaluate(&[one(), c(0.0, 2.0)]);
        assert_abs_diff_eq!((v - c(1.0, 2.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn equivariance_exact_at_t_zero() {
        let l = Lambda::integer(&[1, 2]).unwrap();
        let p = MixedPolynomial::monomial(2, mi(&[1, 0]), mi(&[0, 1]), one());
        let q = &bidegree_decompose(&p, &l).unwrap()[0];
        assert_eq!(flow_equivariance_residual(q, &[c(0.4, 0.1), c(-0.3, 0.9)], c(0.0, 0.0)), 0.0);
    }

    #[test]
    fn equivariance_random_points() {
        let l = Lambda::integer(&[1, 2]).unwrap();
        let p = MixedPolynomial::monomial(2, mi(&[1, 0]), mi(&[0, 1]), one());
        let q = &bidegree_decompose(&p, &l).unwrap()[0];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let z = [
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let r = flow_equivariance_residual(q, &z, c(0.3, 0.1));
            assert!(r < 1e-10, "residual {r}");
        }
    }

    #[test]
    fn equivariance_negative_test_wrong_bidegree() {
        let l = Lambda::integer(&[1, 2]).unwrap();
        let p = MixedPolynomial::monomial(2, mi(&[1, 0]), mi(&[0, 1]), one());
        let mut q = bidegree_decompose(&p, &l).unwrap().remove(0);
        q.d1 = l.degree_from_rational(3, 1); // deliberately mis-tagged
        let r = flow_equivariance_residual(&q, &[c(0.9, 0.2), c(0.5, -0.4)], c(0.5, 0.0));
        assert!(r > 1e-2, "residual {r}");
    }

    #[test]
    fn asymptotic_single_monomial() {
        let l = Lambda::integer(&[1, 1]).unwrap();
        let jet = TaylorJet(MixedPolynomial::holo_monomial(2, mi(&[1, 0]), one()));
        let entries = taylor_to_asymptotic(&jet, &l, &[c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].rho, l.degree_from_rational(1, 1));
        assert_eq!(entries[0].rows.len(), 1);
        let (mu, nu, coeff) = &entries[0].rows[0];
        assert_eq!(*mu, l.degree_from_rational(1, 1));
        assert!(nu.is_zero());
        assert_abs_diff_eq!(coeff.re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn asymptotic_mixed_monomial() {
        // q = z1^2 zbar2, lambda = (1,2): rho = 4, (mu, nu) = (2, 2).
        let l = Lambda::integer(&[1, 2]).unwrap();
        let jet = TaylorJet(MixedPolynomial::monomial(2, mi(&[2, 0]), mi(&[0, 1]), one()));
        let entries = taylor_to_asymptotic(&jet, &l, &[one(), one()]).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].rho, l.degree_from_rational(4, 1));
        let (mu, nu, _) = &entries[0].rows[0];
        assert_eq!(*mu, l.degree_from_rational(2, 1));
        assert_eq!(*nu, l.degree_from_rational(2, 1));
    }

    #[test]
    fn asymptotic_empty_jet() {
        let l = Lambda::integer(&[1, 1]).unwrap();
        let jet = TaylorJet(MixedPolynomial::zero(2));
        assert!(taylor_to_asymptotic(&jet, &l, &[one(), one()]).unwrap().is_empty());
    }

    #[test]
    fn series_decompose_blocks() {
        // f = 1 + z1 + z1 z2, lambda=(1,2): blocks at rho = 0, 1, 3.
        let l = Lambda::integer(&[1, 2]).unwrap();
        let mut f = MixedPolynomial::zero(2);
        f.add_term(mi(&[0, 0]), mi(&[0, 0]), one());
        f.add_term(mi(&[1, 0]), mi(&[0, 0]), one());
        f.add_term(mi(&[1, 1]), mi(&[0, 0]), one());
        let blocks = series_decompose(&f, &l).unwrap();
        let rhos: Vec<f64> = blocks.iter().map(|b| b.rho().approx).collect();
        assert_eq!(rhos, vec![0.0, 1.0, 3.0]);
        // Reassembly is exact.
        let sum = blocks
            .iter()
            .fold(MixedPolynomial::zero(2), |acc, b| acc.add(b.poly()));
        assert_eq!(sum, f);
    }

    #[test]
    fn series_decompose_rejects_zbar() {
        let l = Lambda::integer(&[1, 2]).unwrap();
        let p = MixedPolynomial::monomial(2, mi(&[0, 0]), mi(&[1, 0]), one());
        assert!(matches!(series_decompose(&p, &l), Err(Error::NotHolomorphic)));
    }

    #[test]
    fn bernstein_walsh_monomial_extremal() {
        // q = z^d on the unit ball: |q(z)| equals the bound at ||z|| = 2.
        for d in [1u32, 3, 6] {
            let q = MixedPolynomial::holo_monomial(1, mi(&[d]), one());
            let r = bernstein_walsh_residual(&q, 1.0, 1.0, &[c(2.0, 0.0)]).unwrap();
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn bernstein_walsh_inside_ball() {
        let q = MixedPolynomial::holo_monomial(1, mi(&[4]), one());
        let r = bernstein_walsh_residual(&q, 1.0, 1.0, &[c(0.3, 0.4)]).unwrap();
        assert!(r <= 0.0);
    }

    #[test]
    fn bernstein_walsh_constant() {
        let q = MixedPolynomial::holo_monomial(1, mi(&[0]), c(0.7, 0.0));
        for z in [c(0.1, 0.0), c(5.0, -3.0)] {
            assert!(bernstein_walsh_residual(&q, 1.0, 0.7, &[z]).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn bernstein_walsh_bad_radius() {
        let q = MixedPolynomial::holo_monomial(1, mi(&[1]), one());
        assert!(bernstein_walsh_residual(&q, 0.0, 1.0, &[one()]).is_err());
    }
}
