//! Randomized invariants of the core algebra and estimators.

use num_complex::Complex64;
use proptest::prelude::*;

use pluricap::extremal::psi_estimate;
use pluricap::qhpoly::{bidegree_decompose, flow_equivariance_residual, flow_map};
use pluricap::suspension::{direction_set, torus_points};
use pluricap::weights::enumerate_rho;
use pluricap::{Lambda, MixedPolynomial, MultiIndex, SampledSet};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn arb_weights() -> impl Strategy<Value = Vec<(i64, i64)>> {
    // First weight fixed at 1; the rest are small positive rationals.
    proptest::collection::vec((1i64..=9, 1i64..=4), 1..=2)
        .prop_map(|rest| std::iter::once((1, 1)).chain(rest).collect())
}

fn arb_poly(n: usize) -> impl Strategy<Value = MixedPolynomial> {
    proptest::collection::vec(
        (
            proptest::collection::vec(0u32..=5, n),
            proptest::collection::vec(0u32..=5, n),
            -1.0f64..1.0,
            -1.0f64..1.0,
        ),
        1..=20,
    )
    .prop_map(move |terms| {
        let mut p = MixedPolynomial::zero(n);
        for (k, m, re, im) in terms {
            p.add_term(MultiIndex(k), MultiIndex(m), c(re, im));
        }
        p
    })
}

fn arb_point(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| c(re, im)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decompose_reassembles_exactly(
        w in arb_weights(),
        p in arb_poly(3),
    ) {
        let n = w.len();
        let l = Lambda::rational(&w).unwrap();
        let mut q = MixedPolynomial::zero(n);
        for (k, m, a) in p.terms() {
            q.add_term(MultiIndex(k.0[..n].to_vec()), MultiIndex(m.0[..n].to_vec()), a);
        }
        let comps = bidegree_decompose(&q, &l).unwrap();
        let mut sum = MixedPolynomial::zero(n);
        for comp in &comps {
            sum = sum.add(&comp.poly);
        }
        prop_assert!(sum.sub(&q).is_zero());
        // Bidegrees are pairwise distinct.
        for (i, a) in comps.iter().enumerate() {
            for b in &comps[i + 1..] {
                prop_assert!(a.d1 != b.d1 || a.d2 != b.d2);
            }
        }
    }

    #[test]
    fn components_are_flow_equivariant(
        w in arb_weights(),
        p in arb_poly(3),
        z in arb_point(3),
        (tre, tim) in (0.0f64..1.0, -1.0f64..1.0),
    ) {
        let n = w.len();
        let l = Lambda::rational(&w).unwrap();
        let mut q = MixedPolynomial::zero(n);
        for (k, m, a) in p.terms() {
            q.add_term(MultiIndex(k.0[..n].to_vec()), MultiIndex(m.0[..n].to_vec()), a);
        }
        let t = c(tre, tim);
        for comp in bidegree_decompose(&q, &l).unwrap() {
            let scale = 1.0 + comp.poly.evaluate(&z[..n]).norm();
            prop_assert!(flow_equivariance_residual(&comp, &z[..n], t) / scale < 1e-9);
        }
    }

    #[test]
    fn rho_sequence_is_strictly_increasing_and_bracketed(
        w in arb_weights(),
        cap in 2i64..=8,
    ) {
        let l = Lambda::rational(&w).unwrap();
        let cap_deg = l.degree_from_rational(cap, 1);
        let seq = enumerate_rho(&l, &cap_deg).unwrap();
        prop_assert!(!seq.entries.is_empty());
        for pair in seq.entries.windows(2) {
            prop_assert!(pair[0].rho.total_cmp(&pair[1].rho) == std::cmp::Ordering::Less);
        }
        for entry in &seq.entries {
            prop_assert!(entry.rho.approx <= cap as f64 + 1e-12);
            for k in &entry.multiindices {
                // Each listed multiindex realizes its level exactly.
                let d = l.degree(k).unwrap();
                prop_assert!(d == entry.rho);
            }
        }
    }

    #[test]
    fn flow_composes_additively(
        w in arb_weights(),
        z in arb_point(3),
        (t1re, t1im) in (0.0f64..1.0, -1.0f64..1.0),
        (t2re, t2im) in (0.0f64..1.0, -1.0f64..1.0),
    ) {
        let n = w.len();
        let l = Lambda::rational(&w).unwrap();
        let t1 = c(t1re, t1im);
        let t2 = c(t2re, t2im);
        let once = flow_map(&l, &flow_map(&l, &z[..n], t1), t2);
        let both = flow_map(&l, &z[..n], t1 + t2);
        for (a, b) in once.iter().zip(&both) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn integer_weights_collapse_the_log_branches(
        m in 1i64..=4,
        phase in 0.0f64..6.28,
    ) {
        // With integer weights, z1^{lambda_k} is single-valued, so the two
        // log branches of the direction map agree.
        let l = Lambda::integer(&[1, m]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pts: Vec<Vec<Complex64>> = (0..24)
            .map(|j| {
                let th = phase + 2.0 * std::f64::consts::PI * j as f64 / 24.0;
                vec![Complex64::from_polar(s, th), Complex64::from_polar(s, 2.0 * th)]
            })
            .collect();
        let f = SampledSet::from_points(2, pts).unwrap();
        let ds = direction_set(&f, &l).unwrap();
        prop_assert_eq!(ds.branch1.len(), ds.branch2.len());
        for (a, b) in ds.branch1.iter().zip(&ds.branch2) {
            prop_assert!((a[0] - b[0]).norm() < 1e-9);
        }
    }
}

proptest! {
    // psi calls are LP solves; keep the case count low.
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn psi_is_anti_monotone_in_the_constraint_set(
        keep in proptest::collection::vec(any::<bool>(), 36),
        z in arb_point(2),
    ) {
        let l = Lambda::integer(&[1, 1]).unwrap();
        let cap = l.degree_from_rational(2, 1);
        let pool = torus_points(6);
        let mut small: Vec<_> = pool
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(p, _)| p.clone())
            .collect();
        if small.len() < 3 {
            small.extend(pool.iter().take(3).cloned());
        }
        let ea = SampledSet::from_points(2, small).unwrap();
        let eb = SampledSet::from_points(2, pool).unwrap();
        let z0: Vec<Complex64> = z.iter().map(|v| v * 1.5).collect();
        let va = psi_estimate(&ea, &l, &z0, &cap).unwrap().value;
        let vb = psi_estimate(&eb, &l, &z0, &cap).unwrap().value;
        prop_assert!(vb <= va + 1e-9, "va {} vb {}", va, vb);
    }
}
