use std::sync::Arc;

use hrlmc::analysis;
use hrlmc::entropy::{Burg, Entropy, Euclidean, LogitBarrier, Mixed, Scaled};
use hrlmc::linalg;
use hrlmc::target::TargetSpec;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn positive(p: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-6.0f64..6.0, p).prop_map(|v| DVector::from_iterator(v.len(), v.into_iter().map(f64::exp)))
}

fn unit(p: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(1e-6f64..(1.0 - 1e-6), p).prop_map(DVector::from_vec)
}

fn real(p: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-50.0f64..50.0, p).prop_map(DVector::from_vec)
}

fn entropies() -> Vec<(Arc<dyn Entropy>, BoxedStrategy<DVector<f64>>)> {
    vec![
        (Arc::new(Euclidean::new(3)), real(3).boxed()),
        (Arc::new(Burg::new(3)), positive(3).boxed()),
        (Arc::new(LogitBarrier::new(2)), unit(2).boxed()),
        (Arc::new(Mixed::new(vec![0.3, 0.7]).unwrap()), positive(2).boxed()),
        (Arc::new(Scaled::new(Arc::new(Burg::new(2)), 2.5).unwrap()), positive(2).boxed()),
    ]
}

fn check_all<F>(cases: u32, f: F)
where
    F: Fn(&dyn Entropy, &DVector<f64>) -> Result<(), TestCaseError>,
{
    for (e, strategy) in entropies() {
        let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(cases));
        runner
            .run(&strategy, |x| f(e.as_ref(), &x))
            .unwrap_or_else(|err| panic!("{}: {err}", e.name()));
    }
}

#[test]
fn mirror_map_round_trip() {
    check_all(500, |e, x| {
        let back = e.grad_conjugate(&e.grad(x).unwrap()).unwrap();
        prop_assert!((&back - x).norm() <= 1e-10 * (1.0 + x.norm()), "{x} -> {back}");
        Ok(())
    });
}

#[test]
fn hessian_is_symmetric_positive_definite() {
    check_all(300, |e, x| {
        let h = e.hessian(x).unwrap();
        prop_assert!(linalg::is_symmetric(&h, 0.0));
        let eig = h.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
        Ok(())
    });
}

#[test]
fn hessian_square_root_squares_back() {
    check_all(300, |e, x| {
        let h = e.hessian(x).unwrap();
        let s = e.hessian_sqrt(x).unwrap();
        let err = (&s * &s - &h).norm();
        prop_assert!(err <= 1e-12 * h.norm().max(1.0), "error {err}");
        let v = DVector::from_fn(x.len(), |i, _| 1.0 + i as f64);
        let mv = e.hessian_sqrt_mul(x, &v).unwrap();
        prop_assert!((mv - &s * &v).norm() <= 1e-12 * (s.norm() * v.norm()).max(1.0));
        if let Some(d) = e.hessian_diagonal(x).unwrap() {
            prop_assert!((DMatrix::from_diagonal(&d) - &h).norm() == 0.0);
        }
        Ok(())
    });
}

// Central differences of the value and gradient against the analytic
// gradient and Hessian.
#[test]
fn derivatives_match_finite_differences() {
    check_all(200, |e, x| {
        let p = x.len();
        let g = e.grad(x).unwrap();
        let h = e.hessian(x).unwrap();
        for i in 0..p {
            let step = 1e-6 * x[i].abs().max(1e-3);
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += step;
            xm[i] -= step;
            if !e.contains(&xp) || !e.contains(&xm) {
                continue;
            }
            let dv = (e.value(&xp).unwrap() - e.value(&xm).unwrap()) / (2.0 * step);
            prop_assert!((dv - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()), "d{i} value: {dv} vs {}", g[i]);
            let dg = (e.grad(&xp).unwrap() - e.grad(&xm).unwrap()) / (2.0 * step);
            for j in 0..p {
                prop_assert!((dg[j] - h[(j, i)]).abs() <= 1e-5 * (1.0 + h[(j, i)].abs()), "hessian ({j},{i})");
            }
        }
        Ok(())
    });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    // √2‖D²φ(x)^{1/2} − D²φ(x′)^{1/2}‖_F ≤ √2‖∇φ(x) − ∇φ(x′)‖ holds with
    // equality coordinate-wise for Burg: |1/x − 1/x′| = |−1/x + 1/x′|.
    #[test]
    fn burg_self_concordance(x in positive(3), xp in positive(3)) {
        let e = Burg::new(3);
        let dn = (e.grad(&x).unwrap() - e.grad(&xp).unwrap()).norm();
        prop_assume!(dn > 1e-12);
        let s = e.hessian_sqrt(&x).unwrap() - e.hessian_sqrt(&xp).unwrap();
        prop_assert!(2f64.sqrt() * linalg::frobenius(&s) / dn <= 2f64.sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn logit_self_concordance(x in unit(1), xp in unit(1)) {
        let e = LogitBarrier::new(1);
        let dn = (e.grad(&x).unwrap() - e.grad(&xp).unwrap()).norm();
        prop_assume!(dn > 1e-9);
        let s = e.hessian_sqrt(&x).unwrap() - e.hessian_sqrt(&xp).unwrap();
        prop_assert!(2f64.sqrt() * linalg::frobenius(&s) / dn <= 2f64.sqrt() + 1e-9);
    }

    // For Gamma/Burg, Δ∇f = (a − 1)Δ∇φ, so A3 and A4 hold with m = M = a − 1.
    #[test]
    fn gamma_relative_convexity(x in positive(1), xp in positive(1)) {
        let e = Burg::new(1);
        let t = TargetSpec::gamma(vec![5.0], vec![1.0]).unwrap();
        let dphi = e.grad(&x).unwrap() - e.grad(&xp).unwrap();
        prop_assume!(dphi.norm() > 1e-9);
        let df = t.grad(&x).unwrap() - t.grad(&xp).unwrap();
        let m = df.dot(&dphi) / dphi.norm_squared();
        let big_m = df.norm() / dphi.norm();
        prop_assert!((m - 4.0).abs() < 1e-6 && (big_m - 4.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_generalized_eigenvalues(x in real(2)) {
        let e = Euclidean::new(2);
        let t = TargetSpec::gaussian(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))).unwrap();
        let (lo, hi) = linalg::generalized_eigen_range(&t.hessian(&x).unwrap(), &e.hessian(&x).unwrap()).unwrap();
        prop_assert!((lo - 1.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    }

    // The commutator of two diagonal matrices vanishes, so δ = 0 for every
    // separable entropy paired with a product target.
    #[test]
    fn product_targets_commute(x in positive(3)) {
        let e = Burg::new(3);
        let t = TargetSpec::gamma(vec![5.0, 6.0, 7.0], vec![1.0, 2.0, 0.5]).unwrap();
        let hinv = e.hessian(&x).unwrap().try_inverse().unwrap();
        let c = linalg::commutator(&hinv, &t.hessian(&x).unwrap());
        prop_assert!(linalg::spectral_norm(&c) == 0.0);
    }

    #[test]
    fn generalized_range_brackets_rayleigh_quotients(d in prop::collection::vec(0.1f64..10.0, 3), v in real(3)) {
        prop_assume!(v.norm() > 1e-6);
        let a = DMatrix::from_fn(3, 3, |i, j| if i == j { d[i] } else { 0.1 * d[i].min(d[j]) });
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let (lo, hi) = linalg::generalized_eigen_range(&a, &b).unwrap();
        let q = v.dot(&(&a * &v)) / v.dot(&(&b * &v));
        prop_assert!(q >= lo * (1.0 - 1e-10) && q <= hi * (1.0 + 1e-10));
    }

    #[test]
    fn rho_is_below_one_inside_the_window(h in 1e-4f64..0.3749) {
        let c = analysis::Constants { kappa: 2f64.sqrt(), m: 4.0, big_m: 4.0, delta: 0.0, r: 1.0 / 12.0 };
        let b = analysis::bound_report(&c, h, 1, None).unwrap();
        prop_assert!(b.rho < 1.0);
    }
}
