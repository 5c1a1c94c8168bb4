//! Independent oracles for the numerical building blocks.

use ccembed_core::curvature::{sectional_curvature, CurvatureOptions, TwoPlane};
use ccembed_core::manifold::ModelManifold;
use ccembed_core::{Expr, MetricSpec, SymMat};
use proptest::prelude::*;

/// Random smooth expressions in `y1, y2` that stay bounded on `[-1, 1]^2`.
fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("y1".to_string()),
        Just("y2".to_string()),
        (0.5f64..2.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (2 + sin({b})))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3 * sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(2 + cos({a}))")),
            inner.clone().prop_map(|a| format!("log(3 + sin({a}))")),
            inner.prop_map(|a| format!("(1 + sin({a}))^2")),
        ]
    })
}

fn fd4(e: &Expr, p: [f64; 2], k: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut q = p;
        q[k] += s;
        e.eval(&q)
    };
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn symbolic_derivative_matches_finite_differences(src in expr_source(), y1 in -0.9f64..0.9, y2 in -0.9f64..0.9) {
        let e = Expr::parse(&src, &["y1", "y2"]).unwrap();
        for k in 0..2 {
            let exact = e.differentiate(k).eval(&[y1, y2]);
            let fd = fd4(&e, [y1, y2], k, 1e-4);
            prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1.0), "{src}: d{k} {exact} vs {fd}");
        }
    }
}

fn sym(n: usize, v: &[f64]) -> SymMat {
    let mut s = SymMat::zeros(n);
    let mut it = v.iter();
    for i in 0..n {
        for j in i..n {
            s.set(i, j, *it.next().unwrap());
        }
    }
    s
}

/// Smallest eigenvalue by power iteration on `c I - A`, `c` a Gershgorin bound.
fn power_min_eigenvalue(a: &SymMat) -> f64 {
    let n = a.dim();
    let c: f64 = (0..n).map(|i| (0..n).map(|j| a.get(i, j).abs()).sum::<f64>()).fold(0.0, f64::max) + 1.0;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut w = vec![0.0; n];
    let mut rq = 0.0;
    for _ in 0..20_000 {
        a.mul_vec(&v, &mut w);
        for i in 0..n {
            w[i] = c * v[i] - w[i];
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..n {
            v[i] = w[i] / norm;
        }
        a.mul_vec(&v, &mut w);
        rq = v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
    }
    rq
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn min_eigenvalue_matches_power_iteration(n in 2usize..=3, v in prop::collection::vec(-3.0f64..3.0, 6)) {
        let a = sym(n, &v);
        let ev = a.eigenvalues();
        // the power iteration needs a gap below the next eigenvalue
        prop_assume!(ev[1] - ev[0] > 1e-2);
        let oracle = power_min_eigenvalue(&a);
        prop_assert!((a.min_eigenvalue() - oracle).abs() <= 1e-10, "{} vs {oracle}", a.min_eigenvalue());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn positive_definite_iff_leading_minors_positive(n in 1usize..=3, v in prop::collection::vec(-2.0f64..2.0, 6)) {
        let a = sym(n, &v);
        let lam = a.min_eigenvalue();
        prop_assume!(lam.abs() > 1e-9);
        let minors = a.leading_minors().iter().all(|&d| d > 0.0);
        prop_assert_eq!(lam > 0.0, minors);
    }
}

/// Conformal metric `e^{2u} delta` in the plane: `K = -e^{-2u} Laplacian(u)`.
/// For `(4 + y1) delta / (1 - |y|^2)^2` this is closed form.
fn bumped_disk_curvature(y1: f64, y2: f64) -> f64 {
    let s = 1.0 - y1 * y1 - y2 * y2;
    let b = 4.0 + y1;
    let lap = -0.5 / (b * b) + 4.0 / (s * s);
    -(s * s) / b * lap
}

#[test]
fn sectional_curvature_matches_conformal_oracle() {
    let spec = MetricSpec::from_sources(ModelManifold::disk(2).unwrap(), &[&["4 + y1", "0"], &["0", "4 + y1"]], "1 - y1^2 - y2^2").unwrap();
    let opts = CurvatureOptions::default();
    for &(y1, y2) in &[(0.0, 0.0), (0.3, -0.2), (-0.5, 0.4), (0.7, 0.1), (0.1, 0.85)] {
        let plane = TwoPlane { base: vec![y1, y2], u: vec![1.0, 0.2], w: vec![-0.3, 1.0] };
        let k = sectional_curvature(&spec, &plane, &opts).unwrap();
        let oracle = bumped_disk_curvature(y1, y2);
        assert!((k - oracle).abs() <= 1e-7 * oracle.abs().max(1.0), "({y1}, {y2}): {k} vs {oracle}");
    }
}
