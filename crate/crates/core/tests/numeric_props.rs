use geostab::numeric::{
    derive, eigenvalues, hessian, solve_linear, weighted_gram_schmidt, Lu, Matrix, Scalar,
    ScalarField,
};
use geostab::Result;
use proptest::prelude::*;

fn square(max: usize) -> impl Strategy<Value = Matrix<f64>> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(-1.0f64..1.0, n * n)
            .prop_map(move |v| Matrix::from_fn(n, n, |i, j| v[i * n + j]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eigenvalues_reassemble_characteristic_polynomial(a in square(6)) {
        let n = a.rows();
        let eig = eigenvalues(&a).unwrap();
        prop_assert_eq!(eig.len(), n);
        // conjugate pairs
        for &(re, im) in eig.iter() {
            if im != 0.0 {
                prop_assert!(eig.iter().any(|&(r2, i2)| (r2 - re).abs() < 1e-12 && (i2 + im).abs() < 1e-12));
            }
        }
        // probes outside the Gershgorin disc keep det(zI - A) away from zero
        let radius = a.norm_inf();
        for k in 0..5 {
            let z = if k % 2 == 0 { radius + 1.0 + k as f64 } else { -(radius + 1.0 + k as f64) };
            let shifted = Matrix::identity(n).scale(z).sub(&a);
            let det = Lu::factor(&shifted).unwrap().det();
            let (pr, pi) = eig.characteristic_at(z);
            prop_assert!((pr - det).abs() <= 1e-7 * det.abs(), "z={} prod={} det={}", z, pr, det);
            prop_assert!(pi.abs() <= 1e-7 * det.abs());
        }
    }

    #[test]
    fn symmetric_eigenvalues_are_real(a in square(6)) {
        let s = a.add(&a.transpose());
        let eig = eigenvalues(&s).unwrap();
        prop_assert!(eig.iter().all(|v| v.1 == 0.0));
        let trace: f64 = (0..s.rows()).map(|i| s[(i, i)]).sum();
        let sum: f64 = eig.real_parts().iter().sum();
        prop_assert!((trace - sum).abs() < 1e-10);
    }

    #[test]
    fn solve_residual_is_small(a in square(8), seed in prop::collection::vec(-10.0f64..10.0, 8)) {
        let n = a.rows();
        let b = &seed[..n];
        if let Ok(x) = solve_linear(&a, b) {
            let r = a.mul_vec(&x);
            let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let cond_guard = Lu::factor(&a).unwrap().inverse().norm_inf() * a.norm_inf();
            let res = r.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            prop_assume!(cond_guard < 1e6);
            prop_assert!(res <= 1e-10 * (1.0 + bnorm), "residual {}", res);
        }
    }

    #[test]
    fn gram_schmidt_is_idempotent(a in square(5), m in square(5)) {
        let n = a.rows();
        prop_assume!(m.rows() == n);
        let g = m.transpose().matmul(&m).add(&Matrix::identity(n));
        let frame: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        let cond = Lu::factor(&a).map(|lu| lu.inverse().norm_inf() * a.norm_inf()).unwrap_or(f64::INFINITY);
        prop_assume!(cond < 1e6);
        let (once, _) = weighted_gram_schmidt(&frame, &g).unwrap();
        for i in 0..n {
            for j in 0..n {
                let ip = g.bilinear(&once[i], &once[j]);
                let expect = f64::from(u8::from(i == j));
                prop_assert!((ip - expect).abs() < 1e-10);
            }
        }
        let (twice, logs) = weighted_gram_schmidt(&once, &g).unwrap();
        for (x, y) in once.iter().flatten().zip(twice.iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(logs.iter().all(|l| l.abs() < 1e-12));
    }
}

struct Smooth(usize);

impl ScalarField for Smooth {
    fn arity(&self) -> usize {
        3
    }
    fn eval<T: Scalar>(&self, v: &[T]) -> Result<T> {
        let (x, y, z) = (v[0], v[1], v[2]);
        Ok(match self.0 {
            0 => x * y * z + x.sin() * y.cos(),
            1 => (x * x + y * y + 1.0).ln() * z.exp(),
            2 => (x - y).powi(3) / (z * z + 2.0),
            _ => (x * y + z).sin().exp() + (x * x + 4.0).sqrt(),
        })
    }
}

fn central<F: ScalarField>(f: &F, p: &[f64], i: usize, h: f64) -> f64 {
    let mut a = p.to_vec();
    let mut b = p.to_vec();
    a[i] += h;
    b[i] -= h;
    (f.eval(&a).unwrap() - f.eval(&b).unwrap()) / (2.0 * h)
}

proptest! {
    #[test]
    fn first_partials_match_central_differences(
        k in 0usize..4,
        p in prop::collection::vec(-1.5f64..1.5, 3),
    ) {
        let f = Smooth(k);
        for i in 0..3 {
            let ad = derive(&f, &p, &[i]).unwrap();
            let fd = central(&f, &p, i, 1e-5);
            prop_assert!((ad - fd).abs() <= 1e-6 * ad.abs().max(1.0), "ad={} fd={}", ad, fd);
        }
    }

    #[test]
    fn second_partials_match_differenced_gradients(
        k in 0usize..4,
        p in prop::collection::vec(-1.5f64..1.5, 3),
    ) {
        let f = Smooth(k);
        let h = hessian(&f, &p).unwrap();
        let step = 1e-4;
        for i in 0..3 {
            for j in 0..3 {
                let mut a = p.clone();
                let mut b = p.clone();
                a[j] += step;
                b[j] -= step;
                let fd = (derive(&f, &a, &[i]).unwrap() - derive(&f, &b, &[i]).unwrap()) / (2.0 * step);
                prop_assert!((h[(i, j)] - fd).abs() <= 1e-4 * h[(i, j)].abs().max(1.0));
                prop_assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }
}

#[test]
fn spray_connection_derivative_matches_differences() {
    // G = 0.5 * Gamma(x) u^2 with Gamma(x) = sin(x) + 2, so dG/du = Gamma(x) u
    struct Spray;
    impl ScalarField for Spray {
        fn arity(&self) -> usize {
            2
        }
        fn eval<T: Scalar>(&self, v: &[T]) -> Result<T> {
            Ok((v[0].sin() + 2.0) * v[1] * v[1] * 0.5)
        }
    }
    for &(x, u) in &[(0.3, 1.2), (-1.0, 0.4), (2.0, -3.0)] {
        let ad = derive(&Spray, &[x, u], &[1]).unwrap();
        let exact = (f64::sin(x) + 2.0) * u;
        assert!((ad - exact).abs() < 1e-14);
        let fd = central(&Spray, &[x, u], 1, 1e-5);
        assert!((ad - fd).abs() <= 1e-6 * ad.abs());
    }
}
