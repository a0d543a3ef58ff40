use std::sync::Arc;

use geostab::expr::SymbolTable;
use geostab::flow::{flow_jacobian, variational_integrate, Flow, IntegratorSettings};
use geostab::geometry::{riemann, GeodesicSpray, MetricField, Signature};
use geostab::kcc::{
    berwald_coefficients, deviation_tensor_p, epsilon_defect, nonlinear_connection, rtilde_operator, Semispray,
    SprayData,
};
use geostab::lagrangian::NaturalLagrangian;
use geostab::numeric::{eigenvalues, Matrix};
use proptest::prelude::*;

fn systems() -> Vec<NaturalLagrangian> {
    vec![
        NaturalLagrangian::parse(&[vec!["1", "0"], vec!["0", "1"]], "0.5*w^2*(x1^2 + x2^2)", &[("w", 1.3)]).unwrap(),
        NaturalLagrangian::parse(&[vec!["1", "0"], vec!["0", "1 + x1^2"]], "0", &[]).unwrap(),
        NaturalLagrangian::parse(
            &[vec!["2 + cos(x2)", "0.3*x1"], vec!["0.3*x1", "1 + x1^2"]],
            "x1^2*x2 - 0.5*x2^2",
            &[],
        )
        .unwrap(),
    ]
}

fn point() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-1.0f64..1.0, 2), prop::collection::vec(-1.5f64..1.5, 2))
}

fn close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> bool {
    a.sub(b).max_abs() <= tol * a.max_abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deviation_tensor_matches_natural_formula((x, u) in point()) {
        for nat in systems() {
            let kcc = deviation_tensor_p(&nat, &x, &u).unwrap();
            let direct = nat.perturbation_operator(&x, &u).unwrap();
            prop_assert!(close(&kcc, &direct, 1e-8), "{:?} vs {:?}", kcc, direct);
            let general = deviation_tensor_p(nat.lagrangian(), &x, &u).unwrap();
            prop_assert!(close(&general, &direct, 1e-8));
        }
    }

    #[test]
    fn natural_sprays_have_no_epsilon_defect((x, u) in point()) {
        for nat in systems() {
            prop_assert!(epsilon_defect(&nat, &x, &u).unwrap().defect < 1e-10);
        }
    }

    #[test]
    fn rtilde_spectrum_doubles_deviation_spectrum((x, u) in point()) {
        for nat in systems() {
            let p = eigenvalues(&deviation_tensor_p(&nat, &x, &u).unwrap()).unwrap();
            let r = eigenvalues(&rtilde_operator(&nat, &x, &u).unwrap()).unwrap();
            prop_assert_eq!(r.len(), 2 * p.len());
            for (k, &(re, im)) in p.iter().enumerate() {
                for &(rr, ri) in &r.0[2 * k..2 * k + 2] {
                    prop_assert!((rr - re).abs() < 1e-7 && (ri.abs() - im.abs()).abs() < 1e-7, "{:?} {:?}", p, r);
                }
            }
        }
    }

    #[test]
    fn berwald_coefficients_are_symmetric((x, u) in point()) {
        for nat in systems() {
            prop_assert!(berwald_coefficients(&nat, &x, &u).unwrap().asymmetry() < 1e-10);
        }
    }

    #[test]
    fn geodesic_deviation_tensor_is_curvature(th in 0.3f64..2.8, u in prop::collection::vec(-1.5f64..1.5, 2)) {
        let t = Arc::new(SymbolTable::configuration(2));
        let metric = MetricField::diagonal(&t, &["1", "sin(x1)^2"], Signature::PositiveDefinite).unwrap();
        let x = [th, 0.2];
        let spray = GeodesicSpray::new(metric.clone());
        let p = deviation_tensor_p(&spray, &x, &u).unwrap();
        let expected = riemann(&metric, &x).unwrap().jacobi_operator(&u).scale(-1.0);
        prop_assert!(close(&p, &expected, 1e-8));
    }
}

#[test]
fn geodesic_connection_matches_finite_differences() {
    let t = Arc::new(SymbolTable::configuration(2));
    let metric = MetricField::diagonal(&t, &["1", "sin(x1)^2"], Signature::PositiveDefinite).unwrap();
    let spray = GeodesicSpray::new(metric);
    let (x, u) = ([0.9, 0.0], [0.3, -0.7]);
    let n = nonlinear_connection(&spray, &x, &u).unwrap();
    let h = 1e-6;
    for b in 0..2 {
        let (mut up, mut dn) = (u, u);
        up[b] += h;
        dn[b] -= h;
        let gp = spray.g(&x, &up).unwrap();
        let gm = spray.g(&x, &dn).unwrap();
        for a in 0..2 {
            assert!((n[(a, b)] - (gp[a] - gm[a]) / (2.0 * h)).abs() < 1e-8);
        }
    }
}

/// The coordinate perturbation from the variational equation satisfies the
/// KCC deviation equation written with the dynamical covariant derivative.
#[test]
fn variational_perturbation_obeys_deviation_equation() {
    let nat = &systems()[2];
    let flow = Semispray(nat);
    let times: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
    let settings = IntegratorSettings::adaptive(1e-12, 1e-12).with_times(times);
    let frame0 = vec![vec![0.3, -0.2, 0.5, 0.1]];
    let y0 = [0.2, -0.1, 0.4, 0.3];
    let traj = variational_integrate(&flow, &y0, &frame0, (0.0, 3.0), &settings).unwrap();
    let frames = traj.frames.as_ref().unwrap();
    let mut worst = 0.0f64;
    for (s, fr) in traj.states.iter().zip(frames) {
        let (x, u) = (&s[..2], &s[2..]);
        let (xi, xidot) = (&fr[0][..2], &fr[0][2..]);
        // D xi = xi' + N xi, so D D xi = xi'' + N' xi + 2 N xi' + N N xi
        let field = flow.field(s).unwrap();
        let acc = &field[2..];
        let n = nonlinear_connection(nat, x, u).unwrap();
        let p = deviation_tensor_p(nat, x, u).unwrap();
        let jac = flow_jacobian(&flow, s).unwrap();
        let xi_ddot: Vec<f64> = (0..2)
            .map(|a| (0..4).map(|b| jac[(2 + a, b)] * fr[0][b]).sum::<f64>())
            .collect();
        // dN/dt along the solution by a directional derivative
        let h = 1e-6;
        let shift = |sgn: f64| -> Matrix<f64> {
            let xs: Vec<f64> = (0..2).map(|i| x[i] + sgn * h * u[i]).collect();
            let us: Vec<f64> = (0..2).map(|i| u[i] + sgn * h * acc[i]).collect();
            nonlinear_connection(nat, &xs, &us).unwrap()
        };
        let ndot = shift(1.0).sub(&shift(-1.0)).scale(0.5 / h);
        let nxi = n.mul_vec(xi);
        let nxidot = n.mul_vec(xidot);
        let ndotxi = ndot.mul_vec(xi);
        let nnxi = n.mul_vec(&nxi);
        let pxi = p.mul_vec(xi);
        for a in 0..2 {
            let lhs = xi_ddot[a] + ndotxi[a] + 2.0 * nxidot[a] + nnxi[a];
            worst = worst.max((lhs - pxi[a]).abs());
        }
    }
    assert!(worst < 1e-6, "residual {worst}");
}
