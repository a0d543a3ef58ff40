use geostab::flow::IntegratorSettings;
use geostab::lagrangian::NaturalLagrangian;
use geostab::lyapunov::{GlobalStability, LyapunovSettings};
use geostab::maupertuis::{compare_stability, round_trip, split_spectrum, CompareSettings, JacobiTranslation};
use proptest::prelude::*;

fn planar(potential: &str) -> NaturalLagrangian {
    NaturalLagrangian::parse(&[vec!["1", "0"], vec!["0", "1"]], potential, &[]).unwrap()
}

fn sphere() -> NaturalLagrangian {
    NaturalLagrangian::parse(&[vec!["1", "0"], vec!["0", "sin(x1)^2"]], "0", &[]).unwrap()
}

fn tight() -> IntegratorSettings {
    IntegratorSettings::adaptive(1e-12, 1e-12)
}

/// Orbits that stay off the boundary.
fn interior_orbits() -> Vec<(NaturalLagrangian, [f64; 2], [f64; 2])> {
    vec![
        (planar("x1^2 + x2^2"), [0.5, 0.0], [0.3, 1.1]),
        (planar("x1^2 + x2^2 + 0.5*(x1^2 + x2^2)^2"), [0.2, 0.6], [-0.7, 0.4]),
        (sphere(), [1.2, 0.0], [0.3, 0.9]),
    ]
}

fn translation(nat: &NaturalLagrangian, x0: &[f64], u0: &[f64]) -> JacobiTranslation {
    let energy = nat.energy(x0, u0).unwrap();
    JacobiTranslation::new(nat.clone(), energy, 2.0).unwrap()
}

#[test]
fn translated_geodesics_reproduce_the_motion() {
    let mut orbits = interior_orbits();
    orbits.push((planar("x1^2 + 2*x2^2 + 0.3*x1*x2"), [0.4, -0.3], [0.5, 0.6]));
    for (nat, x0, u0) in orbits {
        let tr = translation(&nat, &x0, &u0);
        let r = round_trip(&tr, &x0, &u0, 5.0, 400, &tight()).unwrap();
        assert!(r.sup_error < 1e-6, "{x0:?}: {r:?}");
        assert!(r.energy_drift < 1e-8, "{x0:?}: {r:?}");
        assert!(r.compared_until > 2.5, "{x0:?}: {r:?}");
    }
}

#[test]
fn shift_modes_do_not_grow() {
    for (nat, x0, u0) in interior_orbits() {
        let tr = translation(&nat, &x0, &u0);
        let y0 = tr.geodesic_initial(&x0, &u0).unwrap();
        let spec = split_spectrum(tr.metric(), &x0, &y0[2..], &LyapunovSettings::new(20.0, 0.5)).unwrap();
        assert_eq!(spec.shift.len(), 2);
        assert!(spec.shift.iter().all(|l| l.abs() < 0.05), "{x0:?}: {spec:?}");
        assert_eq!(spec.exponents.len(), 4);
    }
}

#[test]
fn free_particle_pictures_agree() {
    let settings = CompareSettings {
        lyapunov: LyapunovSettings::new(50.0, 0.5),
        ..Default::default()
    };
    let report = compare_stability(&planar("0"), 0.5, &[0.0, 0.0], &[0.6, 0.8], &settings).unwrap();
    assert_eq!(report.intrinsic.global_verdict, GlobalStability::Stable);
    let geo = report.geodesic.expect("free motion translates");
    assert!(geo.flat);
    assert_eq!(geo.global_verdict, Some(GlobalStability::Stable));
    assert!(!report.flags.iter().any(|f| f == "contradictory-verdicts"), "{:?}", report.flags);
    assert!(report.round_trip.unwrap().sup_error < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn affine_geodesics_have_unit_speed(
        r in 0.1f64..0.8,
        angle in 0.0f64..std::f64::consts::TAU,
        speed in 0.3f64..1.5,
        heading in 0.3f64..2.8,
    ) {
        let nat = planar("x1^2 + x2^2 + 0.5*(x1^2 + x2^2)^2");
        let x0 = [r * angle.cos(), r * angle.sin()];
        let phi = angle + heading;
        let u0 = [speed * phi.cos(), speed * phi.sin()];
        let tr = translation(&nat, &x0, &u0);
        let y0 = tr.geodesic_initial(&x0, &u0).unwrap();
        let s = tight().with_times((0..=20).map(|k| 0.5 * f64::from(k)).collect());
        let run = tr.integrate_geodesic(&y0, 10.0, &s).unwrap();
        prop_assert!(run.boundary.is_none());
        for st in &run.trajectory.states {
            let g = tr.metric().matrix(&st[..2]).unwrap();
            prop_assert!((g.bilinear(&st[2..], &st[2..]).abs() - 1.0).abs() < 1e-7);
        }
    }
}
