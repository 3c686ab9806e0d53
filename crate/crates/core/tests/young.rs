use std::f64::consts::PI;

use proptest::prelude::*;

use triod_lab::connect::{solve_triple, ConnectionParams};
use triod_lab::field::{init_triod, GridField, PhaseMap, TubeParams};
use triod_lab::potential::TripleWellSpec;
use triod_lab::young::{
    balance_residual, conormals_from_angles, extract_interfaces, predict_angles, region_angles, sine_ratios, sine_spread,
};
use triod_lab::Error;

fn admissible() -> impl Strategy<Value = [f64; 3]> {
    (0.05f64..5.0, 0.05f64..5.0, 0.05f64..5.0)
        .prop_filter("strict triangle inequality with margin", |&(a, b, c)| {
            let m = 1e-3 * a.max(b).max(c);
            a + m < b + c && b + m < a + c && c + m < a + b
        })
        .prop_map(|(a, b, c)| [a, b, c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn predicted_angles_satisfy_both_laws(s in admissible(), theta in 0.0f64..(2.0 * PI)) {
        let phi = predict_angles(s).unwrap();
        prop_assert!((phi.iter().sum::<f64>() - 2.0 * PI).abs() <= 1e-12);
        prop_assert!(phi.iter().all(|&p| p > 0.0 && p < PI));
        prop_assert!(sine_spread(sine_ratios(phi, s)) <= 1e-12);
        prop_assert!(balance_residual(s, conormals_from_angles(theta, phi)).unwrap() <= 1e-12);
    }

    #[test]
    fn sine_law_angles_balance(u in 0.05f64..0.95, v in 0.05f64..0.95, theta in 0.0f64..(2.0 * PI), k in 0.1f64..10.0) {
        let (p1, p2) = (PI * u, PI * v);
        let p3 = 2.0 * PI - p1 - p2;
        prop_assume!(p3 > 0.05 * PI && p3 < 0.95 * PI);
        let s = [k * p3.sin(), k * p1.sin(), k * p2.sin()];
        let n = conormals_from_angles(theta, [p1, p2, p3]);
        prop_assert!(balance_residual(s, n).unwrap() <= 1e-12);
        let back = predict_angles(s).unwrap();
        for (a, b) in back.iter().zip([p1, p2, p3]) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn prediction_is_scale_invariant(s in admissible(), k in 1e-3f64..1e3) {
        let a = predict_angles(s).unwrap();
        let b = predict_angles(s.map(|x| k * x)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn prediction_is_cyclically_covariant(s in admissible()) {
        // Relabelling wells 1 -> 2 -> 3 -> 1 sends (σ12, σ23, σ31) to
        // (σ31, σ12, σ23) and (φ1, φ2, φ3) to (φ3, φ1, φ2).
        let a = predict_angles(s).unwrap();
        let b = predict_angles([s[2], s[0], s[1]]).unwrap();
        prop_assert_eq!(b, [a[2], a[0], a[1]]);
    }

    #[test]
    fn violated_triangle_has_no_balance(a in 0.1f64..1.0, b in 0.1f64..1.0, extra in 0.0f64..1.0) {
        let c = a + b + extra;
        prop_assert!(matches!(predict_angles([a, b, c]), Err(Error::NoBalance(..))));
        prop_assert!(matches!(predict_angles([c, a, b]), Err(Error::NoBalance(..))));
    }

    #[test]
    fn region_angles_are_rotation_invariant(
        t0 in 0.0f64..(2.0 * PI),
        g1 in 0.2f64..2.5,
        g2 in 0.2f64..2.5,
        shift in -10.0f64..10.0,
    ) {
        prop_assume!(g1 + g2 < 2.0 * PI - 0.2);
        let az = [t0, t0 + g1, t0 + g1 + g2];
        let a = region_angles(az);
        let b = region_angles(az.map(|x| x + shift));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        prop_assert!((a.iter().sum::<f64>() - 2.0 * PI).abs() <= 1e-12);
    }
}

#[test]
fn extraction_recovers_the_rays_of_the_initial_triod() {
    let spec = TripleWellSpec::equilateral();
    let c = solve_triple(&spec, &ConnectionParams { samples: 401, ..Default::default() }).unwrap();
    let rays_deg = [80.0, 215.0, 320.0];
    let rays = rays_deg.map(f64::to_radians);
    let (f, _) = init_triod(&spec, &c, rays, 241, 0.2, TubeParams::default()).unwrap();
    let fits = extract_interfaces(&f, &PhaseMap::new(&f), (8.0, 22.0)).unwrap();
    for (fit, want) in fits.iter().zip(rays_deg) {
        let got = fit.azimuth.to_degrees();
        let diff = (got - want + 180.0).rem_euclid(360.0) - 180.0;
        assert!(diff.abs() <= 0.5, "pair {:?}: {got} vs {want}", fit.pair);
        assert!(fit.points >= 10);
    }
}

#[test]
fn two_phase_field_has_no_third_interface() {
    let spec = TripleWellSpec::equilateral();
    let (a, b) = (spec.minima[0], spec.minima[1]);
    let f = GridField::from_fn(&spec, 101, 0.3, |x, _| {
        let t = 0.5 * (1.0 + (x / 2f64.sqrt()).tanh());
        a * (1.0 - t) + b * t
    })
    .unwrap();
    let err = extract_interfaces(&f, &PhaseMap::new(&f), (2.0, 14.0)).unwrap_err();
    assert!(matches!(err, Error::Extraction { .. }), "{err}");
}
