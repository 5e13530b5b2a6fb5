use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphere_fda::bundle::ThetaObjective;
use sphere_fda::curves::{to_tsrvc, warp_curve, WarpingFunction};
use sphere_fda::io::{latlon_to_sphere, sphere_to_latlon};
use sphere_fda::linalg::Vec3;
use sphere_fda::simulate::{random_smooth_curve, random_warp};
use sphere_fda::sphere::{arc_between, exp_sphere, log_sphere, SpherePoint};
use sphere_fda::warping::{dp_align_with_cost, DpOptions};

fn point() -> impl Strategy<Value = SpherePoint<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("away from the origin", |(x, y, z)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z)| SpherePoint::new(x, y, z))
}

fn separated() -> impl Strategy<Value = (SpherePoint<f64>, SpherePoint<f64>)> {
    (point(), point()).prop_filter("not antipodal", |(a, b)| a.dot(b) > -0.999)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exp_inverts_log((a, b) in separated()) {
        let v = log_sphere(&a, &b).unwrap();
        prop_assert!(exp_sphere(&a, &v.vec).distance(&b) < 1e-9);
        prop_assert!(v.vec.dot(&a.coords()).abs() < 1e-12);
    }

    #[test]
    fn arc_reaches_endpoint((a, b) in separated(), theta in -1.5..1.5f64) {
        let arc = arc_between(&a, &b, theta);
        prop_assert!(arc.endpoint().distance(&b) < 1e-9);
        prop_assert!(arc.evaluate(0.0).distance(&a) < 1e-12);
    }

    #[test]
    fn arc_transport_is_an_isometry((a, b) in separated(), theta in -1.5..1.5f64, s in 0.0..1.0f64, c in -1.0..1.0f64) {
        let arc = arc_between(&a, &b, theta);
        let [e1, e2] = a.tangent_basis();
        let v = e1 * c + e2 * (1.0 - c * c).sqrt();
        let moved = arc.transport_matrix(s).apply(&v);
        prop_assert!((moved.norm() - 1.0).abs() < 1e-12);
        prop_assert!(moved.dot(&arc.evaluate(s).coords()).abs() < 1e-12);
    }

    #[test]
    fn arc_has_constant_speed((a, b) in separated(), theta in -1.5..1.5f64, s in 0.0..1.0f64) {
        let arc = arc_between(&a, &b, theta);
        prop_assert!((arc.velocity(s).norm() - arc.length()).abs() < 1e-10);
    }

    #[test]
    fn latlon_round_trip(lat in -89.9..89.9f64, lon in -179.9..180.0f64) {
        let p = latlon_to_sphere::<f64>(lat, lon).unwrap();
        let (a, b) = sphere_to_latlon(&p);
        prop_assert!((a - lat).abs() < 1e-9 && (b - lon).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_warps_are_valid(seed in any::<u64>(), strength in 0.0..0.95f64) {
        let g = random_warp::<f64, _>(&mut ChaCha8Rng::seed_from_u64(seed), 101, strength);
        let v = g.values();
        prop_assert_eq!(v[0], 0.0);
        prop_assert_eq!(v[100], 1.0);
        prop_assert!(v.windows(2).all(|w| w[1] >= w[0]));
        let round = g.compose(&g.inverse());
        prop_assert!(round.sup_distance(&WarpingFunction::identity(101)) < 2e-2);
    }

    #[test]
    fn dp_never_worse_than_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = to_tsrvc(&random_smooth_curve::<f64, _>(&mut rng, 30, 1.0, 0.4)).unwrap();
        let b = to_tsrvc(&random_smooth_curve::<f64, _>(&mut rng, 30, 1.0, 0.4)).unwrap();
        let (_, cost) = dp_align_with_cost(&a.field, &b.field, &DpOptions::default()).unwrap();
        let (_, diagonal) = dp_align_with_cost(&a.field, &b.field, &DpOptions { max_slope: 1, ..DpOptions::default() }).unwrap();
        prop_assert!(cost <= diagonal + 1e-12);
    }

    #[test]
    fn objective_is_nonnegative_and_zero_on_self(seed in any::<u64>(), theta in -FRAC_PI_2..FRAC_PI_2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_smooth_curve::<f64, _>(&mut rng, 40, 1.0, 0.3);
        let q = random_smooth_curve::<f64, _>(&mut rng, 40, 1.0, 0.3);
        let (rp, rq) = (to_tsrvc(&p).unwrap(), to_tsrvc(&q).unwrap());
        prop_assert!(ThetaObjective::new(&rp, &rq).unwrap().value(theta) >= 0.0);
        prop_assert!(ThetaObjective::new(&rp, &rp).unwrap().value(theta).abs() < 1e-12);
    }

    #[test]
    fn warping_by_identity_is_exact(seed in any::<u64>()) {
        let p = random_smooth_curve::<f64, _>(&mut ChaCha8Rng::seed_from_u64(seed), 50, 1.0, 0.3);
        prop_assert_eq!(warp_curve(&p, &WarpingFunction::identity(50)).unwrap(), p);
    }

    #[test]
    fn vectors_normalize_onto_sphere(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64) {
        prop_assume!(x * x + y * y + z * z > 1e-6);
        let p = SpherePoint::from_vec(Vec3::new(x, y, z)).unwrap();
        prop_assert!((p.coords().norm() - 1.0).abs() < 1e-14);
    }
}
