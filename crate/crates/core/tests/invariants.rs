//! Randomized invariants of the scalar layer.

use proptest::prelude::*;
use qism_core::algebra::{self, Coupling, Twist, VacuumRatios};
use qism_core::C64;

fn point() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn separated(pts: &[C64], c: f64) -> bool {
    pts.iter().enumerate().all(|(i, a)| {
        pts.iter().skip(i + 1).all(|b| {
            let d = (a - b).norm();
            d > 0.05 && (d - c).abs() > 0.05 && ((a - b) + c).norm() > 0.05 && ((a - b) - c).norm() > 0.05
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_is_one_plus_g(u in point(), v in point()) {
        let c = Coupling::default();
        prop_assume!(separated(&[u, v], c.value().re));
        let lhs = algebra::f(u, v, c).unwrap();
        let rhs = 1.0 + algebra::g(u, v, c).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        let back = algebra::log_f(u, v, c).unwrap().exp();
        prop_assert!((back - lhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn prod_f_factorizes(us in prop::collection::vec(point(), 1..4), vs in prop::collection::vec(point(), 1..4)) {
        let c = Coupling::default();
        let all: Vec<C64> = us.iter().chain(&vs).copied().collect();
        prop_assume!(separated(&all, c.value().re));
        let (a, b) = us.split_at(us.len() / 2);
        let whole = algebra::prod_f(&us, &vs, c).unwrap();
        let parts = algebra::prod_f(a, &vs, c).unwrap() * algebra::prod_f(b, &vs, c).unwrap();
        prop_assert!((whole - parts).norm() <= 1e-10 * whole.norm().max(1e-300));
    }

    #[test]
    fn tau_is_symmetric_in_each_level(
        xi in prop::collection::vec(point(), 3),
        u in prop::collection::vec(point(), 2),
        v in point(),
        w in point(),
    ) {
        let c = Coupling::default();
        let all: Vec<C64> = xi.iter().chain(&u).chain([&v, &w]).copied().collect();
        prop_assume!(separated(&all, c.value().re));
        let ratios = VacuumRatios::new(3, c, xi).unwrap();
        let tw = Twist::untwisted(3);
        let a = algebra::tau(w, &[u.clone(), vec![v]], &ratios, &tw).unwrap();
        let b = algebra::tau(w, &[vec![u[1], u[0]], vec![v]], &ratios, &tw).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn jacobian_matches_finite_differences(
        xi in prop::collection::vec(point(), 3),
        u in prop::collection::vec(point(), 2),
        v in point(),
    ) {
        let c = Coupling::default();
        let all: Vec<C64> = xi.iter().chain(&u).chain([&v]).copied().collect();
        prop_assume!(separated(&all, c.value().re));
        let ratios = VacuumRatios::new(3, c, xi).unwrap();
        let tw = Twist::new(vec![C64::new(1.0, 0.0), C64::new(1.1, 0.2), C64::new(0.9, -0.1)]).unwrap();
        let levels = vec![u, vec![v]];
        let jac = algebra::bethe_jacobian(&levels, &ratios, &tw).unwrap();
        let h = 1e-6;
        let n = 3;
        for q in 0..n {
            let shifted = |s: f64| {
                let mut l = levels.clone();
                let (k, j) = if q < 2 { (0, q) } else { (1, 0) };
                l[k][j] += s;
                algebra::bethe_residual(&l, &ratios, &tw).unwrap()
            };
            let (plus, minus) = (shifted(h), shifted(-h));
            for p in 0..n {
                // residuals are reduced mod 2πi, so undo any wrap between the two samples
                let d = algebra::principal_strip(plus[p] - minus[p]) / (2.0 * h);
                let scale = jac[p][q].norm().max(1.0);
                prop_assert!((d - jac[p][q]).norm() <= 1e-6 * scale, "p {p} q {q}: fd {d} analytic {}", jac[p][q]);
            }
        }
    }
}
