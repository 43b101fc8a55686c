use algebroid_lab::algebroid::check_axioms;
use algebroid_lab::connection::{basic_curvature, curvature};
use algebroid_lab::gauge::{compat_report, redefine, Redef};
use algebroid_lab::jets::Jet2;
use algebroid_lab::octonion::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oct(v: [f64; 8]) -> Oct {
    Oct(v)
}

fn random_unit(g: &mut ChaCha8Rng) -> Oct {
    let z = Oct(std::array::from_fn(|_| g.gen_range(-1.0..1.0)));
    z.scale(1.0 / z.norm())
}

prop_compose! {
    fn arb_oct()(v in prop::array::uniform8(-2.0f64..2.0)) -> Oct { oct(v) }
}
prop_compose! {
    fn arb_im()(v in prop::array::uniform7(-2.0f64..2.0)) -> [f64; 7] { v }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn norm_is_multiplicative(z in arb_oct(), w in arb_oct()) {
        let lhs = (z * w).norm();
        let rhs = z.norm() * w.norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn p_identity(x in arb_im(), y in arb_im()) {
        prop_assert!(p_double_residual(&x, &y) < 1e-12);
        prop_assert!(pmap(&x, &x).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn left_multiplication_is_skew(z in arb_oct(), w in arb_oct(), j in 1usize..8) {
        prop_assert!(adjoint_skew_residual(j, &z, &w) < 1e-12);
    }

    #[test]
    fn conjugate_and_inverse(z in arb_oct()) {
        let n2 = z.dot(&z);
        let r = z * z.conj() - Oct::e(0).scale(n2);
        prop_assert!(r.max_abs() < 1e-12);
        if let Some(zi) = z.inverse() {
            prop_assert!((z * zi - Oct::e(0)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn chart_is_unit_with_tangent_jacobian(u in prop::array::uniform7(-0.75f64..0.75)) {
        prop_assert!((s7_chart(&u).norm() - 1.0).abs() < 1e-14);
        let uj = Jet2::variables(&u).unwrap();
        let z = s7_chart_jets(&uj).unwrap();
        let jac = s7_chart_jac(&uj).unwrap();
        for k in 0..7 {
            let t: f64 = (0..8).map(|m| jac[m * 7 + k].value() * z[m].value()).sum();
            prop_assert!(t.abs() < 1e-12);
            for m in 0..8 {
                prop_assert!((jac[m * 7 + k].value() - z[m].grad(k)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn three_form_values() {
    let f = phi();
    let e = |j: usize| std::array::from_fn::<f64, 7, _>(|k| if k + 1 == j { 1.0 } else { 0.0 });
    assert_eq!(f.eval(&e(1), &e(2), &e(3)), 1.0);
    assert_eq!(f.eval(&e(1), &e(1), &e(5)), 0.0);
    assert_eq!(f.nonzero_count(), 42);
    for i in 1..8 {
        for j in 1..8 {
            let p = pmap(&e(i), &e(j));
            let prod = Oct::e(i) * Oct::e(j);
            assert_eq!(prod.im(), p);
            assert_eq!(prod.re(), if i == j { -1.0 } else { 0.0 });
        }
    }
}

#[test]
fn frame_is_orthonormal_and_tangent() {
    let mut g = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let z = random_unit(&mut g);
        let ys: Vec<Oct> = (1..8).map(|j| frame_y(&z, j).unwrap()).collect();
        for (j, y) in ys.iter().enumerate() {
            assert!(y.dot(&z).abs() < 1e-12);
            for (k, w) in ys.iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((y.dot(w) - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn anchor_reproduces_the_frame() {
    let alg = s7_algebroid().unwrap();
    for u in s7_domain().sample(9, 10) {
        let aj = alg.jets_at(&u).unwrap();
        let uj = Jet2::variables(&u).unwrap();
        let jac = s7_chart_jac(&uj).unwrap();
        let ua: [f64; 7] = u.clone().try_into().unwrap();
        let z = s7_chart(&ua);
        for a in 0..7 {
            let y = frame_y(&z, a + 1).unwrap();
            for m in 0..8 {
                let v: f64 = (0..7).map(|k| jac[m * 7 + k].value() * aj.rho(a, k).value()).sum();
                assert!((v - y.0[m]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn s7_axioms_and_compatibility() {
    let d = s7_gauge_data().unwrap();
    let pts = s7_domain().sample(20, 20);
    let ax = check_axioms(d.algebroid(), &pts, 1e-8).unwrap();
    assert!(ax.pass, "{ax:?}");
    let rep = compat_report(&d, &pts[..8], 1e-7).unwrap();
    assert!(rep.pass && rep.max_curvature > 1e-3, "{rep:?}");
    assert!(rep.basic_curvature < 1e-7 && rep.kappa_compatibility < 1e-8);
}

#[test]
fn redefined_s7_data_stays_curved() {
    let d = s7_gauge_data().unwrap();
    let mut g = ChaCha8Rng::seed_from_u64(17);
    let pts = s7_domain().sample(21, 3);
    for _ in 0..2 {
        let red = Redef::random_poly(d.algebroid(), 2, 0.05, &mut g).unwrap();
        let t = redefine(&d, &red).unwrap();
        for x in &pts {
            assert!(basic_curvature(t.connection(), x).unwrap().max_abs() < 1e-6);
            assert!(curvature(t.connection(), x).unwrap().max_abs() > 1e-3);
        }
    }
}
