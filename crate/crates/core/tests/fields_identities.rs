mod common;

use algebroid_lab::algebroid::{bracket_jets, su2_example, Section};
use algebroid_lab::connection::{basic_e_jets, Connection, PQForm, ValueKind};
use algebroid_lab::fields::*;
use algebroid_lab::gauge::*;
use algebroid_lab::jets::{values, Expr, Jet2, ScalarField, TensorField};
use common::*;

struct Case {
    name: &'static str,
    data: GaugeData,
    cfg: FieldConfig,
    pts: Vec<Vec<f64>>,
}

fn spacetime_points(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    algebroid_lab::algebroid::Domain::cube(d, -0.5, 0.5).sample(seed, count)
}

fn config(d: usize, r: usize, centre: &[f64], scale: f64, seed: u64) -> FieldConfig {
    FieldConfig::random_poly(d, r, centre, scale, 2, &mut rng(seed)).unwrap()
}

fn compat_cases(d: usize) -> Vec<Case> {
    let mk = |name, data: GaugeData, centre: Vec<f64>, scale, seed| {
        let r = data.algebroid().r();
        Case { name, data, cfg: config(d, r, &centre, scale, seed), pts: spacetime_points(d, 5, seed) }
    };
    vec![
        mk("su2", su2_gauge_data().unwrap(), vec![0.5, 0.3, -0.4], 0.3, 1),
        mk("electroweak", electroweak_gauge_data(0.65, 0.35, 1).unwrap(), vec![1.0, 0.9, 1.1, 1.0], 0.1, 2),
        mk("lab-nonclassical", canonical_nonclassical_example().unwrap(), vec![0.2, -0.1, 0.3], 0.3, 3),
        mk("tangent-flat", tangent_flat_example(2).unwrap(), vec![0.05, -0.05], 0.15, 4),
        mk("tangent-flat-3", tangent_flat_example(3).unwrap(), vec![0.0, 0.05, -0.05], 0.15, 5),
    ]
}

/// Arbitrary connection and primitive, no compatibility.
fn generic_cases(d: usize) -> Vec<Case> {
    let mut out = Vec::new();
    for (k, (name, conn)) in generic_fixtures().into_iter().enumerate() {
        let e = conn.algebroid().clone();
        let (n, r) = (e.n(), e.r());
        let mut g = rng(100 + k as u64);
        let zeta = PQForm::random_poly(2, 0, n, r, ValueKind::E, 2, &mut g);
        let data = GaugeData::new_unchecked(conn, zeta, Metric::euclidean(n, r)).unwrap();
        let centre: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 - 0.05).collect();
        out.push(Case { name, data, cfg: config(d, r, &centre, 0.2, 200 + k as u64), pts: spacetime_points(d, 4, k as u64) });
    }
    out
}

fn mx(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[test]
fn trivial_limits() {
    let d = su2_gauge_data().unwrap();
    let e = d.algebroid().clone();
    let x = Expr::x;
    let cfg = FieldConfig::from_exprs(
        2,
        vec![x(0) * 0.3 + 0.2, x(1) * x(0) + 0.1, x(1) * 0.5],
        vec![Expr::c(0.0); 6],
        vec![Expr::c(0.0); 3],
    )
    .unwrap();
    let p = [0.2, -0.3];
    let dm = minimal_coupling(&e, &cfg, &p).unwrap();
    let dphi = values(&cfg.phi().eval_at(&p).unwrap().iter().flat_map(|j| [j.partial(0), j.partial(1)]).collect::<Vec<_>>());
    assert!(mx(&sub(&dm, &dphi)) < 1e-15);
    let (a, b) = gauge_delta(d.connection(), &cfg, &p).unwrap();
    assert!(mx(&a) == 0.0 && mx(&b) == 0.0);
    assert!(mx(&field_strength_f(d.connection(), &cfg, &p).unwrap()) == 0.0);
    assert!(mx(&pullback_connection(d.connection(), &cfg, &p).unwrap()) == 0.0);
    let flowed = gauge_flow_step(d.connection(), &cfg, 0.1, Scheme::Rk4).unwrap();
    assert_eq!(values(&flowed.phi().eval_at(&p).unwrap()), values(&cfg.phi().eval_at(&p).unwrap()));
}

#[test]
fn classical_field_strength_and_variation() {
    let d = su2_gauge_data().unwrap();
    let c = algebroid_lab::algebroid::su2_structure();
    let cfg = config(2, 3, &[0.5, 0.3, -0.4], 0.3, 7);
    for p in spacetime_points(2, 10, 8) {
        let f = field_strength_f(d.connection(), &cfg, &p).unwrap();
        let aj = cfg.a().eval_at(&p).unwrap();
        let ej = cfg.eps().eval_at(&p).unwrap();
        let (_, da) = gauge_delta(d.connection(), &cfg, &p).unwrap();
        for a in 0..3 {
            let mut s = aj[a * 2 + 1].grad(0) - aj[a * 2].grad(1);
            for b in 0..3 {
                for k in 0..3 {
                    s += c[(a * 3 + b) * 3 + k] * aj[b * 2].value() * aj[k * 2 + 1].value();
                }
            }
            assert!((f[(a * 2) * 2 + 1] - s).abs() < 1e-12);
            for mu in 0..2 {
                let mut t = -ej[a].grad(mu);
                for b in 0..3 {
                    for k in 0..3 {
                        t += c[(a * 3 + b) * 3 + k] * ej[b].value() * aj[k * 2 + mu].value();
                    }
                }
                assert!((da[a * 2 + mu] - t).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn lab_variation_is_adjoint() {
    let d = nonclassical_r4_example().unwrap();
    let cfg = config(2, 4, &[0.1, 0.2, -0.1, 0.0], 0.3, 9);
    for p in spacetime_points(2, 5, 10) {
        let fj = cfg.jets_at(&p).unwrap();
        let (aj, cj) = pulled(d.connection(), &fj).unwrap();
        let (dp, da) = gauge_delta(d.connection(), &cfg, &p).unwrap();
        assert!(mx(&dp) == 0.0);
        let om = pullback_omega_jets(&cj, &fj);
        for a in 0..4 {
            for mu in 0..2 {
                let mut t = -fj.eps[a].grad(mu);
                for b in 0..4 {
                    t -= (om[(a * 4 + b) * 2 + mu] * fj.eps[b]).value();
                    for c in 0..4 {
                        t += (aj.c(a, b, c) * fj.eps[b] * fj.a(c, mu)).value();
                    }
                }
                assert!((da[a * 2 + mu] - t).abs() < 1e-12);
            }
        }
        let flowed = gauge_flow_step(d.connection(), &cfg, 0.05, Scheme::Rk4).unwrap();
        assert_eq!(values(&flowed.phi().eval_at(&p).unwrap()), values(&cfg.phi().eval_at(&p).unwrap()));
    }
}

#[test]
fn pullback_commutes_with_exterior_derivative() {
    for case in generic_cases(3) {
        let e = case.data.algebroid();
        let alpha = PQForm::random_poly(1, 0, e.n(), e.r(), ValueKind::E, 2, &mut rng(11));
        for p in &case.pts {
            let r = pullback_commutes_with_d(case.data.connection(), &alpha, &case.cfg, p).unwrap();
            assert!(r < 1e-8, "{}: {r}", case.name);
        }
    }
}

/// `d/dt Fᵃ` along the flow against `(δ_ε F)ᵃ + εᶜ(∇ᵇᵃˢ_{e_c}e_b)ᵃ Fᵇ`.
fn component_oracle(case: &Case, g_field: bool, h: f64) -> f64 {
    let conn = case.data.connection();
    let ev = |cfg: &FieldConfig, p: &[f64]| -> Vec<f64> {
        if g_field {
            field_strength_g(&case.data, cfg, p).unwrap()
        } else {
            field_strength_f(conn, cfg, p).unwrap()
        }
    };
    let plus = gauge_flow_step(conn, &case.cfg, h, Scheme::Rk4).unwrap();
    let minus = gauge_flow_step(conn, &case.cfg, -h, Scheme::Rk4).unwrap();
    let mut worst: f64 = 0.0;
    for p in &case.pts {
        let fd: Vec<f64> = ev(&plus, p).iter().zip(ev(&minus, p)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let base = ev(&case.cfg, p);
        let delta = if g_field { gauge_delta_g(&case.data, &case.cfg, p).unwrap() } else { gauge_delta_f(conn, &case.cfg, p).unwrap() };
        let fj = case.cfg.jets_at(p).unwrap();
        let y = fj.phi_values();
        let (aj, cj) = conn.data_at(&y).unwrap();
        let g = basic_e_jets(&aj, &cj);
        let (r, d) = (aj.r, fj.d);
        for a in 0..r {
            for m in 0..d * d {
                let mut pred = delta[a * d * d + m];
                for b in 0..r {
                    for c in 0..r {
                        pred += fj.eps[c].value() * g.g(a, c, b).value() * base[b * d * d + m];
                    }
                }
                worst = worst.max((fd[a * d * d + m] - pred).abs());
            }
        }
    }
    worst
}

#[test]
fn field_strength_variation_matches_flow() {
    for case in generic_cases(2) {
        let r = component_oracle(&case, false, 1e-4);
        assert!(r < 1e-5, "{}: {r}", case.name);
    }
}

#[test]
fn g_variation_matches_flow() {
    for case in generic_cases(2) {
        let r = component_oracle(&case, true, 1e-4);
        assert!(r < 1e-5, "{}: {r}", case.name);
    }
}

#[test]
fn g_is_invariant_for_compatible_data() {
    for case in compat_cases(2) {
        for p in &case.pts {
            let dg = gauge_delta_g(&case.data, &case.cfg, p).unwrap();
            assert!(mx(&dg) < 1e-7, "{}: {}", case.name, mx(&dg));
        }
    }
    let su2 = su2_gauge_data().unwrap();
    let cfg = config(2, 3, &[0.1, 0.2, 0.3], 0.3, 12);
    for p in spacetime_points(2, 5, 13) {
        assert!(mx(&gauge_delta_f(su2.connection(), &cfg, &p).unwrap()) < 1e-12);
    }
}

fn density(case: &Case, cfg: &FieldConfig, p: &[f64]) -> f64 {
    let n = case.data.algebroid().n();
    let v = ScalarField::from_expr(n, (0..n).map(|i| Expr::x(i) * Expr::x(i)).fold(Expr::c(0.0), |a, b| a + b));
    let v = if case.name == "electroweak" || case.name.starts_with("tangent") { ScalarField::constant(n, 0.3) } else { v };
    let d = cfg.d();
    lagrangian_density(&case.data, &Spacetime::euclidean(d), &v, cfg, p).unwrap()
}

#[test]
fn lagrangian_is_gauge_invariant_to_first_order() {
    for case in compat_cases(2) {
        let conn = case.data.connection();
        for p in case.pts.iter().take(2) {
            let l0 = density(&case, &case.cfg, p);
            let rates: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&dt| (density(&case, &gauge_flow_step(conn, &case.cfg, dt, Scheme::Euler).unwrap(), p) - l0).abs() / dt)
                .collect();
            let slope = (rates[0].ln() - rates[2].ln()) / (1e-2f64.ln() - 1e-4f64.ln());
            assert!((slope - 1.0).abs() < 0.2, "{}: rates {rates:?}", case.name);
            let rk = (density(&case, &gauge_flow_step(conn, &case.cfg, 1e-2, Scheme::Rk4).unwrap(), p) - l0).abs();
            assert!(rk < 1e-7, "{}: {rk}", case.name);
        }
    }
}

#[test]
fn redefinition_covariance_of_fields() {
    for case in compat_cases(2) {
        let e = case.data.algebroid().clone();
        let mut g = rng(21);
        for _ in 0..2 {
            let red = Redef::random_poly(&e, 2, 0.05, &mut g).unwrap();
            let t = redefine(&case.data, &red).unwrap();
            let tcfg = redefine_fields(&e, &red, &case.cfg).unwrap();
            for p in &case.pts {
                let (big, hat) = lambda_at_field(&e, &red, &case.cfg, p).unwrap();
                let (n, r, d) = (e.n(), e.r(), case.cfg.d());
                let dd = minimal_coupling(&e, &case.cfg, p).unwrap();
                let tdd = minimal_coupling(&e, &tcfg, p).unwrap();
                for i in 0..n {
                    for mu in 0..d {
                        let pred: f64 = (0..n).map(|j| hat[i * n + j] * dd[j * d + mu]).sum();
                        assert!((tdd[i * d + mu] - pred).abs() < 1e-9, "{} 𝔇", case.name);
                    }
                }
                let gf = field_strength_g(&case.data, &case.cfg, p).unwrap();
                let tg = field_strength_g(&t, &tcfg, p).unwrap();
                for a in 0..r {
                    for m in 0..d * d {
                        let pred: f64 = (0..r).map(|b| big[a * r + b] * gf[b * d * d + m]).sum();
                        assert!((tg[a * d * d + m] - pred).abs() < 1e-8, "{} G", case.name);
                    }
                }
                let (l0, l1) = (density(&case, &case.cfg, p), density(&Case { data: t.clone(), cfg: tcfg.clone(), pts: vec![], name: case.name }, &tcfg, p));
                assert!((l0 - l1).abs() < 1e-8, "{}: {l0} vs {l1}", case.name);
            }
        }
    }
}

#[test]
fn bianchi_defect_equals_pulled_obstruction() {
    let d = canonical_nonclassical_example().unwrap();
    let cfg = config(3, 4, &[0.1, -0.2, 0.2], 0.4, 31);
    for p in spacetime_points(3, 6, 32) {
        let b = bianchi_g_residual(&d, &cfg, &p).unwrap();
        assert!(b.residual < 1e-7 && b.pulled_obstruction > 1e-3, "{b:?}");
    }
    let r4 = nonclassical_r4_example().unwrap();
    let cfg = config(4, 4, &[0.1, -0.2, 0.2, 0.1], 0.4, 33);
    for p in algebroid_lab::algebroid::Domain::cube(4, -0.5, 0.5).sample(34, 4) {
        let b = bianchi_g_residual(&r4, &cfg, &p).unwrap();
        assert!(b.residual < 1e-7, "{b:?}");
    }
    let k = d.algebroid().clone();
    let classical = GaugeData::new(Connection::flat(&k), PQForm::zeros(2, 0, 3, 4, ValueKind::E), Metric::euclidean(3, 4), 1e-9).unwrap();
    let cfg = config(3, 4, &[0.1, -0.2, 0.2], 0.4, 35);
    let b = bianchi_g_residual(&classical, &cfg, &[0.1, 0.2, 0.3]).unwrap();
    assert!(b.residual < 1e-12 && b.pulled_obstruction == 0.0);
    assert!(bianchi_g_residual(&su2_gauge_data().unwrap(), &config(3, 3, &[0.1, 0.1, 0.1], 0.2, 36), &[0.0; 3]).is_err());
}

#[test]
fn nested_variations_give_basic_curvature() {
    for case in generic_cases(2) {
        let e = case.data.algebroid();
        let (mu, nu) = (sec(e, 41), sec(e, 42));
        for p in &case.pts {
            let nc = nested_gauge_curvature(case.data.connection(), &mu, &nu, &case.cfg, p).unwrap();
            assert!(nc.residual < 1e-7 && nc.magnitude > 1e-3, "{}: {nc:?}", case.name);
            let same = nested_gauge_curvature(case.data.connection(), &mu, &mu, &case.cfg, p).unwrap();
            assert!(same.magnitude < 1e-12 && same.residual < 1e-9);
        }
    }
    let su2 = su2_gauge_data().unwrap();
    let cfg = config(2, 3, &[0.1, 0.2, 0.3], 0.3, 43);
    let e = su2.algebroid();
    let nc = nested_gauge_curvature(su2.connection(), &sec(e, 44), &sec(e, 45), &cfg, &[0.1, 0.1]).unwrap();
    assert!(nc.magnitude < 1e-12 && nc.residual < 1e-9);
}

#[test]
fn pre_bracket_of_pullbacks() {
    let e = su2_example();
    let cfg = config(2, 3, &[0.1, 0.2, 0.3], 0.3, 47);
    let (mu, nu) = (sec(&e, 48), sec(&e, 49));
    for y in points(&e, 5) {
        let pb = pullback_pre_bracket(&e, &mu, &nu, &y).unwrap();
        let br = values(&bracket_jets(&e.jets_at(&y).unwrap(), &mu.jets_at(&y).unwrap(), &nu.jets_at(&y).unwrap()));
        assert!(mx(&sub(&pb, &br)) < 1e-12);
    }
    let th = [0.3, -0.2, 0.5];
    assert!(mx(&pre_bracket(&e, &th, &th, &cfg, &[0.1, 0.2]).unwrap()) < 1e-15);
    let frame = |a| Section::frame(3, a, 3);
    let v = pre_bracket(&e, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &cfg, &[0.0, 0.0]).unwrap();
    let y = values(&cfg.phi().eval_at(&[0.0, 0.0]).unwrap());
    let br = values(&bracket_jets(&e.jets_at(&y).unwrap(), &frame(0).jets_at(&y).unwrap(), &frame(1).jets_at(&y).unwrap()));
    assert!(mx(&sub(&v, &br)) < 1e-14);
}

#[test]
fn flow_leaving_domain_is_reported() {
    let d = su2_gauge_data().unwrap();
    let x = Expr::x;
    let cfg = FieldConfig::from_exprs(
        2,
        vec![Expr::c(1.9), Expr::c(1.9), Expr::c(1.9)],
        vec![x(0); 6],
        vec![Expr::c(50.0), Expr::c(-50.0), Expr::c(50.0)],
    )
    .unwrap();
    let f = gauge_flow_step(d.connection(), &cfg, 0.5, Scheme::Rk4).unwrap();
    assert!(f.phi().eval_at(&[0.0, 0.0]).is_err());
    let _ = TensorField::zeros(vec![1], 1);
    let _ = Jet2::zero();
}
