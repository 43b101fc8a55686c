mod common;

use algebroid_lab::algebroid::{check_axioms, su2_example, tangent_algebroid, Domain, LieAlgebroid};
use algebroid_lab::connection::{
    basic_curvature_form, basic_e_jets, basic_tn_jets, curvature_form, d_basic_jets, d_nabla_jets, econn_e_jets,
    econn_tn_jets, Connection, PQForm, ValueKind,
};
use algebroid_lab::gauge::*;
use algebroid_lab::jets::{values, Expr, Jet2, TensorField};
use algebroid_lab::Error;
use common::*;

fn examples() -> Vec<(&'static str, GaugeData)> {
    vec![
        ("su2", su2_gauge_data().unwrap()),
        ("electroweak", electroweak_gauge_data(0.65, 0.35, 1).unwrap()),
        ("lab-nonclassical", canonical_nonclassical_example().unwrap()),
        ("tangent-flat", tangent_flat_example(2).unwrap()),
    ]
}

fn lambdas(alg: &LieAlgebroid, count: usize, seed: u64) -> Vec<Redef> {
    let mut g = rng(seed);
    (0..count).map(|_| Redef::random_poly(alg, 2, 0.05, &mut g).unwrap()).collect()
}

fn mat_vec(m: &[Jet2], v: &[Jet2], d: usize) -> Vec<Jet2> {
    (0..d).map(|a| (0..d).map(|b| m[a * d + b] * v[b]).sum()).collect()
}

#[test]
fn examples_pass_compatibility() {
    for (name, d) in examples() {
        let rep = compat_report(&d, &points(d.algebroid(), 10), 1e-8).unwrap();
        assert!(rep.pass, "{name}: {rep:?}");
    }
    let t = tangent_flat_example(3).unwrap();
    let rep = compat_report(&t, &points(t.algebroid(), 10), 1e-8).unwrap();
    assert!(rep.pass && rep.max_curvature > 1e-3, "{rep:?}");
}

#[test]
fn non_invariant_kappa_fails_on_lab() {
    let k = u1_su2_lab(3, Domain::cube(3, -1.0, 1.0)).unwrap();
    let mut kv = vec![0.0; 16];
    for (a, v) in [1.0, 1.0, 2.0, 3.0].into_iter().enumerate() {
        kv[a * 5] = v;
    }
    let metric = Metric::new(
        TensorField::constant(vec![4, 4], 3, kv),
        TensorField::constant(vec![3, 3], 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]),
        k.domain(),
    )
    .unwrap();
    let zeta = PQForm::zeros(2, 0, 3, 4, ValueKind::E);
    let conn = Connection::flat(&k);
    assert!(matches!(GaugeData::new(conn.clone(), zeta.clone(), metric.clone(), 1e-9), Err(Error::Precondition { .. })));
    let d = GaugeData::new_unchecked(conn, zeta, metric).unwrap();
    let rep = compat_report(&d, &points(&k, 5), 1e-9).unwrap();
    assert!(!rep.pass && rep.kappa_compatibility > 0.5 && rep.curvature_primitive < 1e-12);
}

#[test]
fn metric_rejects_indefinite() {
    let dom = Domain::cube(1, -1.0, 1.0);
    let bad = TensorField::constant(vec![2, 2], 1, vec![1.0, 0.0, 0.0, -1.0]);
    let one = TensorField::constant(vec![1, 1], 1, vec![1.0]);
    assert!(Metric::new(bad, one, &dom).is_err());
}

#[test]
fn lambda_operator_identities() {
    let e = su2_example();
    for red in lambdas(&e, 5, 3) {
        for x in points(&e, 5) {
            let m = lambda_operators(&e, &red, &x).unwrap();
            assert!((m.det - m.det_hat).abs() < 1e-9 * m.det.abs());
            let aj = e.jets_at(&x).unwrap();
            let lam = values(&red.jets_at(&x).unwrap());
            // Λ⁻¹ = 1 + Λ⁻¹λρ
            for a in 0..3 {
                for b in 0..3 {
                    let mut s = if a == b { 1.0 } else { 0.0 };
                    for c in 0..3 {
                        for i in 0..3 {
                            s += m.lambda_inv[a * 3 + c] * lam[i * 3 + c] * aj.rho(b, i).value();
                        }
                    }
                    assert!((s - m.lambda_inv[a * 3 + b]).abs() < 1e-10);
                }
            }
        }
    }
    let k = u1_su2_lab(2, Domain::cube(2, -1.0, 1.0)).unwrap();
    let red = lambdas(&k, 1, 4).remove(0);
    let m = lambda_operators(&k, &red, &[0.2, 0.1]).unwrap();
    assert!(m.lambda.iter().enumerate().all(|(k, v)| *v == if k % 5 == 0 { 1.0 } else { 0.0 }));
}

#[test]
fn singular_lambda_is_rejected() {
    let t = tangent_algebroid(2);
    let f = TensorField::constant(vec![2, 2], 2, vec![1.0, 0.0, 0.0, 1.0]);
    let form = PQForm::new(1, 0, 2, 2, ValueKind::E, f, t.domain()).unwrap();
    assert!(matches!(Redef::new(&t, form), Err(Error::NonInvertible(_))));
}

#[test]
fn zero_lambda_fixes_everything() {
    for (name, d) in examples() {
        let n = d.algebroid().n();
        let r = d.algebroid().r();
        let t = redefine(&d, &Redef::zero(n, r)).unwrap();
        for x in points(d.algebroid(), 5) {
            let w = diff(&d.connection().jets_at(&x).unwrap().omega, &t.connection().jets_at(&x).unwrap().omega);
            let z = d.zeta().jets_at(&x).unwrap().max_diff(&t.zeta().jets_at(&x).unwrap());
            let k = diff(&d.metric().kappa().eval_at(&x).unwrap(), &t.metric().kappa().eval_at(&x).unwrap());
            assert!(w < 1e-14 && z < 1e-14 && k < 1e-14, "{name}");
        }
    }
}

#[test]
fn basic_connections_are_conjugated() {
    for (name, conn) in generic_fixtures() {
        let e = conn.algebroid().clone();
        let (n, r) = (e.n(), e.r());
        for red in lambdas(&e, 2, 7) {
            let tc = redefine_connection(&conn, &red).unwrap();
            for x in points(&e, 5) {
                let (aj, cj) = conn.data_at(&x).unwrap();
                let tj = tc.jets_at(&x).unwrap();
                let ops = lambda_ops(&aj, &red.jets_at(&x).unwrap()).unwrap();
                let (g, tg) = (basic_e_jets(&aj, &cj), basic_e_jets(&aj, &tj));
                let (b, tb) = (basic_tn_jets(&aj, &cj), basic_tn_jets(&aj, &tj));
                let mu = sec(&e, 1).jets_at(&x).unwrap();
                let nu = sec(&e, 2).jets_at(&x).unwrap();
                let lhs = econn_e_jets(&aj, &tg, &mu, &nu);
                let inner = econn_e_jets(&aj, &g, &mu, &mat_vec(&ops.big_inv, &nu, r));
                assert!(diff(&lhs, &mat_vec(&ops.big, &inner, r)) < 1e-8, "{name} on E {}", diff(&lhs, &mat_vec(&ops.big, &inner, r)));
                let y = eval_exprs(&vf(&e, 3), &x);
                let lhs = econn_tn_jets(&aj, &tb, &mu, &y);
                let inner = econn_tn_jets(&aj, &b, &mu, &mat_vec(&ops.hat_inv, &y, n));
                assert!(diff(&lhs, &mat_vec(&ops.hat, &inner, n)) < 1e-8, "{name} on TN");
            }
        }
    }
}

#[test]
fn lab_redefinition_is_adjoint_shift() {
    let d = nonclassical_r4_example().unwrap();
    let k = d.algebroid().clone();
    let (n, r) = (4, 4);
    for red in lambdas(&k, 3, 9) {
        let t = redefine(&d, &red).unwrap();
        for x in points(&k, 4) {
            let (aj, cj) = d.connection().data_at(&x).unwrap();
            let tj = t.connection().jets_at(&x).unwrap();
            let lam = red.jets_at(&x).unwrap();
            for b in 0..r {
                for a in 0..r {
                    for i in 0..n {
                        let ad: Jet2 = (0..r).map(|c| lam[i * r + c] * aj.c(b, c, a)).sum();
                        assert!((tj.om(b, a, i) - (cj.om(b, a, i) - ad)).value().abs() < 1e-10);
                    }
                }
            }
            let z = d.zeta().jets_at(&x).unwrap();
            let tz = t.zeta().jets_at(&x).unwrap();
            let mut lam_form = algebroid_lab::connection::FormJets::zeros(1, 0, n, r, ValueKind::E);
            lam_form.comps = lam.clone();
            let dl = d_nabla_jets(&lam_form, &cj).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let li: Vec<Jet2> = (0..r).map(|a| lam[i * r + a]).collect();
                    let lj: Vec<Jet2> = (0..r).map(|a| lam[j * r + a]).collect();
                    let br = algebroid_lab::algebroid::bracket_jets(&aj, &li, &lj);
                    for c in 0..r {
                        let pred = z.get(&[i, j], &[])[c] - dl.get(&[i, j], &[])[c] + br[c];
                        assert!((tz.get(&[i, j], &[])[c] - pred).value().abs() < 1e-10);
                    }
                }
            }
            let m = t.metric();
            assert!(diff(&m.kappa().eval_at(&x).unwrap(), &d.metric().kappa().eval_at(&x).unwrap()) < 1e-15);
        }
    }
}

#[test]
fn redefinition_preserves_compatibility() {
    for (name, d) in examples() {
        for red in lambdas(d.algebroid(), 2, 13) {
            let t = redefine(&d, &red).unwrap();
            let rep = compat_report(&t, &points(d.algebroid(), 6), 1e-7).unwrap();
            assert!(rep.pass, "{name}: {rep:?}");
        }
    }
}

#[test]
fn basic_flatness_survives_redefinition() {
    for (name, conn) in flat_basic_fixtures() {
        for red in lambdas(conn.algebroid(), 2, 17) {
            let t = redefine_connection(&conn, &red).unwrap();
            for x in points(conn.algebroid(), 5) {
                let (aj, tj) = t.data_at(&x).unwrap();
                assert!(basic_curvature_form(&aj, &tj).max_abs() < 1e-7, "{name}");
            }
        }
    }
}

#[test]
fn zeta_hat_is_antisymmetric_and_vanishes_at_zero() {
    let d = su2_gauge_data().unwrap();
    let red = lambdas(d.algebroid(), 1, 19).remove(0);
    let zh = zeta_hat(d.connection(), &red).unwrap();
    zh.check_antisymmetry(&points(d.algebroid(), 5), 1e-12).unwrap();
    let z0 = zeta_hat(d.connection(), &Redef::zero(3, 3)).unwrap();
    assert!(z0.jets_at(&[0.3, -0.2, 0.5]).unwrap().max_abs() < 1e-15);
}

fn max_table_diff(a: &GaugeData, b: &GaugeData, x: &[f64]) -> f64 {
    let w = diff(&a.connection().jets_at(x).unwrap().omega, &b.connection().jets_at(x).unwrap().omega);
    let z = a.zeta().jets_at(x).unwrap().max_diff(&b.zeta().jets_at(x).unwrap());
    let k = diff(&a.metric().kappa().eval_at(x).unwrap(), &b.metric().kappa().eval_at(x).unwrap());
    let g = diff(&a.metric().g().eval_at(x).unwrap(), &b.metric().g().eval_at(x).unwrap());
    w.max(z).max(k).max(g)
}

#[test]
fn inverse_and_composition_laws() {
    for (name, d) in examples() {
        let e = d.algebroid().clone();
        let ls = lambdas(&e, 2, 23);
        let (l1, l2) = (&ls[0], &ls[1]);
        let back = redefine(&redefine(&d, l1).unwrap(), &inverse_lambda(&e, l1)).unwrap();
        let twice = redefine(&redefine(&d, l1).unwrap(), l2).unwrap();
        let once = redefine(&d, &compose_lambda(&e, l1, l2).unwrap()).unwrap();
        let cancel = compose_lambda(&e, l1, &inverse_lambda(&e, l1)).unwrap();
        for x in points(&e, 20) {
            assert!(max_table_diff(&d, &back, &x) < 1e-8, "{name} inverse {}", max_table_diff(&d, &back, &x));
            assert!(max_table_diff(&twice, &once, &x) < 1e-8, "{name} composition {}", max_table_diff(&twice, &once, &x));
            assert!(norm(&cancel.jets_at(&x).unwrap()) < 1e-12, "{name} cancel");
        }
    }
}

#[test]
fn composition_is_associative() {
    let e = su2_example();
    let ls = lambdas(&e, 3, 29);
    let left = compose_lambda(&e, &compose_lambda(&e, &ls[0], &ls[1]).unwrap(), &ls[2]).unwrap();
    let right = compose_lambda(&e, &ls[0], &compose_lambda(&e, &ls[1], &ls[2]).unwrap()).unwrap();
    for x in points(&e, 10) {
        assert!(diff(&left.jets_at(&x).unwrap(), &right.jets_at(&x).unwrap()) < 1e-12);
    }
}

#[test]
fn curvature_shift_formulas() {
    for (name, conn) in generic_fixtures() {
        let e = conn.algebroid();
        let (n, r) = (e.n(), e.r());
        let mut g = rng(31);
        let i = TensorField::from_exprs(vec![r, r, n], n, (0..r * r * n).map(|_| Expr::random_poly(n, 2, &mut g)).collect());
        for x in points(e, 5) {
            let s = curvature_shift(&conn, &i, &x).unwrap();
            assert!(s.curvature < 1e-8 && s.basic_curvature < 1e-8, "{name}: {s:?}");
        }
        let zero = TensorField::zeros(vec![r, r, n], n);
        let s = curvature_shift(&conn, &zero, &points(e, 1)[0]).unwrap();
        assert!(s.curvature < 1e-12 && s.basic_curvature < 1e-12);
    }
}

#[test]
fn lab_curvature_change_under_adjoint_shift() {
    let d = nonclassical_r4_example().unwrap();
    let k = d.algebroid().clone();
    let red = lambdas(&k, 1, 37).remove(0);
    let t = redefine(&d, &red).unwrap();
    for x in points(&k, 4) {
        let (aj, cj) = d.connection().data_at(&x).unwrap();
        let tj = t.connection().jets_at(&x).unwrap();
        // R̃ = R∇ − ad∘(d∇λ) + ad∘[λ∧λ]: compare with compat (i) on both sides.
        let lhs = curvature_form(&tj);
        let rhs = d_basic_jets(&t.zeta().jets_at(&x).unwrap(), &aj, &tj).unwrap();
        assert!(lhs.add(&rhs).max_abs() < 1e-9);
        assert!(curvature_form(&cj).max_diff(&lhs) > 1e-3);
    }
}

#[test]
fn obstruction_of_canonical_example() {
    let d = canonical_nonclassical_example().unwrap();
    let rep = obstruction_report(&d, &points(d.algebroid(), 10), &lambdas(d.algebroid(), 20, 41)).unwrap();
    assert!((rep.max_norm - 1.0).abs() < 1e-12, "{rep:?}");
    assert!(rep.centre_residual < 1e-12 && rep.invariance < 1e-10 && rep.closedness.is_none());
    let dz = obstruction_rep(&d).unwrap().jets_at(&[0.1, 0.4, -0.3]).unwrap();
    assert!((dz.get(&[0, 1, 2], &[])[0].value() - 1.0).abs() < 1e-14);
}

#[test]
fn obstruction_in_four_dimensions() {
    let d = nonclassical_r4_example().unwrap();
    let rep = obstruction_report(&d, &points(d.algebroid(), 8), &lambdas(d.algebroid(), 5, 43)).unwrap();
    assert!(rep.max_norm > 0.5 && rep.centre_residual < 1e-12 && rep.invariance < 1e-10, "{rep:?}");
    assert!(rep.closedness.unwrap() < 1e-10);
}

#[test]
fn obstruction_vanishes_for_semisimple_inner_data() {
    let k = algebroid_lab::algebroid::lab(
        TensorField::constant(vec![3, 3, 3], 3, algebroid_lab::algebroid::su2_structure()),
        3,
        Domain::cube(3, -1.0, 1.0),
    )
    .unwrap();
    let mut g = rng(47);
    let chi: Vec<Expr> = (0..9).map(|_| Expr::random_poly(3, 2, &mut g) * 0.3).collect();
    let (conn, zeta) = inner_lab_data(&k, chi, None).unwrap();
    let d = GaugeData::new(conn, zeta, Metric::euclidean(3, 3), 1e-9).unwrap();
    let rep = obstruction_report(&d, &points(&k, 6), &[]).unwrap();
    assert!(rep.max_norm < 1e-12 && rep.centre_residual < 1e-12, "{rep:?}");
}

#[test]
fn obstruction_rejects_anchored_algebroids() {
    let d = su2_gauge_data().unwrap();
    assert!(matches!(obstruction_rep(&d), Err(Error::WrongCategory(_))));
}

/// `(d_bas d∇ζ)(Y₀,Y₁,Y₂,ν₀) − Σ_cyc ∇ᵇᵃˢ_{ν₀}(ζ(·, ρζ(·,·)))(Y_i,Y_j,Y_k)`.
#[test]
fn bianchi_identity_for_zeta() {
    let mut data = examples();
    data.push(("r4", nonclassical_r4_example().unwrap()));
    data.push(("tangent-flat-3", tangent_flat_example(3).unwrap()));
    for (name, d) in data {
        let e = d.algebroid().clone();
        let (n, r) = (e.n(), e.r());
        if n < 3 {
            continue;
        }
        for x in points(&e, 5) {
            let xs = Jet2::variables(&x).unwrap();
            let (aj, cj) = d.connection().jets_on(&xs).map(|c| (e.jets_on(&xs).unwrap(), c)).unwrap();
            let z = d.zeta().jets_on(&xs).unwrap();
            let dz = d_nabla_jets(&z, &cj).unwrap();
            let lhs = d_basic_jets(&dz, &aj, &cj).unwrap();
            let ys: Vec<Vec<Jet2>> = (0..3).map(|s| eval_exprs(&vf(&e, 50 + s), &x)).collect();
            let nu = sec(&e, 60).jets_at(&x).unwrap();
            let g = basic_e_jets(&aj, &cj);
            let b = basic_tn_jets(&aj, &cj);
            let q = |y: [&[Jet2]; 3]| -> Vec<Jet2> {
                let inner = z.eval(&[y[1], y[2]], &[]);
                let rz: Vec<Jet2> = (0..n).map(|i| (0..r).map(|a| aj.rho(a, i) * inner[a]).sum()).collect();
                z.eval(&[y[0], &rz], &[])
            };
            let cyc = |y0: &[Jet2], y1: &[Jet2], y2: &[Jet2]| -> Vec<Jet2> {
                let mut t = econn_e_jets(&aj, &g, &nu, &q([y0, y1, y2]));
                for slot in 0..3 {
                    let mut args = [y0, y1, y2];
                    let moved = econn_tn_jets(&aj, &b, &nu, args[slot]);
                    args[slot] = &moved;
                    for (v, w) in t.iter_mut().zip(q(args)) {
                        *v -= w;
                    }
                }
                t
            };
            let (y0, y1, y2) = (&ys[0][..], &ys[1][..], &ys[2][..]);
            let total = lhs.eval(&[y0, y1, y2], &[&nu]);
            let s: Vec<Jet2> = [cyc(y0, y1, y2), cyc(y1, y2, y0), cyc(y2, y0, y1)]
                .into_iter()
                .reduce(|a, b| a.iter().zip(&b).map(|(u, v)| *u + *v).collect())
                .unwrap();
            assert!(diff(&total, &s) < 1e-7, "{name}: {}", diff(&total, &s));
        }
    }
}

/// `R(ρμ,ρν)η = −(d_bas ζ)(ρμ,ρν,η)` on tangent data with `ζ = −t_bas`.
#[test]
fn curvature_from_torsion_primitive() {
    for n in [2, 3] {
        let d = tangent_flat_example(n).unwrap();
        for x in points(d.algebroid(), 5) {
            let (aj, cj) = d.connection().data_at(&x).unwrap();
            let z = d.zeta().jets_at(&x).unwrap();
            let rf = curvature_form(&cj);
            let dz = d_basic_jets(&z, &aj, &cj).unwrap();
            let mu = sec(d.algebroid(), 70).jets_at(&x).unwrap();
            let nu = sec(d.algebroid(), 71).jets_at(&x).unwrap();
            let eta = sec(d.algebroid(), 72).jets_at(&x).unwrap();
            let lhs = rf.eval(&[&mu, &nu], &[&eta]);
            let rhs = dz.eval(&[&mu, &nu], &[&eta]);
            assert!(lhs.iter().zip(&rhs).all(|(a, b)| (a.value() + b.value()).abs() < 1e-7));
        }
    }
}

#[test]
fn extension_example_is_a_lie_algebroid() {
    let (e, _, _) = extension_example().unwrap();
    assert_eq!((e.n(), e.r()), (3, 7));
    let rep = check_axioms(&e, &points(&e, 20), 1e-8).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn extension_rejects_nonclosed_zeta() {
    let d = canonical_nonclassical_example().unwrap();
    let k = d.algebroid().clone();
    let r = extension_algebroid(&k, d.connection(), d.zeta(), 1e-9);
    assert!(matches!(r, Err(Error::Precondition { .. })), "{r:?}");
}

#[test]
fn extension_of_abelian_flat_is_product() {
    let k = algebroid_lab::algebroid::lab(TensorField::zeros(vec![2, 2, 2], 2), 2, Domain::cube(2, -1.0, 1.0)).unwrap();
    let e = extension_algebroid(&k, &Connection::flat(&k), &PQForm::zeros(2, 0, 2, 2, ValueKind::E), 1e-9).unwrap();
    let aj = e.jets_at(&[0.2, 0.3]).unwrap();
    assert!((0..64).all(|k| aj.c(k / 16, (k / 4) % 4, k % 4).value() == 0.0));
}

#[test]
fn flatten_tangent_examples() {
    for n in [2, 3, 4] {
        let d = tangent_flat_example(n).unwrap();
        let conn = d.connection();
        let red = flatten_tangent(conn, 1e-2).unwrap();
        let t = redefine_connection(conn, &red).unwrap();
        for x in points(conn.algebroid(), 5) {
            let (aj, tj) = t.data_at(&x).unwrap();
            assert!(curvature_form(&tj).max_abs() < 1e-5, "n = {n}");
            let c_const = torsion_derivative(&aj, &basic_e_jets(&aj, &tj));
            let (_, cj) = conn.data_at(&x).unwrap();
            assert!(torsion_derivative(&aj, &basic_e_jets(&aj, &cj)) > 1e-3);
            assert!(c_const < 1e-5, "n = {n}: {c_const}");
        }
    }
}

#[test]
fn flatten_rejects_wrong_input() {
    let su2 = Connection::flat(&su2_example());
    assert!(matches!(flatten_tangent(&su2, 1e-2), Err(Error::WrongCategory(_))));
    let t = tangent_algebroid(2).with_domain(Domain::cube(2, -0.5, 0.5));
    let mut g = rng(53);
    let generic = Connection::random_poly(&t, 2, &mut g);
    assert!(matches!(flatten_tangent(&generic, 1e-2), Err(Error::Precondition { .. })));
    let flat = Connection::flat(&t);
    let red = flatten_tangent(&flat, 1e-2).unwrap();
    assert!(norm(&red.jets_at(&[0.3, -0.2]).unwrap()) < 1e-14);
}

#[test]
fn centre_of_products_and_tangent() {
    let d = product_tn_lab_example().unwrap();
    let rep = compat_report(&d, &points(d.algebroid(), 10), 1e-8).unwrap();
    assert!(rep.pass, "{rep:?}");
    for x in points(d.algebroid(), 5) {
        let z = centre_basic(d.connection(), &x).unwrap();
        assert_eq!(z.len(), 1);
        let v = &z[0];
        assert!((v[2].abs() - 1.0).abs() < 1e-9 && v.iter().enumerate().all(|(k, c)| k == 2 || c.abs() < 1e-9));
        let aj = d.algebroid().jets_at(&x).unwrap();
        for a in 0..aj.r {
            for c in 0..aj.r {
                let s: f64 = (0..aj.r).map(|b| aj.c(c, b, a).value() * v[b]).sum();
                assert!(s.abs() < 1e-9);
            }
        }
    }
    let t = tangent_flat_example(3).unwrap();
    assert!(centre_basic(t.connection(), &[0.1, 0.2, 0.0]).unwrap().is_empty());
}

#[test]
fn products_of_gauge_data_pass() {
    let a = su2_gauge_data().unwrap();
    let b = tangent_flat_example(2).unwrap();
    let p = product_gauge(&a, &b).unwrap();
    let rep = compat_report(&p, &points(p.algebroid(), 10), 1e-8).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(check_axioms(p.algebroid(), &points(p.algebroid(), 5), 1e-8).unwrap().pass);
}

