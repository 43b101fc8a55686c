#![allow(dead_code)]

use algebroid_lab::algebroid::{
    frame_algebroid, lab, levi_civita, su2_example, tangent_algebroid, Domain, LieAlgebroid, Section,
};
use algebroid_lab::connection::{basic_parallel_connection, Connection};
use algebroid_lab::jets::{Expr, Jet2, TensorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `so(3)` scaled by `1 + x₀² + x₁/2` over a square.
pub fn scaled_lab() -> LieAlgebroid {
    let c = TensorField::from_jet_fn(vec![3, 3, 3], 2, |x| {
        let f = Jet2::constant(1.0) + x[0] * x[0] + x[1].scale(0.5);
        let mut out = vec![Jet2::zero(); 27];
        for c in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    out[(c * 3 + a) * 3 + b] = f.scale(levi_civita(a, b, c));
                }
            }
        }
        Ok(out)
    });
    lab(c, 2, Domain::cube(2, -1.0, 1.0)).unwrap()
}

/// Near-identity polynomial frame on `[-1/2, 1/2]^n`.
pub fn poly_frame(n: usize, seed: u64) -> Vec<Expr> {
    let mut g = rng(seed);
    (0..n * n)
        .map(|k| {
            let p = Expr::random_poly(n, 2, &mut g) * 0.15;
            if k / n == k % n {
                p + 1.0
            } else {
                p
            }
        })
        .collect()
}

pub fn frame_alg(n: usize, seed: u64) -> LieAlgebroid {
    frame_algebroid(poly_frame(n, seed), n, Domain::cube(n, -0.5, 0.5)).unwrap()
}

/// Connection on `TN` with vanishing basic curvature and non-zero curvature.
pub fn tangent_flat(n: usize, seed: u64) -> Connection {
    let t = tangent_algebroid(n).with_domain(Domain::cube(n, -0.5, 0.5));
    basic_parallel_connection(&t, poly_frame(n, seed)).unwrap()
}

/// Fixtures with arbitrary connections.
pub fn generic_fixtures() -> Vec<(&'static str, Connection)> {
    let mut g = rng(11);
    let su2 = su2_example();
    let fa = frame_alg(3, 5);
    let sl = scaled_lab();
    let t2 = tangent_algebroid(2);
    vec![
        ("su2", Connection::random_poly(&su2, 2, &mut g)),
        ("frame", Connection::random_poly(&fa, 2, &mut g)),
        ("lab", Connection::random_poly(&sl, 2, &mut g)),
        ("tangent", Connection::random_poly(&t2, 2, &mut g)),
    ]
}

/// Fixtures with vanishing basic curvature.
pub fn flat_basic_fixtures() -> Vec<(&'static str, Connection)> {
    let su2 = su2_example();
    vec![("su2-flat", Connection::flat(&su2)), ("tangent-flat", tangent_flat(3, 21))]
}

pub fn points(alg: &LieAlgebroid, count: usize) -> Vec<Vec<f64>> {
    alg.domain().sample(42, count)
}

pub fn sec(alg: &LieAlgebroid, seed: u64) -> Section {
    Section::random_poly(alg.r(), alg.n(), 2, &mut rng(seed))
}

pub fn vf(alg: &LieAlgebroid, seed: u64) -> Vec<Expr> {
    let mut g = rng(seed);
    (0..alg.n()).map(|_| Expr::random_poly(alg.n(), 2, &mut g)).collect()
}

pub fn eval_exprs(es: &[Expr], x: &[f64]) -> Vec<Jet2> {
    let v = Jet2::variables(x).unwrap();
    es.iter().map(|e| e.eval(&v).unwrap()).collect()
}

pub fn diff(a: &[Jet2], b: &[Jet2]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x.value() - y.value()).abs()))
}

pub fn norm(a: &[Jet2]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.value().abs()))
}
