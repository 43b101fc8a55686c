//! Gauge data of curved Yang–Mills–Higgs theories: compatibility conditions,
//! field redefinitions, the LAB obstruction, extensions and flattening.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebroid::{
    bracket_jets, electroweak_example, lab, levi_civita, su2_example, tangent_algebroid, validated, AlgebroidJets,
    BaseVectorField, Domain, LieAlgebroid, Section,
};
use crate::connection::{
    basic_curvature_form, basic_e_jets, basic_parallel_connection, basic_tn_jets, combos, curvature_form,
    d_basic_jets, d_nabla_jets, econn_e_jets, econn_tn_jets, torsion_form, ConnJets, Connection, EConnOnEJets, EConnOnTNJets, FormJets,
    PQForm, ValueKind,
};
use crate::jets::{det, jet_inverse, values, Expr, Jet2, TensorField};
use crate::{Error, Result};

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

fn identity(d: usize) -> Vec<f64> {
    (0..d * d).map(|k| delta(k / d, k % d)).collect()
}

/// Fibre metric `κ` on `E` and Riemannian metric `g` on the base chart.
#[derive(Clone, Debug)]
pub struct Metric {
    kappa: TensorField,
    g: TensorField,
}

impl Metric {
    /// Checked: symmetric and positive definite at sample points of `domain`.
    pub fn new(kappa: TensorField, g: TensorField, domain: &Domain) -> Result<Self> {
        let m = Metric::new_unchecked(kappa, g)?;
        for x in domain.sample(0x3e7, 8) {
            m.check_at(&x)?;
        }
        Ok(m)
    }
    pub fn new_unchecked(kappa: TensorField, g: TensorField) -> Result<Self> {
        let sq = |f: &TensorField| f.shape().len() == 2 && f.shape()[0] == f.shape()[1];
        if !sq(&kappa) || !sq(&g) || g.shape()[0] != g.in_dim() || kappa.in_dim() != g.in_dim() {
            return Err(Error::Shape(format!("metrics {:?} and {:?}", kappa.shape(), g.shape())));
        }
        Ok(Metric { kappa, g })
    }
    pub fn euclidean(n: usize, r: usize) -> Self {
        Metric {
            kappa: TensorField::constant(vec![r, r], n, identity(r)),
            g: TensorField::constant(vec![n, n], n, identity(n)),
        }
    }
    pub fn kappa(&self) -> &TensorField {
        &self.kappa
    }
    pub fn g(&self) -> &TensorField {
        &self.g
    }
    pub fn rank(&self) -> usize {
        self.kappa.shape()[0]
    }
    pub fn dim(&self) -> usize {
        self.g.shape()[0]
    }

    fn check_at(&self, x: &[f64]) -> Result<()> {
        for (name, f) in [("kappa", &self.kappa), ("g", &self.g)] {
            let d = f.shape()[0];
            let v = values(&f.eval_at(x)?);
            let asym = (0..d * d).fold(0.0f64, |m, k| m.max((v[k] - v[(k % d) * d + k / d]).abs()));
            if asym > 1e-12 {
                return Err(Error::Precondition { what: format!("{name} symmetric"), residual: asym });
            }
            let m = DMatrix::from_row_slice(d, d, &v);
            if m.clone().cholesky().is_none() {
                let low = m.symmetric_eigen().eigenvalues.min();
                return Err(Error::Precondition { what: format!("{name} positive definite"), residual: low });
            }
        }
        Ok(())
    }
}

/// A Lie algebroid with connection, primitive `ζ` and metrics.
#[derive(Clone, Debug)]
pub struct GaugeData {
    conn: Connection,
    zeta: PQForm,
    metric: Metric,
}

impl GaugeData {
    /// Checked against [`compat_report`] at sample points with tolerance `tol`.
    pub fn new(conn: Connection, zeta: PQForm, metric: Metric, tol: f64) -> Result<Self> {
        let d = GaugeData::new_unchecked(conn, zeta, metric)?;
        let rep = compat_report(&d, &d.algebroid().domain().sample(0xc0, 10), tol)?;
        if !rep.pass {
            let (what, residual) = rep.worst();
            return Err(Error::Precondition { what: what.into(), residual });
        }
        Ok(d)
    }
    pub fn new_unchecked(conn: Connection, zeta: PQForm, metric: Metric) -> Result<Self> {
        let (n, r) = (conn.algebroid().n(), conn.algebroid().r());
        if zeta.p != 2 || zeta.q != 0 || zeta.kind != ValueKind::E || zeta.n != n || zeta.r != r {
            return Err(Error::Shape(format!("ζ must be an E-valued (2,0)-form, got ({},{})", zeta.p, zeta.q)));
        }
        if metric.rank() != r || metric.dim() != n {
            return Err(Error::Shape(format!("metrics of size ({}, {}) for (r, n) = ({r}, {n})", metric.rank(), metric.dim())));
        }
        Ok(GaugeData { conn, zeta, metric })
    }
    pub fn algebroid(&self) -> &LieAlgebroid {
        self.conn.algebroid()
    }
    pub fn connection(&self) -> &Connection {
        &self.conn
    }
    pub fn zeta(&self) -> &PQForm {
        &self.zeta
    }
    pub fn metric(&self) -> &Metric {
        &self.metric
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CompatReport {
    pub points: usize,
    pub curvature_primitive: f64,
    pub basic_curvature: f64,
    pub kappa_compatibility: f64,
    pub g_compatibility: f64,
    pub max_curvature: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CompatReport {
    fn worst(&self) -> (&'static str, f64) {
        [
            ("R + d_bas ζ = 0", self.curvature_primitive),
            ("basic curvature = 0", self.basic_curvature),
            ("∇ᵇᵃˢκ = 0", self.kappa_compatibility),
            ("∇ᵇᵃˢg = 0", self.g_compatibility),
        ]
        .into_iter()
        .fold(("", f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }
}

/// `max |ρ_a(κ_bc) − Γᵈ_ab κ_dc − Γᵈ_ac κ_bd|`.
pub fn kappa_residual(aj: &AlgebroidJets, g: &EConnOnEJets, kappa: &[Jet2]) -> f64 {
    let (n, r) = (aj.n, aj.r);
    let mut m: f64 = 0.0;
    for a in 0..r {
        for b in 0..r {
            for c in 0..r {
                let mut s: f64 = (0..n).map(|i| aj.rho(a, i).value() * kappa[b * r + c].grad(i)).sum();
                for d in 0..r {
                    s -= g.g(d, a, b).value() * kappa[d * r + c].value() + g.g(d, a, c).value() * kappa[b * r + d].value();
                }
                m = m.max(s.abs());
            }
        }
    }
    m
}

/// `max |ρᵏ_a ∂_k g_ij − Bᵏ_ai g_kj − Bᵏ_aj g_ik|`.
pub fn g_residual(aj: &AlgebroidJets, be: &EConnOnTNJets, g: &[Jet2]) -> f64 {
    let (n, r) = (aj.n, aj.r);
    let mut m: f64 = 0.0;
    for a in 0..r {
        for i in 0..n {
            for j in 0..n {
                let mut s: f64 = (0..n).map(|k| aj.rho(a, k).value() * g[i * n + j].grad(k)).sum();
                for k in 0..n {
                    s -= be.b(k, a, i).value() * g[k * n + j].value() + be.b(k, a, j).value() * g[i * n + k].value();
                }
                m = m.max(s.abs());
            }
        }
    }
    m
}

/// Residuals (i)–(iv) and `‖R∇‖` at one point.
pub fn compat_residuals_at(data: &GaugeData, x: &[f64]) -> Result<[f64; 5]> {
    let (aj, cj) = data.conn.data_at(x)?;
    let z = data.zeta.jets_at(x)?;
    let rf = curvature_form(&cj);
    let first = rf.add(&d_basic_jets(&z, &aj, &cj)?).max_abs();
    let second = basic_curvature_form(&aj, &cj).max_abs();
    let third = kappa_residual(&aj, &basic_e_jets(&aj, &cj), &data.metric.kappa.eval_at(x)?);
    let fourth = g_residual(&aj, &basic_tn_jets(&aj, &cj), &data.metric.g.eval_at(x)?);
    Ok([first, second, third, fourth, rf.max_abs()])
}

pub fn compat_report(data: &GaugeData, points: &[Vec<f64>], tol: f64) -> Result<CompatReport> {
    let per: Vec<[f64; 5]> = points.par_iter().map(|x| compat_residuals_at(data, x)).collect::<Result<_>>()?;
    let m = per.iter().fold([0.0f64; 5], |mut acc, v| {
        for k in 0..5 {
            acc[k] = acc[k].max(v[k]);
        }
        acc
    });
    Ok(CompatReport {
        points: points.len(),
        curvature_primitive: m[0],
        basic_curvature: m[1],
        kappa_compatibility: m[2],
        g_compatibility: m[3],
        max_curvature: m[4],
        tol,
        pass: m[..4].iter().all(|v| *v < tol),
    })
}

/// Field-redefinition parameter `λ ∈ Ω¹(N; E)`, components `λᵃ_i` at `i*r+a`.
#[derive(Clone, Debug)]
pub struct Redef {
    lambda: PQForm,
}

impl Redef {
    /// Checked: `Λ = 1 − λρ` invertible at sample points of the algebroid's domain.
    pub fn new(alg: &LieAlgebroid, lambda: PQForm) -> Result<Self> {
        let red = Redef::new_unchecked(lambda)?;
        if red.lambda.n != alg.n() || red.lambda.r != alg.r() {
            return Err(Error::Shape("λ does not match the algebroid".into()));
        }
        for x in alg.domain().sample(0x1a, 8) {
            lambda_operators(alg, &red, &x)?;
        }
        Ok(red)
    }
    pub fn new_unchecked(lambda: PQForm) -> Result<Self> {
        if lambda.p != 1 || lambda.q != 0 || lambda.kind != ValueKind::E {
            return Err(Error::Shape(format!("λ must be an E-valued (1,0)-form, got ({},{})", lambda.p, lambda.q)));
        }
        Ok(Redef { lambda })
    }
    pub fn zero(n: usize, r: usize) -> Self {
        Redef { lambda: PQForm::zeros(1, 0, n, r, ValueKind::E) }
    }
    /// Random polynomial components of degree `deg` scaled by `scale`.
    pub fn random_poly<R: Rng>(alg: &LieAlgebroid, deg: usize, scale: f64, rng: &mut R) -> Result<Self> {
        let (n, r) = (alg.n(), alg.r());
        let es: Vec<Expr> = (0..n * r).map(|_| Expr::random_poly(n, deg, rng) * scale).collect();
        let field = TensorField::from_exprs(vec![n, r], n, es);
        Redef::new(alg, PQForm::new(1, 0, n, r, ValueKind::E, field, alg.domain())?)
    }
    pub fn form(&self) -> &PQForm {
        &self.lambda
    }
    pub fn jets_at(&self, x: &[f64]) -> Result<Vec<Jet2>> {
        Ok(self.lambda.jets_at(x)?.comps)
    }
}

/// `Λ = 1 − λρ`, `Λ̂ = 1 − ρλ` and their inverses as jets, row-major.
#[derive(Clone, Debug)]
pub struct LambdaOps {
    pub n: usize,
    pub r: usize,
    pub lam: Vec<Jet2>,
    pub big: Vec<Jet2>,
    pub big_inv: Vec<Jet2>,
    pub hat: Vec<Jet2>,
    pub hat_inv: Vec<Jet2>,
    pub det: f64,
    pub det_hat: f64,
}

impl LambdaOps {
    #[inline]
    pub fn l(&self, i: usize, a: usize) -> Jet2 {
        self.lam[i * self.r + a]
    }
}

pub fn lambda_ops(aj: &AlgebroidJets, lam: &[Jet2]) -> Result<LambdaOps> {
    let (n, r) = (aj.n, aj.r);
    let mut big = vec![Jet2::zero(); r * r];
    for a in 0..r {
        for b in 0..r {
            big[a * r + b] = Jet2::constant(delta(a, b)) - (0..n).map(|i| lam[i * r + a] * aj.rho(b, i)).sum::<Jet2>();
        }
    }
    let mut hat = vec![Jet2::zero(); n * n];
    for j in 0..n {
        for i in 0..n {
            hat[j * n + i] = Jet2::constant(delta(i, j)) - (0..r).map(|a| aj.rho(a, j) * lam[i * r + a]).sum::<Jet2>();
        }
    }
    let (d, dh) = (det(&values(&big), r), det(&values(&hat), n));
    if !(d.abs() > 1e-9) {
        return Err(Error::NonInvertible(d));
    }
    if (d - dh).abs() > 1e-9 * d.abs().max(1.0) {
        return Err(Error::Precondition { what: "det Λ = det Λ̂".into(), residual: (d - dh).abs() });
    }
    Ok(LambdaOps {
        n,
        r,
        lam: lam.to_vec(),
        big_inv: jet_inverse(&big, r)?,
        hat_inv: jet_inverse(&hat, n)?,
        big,
        hat,
        det: d,
        det_hat: dh,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaMatrices {
    pub lambda: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub lambda_inv: Vec<f64>,
    pub lambda_hat_inv: Vec<f64>,
    pub det: f64,
    pub det_hat: f64,
}

pub fn lambda_operators(alg: &LieAlgebroid, red: &Redef, x: &[f64]) -> Result<LambdaMatrices> {
    let ops = lambda_ops(&alg.jets_at(x)?, &red.jets_at(x)?)?;
    Ok(LambdaMatrices {
        lambda: values(&ops.big),
        lambda_hat: values(&ops.hat),
        lambda_inv: values(&ops.big_inv),
        lambda_hat_inv: values(&ops.hat_inv),
        det: ops.det,
        det_hat: ops.det_hat,
    })
}

/// `∇̃_{∂_i} e_a = Λ(∇_{Λ̂⁻¹∂_i} e_a − [(Λ⁻¹λ)(∂_i), e_a]) + λ([∂_i, ρ(e_a)])`.
pub fn redefined_omega_jets(aj: &AlgebroidJets, cj: &ConnJets, ops: &LambdaOps) -> ConnJets {
    let (n, r) = (aj.n, aj.r);
    let s: Vec<Vec<Jet2>> = (0..n)
        .map(|i| (0..r).map(|b| (0..r).map(|c| ops.big_inv[b * r + c] * ops.l(i, c)).sum()).collect())
        .collect();
    let mut omega = vec![Jet2::zero(); r * r * n];
    for i in 0..n {
        for a in 0..r {
            let v: Vec<Jet2> = (0..r)
                .map(|c| {
                    let mut t: Jet2 = (0..n).map(|j| ops.hat_inv[j * n + i] * cj.om(c, a, j)).sum();
                    for b in 0..r {
                        t -= s[i][b] * aj.c(c, b, a);
                    }
                    for j in 0..n {
                        t += aj.rho(a, j) * s[i][c].partial(j);
                    }
                    t
                })
                .collect();
            for b in 0..r {
                let mut w: Jet2 = (0..r).map(|c| ops.big[b * r + c] * v[c]).sum();
                for j in 0..n {
                    w += ops.l(j, b) * aj.rho(a, j).partial(i);
                }
                omega[(b * r + a) * n + i] = w;
            }
        }
    }
    ConnJets { n, r, omega }
}

/// `M(∂_i, ∂_j) = (d∇λ)_ij + λ(∇ᵇᵃˢ_{λ_i}∂_j − ∇ᵇᵃˢ_{λ_j}∂_i) − [λ_i, λ_j]`, at `(i*n+j)*r+b`.
fn m_tensor(aj: &AlgebroidJets, cj: &ConnJets, ops: &LambdaOps) -> Vec<Jet2> {
    let (n, r) = (aj.n, aj.r);
    let be = basic_tn_jets(aj, cj);
    let lam_sec = |i: usize| -> Vec<Jet2> { (0..r).map(|a| ops.l(i, a)).collect() };
    let mut m = vec![Jet2::zero(); n * n * r];
    for ij in combos(n, 2) {
        let (i, j) = (ij[0], ij[1]);
        let br = bracket_jets(aj, &lam_sec(i), &lam_sec(j));
        for b in 0..r {
            let mut t = ops.l(j, b).partial(i) - ops.l(i, b).partial(j);
            for c in 0..r {
                t += cj.om(b, c, i) * ops.l(j, c) - cj.om(b, c, j) * ops.l(i, c);
            }
            for l in 0..n {
                let mv: Jet2 = (0..r).map(|a| ops.l(i, a) * be.b(l, a, j) - ops.l(j, a) * be.b(l, a, i)).sum();
                t += ops.l(l, b) * mv;
            }
            t -= br[b];
            m[(i * n + j) * r + b] = t;
            m[(j * n + i) * r + b] = -t;
        }
    }
    m
}

/// `ζ̃ = Λ ζ(Λ̂⁻¹, Λ̂⁻¹) + ζ̂`; pass `None` for `ζ̂` alone.
pub fn redefined_zeta_jets(zeta: Option<&FormJets>, aj: &AlgebroidJets, cj: &ConnJets, ops: &LambdaOps) -> FormJets {
    let (n, r) = (aj.n, aj.r);
    let m = m_tensor(aj, cj, ops);
    let mut inner = vec![Jet2::zero(); n * n * r];
    for i in 0..n {
        for j in 0..n {
            for b in 0..r {
                let mut t = -m[(i * n + j) * r + b];
                if let Some(z) = zeta {
                    let zv = z.get(&[i, j], &[]);
                    t += (0..r).map(|c| ops.big[b * r + c] * zv[c]).sum::<Jet2>();
                }
                inner[(i * n + j) * r + b] = t;
            }
        }
    }
    let mut out = FormJets::zeros(2, 0, n, r, ValueKind::E);
    for kl in combos(n, 2) {
        let (k, l) = (kl[0], kl[1]);
        let vals: Vec<Jet2> = (0..r)
            .map(|b| {
                let mut s = Jet2::zero();
                for i in 0..n {
                    for j in 0..n {
                        s += ops.hat_inv[i * n + k] * ops.hat_inv[j * n + l] * inner[(i * n + j) * r + b];
                    }
                }
                s
            })
            .collect();
        out.set_antisym(&[k, l], &[], &vals);
    }
    out
}

/// `κ̃ = κ(Λ⁻¹, Λ⁻¹)` and `g̃ = g(Λ̂⁻¹, Λ̂⁻¹)`.
pub fn redefined_metric_jets(kappa: &[Jet2], g: &[Jet2], ops: &LambdaOps) -> (Vec<Jet2>, Vec<Jet2>) {
    let cong = |m: &[Jet2], p: &[Jet2], d: usize| -> Vec<Jet2> {
        let mut out = vec![Jet2::zero(); d * d];
        for a in 0..d {
            for b in 0..d {
                let mut s = Jet2::zero();
                for c in 0..d {
                    for e in 0..d {
                        s += m[c * d + e] * p[c * d + a] * p[e * d + b];
                    }
                }
                out[a * d + b] = s;
            }
        }
        out
    };
    (cong(kappa, &ops.big_inv, ops.r), cong(g, &ops.hat_inv, ops.n))
}

pub fn redefine_connection(conn: &Connection, red: &Redef) -> Result<Connection> {
    let alg = conn.algebroid().clone();
    for x in alg.domain().sample(0x1b, 4) {
        lambda_operators(&alg, red, &x)?;
    }
    let (c, l) = (conn.clone(), red.clone());
    let (n, r) = (alg.n(), alg.r());
    let omega = TensorField::from_point_fn(vec![r, r, n], n, move |x| {
        let (aj, cj) = c.data_at(x)?;
        let ops = lambda_ops(&aj, &l.jets_at(x)?)?;
        Ok(redefined_omega_jets(&aj, &cj, &ops).omega)
    });
    Connection::new(alg, omega)
}

pub fn redefine_metrics(metric: &Metric, alg: &LieAlgebroid, red: &Redef) -> Result<Metric> {
    let (n, r) = (alg.n(), alg.r());
    let (m1, a1, l1) = (metric.clone(), alg.clone(), red.clone());
    let kappa = TensorField::from_point_fn(vec![r, r], n, move |x| {
        let ops = lambda_ops(&a1.jets_at(x)?, &l1.jets_at(x)?)?;
        Ok(redefined_metric_jets(&m1.kappa.eval_at(x)?, &m1.g.eval_at(x)?, &ops).0)
    });
    let (m2, a2, l2) = (metric.clone(), alg.clone(), red.clone());
    let g = TensorField::from_point_fn(vec![n, n], n, move |x| {
        let ops = lambda_ops(&a2.jets_at(x)?, &l2.jets_at(x)?)?;
        Ok(redefined_metric_jets(&m2.kappa.eval_at(x)?, &m2.g.eval_at(x)?, &ops).1)
    });
    Metric::new_unchecked(kappa, g)
}

fn zeta_form(conn: &Connection, zeta: Option<&PQForm>, red: &Redef) -> PQForm {
    let (n, r) = (conn.algebroid().n(), conn.algebroid().r());
    let (c, z, l) = (conn.clone(), zeta.cloned(), red.clone());
    PQForm::from_point_fn(2, 0, n, r, ValueKind::E, move |x| {
        let (aj, cj) = c.data_at(x)?;
        let ops = lambda_ops(&aj, &l.jets_at(x)?)?;
        let zj = z.as_ref().map(|z| z.jets_at(x)).transpose()?;
        Ok(redefined_zeta_jets(zj.as_ref(), &aj, &cj, &ops))
    })
}

pub fn zeta_hat(conn: &Connection, red: &Redef) -> Result<PQForm> {
    for x in conn.algebroid().domain().sample(0x1c, 4) {
        lambda_operators(conn.algebroid(), red, &x)?;
    }
    Ok(zeta_form(conn, None, red))
}

pub fn redefine_zeta(data: &GaugeData, red: &Redef) -> Result<PQForm> {
    for x in data.algebroid().domain().sample(0x1d, 4) {
        lambda_operators(data.algebroid(), red, &x)?;
    }
    Ok(zeta_form(&data.conn, Some(&data.zeta), red))
}

/// Redefine every field of the gauge data; the result is not re-checked.
pub fn redefine(data: &GaugeData, red: &Redef) -> Result<GaugeData> {
    GaugeData::new_unchecked(
        redefine_connection(&data.conn, red)?,
        redefine_zeta(data, red)?,
        redefine_metrics(&data.metric, data.algebroid(), red)?,
    )
}

/// The inverse parameter `−Λ⁻¹λ`.
pub fn inverse_lambda(alg: &LieAlgebroid, red: &Redef) -> Redef {
    let (n, r) = (alg.n(), alg.r());
    let (a, l) = (alg.clone(), red.clone());
    let form = PQForm::from_point_fn(1, 0, n, r, ValueKind::E, move |x| {
        let ops = lambda_ops(&a.jets_at(x)?, &l.jets_at(x)?)?;
        let mut f = FormJets::zeros(1, 0, n, r, ValueKind::E);
        for i in 0..n {
            for b in 0..r {
                f.comps[i * r + b] = -(0..r).map(|c| ops.big_inv[b * r + c] * ops.l(i, c)).sum::<Jet2>();
            }
        }
        Ok(f)
    });
    Redef { lambda: form }
}

/// `λ + λ′ − λ′ρλ`: redefining by `λ` and then by `λ′`.
pub fn compose_lambda(alg: &LieAlgebroid, first: &Redef, second: &Redef) -> Result<Redef> {
    let (n, r) = (alg.n(), alg.r());
    let (a, l1, l2) = (alg.clone(), first.clone(), second.clone());
    let form = PQForm::from_point_fn(1, 0, n, r, ValueKind::E, move |x| {
        let aj = a.jets_at(x)?;
        let (p, q) = (l1.jets_at(x)?, l2.jets_at(x)?);
        let mut f = FormJets::zeros(1, 0, n, r, ValueKind::E);
        for i in 0..n {
            for c in 0..r {
                let mut s = p[i * r + c] + q[i * r + c];
                for j in 0..n {
                    for b in 0..r {
                        s -= q[j * r + c] * aj.rho(b, j) * p[i * r + b];
                    }
                }
                f.comps[i * r + c] = s;
            }
        }
        Ok(f)
    });
    let out = Redef { lambda: form };
    for x in alg.domain().sample(0x1e, 4) {
        lambda_operators(alg, &out, &x)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct CurvatureShift {
    pub curvature: f64,
    pub basic_curvature: f64,
}

/// Residuals of `R′ = R + d∇I + I∧I` and `R′ᵇᵃˢ = Rᵇᵃˢ − dᵇᵃˢI − I∧ρI` for `∇′ = ∇ + I`,
/// with `Iᵇ_ai` stored like `ω`.
pub fn curvature_shift(conn: &Connection, i_field: &TensorField, x: &[f64]) -> Result<CurvatureShift> {
    let (aj, cj) = conn.data_at(x)?;
    let (n, r) = (aj.n, aj.r);
    let ij = i_field.eval_at(x)?;
    if ij.len() != r * r * n {
        return Err(Error::Shape(format!("I has {} components, expected {}", ij.len(), r * r * n)));
    }
    let iv = |b: usize, a: usize, i: usize| ij[(b * r + a) * n + i];
    let shifted = ConnJets { n, r, omega: cj.omega.iter().zip(&ij).map(|(w, d)| *w + *d).collect() };

    let mut i_end = FormJets::zeros(1, 0, n, r, ValueKind::EndE);
    let mut i_11 = FormJets::zeros(1, 1, n, r, ValueKind::E);
    for i in 0..n {
        for a in 0..r {
            for b in 0..r {
                i_end.comps[i * r * r + b * r + a] = iv(b, a, i);
                i_11.comps[(i * r + a) * r + b] = iv(b, a, i);
            }
        }
    }
    let r0 = curvature_form(&cj);
    let r1 = curvature_form(&shifted);
    let di = d_nabla_jets(&i_end, &cj)?;
    let mut curv: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dij = di.get(&[i, j], &[]);
            for a in 0..r {
                for b in 0..r {
                    let ii: Jet2 = (0..r).map(|c| iv(b, c, i) * iv(c, a, j) - iv(b, c, j) * iv(c, a, i)).sum();
                    let pred = r0.get(&[i, j], &[a])[b] + dij[b * r + a] + ii;
                    curv = curv.max((r1.get(&[i, j], &[a])[b].value() - pred.value()).abs());
                }
            }
        }
    }
    let s0 = basic_curvature_form(&aj, &cj);
    let s1 = basic_curvature_form(&aj, &shifted);
    let dbi = d_basic_jets(&i_11, &aj, &cj)?;
    let mut bas: f64 = 0.0;
    for i in 0..n {
        for a in 0..r {
            for b in 0..r {
                for c in 0..r {
                    let mut wedge = Jet2::zero();
                    for d in 0..r {
                        for k in 0..n {
                            wedge += aj.rho(d, k) * (iv(d, b, i) * iv(c, a, k) - iv(d, a, i) * iv(c, b, k));
                        }
                    }
                    let pred = s0.get(&[i], &[a, b])[c] - dbi.get(&[i], &[a, b])[c] - wedge;
                    bas = bas.max((s1.get(&[i], &[a, b])[c].value() - pred.value()).abs());
                }
            }
        }
    }
    Ok(CurvatureShift { curvature: curv, basic_curvature: bas })
}

fn require_lab(alg: &LieAlgebroid) -> Result<()> {
    for x in alg.domain().sample(0xab, 6) {
        let m = crate::jets::max_abs(&alg.jets_at(&x)?.rho);
        if m > 0.0 {
            return Err(Error::WrongCategory(format!("anchor is non-zero ({m:.3e}); a Lie algebra bundle is required")));
        }
    }
    Ok(())
}

/// The representative `d∇ζ` of the obstruction class of a LAB.
pub fn obstruction_rep(data: &GaugeData) -> Result<PQForm> {
    require_lab(data.algebroid())?;
    crate::connection::d_nabla(&data.zeta, &data.conn)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ObstructionReport {
    pub points: usize,
    pub lambdas: usize,
    pub max_norm: f64,
    pub centre_residual: f64,
    /// `None` when the base has dimension below 4.
    pub closedness: Option<f64>,
    pub invariance: f64,
}

pub fn obstruction_report(data: &GaugeData, points: &[Vec<f64>], lambdas: &[Redef]) -> Result<ObstructionReport> {
    require_lab(data.algebroid())?;
    let n = data.algebroid().n();
    let redefined: Vec<GaugeData> = lambdas.iter().map(|l| redefine(data, l)).collect::<Result<_>>()?;
    let per: Vec<[f64; 4]> = points
        .par_iter()
        .map(|x| -> Result<[f64; 4]> {
            let (aj, cj) = data.conn.data_at(x)?;
            let r = aj.r;
            let z = data.zeta.jets_at(x)?;
            let dz = d_nabla_jets(&z, &cj)?;
            let mut centre: f64 = 0.0;
            for t in 0..dz.comps.len() / r {
                let v = &dz.comps[t * r..(t + 1) * r];
                for a in 0..r {
                    for c in 0..r {
                        let s: f64 = (0..r).map(|b| aj.c(c, b, a).value() * v[b].value()).sum();
                        centre = centre.max(s.abs());
                    }
                }
            }
            let closed = if n >= 4 { d_nabla_jets(&dz, &cj)?.max_abs() } else { 0.0 };
            let mut inv: f64 = 0.0;
            for d in &redefined {
                let cj2 = d.conn.jets_at(x)?;
                let dz2 = d_nabla_jets(&d.zeta.jets_at(x)?, &cj2)?;
                inv = inv.max(dz2.max_diff(&dz));
            }
            Ok([dz.max_abs(), centre, closed, inv])
        })
        .collect::<Result<_>>()?;
    let m = per.iter().fold([0.0f64; 4], |mut acc, v| {
        for k in 0..4 {
            acc[k] = acc[k].max(v[k]);
        }
        acc
    });
    Ok(ObstructionReport {
        points: points.len(),
        lambdas: lambdas.len(),
        max_norm: m[0],
        centre_residual: m[1],
        closedness: (n >= 4).then_some(m[2]),
        invariance: m[3],
    })
}

/// `u(1) ⊕ su(2)` as a trivial LAB; index 0 spans the centre.
pub fn u1_su2_lab(n: usize, domain: Domain) -> Result<LieAlgebroid> {
    let mut c = vec![0.0; 64];
    for a in 1..4 {
        for b in 1..4 {
            for k in 1..4 {
                c[(k * 4 + a) * 4 + b] = levi_civita(a - 1, b - 1, k - 1);
            }
        }
    }
    Ok(lab(TensorField::constant(vec![4, 4, 4], n, c), n, domain)?
        .with_labels(vec!["t".into(), "e1".into(), "e2".into(), "e3".into()]))
}

/// LAB data `∇ = d + ad∘χ` and `ζ = dχ + [χ, χ] + z`, with `χᵃ_i` at `i*r+a` and `z` centre-valued.
pub fn inner_lab_data(k: &LieAlgebroid, chi: Vec<Expr>, z: Option<PQForm>) -> Result<(Connection, PQForm)> {
    let (n, r) = (k.n(), k.r());
    if chi.len() != n * r {
        return Err(Error::Shape(format!("χ has {} components, expected {}", chi.len(), n * r)));
    }
    let (k1, chi1) = (k.clone(), chi.clone());
    let omega = TensorField::from_point_fn(vec![r, r, n], n, move |x| {
        let v = Jet2::variables(x)?;
        let aj = k1.jets_at(x)?;
        let ch = chi1.iter().map(|e| e.eval(&v)).collect::<std::result::Result<Vec<_>, _>>()?;
        let mut out = vec![Jet2::zero(); r * r * n];
        for b in 0..r {
            for a in 0..r {
                for i in 0..n {
                    out[(b * r + a) * n + i] = (0..r).map(|c| ch[i * r + c] * aj.c(b, c, a)).sum();
                }
            }
        }
        Ok(out)
    });
    let conn = Connection::new(k.clone(), omega)?;
    let k2 = k.clone();
    let zeta = PQForm::from_point_fn(2, 0, n, r, ValueKind::E, move |x| {
        let v = Jet2::variables(x)?;
        let aj = k2.jets_at(x)?;
        let ch = chi.iter().map(|e| e.eval(&v)).collect::<std::result::Result<Vec<_>, _>>()?;
        let zc = z.as_ref().map(|z| z.jets_at(x)).transpose()?;
        let mut f = FormJets::zeros(2, 0, n, r, ValueKind::E);
        for ij in combos(n, 2) {
            let (i, j) = (ij[0], ij[1]);
            let vals: Vec<Jet2> = (0..r)
                .map(|b| {
                    let mut s = ch[j * r + b].partial(i) - ch[i * r + b].partial(j);
                    for c in 0..r {
                        for d in 0..r {
                            s += aj.c(b, c, d) * ch[i * r + c] * ch[j * r + d];
                        }
                    }
                    if let Some(zc) = &zc {
                        s += zc.get(&[i, j], &[])[b];
                    }
                    s
                })
                .collect();
            f.set_antisym(&[i, j], &[], &vals);
        }
        Ok(f)
    });
    Ok((conn, zeta))
}

/// `f(x) dx^i ∧ dx^j ⊗ e_c` for each `(i, j, c, f)` term.
pub fn two_form(n: usize, r: usize, terms: Vec<(usize, usize, usize, Expr)>) -> PQForm {
    PQForm::from_point_fn(2, 0, n, r, ValueKind::E, move |x| {
        let v = Jet2::variables(x)?;
        let mut acc = vec![Jet2::zero(); n * n * r];
        for (i, j, c, e) in &terms {
            let f = e.eval(&v)?;
            acc[(i * n + j) * r + c] += f;
            acc[(j * n + i) * r + c] -= f;
        }
        Ok(FormJets { p: 2, q: 0, n, r, kind: ValueKind::E, comps: acc })
    })
}

/// `K = u(1) ⊕ su(2)` over `ℝ³`, flat `∇`, `ζ = x³ dx¹∧dx² ⊗ t`, so `d∇ζ = dx¹∧dx²∧dx³ ⊗ t`.
pub fn canonical_nonclassical_example() -> Result<GaugeData> {
    let k = u1_su2_lab(3, Domain::cube(3, -1.0, 1.0))?;
    let zeta = two_form(3, 4, vec![(0, 1, 0, Expr::x(2))]);
    GaugeData::new(Connection::flat(&k), zeta, Metric::euclidean(3, 4), 1e-9)
}

/// Four-dimensional variant with a non-trivial inner connection, `ζ_centre = x³x⁴ dx¹∧dx² ⊗ t`.
pub fn nonclassical_r4_example() -> Result<GaugeData> {
    let k = u1_su2_lab(4, Domain::cube(4, -1.0, 1.0))?;
    let (x, c) = (Expr::x, Expr::c);
    let mut chi = vec![c(0.0); 16];
    chi[1] = x(1) * 0.3;
    chi[4 + 2] = x(0) * x(3) * 0.25;
    chi[2 * 4 + 3] = x(3) * 0.2 + 0.1;
    chi[3 * 4 + 1] = x(0) * x(2) * 0.15;
    chi[3 * 4 + 2] = x(1) * 0.2;
    let z = two_form(4, 4, vec![(0, 1, 0, x(2) * x(3))]);
    let (conn, zeta) = inner_lab_data(&k, chi, Some(z))?;
    GaugeData::new(conn, zeta, Metric::euclidean(4, 4), 1e-9)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExtensionReport {
    pub points: usize,
    pub derivation: f64,
    pub curvature: f64,
    pub closedness: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Preconditions of the extension: `∇` a Lie derivation law, `R∇ = ad∘ζ′`, `d∇ζ′ = 0`.
pub fn extension_preconditions(conn: &Connection, zeta: &PQForm, points: &[Vec<f64>], tol: f64) -> Result<ExtensionReport> {
    require_lab(conn.algebroid())?;
    let per: Vec<[f64; 3]> = points
        .par_iter()
        .map(|x| -> Result<[f64; 3]> {
            let (aj, cj) = conn.data_at(x)?;
            let (n, r) = (aj.n, aj.r);
            let z = zeta.jets_at(x)?;
            let rf = curvature_form(&cj);
            let mut curv: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let zv = z.get(&[i, j], &[]);
                    for a in 0..r {
                        for b in 0..r {
                            let ad: f64 = (0..r).map(|g| zv[g].value() * aj.c(b, g, a).value()).sum();
                            curv = curv.max((rf.get(&[i, j], &[a])[b].value() - ad).abs());
                        }
                    }
                }
            }
            let closed = if n >= 3 { d_nabla_jets(&z, &cj)?.max_abs() } else { 0.0 };
            Ok([basic_curvature_form(&aj, &cj).max_abs(), curv, closed])
        })
        .collect::<Result<_>>()?;
    let m = per.iter().fold([0.0f64; 3], |mut acc, v| {
        for k in 0..3 {
            acc[k] = acc[k].max(v[k]);
        }
        acc
    });
    Ok(ExtensionReport {
        points: points.len(),
        derivation: m[0],
        curvature: m[1],
        closedness: m[2],
        tol,
        pass: m.iter().all(|v| *v < tol),
    })
}

/// `TN ⊕ K` with anchor the projection and bracket
/// `[(Y,ν),(Z,μ)] = ([Y,Z], [ν,μ]_K + ∇_Y μ − ∇_Z ν + ζ′(Y,Z))`.
pub fn extension_algebroid(k: &LieAlgebroid, conn: &Connection, zeta: &PQForm, tol: f64) -> Result<LieAlgebroid> {
    let (n, rk) = (k.n(), k.r());
    if conn.algebroid().n() != n || conn.algebroid().r() != rk || zeta.n != n || zeta.r != rk {
        return Err(Error::Shape("connection and ζ′ must live on the given LAB".into()));
    }
    let rep = extension_preconditions(conn, zeta, &k.domain().sample(0xe7, 10), tol)?;
    for (what, v) in [("Lie derivation law", rep.derivation), ("R∇ = ad∘ζ′", rep.curvature), ("d∇ζ′ = 0", rep.closedness)] {
        if !(v < tol) {
            return Err(Error::Precondition { what: what.into(), residual: v });
        }
    }
    let r = n + rk;
    let mut rho = vec![0.0; r * n];
    for i in 0..n {
        rho[i * n + i] = 1.0;
    }
    let (k1, c1, z1) = (k.clone(), conn.clone(), zeta.clone());
    let structure = TensorField::from_point_fn(vec![r, r, r], n, move |x| {
        let aj = k1.jets_at(x)?;
        let cj = c1.jets_at(x)?;
        let z = z1.jets_at(x)?;
        let mut out = vec![Jet2::zero(); r * r * r];
        let idx = |c: usize, a: usize, b: usize| (c * r + a) * r + b;
        for i in 0..n {
            for j in 0..n {
                let zv = z.get(&[i, j], &[]);
                for g in 0..rk {
                    out[idx(n + g, i, j)] = zv[g];
                }
            }
            for a in 0..rk {
                for b in 0..rk {
                    out[idx(n + b, i, n + a)] = cj.om(b, a, i);
                    out[idx(n + b, n + a, i)] = -cj.om(b, a, i);
                }
            }
        }
        for a in 0..rk {
            for b in 0..rk {
                for c in 0..rk {
                    out[idx(n + c, n + a, n + b)] = aj.c(c, a, b);
                }
            }
        }
        Ok(out)
    });
    let mut labels: Vec<String> = (1..=n).map(|i| format!("d{i}")).collect();
    match k.labels() {
        Some(l) => labels.extend(l.iter().cloned()),
        None => labels.extend((1..=rk).map(|a| format!("k{a}"))),
    }
    let e = LieAlgebroid::new_unchecked(n, r, TensorField::constant(vec![r, n], n, rho), structure, k.domain().clone())?
        .with_labels(labels);
    validated(e)
}

/// Extension example over `ℝ³`: `K = u(1) ⊕ su(2)`, inner `∇`, closed centre part of `ζ′`.
pub fn extension_example() -> Result<(LieAlgebroid, Connection, PQForm)> {
    let k = u1_su2_lab(3, Domain::cube(3, -1.0, 1.0))?;
    let (x, c) = (Expr::x, Expr::c);
    let mut chi = vec![c(0.0); 12];
    chi[1] = x(1) * 0.4;
    chi[4 + 2] = x(0) * x(2) * 0.3;
    chi[2 * 4 + 3] = x(1) * x(1) * 0.2 + 0.1;
    let z = two_form(3, 4, vec![(0, 1, 0, x(0)), (0, 2, 0, x(2)), (1, 2, 0, x(1))]);
    let (conn, zeta) = inner_lab_data(&k, chi, Some(z))?;
    let e = extension_algebroid(&k, &conn, &zeta, 1e-9)?;
    Ok((e, conn, zeta))
}

fn check_tangent(alg: &LieAlgebroid) -> Result<()> {
    let n = alg.n();
    if alg.r() != n {
        return Err(Error::WrongCategory("flattening needs the tangent algebroid".into()));
    }
    for x in alg.domain().sample(0x7a, 4) {
        let aj = alg.jets_at(&x)?;
        let dev = (0..n * n).fold(0.0f64, |m, k| m.max((aj.rho(k / n, k % n).value() - delta(k / n, k % n)).abs()));
        if dev > 1e-14 {
            return Err(Error::WrongCategory("flattening needs the identity anchor".into()));
        }
    }
    Ok(())
}

/// `(W_k)_cb = ωᶜ_kb`, the basic connection matrix along `∂_k` on `TN`.
fn basic_matrix(om: &[f64], n: usize, k: usize) -> Vec<f64> {
    let mut w = vec![0.0; n * n];
    for c in 0..n {
        for b in 0..n {
            w[c * n + b] = om[(c * n + k) * n + b];
        }
    }
    w
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut o = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let v = a[i * n + k];
            for j in 0..n {
                o[i * n + j] += v * b[k * n + j];
            }
        }
    }
    o
}

/// Transport `G` along the segment from `p` moving coordinate `k` to `target` with `∂_k G = −W_k G`.
fn transport_segment(conn: &Connection, g: &mut Vec<f64>, p: &mut [f64], k: usize, target: f64, step: f64) -> Result<()> {
    let n = p.len();
    let len = target - p[k];
    if len == 0.0 {
        return Ok(());
    }
    let steps = (len.abs() / step).ceil().max(1.0) as usize;
    let h = len / steps as f64;
    let rhs = |q: &[f64], gm: &[f64]| -> Result<Vec<f64>> {
        let om = values(&conn.omega_field().eval_at(q)?);
        Ok(matmul(&basic_matrix(&om, n, k), gm, n).into_iter().map(|v| -v).collect())
    };
    let start = p[k];
    for s in 0..steps {
        let t0 = start + h * s as f64;
        let mut q = p.to_vec();
        q[k] = t0;
        let k1 = rhs(&q, g)?;
        q[k] = t0 + 0.5 * h;
        let g2: Vec<f64> = g.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = rhs(&q, &g2)?;
        let g3: Vec<f64> = g.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = rhs(&q, &g3)?;
        q[k] = t0 + h;
        let g4: Vec<f64> = g.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = rhs(&q, &g4)?;
        for (idx, v) in g.iter_mut().enumerate() {
            *v += h / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx]);
        }
    }
    p[k] = target;
    Ok(())
}

/// Parallel frame at `x` by axis-ordered transport from the origin, `G(0) = 1`.
pub fn parallel_frame(conn: &Connection, x: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let mut g = identity(n);
    let mut p = vec![0.0; n];
    for k in 0..n {
        transport_segment(conn, &mut g, &mut p, k, x[k], step)?;
    }
    Ok(g)
}

/// `λ = 1 − Λ` with `Λ = G⁻¹` sending a basic-parallel frame to the coordinate frame.
pub fn flatten_tangent(conn: &Connection, step: f64) -> Result<Redef> {
    let alg = conn.algebroid().clone();
    check_tangent(&alg)?;
    let n = alg.n();
    if !alg.domain().contains(&vec![0.0; n]) {
        return Err(Error::OutsideDomain(vec![0.0; n]));
    }
    for x in alg.domain().sample(0xf1, 8) {
        let (aj, cj) = conn.data_at(&x)?;
        let s = basic_curvature_form(&aj, &cj).max_abs();
        if !(s < 1e-7) {
            return Err(Error::Precondition { what: "basic curvature = 0".into(), residual: s });
        }
    }
    for kl in combos(n, 2) {
        let (k, l) = (kl[0], kl[1]);
        let (ak, al) = (0.5 * alg.domain().hi()[k].min(-alg.domain().lo()[k]), 0.5 * alg.domain().hi()[l].min(-alg.domain().lo()[l]));
        let mut g = identity(n);
        let mut p = vec![0.0; n];
        transport_segment(conn, &mut g, &mut p, k, ak, step)?;
        transport_segment(conn, &mut g, &mut p, l, al, step)?;
        transport_segment(conn, &mut g, &mut p, k, 0.0, step)?;
        transport_segment(conn, &mut g, &mut p, l, 0.0, step)?;
        let defect = g.iter().zip(identity(n)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if defect > 1e-5 {
            return Err(Error::PathDependence(defect));
        }
    }
    let c = conn.clone();
    let form = PQForm::from_point_fn(1, 0, n, n, ValueKind::E, move |x| {
        let g = parallel_frame(&c, x, step)?;
        let om = c.omega_field().eval_at(x)?;
        let w: Vec<Vec<f64>> = (0..n).map(|k| basic_matrix(&values(&om), n, k)).collect();
        let dw: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|l| {
                (0..n)
                    .map(|k| {
                        let mut m = vec![0.0; n * n];
                        for cc in 0..n {
                            for b in 0..n {
                                m[cc * n + b] = om[(cc * n + k) * n + b].grad(l);
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        let dg: Vec<Vec<f64>> = (0..n).map(|k| matmul(&w[k], &g, n).into_iter().map(|v| -v).collect()).collect();
        let mut hess = vec![vec![0.0; n * n]; n * n];
        for k in 0..n {
            for l in 0..n {
                let a = matmul(&dw[l][k], &g, n);
                let b = matmul(&w[k], &matmul(&w[l], &g, n), n);
                for e in 0..n * n {
                    hess[k * n + l][e] = -a[e] + b[e];
                }
            }
        }
        let gj: Vec<Jet2> = (0..n * n)
            .map(|e| {
                let grad: Vec<f64> = (0..n).map(|k| dg[k][e]).collect();
                let h: Vec<f64> = (0..n * n).map(|kl| 0.5 * (hess[kl][e] + hess[(kl % n) * n + kl / n][e])).collect();
                Jet2::from_parts(g[e], &grad, &h)
            })
            .collect();
        let ginv = jet_inverse(&gj, n)?;
        let mut f = FormJets::zeros(1, 0, n, n, ValueKind::E);
        for i in 0..n {
            for a in 0..n {
                f.comps[i * n + a] = Jet2::constant(delta(a, i)) - ginv[a * n + i];
            }
        }
        Ok(f)
    });
    Ok(Redef { lambda: form })
}

/// `max |(ᴱ∇_{e_c} t)(e_a, e_b)|` for the torsion `t` of an E-connection.
pub fn torsion_derivative(aj: &AlgebroidJets, g: &EConnOnEJets) -> f64 {
    let (n, r) = (aj.n, aj.r);
    let t = torsion_form(aj, g);
    let tv = |a: usize, b: usize, d: usize| t.get(&[], &[a, b])[d];
    let mut m: f64 = 0.0;
    for c in 0..r {
        for a in 0..r {
            for b in 0..r {
                for d in 0..r {
                    let mut s: f64 = (0..n).map(|k| aj.rho(c, k).value() * tv(a, b, d).grad(k)).sum();
                    for e in 0..r {
                        s += g.g(d, c, e).value() * tv(a, b, e).value()
                            - g.g(e, c, a).value() * tv(e, b, d).value()
                            - g.g(e, c, b).value() * tv(a, e, d).value();
                    }
                    m = m.max(s.abs());
                }
            }
        }
    }
    m
}

/// Basis of the centre `{ν : ∇ᵇᵃˢ_ν = 0}` at `x`: null space of the stacked coefficient
/// map together with the anchor.
pub fn centre_basic(conn: &Connection, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let (aj, cj) = conn.data_at(x)?;
    let (n, r) = (aj.n, aj.r);
    let (g, be) = (basic_e_jets(&aj, &cj), basic_tn_jets(&aj, &cj));
    let rows = r * r + n * n + n;
    let mut m = DMatrix::<f64>::zeros(rows.max(r), r);
    for a in 0..r {
        for c in 0..r {
            for b in 0..r {
                m[(c * r + b, a)] = g.g(c, a, b).value();
            }
        }
        for j in 0..n {
            for i in 0..n {
                m[(r * r + j * n + i, a)] = be.b(j, a, i).value();
            }
            m[(r * r + n * n + j, a)] = aj.rho(a, j).value();
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Shape("SVD failed".into()))?;
    Ok((0..r)
        .filter(|&k| svd.singular_values[k] < 1e-9)
        .map(|k| (0..r).map(|a| vt[(k, a)]).collect())
        .collect())
}

/// Product of two gauge data over `N₁ × N₂`.
pub fn product_gauge(d1: &GaugeData, d2: &GaugeData) -> Result<GaugeData> {
    let (e1, e2) = (d1.algebroid(), d2.algebroid());
    let e = crate::algebroid::direct_product(e1, e2);
    let (n1, n2, r1, r2) = (e1.n(), e2.n(), e1.r(), e2.r());
    let (n, r) = (n1 + n2, r1 + r2);
    let (w1, w2) = (d1.conn.omega_field().clone(), d2.conn.omega_field().clone());
    let omega = TensorField::from_point_fn(vec![r, r, n], n, move |x| {
        let v = Jet2::variables(x)?;
        let (p, q) = (w1.eval_jets(&v[..n1])?, w2.eval_jets(&v[n1..])?);
        let mut out = vec![Jet2::zero(); r * r * n];
        for b in 0..r1 {
            for a in 0..r1 {
                for i in 0..n1 {
                    out[(b * r + a) * n + i] = p[(b * r1 + a) * n1 + i];
                }
            }
        }
        for b in 0..r2 {
            for a in 0..r2 {
                for i in 0..n2 {
                    out[((r1 + b) * r + r1 + a) * n + n1 + i] = q[(b * r2 + a) * n2 + i];
                }
            }
        }
        Ok(out)
    });
    let (z1, z2) = (d1.zeta.field().clone(), d2.zeta.field().clone());
    let zeta = PQForm::from_point_fn(2, 0, n, r, ValueKind::E, move |x| {
        let v = Jet2::variables(x)?;
        let (p, q) = (z1.eval_jets(&v[..n1])?, z2.eval_jets(&v[n1..])?);
        let mut f = FormJets::zeros(2, 0, n, r, ValueKind::E);
        for i in 0..n1 {
            for j in 0..n1 {
                for c in 0..r1 {
                    f.comps[(i * n + j) * r + c] = p[(i * n1 + j) * r1 + c];
                }
            }
        }
        for i in 0..n2 {
            for j in 0..n2 {
                for c in 0..r2 {
                    f.comps[((n1 + i) * n + n1 + j) * r + r1 + c] = q[(i * n2 + j) * r2 + c];
                }
            }
        }
        Ok(f)
    });
    let block = |f1: TensorField, f2: TensorField, d1: usize, d2: usize| {
        let d = d1 + d2;
        TensorField::from_point_fn(vec![d, d], n, move |x| {
            let v = Jet2::variables(x)?;
            let (p, q) = (f1.eval_jets(&v[..n1])?, f2.eval_jets(&v[n1..])?);
            let mut out = vec![Jet2::zero(); d * d];
            for a in 0..d1 {
                for b in 0..d1 {
                    out[a * d + b] = p[a * d1 + b];
                }
            }
            for a in 0..d2 {
                for b in 0..d2 {
                    out[(d1 + a) * d + d1 + b] = q[a * d2 + b];
                }
            }
            Ok(out)
        })
    };
    let metric = Metric::new_unchecked(
        block(d1.metric.kappa.clone(), d2.metric.kappa.clone(), r1, r2),
        block(d1.metric.g.clone(), d2.metric.g.clone(), n1, n2),
    )?;
    GaugeData::new_unchecked(Connection::new(e, omega)?, zeta, metric)
}

/// Action algebroid with canonical flat `∇`, `ζ = 0`, `κ = g = δ`.
pub fn su2_gauge_data() -> Result<GaugeData> {
    let e = su2_example();
    GaugeData::new(Connection::flat(&e), PQForm::zeros(2, 0, 3, 3, ValueKind::E), Metric::euclidean(3, 3), 1e-9)
}

/// Electroweak action algebroid with flat `∇`, `ζ = 0`, `κ = δ`, `g = δ/|x|²`.
pub fn electroweak_gauge_data(g_w: f64, g_p: f64, n_gamma: u32) -> Result<GaugeData> {
    let e = electroweak_example(g_w, g_p, n_gamma)?;
    let g = TensorField::from_jet_fn(vec![4, 4], 4, |x| {
        let s: Jet2 = x.iter().map(|v| *v * *v).sum();
        let inv = s.recip()?;
        Ok((0..16).map(|k| if k / 4 == k % 4 { inv } else { Jet2::zero() }).collect())
    });
    let metric = Metric::new(TensorField::constant(vec![4, 4], 4, identity(4)), g, e.domain())?;
    GaugeData::new(Connection::flat(&e), PQForm::zeros(2, 0, 4, 4, ValueKind::E), metric, 1e-9)
}

/// `TN` with the connection making `frame` basic-parallel, `ζ = −t_{∇ᵇᵃˢ}`, `κ = g = F⁻ᵀF⁻¹`.
pub fn tangent_flat_gauge(frame: Vec<Expr>, n: usize, domain: Domain) -> Result<GaugeData> {
    let alg = tangent_algebroid(n).with_domain(domain);
    let conn = basic_parallel_connection(&alg, frame.clone())?;
    let c = conn.clone();
    let zeta = PQForm::from_point_fn(2, 0, n, n, ValueKind::E, move |x| {
        let (aj, cj) = c.data_at(x)?;
        let t = torsion_form(&aj, &basic_e_jets(&aj, &cj));
        Ok(FormJets { p: 2, q: 0, n, r: n, kind: ValueKind::E, comps: t.comps.iter().map(|v| -*v).collect() })
    });
    let g = TensorField::from_jet_fn(vec![n, n], n, move |x| {
        let f = frame.iter().map(|e| e.eval(x)).collect::<std::result::Result<Vec<_>, _>>()?;
        let finv = jet_inverse(&f, n)?;
        let mut out = vec![Jet2::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|a| finv[a * n + i] * finv[a * n + j]).sum();
            }
        }
        Ok(out)
    });
    let metric = Metric::new(g.clone(), g, alg.domain())?;
    GaugeData::new(conn, zeta, metric, 1e-7)
}

/// Polynomial frames used by the tangent examples (entry `c*n+k` is `F^c_k`).
pub fn tangent_frames() -> Vec<(usize, Vec<Expr>)> {
    let (x, c) = (Expr::x, Expr::c);
    vec![
        (2, vec![c(1.0) + x(1) * x(1) * 0.3, x(0) * 0.4, x(1) * 0.2 - x(0) * 0.1, c(1.0) + x(0) * x(1) * 0.25]),
        (
            3,
            vec![
                c(1.0),
                x(2) * 0.3,
                x(1) * x(1) * 0.2,
                x(0) * 0.25,
                c(1.0) + x(2) * x(0) * 0.2,
                c(0.0),
                x(1) * 0.1,
                x(0) * x(0) * 0.3,
                c(1.0) + x(1) * 0.2,
            ],
        ),
        (
            4,
            vec![
                c(1.0) + x(3) * 0.2,
                c(0.0),
                x(1) * 0.15,
                c(0.0),
                x(2) * x(2) * 0.2,
                c(1.0),
                c(0.0),
                x(0) * 0.1,
                c(0.0),
                x(3) * x(0) * 0.2,
                c(1.0),
                c(0.0),
                x(1) * 0.2,
                c(0.0),
                x(0) * 0.1,
                c(1.0) + x(2) * 0.1,
            ],
        ),
    ]
}

/// `tangent_flat_gauge` on the `n`-dimensional frame of [`tangent_frames`], over `[-1/2, 1/2]^n`.
pub fn tangent_flat_example(n: usize) -> Result<GaugeData> {
    let (_, f) = tangent_frames()
        .into_iter()
        .find(|(d, _)| *d == n)
        .ok_or_else(|| Error::Usage(format!("no tangent-flat frame in dimension {n}")))?;
    tangent_flat_gauge(f, n, Domain::cube(n, -0.5, 0.5))
}

/// Tangent-flat data on `ℝ²` times the LAB `ℝ × (u(1) ⊕ su(2))` with `∇ = 0`, `ζ = 0`.
pub fn product_tn_lab_example() -> Result<GaugeData> {
    let t = tangent_flat_example(2)?;
    let k = u1_su2_lab(1, Domain::cube(1, -1.0, 1.0))?;
    let kd = GaugeData::new(Connection::flat(&k), PQForm::zeros(2, 0, 1, 4, ValueKind::E), Metric::euclidean(1, 4), 1e-9)?;
    product_gauge(&t, &kd)
}

/// Largest entry difference of `ω`, `ζ`, `κ` and `g` at `x`.
pub fn table_diff(a: &GaugeData, b: &GaugeData, x: &[f64]) -> Result<f64> {
    let d = |p: &[Jet2], q: &[Jet2]| p.iter().zip(q).fold(0.0f64, |m, (u, v)| m.max(u.max_diff(v)));
    let w = d(&a.conn.jets_at(x)?.omega, &b.conn.jets_at(x)?.omega);
    let z = a.zeta.jets_at(x)?.max_diff(&b.zeta.jets_at(x)?);
    let k = d(&a.metric.kappa.eval_at(x)?, &b.metric.kappa.eval_at(x)?);
    let g = d(&a.metric.g.eval_at(x)?, &b.metric.g.eval_at(x)?);
    Ok(w.max(z).max(k).max(g))
}

/// `∇̃ᵇᵃˢ_μ ν − Λ∇ᵇᵃˢ_μ(Λ⁻¹ν)` on `E` and `∇̃ᵇᵃˢ_μ Y − Λ̂∇ᵇᵃˢ_μ(Λ̂⁻¹Y)` on `TN`, jet max.
pub fn conjugation_residual(
    conn: &Connection,
    redefined: &Connection,
    red: &Redef,
    mu: &Section,
    nu: &Section,
    y: &BaseVectorField,
    x: &[f64],
) -> Result<f64> {
    let (aj, cj) = conn.data_at(x)?;
    let tj = redefined.jets_at(x)?;
    let ops = lambda_ops(&aj, &red.jets_at(x)?)?;
    let (n, r) = (aj.n, aj.r);
    let mv = |m: &[Jet2], v: &[Jet2], d: usize| -> Vec<Jet2> { (0..d).map(|a| (0..d).map(|b| m[a * d + b] * v[b]).sum()).collect() };
    let diff = |p: &[Jet2], q: &[Jet2]| p.iter().zip(q).fold(0.0f64, |m, (u, v)| m.max(u.max_diff(v)));
    let (m, v, yv) = (mu.jets_at(x)?, nu.jets_at(x)?, y.jets_at(x)?);
    let lhs = econn_e_jets(&aj, &basic_e_jets(&aj, &tj), &m, &v);
    let inner = econn_e_jets(&aj, &basic_e_jets(&aj, &cj), &m, &mv(&ops.big_inv, &v, r));
    let on_e = diff(&lhs, &mv(&ops.big, &inner, r));
    let lhs = econn_tn_jets(&aj, &basic_tn_jets(&aj, &tj), &m, &yv);
    let inner = econn_tn_jets(&aj, &basic_tn_jets(&aj, &cj), &m, &mv(&ops.hat_inv, &yv, n));
    Ok(on_e.max(diff(&lhs, &mv(&ops.hat, &inner, n))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u1_su2_is_a_lab_with_centre() {
        let k = u1_su2_lab(2, Domain::cube(2, -1.0, 1.0)).unwrap();
        let aj = k.jets_at(&[0.1, 0.2]).unwrap();
        assert_eq!(aj.c(3, 1, 2).value(), 1.0);
        assert!((0..4).all(|a| (0..4).all(|c| aj.c(c, 0, a).value() == 0.0)));
    }

    #[test]
    fn zero_lambda_is_identity() {
        let e = su2_example();
        let red = Redef::zero(3, 3);
        let m = lambda_operators(&e, &red, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(m.lambda, identity(3));
        assert_eq!(m.lambda_hat_inv, identity(3));
    }
}
