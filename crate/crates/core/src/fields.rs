//! Pointwise field theory on a spacetime chart: minimal coupling, field strengths,
//! the Lagrangian density and infinitesimal gauge transformations.

use rand::Rng;

use crate::algebroid::{anchor_of, bracket_jets, AlgebroidJets, LieAlgebroid, Section};
use crate::connection::{
    basic_curvature_form, basic_e_jets, basic_tn_jets, cov_jets, curvature_form, d_nabla_jets, econn_e_jets,
    econn_tn_jets, nabla_rho_jets, torsion_form, ConnJets, Connection, FormJets,
};
use crate::gauge::{lambda_ops, GaugeData, Redef};
use crate::jets::{values, Expr, Jet2, ScalarField, TensorField};
use crate::{Error, Result};

/// Spacetime chart `ℝ^d` with a constant metric `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spacetime {
    d: usize,
    eta: Vec<f64>,
    eta_inv: Vec<f64>,
}

impl Spacetime {
    pub fn new(d: usize, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != d * d {
            return Err(Error::Shape(format!("η has {} entries for d = {d}", eta.len())));
        }
        let asym = (0..d * d).fold(0.0f64, |m, k| m.max((eta[k] - eta[(k % d) * d + k / d]).abs()));
        if asym > 0.0 {
            return Err(Error::Precondition { what: "η symmetric".into(), residual: asym });
        }
        let m = nalgebra::DMatrix::from_row_slice(d, d, &eta);
        let inv = m.clone().try_inverse().filter(|_| m.determinant().abs() > 0.0);
        let inv = inv.ok_or(Error::Precondition { what: "η invertible".into(), residual: 0.0 })?;
        let eta_inv = (0..d * d).map(|k| inv[(k / d, k % d)]).collect();
        Ok(Spacetime { d, eta, eta_inv })
    }
    pub fn euclidean(d: usize) -> Self {
        let eta: Vec<f64> = (0..d * d).map(|k| if k / d == k % d { 1.0 } else { 0.0 }).collect();
        Spacetime { d, eta_inv: eta.clone(), eta }
    }
    /// Signature `(−, +, …, +)`.
    pub fn minkowski(d: usize) -> Self {
        let eta: Vec<f64> = (0..d * d)
            .map(|k| match (k / d, k % d) {
                (0, 0) => -1.0,
                (a, b) if a == b => 1.0,
                _ => 0.0,
            })
            .collect();
        Spacetime { d, eta_inv: eta.clone(), eta }
    }
    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }
    pub fn eta_inv(&self) -> &[f64] {
        &self.eta_inv
    }
}

/// Higgs field `Φⁱ`, gauge field `Aᵃ_μ` (at `a*d+μ`) and gauge parameter `εᵃ` on the chart.
#[derive(Clone, Debug)]
pub struct FieldConfig {
    phi: TensorField,
    a: TensorField,
    eps: TensorField,
}

/// Field values at a spacetime point as jets in the spacetime coordinates.
#[derive(Clone, Debug)]
pub struct FieldJets {
    pub d: usize,
    pub n: usize,
    pub r: usize,
    pub phi: Vec<Jet2>,
    pub a: Vec<Jet2>,
    pub eps: Vec<Jet2>,
}

impl FieldJets {
    #[inline]
    pub fn a(&self, a: usize, mu: usize) -> Jet2 {
        self.a[a * self.d + mu]
    }
    #[inline]
    pub fn dphi(&self, i: usize, mu: usize) -> Jet2 {
        self.phi[i].partial(mu)
    }
    pub fn phi_values(&self) -> Vec<f64> {
        values(&self.phi)
    }
}

impl FieldConfig {
    pub fn new(phi: TensorField, a: TensorField, eps: TensorField) -> Result<Self> {
        let d = phi.in_dim();
        let n = phi.len();
        let r = eps.len();
        if phi.shape() != [n] || eps.shape() != [r] || a.shape() != [r, d] || a.in_dim() != d || eps.in_dim() != d {
            return Err(Error::Shape(format!(
                "fields Φ {:?}, A {:?}, ε {:?} on a {d}-dimensional chart",
                phi.shape(),
                a.shape(),
                eps.shape()
            )));
        }
        Ok(FieldConfig { phi, a, eps })
    }
    pub fn from_exprs(d: usize, phi: Vec<Expr>, a: Vec<Expr>, eps: Vec<Expr>) -> Result<Self> {
        let (n, r) = (phi.len(), eps.len());
        FieldConfig::new(
            TensorField::from_exprs(vec![n], d, phi),
            TensorField::from_exprs(vec![r, d], d, a),
            TensorField::from_exprs(vec![r], d, eps),
        )
    }
    /// `Φ = centre + scale·p(x)`, `A` and `ε` random polynomials of degree `deg`.
    pub fn random_poly<R: Rng>(d: usize, r: usize, centre: &[f64], scale: f64, deg: usize, rng: &mut R) -> Result<Self> {
        let phi = centre.iter().map(|c| Expr::random_poly(d, deg, rng) * scale + *c).collect();
        let a = (0..r * d).map(|_| Expr::random_poly(d, deg, rng)).collect();
        let eps = (0..r).map(|_| Expr::random_poly(d, deg, rng)).collect();
        FieldConfig::from_exprs(d, phi, a, eps)
    }
    pub fn with_eps(mut self, eps: TensorField) -> Result<Self> {
        if eps.shape() != self.eps.shape() || eps.in_dim() != self.eps.in_dim() {
            return Err(Error::Shape("ε does not match the configuration".into()));
        }
        self.eps = eps;
        Ok(self)
    }
    pub fn phi(&self) -> &TensorField {
        &self.phi
    }
    pub fn a(&self) -> &TensorField {
        &self.a
    }
    pub fn eps(&self) -> &TensorField {
        &self.eps
    }
    pub fn d(&self) -> usize {
        self.phi.in_dim()
    }
    pub fn n(&self) -> usize {
        self.phi.len()
    }
    pub fn r(&self) -> usize {
        self.eps.len()
    }
    pub fn jets_at(&self, x: &[f64]) -> Result<FieldJets> {
        Ok(FieldJets {
            d: self.d(),
            n: self.n(),
            r: self.r(),
            phi: self.phi.eval_at(x)?,
            a: self.a.eval_at(x)?,
            eps: self.eps.eval_at(x)?,
        })
    }
}

/// Algebroid and connection data at `Φ(x)` as jets in `x`.
pub fn pulled(conn: &Connection, fj: &FieldJets) -> Result<(AlgebroidJets, ConnJets)> {
    let alg = conn.algebroid();
    if fj.n != alg.n() || fj.r != alg.r() {
        return Err(Error::Shape(format!("fields of rank ({}, {}) for algebroid ({}, {})", fj.n, fj.r, alg.n(), alg.r())));
    }
    alg.check_point(&fj.phi_values())?;
    Ok((alg.jets_on(&fj.phi)?, conn.jets_on(&fj.phi)?))
}

/// `Ωᵇ_aμ = ∂_μΦⁱ ωᵇ_ai(Φ)` at `(b*r+a)*d+μ`.
pub fn pullback_omega_jets(cj: &ConnJets, fj: &FieldJets) -> Vec<Jet2> {
    let (n, r, d) = (cj.n, cj.r, fj.d);
    let mut out = vec![Jet2::zero(); r * r * d];
    for b in 0..r {
        for a in 0..r {
            for mu in 0..d {
                out[(b * r + a) * d + mu] = (0..n).map(|i| fj.dphi(i, mu) * cj.om(b, a, i)).sum();
            }
        }
    }
    out
}

/// `(𝔇Φ)ⁱ_μ = ∂_μΦⁱ − ρⁱ_a(Φ)Aᵃ_μ` at `i*d+μ`.
pub fn coupling_jets(aj: &AlgebroidJets, fj: &FieldJets) -> Vec<Jet2> {
    let (n, r, d) = (aj.n, aj.r, fj.d);
    let mut out = vec![Jet2::zero(); n * d];
    for i in 0..n {
        for mu in 0..d {
            out[i * d + mu] = fj.dphi(i, mu) - (0..r).map(|a| aj.rho(a, i) * fj.a(a, mu)).sum::<Jet2>();
        }
    }
    out
}

/// `Fᵃ_μν = ∂_μAᵃ_ν − ∂_νAᵃ_μ + Ωᵃ_bμAᵇ_ν − Ωᵃ_bνAᵇ_μ − tᵃ_bc Aᵇ_μAᶜ_ν`, `t` the torsion of `∇_ρ`,
/// at `(a*d+μ)*d+ν`.
pub fn field_strength_f_jets(aj: &AlgebroidJets, cj: &ConnJets, fj: &FieldJets) -> Vec<Jet2> {
    let (r, d) = (aj.r, fj.d);
    let om = pullback_omega_jets(cj, fj);
    let t = torsion_form(aj, &nabla_rho_jets(aj, cj));
    let mut out = vec![Jet2::zero(); r * d * d];
    for a in 0..r {
        for mu in 0..d {
            for nu in mu + 1..d {
                let mut s = fj.a(a, nu).partial(mu) - fj.a(a, mu).partial(nu);
                for b in 0..r {
                    s += om[(a * r + b) * d + mu] * fj.a(b, nu) - om[(a * r + b) * d + nu] * fj.a(b, mu);
                    for c in 0..r {
                        s -= t.get(&[], &[b, c])[a] * fj.a(b, mu) * fj.a(c, nu);
                    }
                }
                out[(a * d + mu) * d + nu] = s;
                out[(a * d + nu) * d + mu] = -s;
            }
        }
    }
    out
}

/// `G = F + ζ(𝔇Φ, 𝔇Φ)`.
pub fn field_strength_g_jets(aj: &AlgebroidJets, cj: &ConnJets, zeta: &FormJets, fj: &FieldJets) -> Vec<Jet2> {
    let (n, r, d) = (aj.n, aj.r, fj.d);
    let dd = coupling_jets(aj, fj);
    let mut g = field_strength_f_jets(aj, cj, fj);
    for mu in 0..d {
        for nu in 0..d {
            if mu == nu {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    let w = dd[i * d + mu] * dd[j * d + nu];
                    let z = zeta.get(&[i, j], &[]);
                    for a in 0..r {
                        g[(a * d + mu) * d + nu] += z[a] * w;
                    }
                }
            }
        }
    }
    g
}

fn zeta_on(data: &GaugeData, fj: &FieldJets) -> Result<FormJets> {
    data.zeta().jets_on(&fj.phi)
}

pub fn pullback_connection(conn: &Connection, cfg: &FieldConfig, x: &[f64]) -> Result<Vec<f64>> {
    let fj = cfg.jets_at(x)?;
    let (_, cj) = pulled(conn, &fj)?;
    Ok(values(&pullback_omega_jets(&cj, &fj)))
}

pub fn minimal_coupling(alg: &LieAlgebroid, cfg: &FieldConfig, x: &[f64]) -> Result<Vec<f64>> {
    let fj = cfg.jets_at(x)?;
    alg.check_point(&fj.phi_values())?;
    Ok(values(&coupling_jets(&alg.jets_on(&fj.phi)?, &fj)))
}

pub fn field_strength_f(conn: &Connection, cfg: &FieldConfig, x: &[f64]) -> Result<Vec<f64>> {
    let fj = cfg.jets_at(x)?;
    let (aj, cj) = pulled(conn, &fj)?;
    Ok(values(&field_strength_f_jets(&aj, &cj, &fj)))
}

pub fn field_strength_g(data: &GaugeData, cfg: &FieldConfig, x: &[f64]) -> Result<Vec<f64>> {
    let fj = cfg.jets_at(x)?;
    let (aj, cj) = pulled(data.connection(), &fj)?;
    Ok(values(&field_strength_g_jets(&aj, &cj, &zeta_on(data, &fj)?, &fj)))
}

/// `(δΦ, δA)` with `δΦⁱ = −ρⁱ_aεᵃ` and
/// `δAᵃ_μ = εᵇAᶜ_μ(∇ᵇᵃˢ_{e_b}e_c)ᵃ − ∂_μεᵃ − Ωᵃ_bμεᵇ`.
pub fn gauge_delta_jets(aj: &AlgebroidJets, cj: &ConnJets, fj: &FieldJets) -> (Vec<Jet2>, Vec<Jet2>) {
    let (n, r, d) = (aj.n, aj.r, fj.d);
    let dphi: Vec<Jet2> = (0..n).map(|i| -(0..r).map(|a| aj.rho(a, i) * fj.eps[a]).sum::<Jet2>()).collect();
    let g = basic_e_jets(aj, cj);
    let om = pullback_omega_jets(cj, fj);
    let mut da = vec![Jet2::zero(); r * d];
    for a in 0..r {
        for mu in 0..d {
            let mut s = -fj.eps[a].partial(mu);
            for b in 0..r {
                s -= om[(a * r + b) * d + mu] * fj.eps[b];
                for c in 0..r {
                    s += g.g(a, b, c) * fj.eps[b] * fj.a(c, mu);
                }
            }
            da[a * d + mu] = s;
        }
    }
    (dphi, da)
}

pub fn gauge_delta(conn: &Connection, cfg: &FieldConfig, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let fj = cfg.jets_at(x)?;
    let (aj, cj) = pulled(conn, &fj)?;
    let (p, a) = gauge_delta_jets(&aj, &cj, &fj);
    Ok((values(&p), values(&a)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
}

fn flow_rhs(conn: &Connection, fj: &FieldJets) -> Result<(Vec<Jet2>, Vec<Jet2>)> {
    let alg = conn.algebroid();
    let v = fj.phi_values();
    if !alg.domain().contains(&v) {
        return Err(Error::DomainExit(v));
    }
    let (aj, cj) = (alg.jets_on(&fj.phi)?, conn.jets_on(&fj.phi)?);
    Ok(gauge_delta_jets(&aj, &cj, fj))
}

fn shifted(fj: &FieldJets, k: &(Vec<Jet2>, Vec<Jet2>), h: f64) -> FieldJets {
    FieldJets {
        phi: fj.phi.iter().zip(&k.0).map(|(p, q)| *p + q.scale(h)).collect(),
        a: fj.a.iter().zip(&k.1).map(|(p, q)| *p + q.scale(h)).collect(),
        ..fj.clone()
    }
}

/// One step of the gauge flow `Φ̇ = −ρ(ε)`, `Ȧ = δ_ε A` at a point, on jets.
pub fn flow_jets(conn: &Connection, fj: &FieldJets, dt: f64, scheme: Scheme) -> Result<FieldJets> {
    let out = match scheme {
        Scheme::Euler => shifted(fj, &flow_rhs(conn, fj)?, dt),
        Scheme::Rk4 => {
            let k1 = flow_rhs(conn, fj)?;
            let k2 = flow_rhs(conn, &shifted(fj, &k1, 0.5 * dt))?;
            let k3 = flow_rhs(conn, &shifted(fj, &k2, 0.5 * dt))?;
            let k4 = flow_rhs(conn, &shifted(fj, &k3, dt))?;
            let comb = |i: usize| -> Vec<Jet2> {
                let pick = |k: &(Vec<Jet2>, Vec<Jet2>)| if i == 0 { k.0.clone() } else { k.1.clone() };
                let (a, b, c, e) = (pick(&k1), pick(&k2), pick(&k3), pick(&k4));
                (0..a.len()).map(|j| (a[j] + b[j].scale(2.0) + c[j].scale(2.0) + e[j]).scale(1.0 / 6.0)).collect()
            };
            shifted(fj, &(comb(0), comb(1)), dt)
        }
    };
    let v = out.phi_values();
    if !conn.algebroid().domain().contains(&v) {
        return Err(Error::DomainExit(v));
    }
    Ok(out)
}

/// The configuration after one flow step; `ε` is held fixed.
pub fn gauge_flow_step(conn: &Connection, cfg: &FieldConfig, dt: f64, scheme: Scheme) -> Result<FieldConfig> {
    let (n, r, d) = (cfg.n(), cfg.r(), cfg.d());
    let (c1, f1) = (conn.clone(), cfg.clone());
    let phi = TensorField::from_point_fn(vec![n], d, move |x| Ok(flow_jets(&c1, &f1.jets_at(x)?, dt, scheme)?.phi));
    let (c2, f2) = (conn.clone(), cfg.clone());
    let a = TensorField::from_point_fn(vec![r, d], d, move |x| Ok(flow_jets(&c2, &f2.jets_at(x)?, dt, scheme)?.a));
    FieldConfig::new(phi, a, cfg.eps.clone())
}

/// Antisymmetrized `X(ε, A_μ, B_ν) − X(ε, A_ν, B_μ)` for the basic curvature `X = Rᵇᵃˢ`.
fn basic_term(s: &FormJets, fj: &FieldJets, b_vec: &[Jet2], n: usize, r: usize) -> Vec<Jet2> {
    let d = fj.d;
    let mut out = vec![Jet2::zero(); r * d * d];
    for mu in 0..d {
        for nu in 0..d {
            if mu == nu {
                continue;
            }
            for i in 0..n {
                for a in 0..r {
                    for b in 0..r {
                        let w = fj.eps[a] * (fj.a(b, mu) * b_vec[i * d + nu] - fj.a(b, nu) * b_vec[i * d + mu]);
                        let v = s.get(&[i], &[a, b]);
                        for c in 0..r {
                            out[(c * d + mu) * d + nu] += v[c] * w;
                        }
                    }
                }
            }
        }
    }
    out
}

/// `R∇(X, Y)ε` contracted into the 2-form `X_μ ∧ Y_ν`.
fn curvature_term(rf: &FormJets, fj: &FieldJets, v: &[Jet2], n: usize, r: usize) -> Vec<Jet2> {
    let d = fj.d;
    let mut out = vec![Jet2::zero(); r * d * d];
    for mu in 0..d {
        for nu in 0..d {
            if mu == nu {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    let w = v[i * d + mu] * v[j * d + nu];
                    for a in 0..r {
                        let col = rf.get(&[i, j], &[a]);
                        for c in 0..r {
                            out[(c * d + mu) * d + nu] += col[c] * fj.eps[a] * w;
                        }
                    }
                }
            }
        }
    }
    out
}

/// `(∇ᵇᵃˢ_ε ζ)(∂_i, ∂_j)` at `(i*n+j)*r+a`.
fn basic_derivative_of_zeta(aj: &AlgebroidJets, cj: &ConnJets, zeta: &FormJets, eps: &[Jet2]) -> Vec<Jet2> {
    let (n, r) = (aj.n, aj.r);
    let g = basic_e_jets(aj, cj);
    let b = basic_tn_jets(aj, cj);
    let mut out = vec![Jet2::zero(); n * n * r];
    for i in 0..n {
        for j in 0..n {
            let zij = zeta.get(&[i, j], &[]);
            for a in 0..r {
                let mut s = Jet2::zero();
                for c in 0..r {
                    let mut t: Jet2 = (0..n).map(|k| aj.rho(c, k) * zij[a].partial(k)).sum();
                    for e in 0..r {
                        t += g.g(a, c, e) * zij[e];
                    }
                    for k in 0..n {
                        t -= b.b(k, c, i) * zeta.get(&[k, j], &[])[a] + b.b(k, c, j) * zeta.get(&[i, k], &[])[a];
                    }
                    s += eps[c] * t;
                }
                out[(i * n + j) * r + a] = s;
            }
        }
    }
    out
}

/// Target data at `Φ(x)` as jets in the target coordinates.
fn zeta_target(data: &GaugeData, fj: &FieldJets) -> Result<(AlgebroidJets, ConnJets, FormJets)> {
    let y = Jet2::variables(&fj.phi_values())?;
    Ok((data.algebroid().jets_on(&y)?, data.connection().jets_on(&y)?, data.zeta().jets_on(&y)?))
}

/// Field values with spacetime derivatives dropped.
fn target_side(fj: &FieldJets) -> FieldJets {
    let c = |v: &[Jet2]| v.iter().map(|j| Jet2::constant(j.value())).collect::<Vec<_>>();
    FieldJets { phi: c(&fj.phi), a: c(&fj.a), eps: c(&fj.eps), ..fj.clone() }
}

/// `δ_ε F = −(R∇(𝔇, 𝔇)ε + Rᵇᵃˢ(ε ∧ A ∧ 𝔇))`.
pub fn gauge_delta_f(conn: &Connection, cfg: &FieldConfig, x: &[f64]) -> Result<Vec<f64>> {
    let fj = cfg.jets_at(x)?;
    conn.algebroid().check_point(&fj.phi_values())?;
    let y = Jet2::variables(&fj.phi_values())?;
    let (aj, cj) = (conn.algebroid().jets_on(&y)?, conn.jets_on(&y)?);
    let (n, r) = (aj.n, aj.r);
    let aj_x = conn.algebroid().jets_on(&fj.phi)?;
    let dd = coupling_jets(&aj_x, &fj);
    let t = target_side(&fj);
    let t1 = curvature_term(&curvature_form(&cj), &t, &dd, n, r);
    let t2 = basic_term(&basic_curvature_form(&aj, &cj), &t, &dd, n, r);
    Ok(t1.iter().zip(&t2).map(|(a, b)| -(a.value() + b.value())).collect())
}

/// `δ_ε G = −(R∇(𝔇, 𝔇)ε + (∇ᵇᵃˢ_ε ζ)(𝔇, 𝔇) + Rᵇᵃˢ(ε ∧ A ∧ 𝔇))`.
pub fn gauge_delta_g(data: &GaugeData, cfg: &FieldConfig, x: &[f64]) -> Result<Vec<f64>> {
    let fj = cfg.jets_at(x)?;
    data.algebroid().check_point(&fj.phi_values())?;
    let (aj, cj, z) = zeta_target(data, &fj)?;
    let aj_x = data.algebroid().jets_on(&fj.phi)?;
    let dd = coupling_jets(&aj_x, &fj);
    let (n, r, d) = (aj.n, aj.r, fj.d);
    let t = target_side(&fj);
    let t1 = curvature_term(&curvature_form(&cj), &t, &dd, n, r);
    let t3 = basic_term(&basic_curvature_form(&aj, &cj), &t, &dd, n, r);
    let nz = basic_derivative_of_zeta(&aj, &cj, &z, &t.eps);
    let mut out: Vec<f64> = t1.iter().zip(&t3).map(|(a, b)| -(a.value() + b.value())).collect();
    for mu in 0..d {
        for nu in 0..d {
            if mu == nu {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    let w = (dd[i * d + mu] * dd[j * d + nu]).value();
                    for a in 0..r {
                        out[(a * d + mu) * d + nu] -= nz[(i * n + j) * r + a].value() * w;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `−¼ κ_ab Gᵃ_μν Gᵇ_ρσ η^μρ η^νσ + g_ij 𝔇ⁱ_μ 𝔇ʲ_ν η^μν − V(Φ)`.
pub fn lagrangian_density(data: &GaugeData, st: &Spacetime, v: &ScalarField, cfg: &FieldConfig, x: &[f64]) -> Result<f64> {
    let fj = cfg.jets_at(x)?;
    if st.dim() != fj.d {
        return Err(Error::Shape(format!("spacetime of dimension {} for fields on {}", st.dim(), fj.d)));
    }
    let (aj, cj) = pulled(data.connection(), &fj)?;
    let (n, r, d) = (aj.n, aj.r, fj.d);
    let y: Vec<f64> = fj.phi_values();
    let g_field = values(&field_strength_g_jets(&aj, &cj, &zeta_on(data, &fj)?, &fj));
    let dd = values(&coupling_jets(&aj, &fj));
    let kappa = values(&data.metric().kappa().eval_at(&y)?);
    let gm = values(&data.metric().g().eval_at(&y)?);
    let ei = st.eta_inv();
    let mut ym = 0.0;
    for a in 0..r {
        for b in 0..r {
            let k = kappa[a * r + b];
            if k == 0.0 {
                continue;
            }
            for mu in 0..d {
                for nu in 0..d {
                    for rho in 0..d {
                        for sg in 0..d {
                            ym += k * g_field[(a * d + mu) * d + nu] * g_field[(b * d + rho) * d + sg] * ei[mu * d + rho] * ei[nu * d + sg];
                        }
                    }
                }
            }
        }
    }
    let mut kin = 0.0;
    for i in 0..n {
        for j in 0..n {
            for mu in 0..d {
                for nu in 0..d {
                    kin += gm[i * n + j] * dd[i * d + mu] * dd[j * d + nu] * ei[mu * d + nu];
                }
            }
        }
    }
    Ok(-0.25 * ym + kin - v.value(&y)?)
}

/// `Ã = A + λ(Φ)(𝔇Φ)`; `Φ` and `ε` unchanged.
pub fn redefine_fields(alg: &LieAlgebroid, red: &Redef, cfg: &FieldConfig) -> Result<FieldConfig> {
    let (r, d) = (cfg.r(), cfg.d());
    let (al, rd, c) = (alg.clone(), red.clone(), cfg.clone());
    let a = TensorField::from_point_fn(vec![r, d], d, move |x| {
        let fj = c.jets_at(x)?;
        al.check_point(&fj.phi_values())?;
        let aj = al.jets_on(&fj.phi)?;
        let lam = rd.form().jets_on(&fj.phi)?.comps;
        let dd = coupling_jets(&aj, &fj);
        let n = aj.n;
        Ok((0..r * d)
            .map(|k| {
                let (a, mu) = (k / d, k % d);
                fj.a[k] + (0..n).map(|i| lam[i * r + a] * dd[i * d + mu]).sum::<Jet2>()
            })
            .collect())
    });
    FieldConfig::new(cfg.phi.clone(), a, cfg.eps.clone())
}

/// `Λ(Φ)` and `Λ̂(Φ)` at `x`, row-major.
pub fn lambda_at_field(alg: &LieAlgebroid, red: &Redef, cfg: &FieldConfig, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let y = values(&cfg.phi.eval_at(x)?);
    let ops = lambda_ops(&alg.jets_at(&y)?, &red.jets_at(&y)?)?;
    Ok((values(&ops.big), values(&ops.hat)))
}

/// Max residual of `d^{Φ*∇}G + [A ∧ G] − Φ^!(d∇ζ)` on a Lie algebra bundle.
pub fn bianchi_g_residual(data: &GaugeData, cfg: &FieldConfig, x: &[f64]) -> Result<BianchiDefect> {
    let fj = cfg.jets_at(x)?;
    let (aj, cj) = pulled(data.connection(), &fj)?;
    if crate::jets::max_abs(&aj.rho) > 0.0 {
        return Err(Error::WrongCategory("Bianchi defect needs a Lie algebra bundle".into()));
    }
    let (n, r, d) = (aj.n, aj.r, fj.d);
    let g = field_strength_g_jets(&aj, &cj, &zeta_on(data, &fj)?, &fj);
    let om = pullback_omega_jets(&cj, &fj);
    let y = Jet2::variables(&fj.phi_values())?;
    let dz = d_nabla_jets(&data.zeta().jets_on(&y)?, &data.connection().jets_on(&y)?)?;
    let mut res: f64 = 0.0;
    let mut pull: f64 = 0.0;
    let gi = |a: usize, m: usize, v: usize| g[(a * d + m) * d + v];
    for m in 0..d {
        for v in m + 1..d {
            for l in v + 1..d {
                let cyc = [(m, v, l), (v, l, m), (l, m, v)];
                for a in 0..r {
                    let mut s = 0.0;
                    for &(p, q, t) in &cyc {
                        s += gi(a, q, t).partial(p).value();
                        for b in 0..r {
                            s += (om[(a * r + b) * d + p] * gi(b, q, t)).value();
                            for c in 0..r {
                                s += (aj.c(a, b, c) * fj.a(b, p) * gi(c, q, t)).value();
                            }
                        }
                    }
                    let mut rhs = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                let w = fj.dphi(i, m).value() * fj.dphi(j, v).value() * fj.dphi(k, l).value();
                                rhs += dz.get(&[i, j, k], &[])[a].value() * w;
                            }
                        }
                    }
                    res = res.max((s - rhs).abs());
                    pull = pull.max(rhs.abs());
                }
            }
        }
    }
    Ok(BianchiDefect { residual: res, pulled_obstruction: pull })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BianchiDefect {
    pub residual: f64,
    pub pulled_obstruction: f64,
}

/// `Q(μ, ν)(∂_i) = ∇ᵇᵃˢ_μ(∇ν)(∂_i) + ∇_{ρ(∇_{∂_i}μ)}ν`, the closed form of `−δ_{*μ}` applied to `−!(∇ν)`.
fn nested_q(aj: &AlgebroidJets, cj: &ConnJets, mu: &[Jet2], nu: &[Jet2]) -> Vec<Vec<Jet2>> {
    let (n, r) = (aj.n, aj.r);
    let g = basic_e_jets(aj, cj);
    let b = basic_tn_jets(aj, cj);
    let unit = |i: usize| -> Vec<Jet2> { (0..n).map(|k| Jet2::constant(if k == i { 1.0 } else { 0.0 })).collect() };
    let cov_nu: Vec<Vec<Jet2>> = (0..n).map(|i| cov_jets(cj, &unit(i), nu)).collect();
    (0..n)
        .map(|i| {
            let mut s = econn_e_jets(aj, &g, mu, &cov_nu[i]);
            let moved = econn_tn_jets(aj, &b, mu, &unit(i));
            for (j, m) in moved.iter().enumerate() {
                for c in 0..r {
                    s[c] -= *m * cov_nu[j][c];
                }
            }
            let rv = anchor_of(aj, &cov_jets(cj, &unit(i), mu));
            for (c, v) in cov_jets(cj, &rv, nu).into_iter().enumerate() {
                s[c] += v;
            }
            s
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct NestedCurvature {
    pub residual: f64,
    pub magnitude: f64,
}

/// Commutator of gauge variations with pullback parameters `ε = Φ*μ`, `ϑ = Φ*ν`,
/// `δ_ε δ_ϑ A − δ_ϑ δ_ε A − δ_{Δ(ε,ϑ)} A`, against `−Φ^!(Rᵇᵃˢ(μ, ν))`.
pub fn nested_gauge_curvature(conn: &Connection, mu: &Section, nu: &Section, cfg: &FieldConfig, x: &[f64]) -> Result<NestedCurvature> {
    let fj = cfg.jets_at(x)?;
    let y = fj.phi_values();
    let (aj, cj) = conn.data_at(&y)?;
    let (n, r, d) = (aj.n, aj.r, fj.d);
    let (m, v) = (mu.jets_at(&y)?, nu.jets_at(&y)?);
    let q_mn = nested_q(&aj, &cj, &m, &v);
    let q_nm = nested_q(&aj, &cj, &v, &m);
    let br = bracket_jets(&aj, &m, &v);
    let s = basic_curvature_form(&aj, &cj);
    let mut res: f64 = 0.0;
    let mut mag: f64 = 0.0;
    for i in 0..n {
        let unit: Vec<Jet2> = (0..n).map(|k| Jet2::constant(if k == i { 1.0 } else { 0.0 })).collect();
        let cb = cov_jets(&cj, &unit, &br);
        let rb: Vec<Jet2> = (0..r)
            .map(|c| (0..r).map(|a| (0..r).map(|b| m[a] * v[b] * s.get(&[i], &[a, b])[c]).sum::<Jet2>()).sum())
            .collect();
        for c in 0..r {
            let lhs = (q_mn[i][c] - q_nm[i][c] - cb[c]).value();
            let rhs = -rb[c].value();
            for sg in 0..d {
                let w = fj.dphi(i, sg).value();
                res = res.max(((lhs - rhs) * w).abs());
                mag = mag.max((rhs * w).abs());
            }
        }
    }
    Ok(NestedCurvature { residual: res, magnitude: mag })
}

/// `Δᵃ = ϑᵇεᶜ Cᵃ_bc(Φ(x))` for field-independent parameter components.
pub fn pre_bracket(alg: &LieAlgebroid, theta: &[f64], eps: &[f64], cfg: &FieldConfig, x: &[f64]) -> Result<Vec<f64>> {
    let y = values(&cfg.phi.eval_at(x)?);
    let aj = alg.jets_at(&y)?;
    let r = aj.r;
    Ok((0..r)
        .map(|a| (0..r).map(|b| (0..r).map(|c| theta[b] * eps[c] * aj.c(a, b, c).value()).sum::<f64>()).sum())
        .collect())
}

/// `Δ(*μ, *ν)` with the variation terms `δ_{*ν}(μᵃ∘Φ) = −(ρ(ν)μᵃ)(Φ)`.
pub fn pullback_pre_bracket(alg: &LieAlgebroid, mu: &Section, nu: &Section, y: &[f64]) -> Result<Vec<f64>> {
    let aj = alg.jets_at(y)?;
    let (m, v) = (mu.jets_at(y)?, nu.jets_at(y)?);
    let (rm, rv) = (anchor_of(&aj, &m), anchor_of(&aj, &v));
    let r = aj.r;
    Ok((0..r)
        .map(|a| {
            let dm = -crate::algebroid::along(&rv, &m[a]).value();
            let dv = -crate::algebroid::along(&rm, &v[a]).value();
            let c: f64 = (0..r).map(|b| (0..r).map(|c| m[b].value() * v[c].value() * aj.c(a, b, c).value()).sum::<f64>()).sum();
            dm - dv + c
        })
        .collect())
}

/// Residual of `d^{Φ*∇}(Φ^!α) = Φ^!(d∇α)` for an `E`-valued 1-form `α` on the target.
pub fn pullback_commutes_with_d(conn: &Connection, alpha: &crate::connection::PQForm, cfg: &FieldConfig, x: &[f64]) -> Result<f64> {
    let fj = cfg.jets_at(x)?;
    let (_, cj) = pulled(conn, &fj)?;
    let (n, r, d) = (cj.n, cj.r, fj.d);
    let al = alpha.jets_on(&fj.phi)?;
    let pb: Vec<Jet2> = (0..d * r)
        .map(|k| {
            let (mu, a) = (k / r, k % r);
            (0..n).map(|i| al.comps[i * r + a] * fj.dphi(i, mu)).sum()
        })
        .collect();
    let om = pullback_omega_jets(&cj, &fj);
    let y = Jet2::variables(&fj.phi_values())?;
    let dal = d_nabla_jets(&alpha.jets_on(&y)?, &conn.jets_on(&y)?)?;
    let mut res: f64 = 0.0;
    for mu in 0..d {
        for nu in mu + 1..d {
            for a in 0..r {
                let mut s = pb[nu * r + a].partial(mu) - pb[mu * r + a].partial(nu);
                for b in 0..r {
                    s += om[(a * r + b) * d + mu] * pb[nu * r + b] - om[(a * r + b) * d + nu] * pb[mu * r + b];
                }
                let mut rhs = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        rhs += dal.get(&[i, j], &[])[a].value() * fj.dphi(i, mu).value() * fj.dphi(j, nu).value();
                    }
                }
                res = res.max((s.value() - rhs).abs());
            }
        }
    }
    Ok(res)
}

/// Deviations of `𝔇̃ = Λ̂𝔇`, `G̃ = ΛG` and `L̃ = L` under a redefinition.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct FieldRedefResidual {
    pub coupling: f64,
    pub field_strength: f64,
    pub lagrangian: f64,
}

pub fn field_redefinition_residuals(
    data: &GaugeData,
    redefined: &GaugeData,
    red: &Redef,
    st: &Spacetime,
    v: &ScalarField,
    cfg: &FieldConfig,
    x: &[f64],
) -> Result<FieldRedefResidual> {
    let alg = data.algebroid();
    let tcfg = redefine_fields(alg, red, cfg)?;
    let (big, hat) = lambda_at_field(alg, red, cfg, x)?;
    let (n, r, d) = (alg.n(), alg.r(), cfg.d());
    let dd = minimal_coupling(alg, cfg, x)?;
    let tdd = minimal_coupling(alg, &tcfg, x)?;
    let mut coupling: f64 = 0.0;
    for i in 0..n {
        for mu in 0..d {
            let pred: f64 = (0..n).map(|j| hat[i * n + j] * dd[j * d + mu]).sum();
            coupling = coupling.max((tdd[i * d + mu] - pred).abs());
        }
    }
    let g = field_strength_g(data, cfg, x)?;
    let tg = field_strength_g(redefined, &tcfg, x)?;
    let mut field_strength: f64 = 0.0;
    for a in 0..r {
        for m in 0..d * d {
            let pred: f64 = (0..r).map(|b| big[a * r + b] * g[b * d * d + m]).sum();
            field_strength = field_strength.max((tg[a * d * d + m] - pred).abs());
        }
    }
    let lagrangian = (lagrangian_density(data, st, v, cfg, x)? - lagrangian_density(redefined, st, v, &tcfg, x)?).abs();
    Ok(FieldRedefResidual { coupling, field_strength, lagrangian })
}

/// `|L(flow(dt)) − L|/dt` for each step and the log-log slope between the extreme steps.
pub fn richardson_slope(
    data: &GaugeData,
    st: &Spacetime,
    v: &ScalarField,
    cfg: &FieldConfig,
    x: &[f64],
    dts: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if dts.len() < 2 {
        return Err(Error::Usage("at least two steps are needed".into()));
    }
    let l0 = lagrangian_density(data, st, v, cfg, x)?;
    let rates = dts
        .iter()
        .map(|&dt| {
            let moved = gauge_flow_step(data.connection(), cfg, dt, Scheme::Euler)?;
            Ok((lagrangian_density(data, st, v, &moved, x)? - l0).abs() / dt)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (a, b) = (dts[0], dts[dts.len() - 1]);
    let slope = (rates[0].ln() - rates[rates.len() - 1].ln()) / (a.ln() - b.ln());
    Ok((slope, rates))
}

/// Forward difference of `F` (or `G`) along one Euler step against
/// `δ_ε Fᵃ + εᶜ(∇ᵇᵃˢ_{e_c}e_b)ᵃ Fᵇ`.
pub fn delta_oracle_defect(data: &GaugeData, cfg: &FieldConfig, x: &[f64], dt: f64, with_zeta: bool) -> Result<f64> {
    let conn = data.connection();
    let ev = |c: &FieldConfig| if with_zeta { field_strength_g(data, c, x) } else { field_strength_f(conn, c, x) };
    let moved = gauge_flow_step(conn, cfg, dt, Scheme::Euler)?;
    let (base, next) = (ev(cfg)?, ev(&moved)?);
    let delta = if with_zeta { gauge_delta_g(data, cfg, x)? } else { gauge_delta_f(conn, cfg, x)? };
    let fj = cfg.jets_at(x)?;
    let (aj, cj) = conn.data_at(&fj.phi_values())?;
    let g = basic_e_jets(&aj, &cj);
    let (r, d) = (aj.r, fj.d);
    let mut worst: f64 = 0.0;
    for a in 0..r {
        for m in 0..d * d {
            let mut pred = delta[a * d * d + m];
            for b in 0..r {
                for c in 0..r {
                    pred += fj.eps[c].value() * g.g(a, c, b).value() * base[b * d * d + m];
                }
            }
            worst = worst.max(((next[a * d * d + m] - base[a * d * d + m]) / dt - pred).abs());
        }
    }
    Ok(worst)
}
