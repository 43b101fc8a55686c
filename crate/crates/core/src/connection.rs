//! Connections on `E`, the induced `E`-connections, curvatures, torsions and
//! exterior covariant derivatives on `(p, q)`-forms.

use std::sync::OnceLock;

use rand::Rng;

use crate::algebroid::{along, anchor_of, bracket_jets, AlgebroidJets, Domain, LieAlgebroid};
use crate::jets::{jet_inverse, jet_matmul, Expr, Jet2, TensorField};
use crate::{Error, Result};

/// Vector bundle connection `∇_{∂_i} e_a = ω^b_ai e_b`.
#[derive(Clone, Debug)]
pub struct Connection {
    alg: LieAlgebroid,
    omega: TensorField,
}

/// `ω^b_ai` at `(b*r+a)*n+i`.
#[derive(Clone, Debug)]
pub struct ConnJets {
    pub n: usize,
    pub r: usize,
    pub omega: Vec<Jet2>,
}

impl ConnJets {
    #[inline]
    pub fn om(&self, b: usize, a: usize, i: usize) -> Jet2 {
        self.omega[(b * self.r + a) * self.n + i]
    }
}

impl Connection {
    pub fn new(alg: LieAlgebroid, omega: TensorField) -> Result<Self> {
        let (n, r) = (alg.n(), alg.r());
        if omega.shape() != [r, r, n] || omega.in_dim() != n {
            return Err(Error::Shape(format!("connection coefficients {:?} for (n, r) = ({n}, {r})", omega.shape())));
        }
        Ok(Connection { alg, omega })
    }
    /// The canonical flat connection of the frame.
    pub fn flat(alg: &LieAlgebroid) -> Self {
        let (n, r) = (alg.n(), alg.r());
        Connection { alg: alg.clone(), omega: TensorField::zeros(vec![r, r, n], n) }
    }
    pub fn random_poly<R: Rng>(alg: &LieAlgebroid, deg: usize, rng: &mut R) -> Self {
        let (n, r) = (alg.n(), alg.r());
        let es = (0..r * r * n).map(|_| Expr::random_poly(n, deg, rng)).collect();
        Connection { alg: alg.clone(), omega: TensorField::from_exprs(vec![r, r, n], n, es) }
    }
    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.alg
    }
    pub fn omega_field(&self) -> &TensorField {
        &self.omega
    }
    pub fn jets_at(&self, x: &[f64]) -> Result<ConnJets> {
        self.alg.check_point(x)?;
        Ok(ConnJets { n: self.alg.n(), r: self.alg.r(), omega: self.omega.eval_at(x)? })
    }
    pub fn jets_on(&self, x: &[Jet2]) -> Result<ConnJets> {
        Ok(ConnJets { n: self.alg.n(), r: self.alg.r(), omega: self.omega.eval_jets(x)? })
    }
    /// Algebroid and connection jets at `x` in one call.
    pub fn data_at(&self, x: &[f64]) -> Result<(AlgebroidJets, ConnJets)> {
        Ok((self.alg.jets_at(x)?, self.jets_at(x)?))
    }
}

/// On `TN = tangent_algebroid(n)`: the connection whose basic connection keeps the
/// frame `F_k = F^c_k ∂_c` (entry `c*n+k`) parallel, `ω^c_ai = −((∂_a F) F⁻¹)^c_i`.
pub fn basic_parallel_connection(alg: &LieAlgebroid, frame: Vec<Expr>) -> Result<Connection> {
    let n = alg.n();
    if alg.r() != n || frame.len() != n * n {
        return Err(Error::Shape(format!("frame with {} entries on rank {} over n = {n}", frame.len(), alg.r())));
    }
    let dframe: Vec<Vec<Expr>> = (0..n).map(|a| frame.iter().map(|e| e.diff(a)).collect()).collect();
    let omega = TensorField::from_jet_fn(vec![n, n, n], n, move |x| {
        let f = frame.iter().map(|e| e.eval(x)).collect::<std::result::Result<Vec<_>, _>>()?;
        let finv = jet_inverse(&f, n)?;
        let mut out = vec![Jet2::zero(); n * n * n];
        for (a, da) in dframe.iter().enumerate() {
            let d = da.iter().map(|e| e.eval(x)).collect::<std::result::Result<Vec<_>, _>>()?;
            let w = jet_matmul(&d, &finv, n, n, n);
            for c in 0..n {
                for i in 0..n {
                    out[(c * n + a) * n + i] = -w[c * n + i];
                }
            }
        }
        Ok(out)
    });
    Connection::new(alg.clone(), omega)
}

/// `ᴱ∇_{e_a} e_b = Γ^c_ab e_c`, stored at `(c*r+a)*r+b`.
#[derive(Clone, Debug)]
pub struct EConnOnEJets {
    pub r: usize,
    pub gamma: Vec<Jet2>,
}

impl EConnOnEJets {
    #[inline]
    pub fn g(&self, c: usize, a: usize, b: usize) -> Jet2 {
        self.gamma[(c * self.r + a) * self.r + b]
    }
}

/// `ᴱ∇_{e_a} ∂_i = B^j_ai ∂_j`, stored at `(j*r+a)*n+i`.
#[derive(Clone, Debug)]
pub struct EConnOnTNJets {
    pub r: usize,
    pub n: usize,
    pub beta: Vec<Jet2>,
}

impl EConnOnTNJets {
    #[inline]
    pub fn b(&self, j: usize, a: usize, i: usize) -> Jet2 {
        self.beta[(j * self.r + a) * self.n + i]
    }
}

/// An `E`-connection on `E` given by its frame coefficients.
#[derive(Clone, Debug)]
pub struct EConnOnE {
    alg: LieAlgebroid,
    gamma: TensorField,
}

/// An `E`-connection on `TN` given by its frame coefficients.
#[derive(Clone, Debug)]
pub struct EConnOnTN {
    alg: LieAlgebroid,
    beta: TensorField,
}

impl EConnOnE {
    pub fn new(alg: LieAlgebroid, gamma: TensorField) -> Result<Self> {
        let r = alg.r();
        if gamma.shape() != [r, r, r] {
            return Err(Error::Shape(format!("E-connection coefficients {:?}", gamma.shape())));
        }
        Ok(EConnOnE { alg, gamma })
    }
    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.alg
    }
    pub fn jets_at(&self, x: &[f64]) -> Result<EConnOnEJets> {
        self.alg.check_point(x)?;
        Ok(EConnOnEJets { r: self.alg.r(), gamma: self.gamma.eval_at(x)? })
    }
}

impl EConnOnTN {
    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.alg
    }
    pub fn jets_at(&self, x: &[f64]) -> Result<EConnOnTNJets> {
        self.alg.check_point(x)?;
        Ok(EConnOnTNJets { r: self.alg.r(), n: self.alg.n(), beta: self.beta.eval_at(x)? })
    }
}

/// `Γ^c_ab = ρ^i_a ω^c_bi`.
pub fn nabla_rho_jets(aj: &AlgebroidJets, cj: &ConnJets) -> EConnOnEJets {
    let (n, r) = (aj.n, aj.r);
    let mut gamma = vec![Jet2::zero(); r * r * r];
    for c in 0..r {
        for a in 0..r {
            for b in 0..r {
                gamma[(c * r + a) * r + b] = (0..n).map(|i| aj.rho(a, i) * cj.om(c, b, i)).sum();
            }
        }
    }
    EConnOnEJets { r, gamma }
}

/// Basic connection on `E`: `Γ^c_ab = C^c_ab + ρ^i_b ω^c_ai`.
pub fn basic_e_jets(aj: &AlgebroidJets, cj: &ConnJets) -> EConnOnEJets {
    let (n, r) = (aj.n, aj.r);
    let mut gamma = vec![Jet2::zero(); r * r * r];
    for c in 0..r {
        for a in 0..r {
            for b in 0..r {
                gamma[(c * r + a) * r + b] =
                    aj.c(c, a, b) + (0..n).map(|i| aj.rho(b, i) * cj.om(c, a, i)).sum::<Jet2>();
            }
        }
    }
    EConnOnEJets { r, gamma }
}

/// Basic connection on `TN`: `B^j_ai = −∂_i ρ^j_a + ω^b_ai ρ^j_b`.
pub fn basic_tn_jets(aj: &AlgebroidJets, cj: &ConnJets) -> EConnOnTNJets {
    let (n, r) = (aj.n, aj.r);
    let mut beta = vec![Jet2::zero(); n * r * n];
    for j in 0..n {
        for a in 0..r {
            for i in 0..n {
                beta[(j * r + a) * n + i] =
                    (0..r).map(|b| cj.om(b, a, i) * aj.rho(b, j)).sum::<Jet2>() - aj.rho(a, j).partial(i);
            }
        }
    }
    EConnOnTNJets { r, n, beta }
}

/// Conjugate: `Γ̂^c_ab = C^c_ab + Γ^c_ba`.
pub fn conjugate_jets(aj: &AlgebroidJets, g: &EConnOnEJets) -> EConnOnEJets {
    let r = aj.r;
    let mut gamma = vec![Jet2::zero(); r * r * r];
    for c in 0..r {
        for a in 0..r {
            for b in 0..r {
                gamma[(c * r + a) * r + b] = aj.c(c, a, b) + g.g(c, b, a);
            }
        }
    }
    EConnOnEJets { r, gamma }
}

fn econn_from(conn: &Connection, f: fn(&AlgebroidJets, &ConnJets) -> EConnOnEJets) -> EConnOnE {
    let c = conn.clone();
    let r = conn.alg.r();
    let gamma = TensorField::from_point_fn(vec![r, r, r], conn.alg.n(), move |x| {
        let v = Jet2::variables(x)?;
        let aj = c.alg.jets_on(&v)?;
        let cj = c.jets_on(&v)?;
        Ok(f(&aj, &cj).gamma)
    });
    EConnOnE { alg: conn.alg.clone(), gamma }
}

/// `∇_ρ`, the `E`-connection `μ ↦ ∇_{ρ(μ)}`.
pub fn nabla_rho(conn: &Connection) -> EConnOnE {
    econn_from(conn, nabla_rho_jets)
}

/// Basic connection on `E`.
pub fn basic_on_e(conn: &Connection) -> EConnOnE {
    econn_from(conn, basic_e_jets)
}

/// Basic connection on `TN`.
pub fn basic_on_tn(conn: &Connection) -> EConnOnTN {
    let c = conn.clone();
    let (n, r) = (conn.alg.n(), conn.alg.r());
    let beta = TensorField::from_point_fn(vec![n, r, n], n, move |x| {
        let v = Jet2::variables(x)?;
        let aj = c.alg.jets_on(&v)?;
        let cj = c.jets_on(&v)?;
        Ok(basic_tn_jets(&aj, &cj).beta)
    });
    EConnOnTN { alg: conn.alg.clone(), beta }
}

pub fn conjugate(conn: &EConnOnE) -> EConnOnE {
    let c = conn.clone();
    let r = conn.alg.r();
    let gamma = TensorField::from_point_fn(vec![r, r, r], conn.alg.n(), move |x| {
        let v = Jet2::variables(x)?;
        let aj = c.alg.jets_on(&v)?;
        let g = EConnOnEJets { r, gamma: c.gamma.eval_jets(&v)? };
        Ok(conjugate_jets(&aj, &g).gamma)
    });
    EConnOnE { alg: conn.alg.clone(), gamma }
}

/// `∇_X μ = X^i (∂_i μ^c + ω^c_bi μ^b)`.
pub fn cov_jets(cj: &ConnJets, x: &[Jet2], mu: &[Jet2]) -> Vec<Jet2> {
    let (n, r) = (cj.n, cj.r);
    (0..r)
        .map(|c| {
            let mut s = along(x, &mu[c]);
            for i in 0..n {
                let t: Jet2 = (0..r).map(|b| cj.om(c, b, i) * mu[b]).sum();
                s += x[i] * t;
            }
            s
        })
        .collect()
}

/// `ᴱ∇_μ ν = μ^a (ρ(e_a)(ν^c) + Γ^c_ab ν^b)`.
pub fn econn_e_jets(aj: &AlgebroidJets, g: &EConnOnEJets, mu: &[Jet2], nu: &[Jet2]) -> Vec<Jet2> {
    let r = aj.r;
    let rm = anchor_of(aj, mu);
    (0..r)
        .map(|c| {
            let mut s = along(&rm, &nu[c]);
            for a in 0..r {
                let t: Jet2 = (0..r).map(|b| g.g(c, a, b) * nu[b]).sum();
                s += mu[a] * t;
            }
            s
        })
        .collect()
}

/// `ᴱ∇_μ X = μ^a (ρ(e_a)(X^j) + B^j_ai X^i)`.
pub fn econn_tn_jets(aj: &AlgebroidJets, be: &EConnOnTNJets, mu: &[Jet2], x: &[Jet2]) -> Vec<Jet2> {
    let (n, r) = (aj.n, aj.r);
    let rm = anchor_of(aj, mu);
    (0..n)
        .map(|j| {
            let mut s = along(&rm, &x[j]);
            for a in 0..r {
                let t: Jet2 = (0..n).map(|i| be.b(j, a, i) * x[i]).sum();
                s += mu[a] * t;
            }
            s
        })
        .collect()
}

/// `t(μ, ν) = ∇_μ ν − ∇_ν μ − [μ, ν]`.
pub fn e_torsion_jets(aj: &AlgebroidJets, g: &EConnOnEJets, mu: &[Jet2], nu: &[Jet2]) -> Vec<Jet2> {
    let a = econn_e_jets(aj, g, mu, nu);
    let b = econn_e_jets(aj, g, nu, mu);
    let c = bracket_jets(aj, mu, nu);
    (0..aj.r).map(|k| a[k] - b[k] - c[k]).collect()
}

/// `R(μ, ν)η = ∇_μ ∇_ν η − ∇_ν ∇_μ η − ∇_{[μ,ν]} η`.
pub fn e_curvature_e_jets(
    aj: &AlgebroidJets,
    g: &EConnOnEJets,
    mu: &[Jet2],
    nu: &[Jet2],
    eta: &[Jet2],
) -> Vec<Jet2> {
    let a = econn_e_jets(aj, g, mu, &econn_e_jets(aj, g, nu, eta));
    let b = econn_e_jets(aj, g, nu, &econn_e_jets(aj, g, mu, eta));
    let c = econn_e_jets(aj, g, &bracket_jets(aj, mu, nu), eta);
    (0..aj.r).map(|k| a[k] - b[k] - c[k]).collect()
}

/// Curvature of an `E`-connection on `TN`.
pub fn e_curvature_tn_jets(
    aj: &AlgebroidJets,
    be: &EConnOnTNJets,
    mu: &[Jet2],
    nu: &[Jet2],
    x: &[Jet2],
) -> Vec<Jet2> {
    let a = econn_tn_jets(aj, be, mu, &econn_tn_jets(aj, be, nu, x));
    let b = econn_tn_jets(aj, be, nu, &econn_tn_jets(aj, be, mu, x));
    let c = econn_tn_jets(aj, be, &bracket_jets(aj, mu, nu), x);
    (0..aj.n).map(|k| a[k] - b[k] - c[k]).collect()
}

/// Basic curvature by its defining five terms:
/// `∇_X[μ,ν] − [∇_X μ, ν] − [μ, ∇_X ν] − ∇_{∇ᵇᵃˢ_ν X} μ + ∇_{∇ᵇᵃˢ_μ X} ν`.
pub fn basic_curvature_jets(
    aj: &AlgebroidJets,
    cj: &ConnJets,
    mu: &[Jet2],
    nu: &[Jet2],
    x: &[Jet2],
) -> Vec<Jet2> {
    let be = basic_tn_jets(aj, cj);
    let t1 = cov_jets(cj, x, &bracket_jets(aj, mu, nu));
    let t2 = bracket_jets(aj, &cov_jets(cj, x, mu), nu);
    let t3 = bracket_jets(aj, mu, &cov_jets(cj, x, nu));
    let t4 = cov_jets(cj, &econn_tn_jets(aj, &be, nu, x), mu);
    let t5 = cov_jets(cj, &econn_tn_jets(aj, &be, mu, x), nu);
    (0..aj.r).map(|k| t1[k] - t2[k] - t3[k] - t4[k] + t5[k]).collect()
}

/// Value type of a form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Scalar,
    E,
    TN,
    /// `End(E)`, component `(c, a)` is `(·)(e_a)^c`.
    EndE,
}

impl ValueKind {
    pub fn dim(self, n: usize, r: usize) -> usize {
        match self {
            ValueKind::Scalar => 1,
            ValueKind::E => r,
            ValueKind::TN => n,
            ValueKind::EndE => r * r,
        }
    }
}

/// Increasing `k`-subsets of `0..n`.
pub fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// All permutations of `0..k` with their signs, for `k ≤ 5`.
pub fn perms(k: usize) -> &'static [(Vec<usize>, f64)] {
    static TABLE: OnceLock<Vec<Vec<(Vec<usize>, f64)>>> = OnceLock::new();
    let t = TABLE.get_or_init(|| (0..=5).map(all_perms).collect());
    &t[k]
}

fn all_perms(k: usize) -> Vec<(Vec<usize>, f64)> {
    if k == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let mut out = Vec::new();
    for (p, s) in all_perms(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            let sign = if (k - 1 - pos) % 2 == 0 { s } else { -s };
            out.push((q, sign));
        }
    }
    out
}

/// Components of a `(p, q)`-form at one point, layout `[i_1..i_p, a_1..a_q, value]`.
#[derive(Clone, Debug)]
pub struct FormJets {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub r: usize,
    pub kind: ValueKind,
    pub comps: Vec<Jet2>,
}

impl FormJets {
    pub fn zeros(p: usize, q: usize, n: usize, r: usize, kind: ValueKind) -> Self {
        let len = n.pow(p as u32) * r.pow(q as u32) * kind.dim(n, r);
        FormJets { p, q, n, r, kind, comps: vec![Jet2::zero(); len] }
    }
    pub fn vdim(&self) -> usize {
        self.kind.dim(self.n, self.r)
    }
    pub fn offset(&self, ks: &[usize], as_: &[usize]) -> usize {
        let mut o = 0;
        for &k in ks {
            o = o * self.n + k;
        }
        for &a in as_ {
            o = o * self.r + a;
        }
        o * self.vdim()
    }
    pub fn get(&self, ks: &[usize], as_: &[usize]) -> &[Jet2] {
        let o = self.offset(ks, as_);
        &self.comps[o..o + self.vdim()]
    }
    /// Set the component and all its antisymmetric images.
    pub fn set_antisym(&mut self, ks: &[usize], as_: &[usize], vals: &[Jet2]) {
        let vd = self.vdim();
        let mut kk = vec![0; ks.len()];
        let mut aa = vec![0; as_.len()];
        for (pk, sk) in perms(ks.len()) {
            for (i, &j) in pk.iter().enumerate() {
                kk[i] = ks[j];
            }
            for (pa, sa) in perms(as_.len()) {
                for (i, &j) in pa.iter().enumerate() {
                    aa[i] = as_[j];
                }
                let o = self.offset(&kk, &aa);
                let s = sk * sa;
                for v in 0..vd {
                    self.comps[o + v] = vals[v].scale(s);
                }
            }
        }
    }
    pub fn max_abs(&self) -> f64 {
        crate::jets::max_abs(&self.comps)
    }
    pub fn max_diff(&self, other: &FormJets) -> f64 {
        self.comps.iter().zip(&other.comps).fold(0.0, |m, (a, b)| m.max((a.value() - b.value()).abs()))
    }
    pub fn map(&self, f: impl Fn(&Jet2) -> Jet2) -> FormJets {
        FormJets { comps: self.comps.iter().map(f).collect(), ..self.clone() }
    }
    pub fn add(&self, other: &FormJets) -> FormJets {
        FormJets { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| *a + *b).collect(), ..self.clone() }
    }
    pub fn sub(&self, other: &FormJets) -> FormJets {
        FormJets { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| *a - *b).collect(), ..self.clone() }
    }
    /// Largest deviation from antisymmetry within each slot block.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut m: f64 = 0.0;
        let idx = |len: usize, base: usize| -> Vec<Vec<usize>> {
            (0..base.pow(len as u32))
                .map(|mut t| {
                    let mut v = vec![0; len];
                    for s in (0..len).rev() {
                        v[s] = t % base;
                        t /= base;
                    }
                    v
                })
                .collect()
        };
        for ks in idx(self.p, self.n) {
            for as_ in idx(self.q, self.r) {
                let here = self.get(&ks, &as_).to_vec();
                for s in 0..self.p.saturating_sub(1) {
                    let mut k2 = ks.clone();
                    k2.swap(s, s + 1);
                    for (a, b) in here.iter().zip(self.get(&k2, &as_)) {
                        m = m.max((a.value() + b.value()).abs());
                    }
                }
                for s in 0..self.q.saturating_sub(1) {
                    let mut a2 = as_.clone();
                    a2.swap(s, s + 1);
                    for (a, b) in here.iter().zip(self.get(&ks, &a2)) {
                        m = m.max((a.value() + b.value()).abs());
                    }
                }
            }
        }
        m
    }

    /// Evaluate on vector fields `xs` (length `p`) and sections `nus` (length `q`).
    pub fn eval(&self, xs: &[&[Jet2]], nus: &[&[Jet2]]) -> Vec<Jet2> {
        let vd = self.vdim();
        let mut out = vec![Jet2::zero(); vd];
        let total = self.n.pow(self.p as u32) * self.r.pow(self.q as u32);
        let mut ks = vec![0; self.p];
        let mut as_ = vec![0; self.q];
        for t in 0..total {
            let mut u = t;
            for s in (0..self.q).rev() {
                as_[s] = u % self.r;
                u /= self.r;
            }
            for s in (0..self.p).rev() {
                ks[s] = u % self.n;
                u /= self.n;
            }
            let o = t * vd;
            if self.comps[o..o + vd].iter().all(|c| c.value() == 0.0 && c.dim() == 0) {
                continue;
            }
            let mut w = Jet2::constant(1.0);
            for (s, &k) in ks.iter().enumerate() {
                w = w * xs[s][k];
            }
            for (s, &a) in as_.iter().enumerate() {
                w = w * nus[s][a];
            }
            for v in 0..vd {
                out[v] += w * self.comps[o + v];
            }
        }
        out
    }
}

/// `∇_dir V` for a value of the given kind, with `dv` the plain derivative,
/// `me(c,d)` the connection matrix on `E` and `mt(j,i)` the one on `TN`.
fn value_cov(
    kind: ValueKind,
    r: usize,
    v: &[Jet2],
    dv: &[Jet2],
    me: &[Jet2],
    mt: Option<&[Jet2]>,
) -> Result<Vec<Jet2>> {
    Ok(match kind {
        ValueKind::Scalar => dv.to_vec(),
        ValueKind::E => (0..r).map(|c| dv[c] + (0..r).map(|d| me[c * r + d] * v[d]).sum::<Jet2>()).collect(),
        ValueKind::TN => {
            let mt = mt.ok_or_else(|| Error::Shape("TN-valued form needs a TN connection".into()))?;
            let n = v.len();
            (0..n).map(|j| dv[j] + (0..n).map(|i| mt[j * n + i] * v[i]).sum::<Jet2>()).collect()
        }
        ValueKind::EndE => {
            let mut out = dv.to_vec();
            for c in 0..r {
                for a in 0..r {
                    for d in 0..r {
                        out[c * r + a] += me[c * r + d] * v[d * r + a] - v[c * r + d] * me[d * r + a];
                    }
                }
            }
            out
        }
    })
}

/// Exterior covariant derivative along `TN`; the new slot comes first.
pub fn d_nabla_jets(form: &FormJets, cj: &ConnJets) -> Result<FormJets> {
    let (p, q, n, r) = (form.p, form.q, form.n, form.r);
    if p + 1 > n {
        return Err(Error::Shape(format!("(p+1) = {} exceeds base dimension {n}", p + 1)));
    }
    let vd = form.vdim();
    let mut out = FormJets::zeros(p + 1, q, n, r, form.kind);
    let mats: Vec<Vec<Jet2>> = (0..n)
        .map(|k| {
            let mut m = vec![Jet2::zero(); r * r];
            for c in 0..r {
                for d in 0..r {
                    m[c * r + d] = cj.om(c, d, k);
                }
            }
            m
        })
        .collect();
    for ks in combos(n, p + 1) {
        for as_ in combos(r, q) {
            let mut acc = vec![Jet2::zero(); vd];
            for i in 0..=p {
                let k = ks[i];
                let rest: Vec<usize> = ks.iter().enumerate().filter(|&(s, _)| s != i).map(|(_, &v)| v).collect();
                let v = form.get(&rest, &as_);
                let dv: Vec<Jet2> = v.iter().map(|c| c.partial(k)).collect();
                let mut term = value_cov(form.kind, r, v, &dv, &mats[k], None)?;
                let mut a2 = as_.clone();
                for j in 0..q {
                    for c in 0..r {
                        let w = cj.om(c, as_[j], k);
                        a2[j] = c;
                        let o = form.get(&rest, &a2);
                        for t in 0..vd {
                            term[t] -= w * o[t];
                        }
                    }
                    a2[j] = as_[j];
                }
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                for t in 0..vd {
                    acc[t] += term[t].scale(s);
                }
            }
            out.set_antisym(&ks, &as_, &acc);
        }
    }
    Ok(out)
}

/// Exterior covariant derivative along `E` for an `E`-connection `(Γ, B)`;
/// the new `E` slot comes first. `B` may be omitted when `p = 0`.
pub fn d_e_jets(
    form: &FormJets,
    aj: &AlgebroidJets,
    g: &EConnOnEJets,
    be: Option<&EConnOnTNJets>,
) -> Result<FormJets> {
    let (p, q, n, r) = (form.p, form.q, form.n, form.r);
    if q + 1 > r {
        return Err(Error::Shape(format!("(q+1) = {} exceeds rank {r}", q + 1)));
    }
    if p > 0 && be.is_none() {
        return Err(Error::Shape("forms with TN slots need a TN connection".into()));
    }
    let vd = form.vdim();
    let mut out = FormJets::zeros(p, q + 1, n, r, form.kind);
    let me: Vec<Vec<Jet2>> = (0..r)
        .map(|a| {
            let mut m = vec![Jet2::zero(); r * r];
            for c in 0..r {
                for d in 0..r {
                    m[c * r + d] = g.g(c, a, d);
                }
            }
            m
        })
        .collect();
    let mt: Option<Vec<Vec<Jet2>>> = be.map(|be| {
        (0..r)
            .map(|a| {
                let mut m = vec![Jet2::zero(); n * n];
                for j in 0..n {
                    for i in 0..n {
                        m[j * n + i] = be.b(j, a, i);
                    }
                }
                m
            })
            .collect()
    });
    let rho: Vec<Vec<Jet2>> = (0..r).map(|a| (0..n).map(|i| aj.rho(a, i)).collect()).collect();
    for ks in combos(n, p) {
        for as_ in combos(r, q + 1) {
            let mut acc = vec![Jet2::zero(); vd];
            for i in 0..=q {
                let a = as_[i];
                let rest: Vec<usize> = as_.iter().enumerate().filter(|&(s, _)| s != i).map(|(_, &v)| v).collect();
                let v = form.get(&ks, &rest);
                let dv: Vec<Jet2> = v.iter().map(|c| along(&rho[a], c)).collect();
                let mut term = value_cov(form.kind, r, v, &dv, &me[a], mt.as_ref().map(|m| m[a].as_slice()))?;
                if let Some(be) = be {
                    let mut k2 = ks.clone();
                    for j in 0..p {
                        for l in 0..n {
                            let w = be.b(l, a, ks[j]);
                            k2[j] = l;
                            let o = form.get(&k2, &rest);
                            for t in 0..vd {
                                term[t] -= w * o[t];
                            }
                        }
                        k2[j] = ks[j];
                    }
                }
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                for t in 0..vd {
                    acc[t] += term[t].scale(s);
                }
            }
            for i in 0..=q {
                for j in i + 1..=q {
                    let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let rest: Vec<usize> =
                        as_.iter().enumerate().filter(|&(t, _)| t != i && t != j).map(|(_, &v)| v).collect();
                    let mut a2 = Vec::with_capacity(q);
                    a2.push(0);
                    a2.extend_from_slice(&rest);
                    for f in 0..r {
                        let w = aj.c(f, as_[i], as_[j]);
                        a2[0] = f;
                        let o = form.get(&ks, &a2);
                        for t in 0..vd {
                            acc[t] += (w * o[t]).scale(s);
                        }
                    }
                }
            }
            out.set_antisym(&ks, &as_, &acc);
        }
    }
    Ok(out)
}

/// `d^{∇ᵇᵃˢ}` at a point.
pub fn d_basic_jets(form: &FormJets, aj: &AlgebroidJets, cj: &ConnJets) -> Result<FormJets> {
    d_e_jets(form, aj, &basic_e_jets(aj, cj), Some(&basic_tn_jets(aj, cj)))
}

/// Curvature of `∇` as the `(2,1)`-form `(X, Y, ν) ↦ R(X,Y)ν`.
pub fn curvature_form(cj: &ConnJets) -> FormJets {
    let (n, r) = (cj.n, cj.r);
    let mut f = FormJets::zeros(2, 1, n, r, ValueKind::E);
    for ij in combos(n, 2) {
        let (i, j) = (ij[0], ij[1]);
        for a in 0..r {
            let vals: Vec<Jet2> = (0..r)
                .map(|b| {
                    let mut s = cj.om(b, a, j).partial(i) - cj.om(b, a, i).partial(j);
                    for c in 0..r {
                        s += cj.om(c, a, j) * cj.om(b, c, i) - cj.om(c, a, i) * cj.om(b, c, j);
                    }
                    s
                })
                .collect();
            f.set_antisym(&[i, j], &[a], &vals);
        }
    }
    f
}

/// Basic curvature as the `(1,2)`-form `(X, μ, ν) ↦ Rᵇᵃˢ(μ,ν)X`, closed formula.
pub fn basic_curvature_form(aj: &AlgebroidJets, cj: &ConnJets) -> FormJets {
    let (n, r) = (aj.n, aj.r);
    let be = basic_tn_jets(aj, cj);
    let mut f = FormJets::zeros(1, 2, n, r, ValueKind::E);
    for i in 0..n {
        for ab in combos(r, 2) {
            let (a, b) = (ab[0], ab[1]);
            let vals: Vec<Jet2> = (0..r)
                .map(|c| {
                    let mut s = aj.c(c, a, b).partial(i);
                    for d in 0..r {
                        s += aj.c(d, a, b) * cj.om(c, d, i) - cj.om(d, a, i) * aj.c(c, d, b)
                            - cj.om(d, b, i) * aj.c(c, a, d);
                    }
                    for j in 0..n {
                        s += aj.rho(b, j) * cj.om(c, a, i).partial(j) - aj.rho(a, j) * cj.om(c, b, i).partial(j)
                            - be.b(j, b, i) * cj.om(c, a, j)
                            + be.b(j, a, i) * cj.om(c, b, j);
                    }
                    s
                })
                .collect();
            f.set_antisym(&[i], &[a, b], &vals);
        }
    }
    f
}

/// Basic curvature from the five-term definition, evaluated on frame and coordinate fields.
pub fn basic_curvature_five_term(aj: &AlgebroidJets, cj: &ConnJets) -> FormJets {
    let (n, r) = (aj.n, aj.r);
    let mut f = FormJets::zeros(1, 2, n, r, ValueKind::E);
    let fr: Vec<Vec<Jet2>> = (0..r).map(|a| crate::algebroid::frame(r, a)).collect();
    for i in 0..n {
        let x: Vec<Jet2> = (0..n).map(|k| Jet2::constant(if k == i { 1.0 } else { 0.0 })).collect();
        for ab in combos(r, 2) {
            let v = basic_curvature_jets(aj, cj, &fr[ab[0]], &fr[ab[1]], &x);
            f.set_antisym(&[i], &ab, &v);
        }
    }
    f
}

/// Curvature of an `E`-connection on `E` as `End(E)`-valued `(0,2)`-form.
pub fn e_curvature_form(aj: &AlgebroidJets, g: &EConnOnEJets) -> FormJets {
    let r = aj.r;
    let mut f = FormJets::zeros(0, 2, aj.n, r, ValueKind::EndE);
    for ab in combos(r, 2) {
        let (a, b) = (ab[0], ab[1]);
        let mut vals = vec![Jet2::zero(); r * r];
        for d in 0..r {
            for c in 0..r {
                let mut s = along(&(0..aj.n).map(|i| aj.rho(a, i)).collect::<Vec<_>>(), &g.g(d, b, c))
                    - along(&(0..aj.n).map(|i| aj.rho(b, i)).collect::<Vec<_>>(), &g.g(d, a, c));
                for e in 0..r {
                    s += g.g(d, a, e) * g.g(e, b, c) - g.g(d, b, e) * g.g(e, a, c) - aj.c(e, a, b) * g.g(d, e, c);
                }
                vals[d * r + c] = s;
            }
        }
        f.set_antisym(&[], &ab, &vals);
    }
    f
}

/// Torsion of an `E`-connection on `E` as `(0,2)`-form.
pub fn torsion_form(aj: &AlgebroidJets, g: &EConnOnEJets) -> FormJets {
    let r = aj.r;
    let mut f = FormJets::zeros(0, 2, aj.n, r, ValueKind::E);
    for ab in combos(r, 2) {
        let (a, b) = (ab[0], ab[1]);
        let vals: Vec<Jet2> = (0..r).map(|c| g.g(c, a, b) - g.g(c, b, a) - aj.c(c, a, b)).collect();
        f.set_antisym(&[], &ab, &vals);
    }
    f
}

/// The identity of `E` as `(0,1)`-form.
pub fn identity_form(n: usize, r: usize) -> FormJets {
    let mut f = FormJets::zeros(0, 1, n, r, ValueKind::E);
    for a in 0..r {
        let o = f.offset(&[], &[a]);
        f.comps[o + a] = Jet2::constant(1.0);
    }
    f
}

/// `ω` as the `(1,1)`-form `(∂_i, e_a) ↦ ∇_{∂_i} e_a`.
pub fn omega_form(cj: &ConnJets) -> FormJets {
    let (n, r) = (cj.n, cj.r);
    let mut f = FormJets::zeros(1, 1, n, r, ValueKind::E);
    for i in 0..n {
        for a in 0..r {
            for b in 0..r {
                let o = f.offset(&[i], &[a]);
                f.comps[o + b] = cj.om(b, a, i);
            }
        }
    }
    f
}

/// A `(p, q)`-form field.
#[derive(Clone, Debug)]
pub struct PQForm {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub r: usize,
    pub kind: ValueKind,
    field: TensorField,
}

impl PQForm {
    /// Wrap a component field; antisymmetry is checked at sample points of `domain`.
    pub fn new(
        p: usize,
        q: usize,
        n: usize,
        r: usize,
        kind: ValueKind,
        field: TensorField,
        domain: &Domain,
    ) -> Result<Self> {
        let len = n.pow(p as u32) * r.pow(q as u32) * kind.dim(n, r);
        if field.len() != len || field.in_dim() != n {
            return Err(Error::Shape(format!("form field {:?} for ({p},{q}) with n={n}, r={r}", field.shape())));
        }
        let form = PQForm { p, q, n, r, kind, field };
        form.check_antisymmetry(&domain.sample(0x5eed, 4), 1e-12)?;
        Ok(form)
    }
    pub fn zeros(p: usize, q: usize, n: usize, r: usize, kind: ValueKind) -> Self {
        let len = n.pow(p as u32) * r.pow(q as u32) * kind.dim(n, r);
        PQForm { p, q, n, r, kind, field: TensorField::zeros(vec![len], n) }
    }
    /// Build from a pointwise closure producing [`FormJets`].
    pub fn from_point_fn<F>(p: usize, q: usize, n: usize, r: usize, kind: ValueKind, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<FormJets> + Send + Sync + 'static,
    {
        let len = n.pow(p as u32) * r.pow(q as u32) * kind.dim(n, r);
        let field = TensorField::from_point_fn(vec![len], n, move |x| Ok(f(x)?.comps));
        PQForm { p, q, n, r, kind, field }
    }
    /// Random polynomial components, antisymmetrised in each block.
    pub fn random_poly<R: Rng>(
        p: usize,
        q: usize,
        n: usize,
        r: usize,
        kind: ValueKind,
        deg: usize,
        rng: &mut R,
    ) -> Self {
        let vd = kind.dim(n, r);
        let mut entries: Vec<(Vec<usize>, Vec<usize>, Vec<Expr>)> = Vec::new();
        for ks in combos(n, p) {
            for as_ in combos(r, q) {
                let es = (0..vd).map(|_| Expr::random_poly(n, deg, rng)).collect();
                entries.push((ks.clone(), as_, es));
            }
        }
        PQForm::from_point_fn(p, q, n, r, kind, move |x| {
            let v = Jet2::variables(x)?;
            let mut f = FormJets::zeros(p, q, n, r, kind);
            for (ks, as_, es) in &entries {
                let vals = es.iter().map(|e| e.eval(&v)).collect::<std::result::Result<Vec<_>, _>>()?;
                f.set_antisym(ks, as_, &vals);
            }
            Ok(f)
        })
    }
    pub fn field(&self) -> &TensorField {
        &self.field
    }
    pub fn jets_at(&self, x: &[f64]) -> Result<FormJets> {
        Ok(FormJets { p: self.p, q: self.q, n: self.n, r: self.r, kind: self.kind, comps: self.field.eval_at(x)? })
    }
    pub fn jets_on(&self, x: &[Jet2]) -> Result<FormJets> {
        Ok(FormJets { p: self.p, q: self.q, n: self.n, r: self.r, kind: self.kind, comps: self.field.eval_jets(x)? })
    }
    pub fn check_antisymmetry(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        for x in points {
            let res = self.jets_at(x)?.antisymmetry_residual();
            if res >= tol {
                return Err(Error::Precondition { what: "form antisymmetry".into(), residual: res });
            }
        }
        Ok(())
    }
}

pub fn curvature(conn: &Connection, x: &[f64]) -> Result<FormJets> {
    Ok(curvature_form(&conn.jets_at(x)?))
}

/// Basic curvature at `x` by the five-term definition.
pub fn basic_curvature(conn: &Connection, x: &[f64]) -> Result<FormJets> {
    let (aj, cj) = conn.data_at(x)?;
    Ok(basic_curvature_five_term(&aj, &cj))
}

fn check_form_dims(form: &PQForm, alg: &LieAlgebroid) -> Result<()> {
    if form.n != alg.n() || form.r != alg.r() {
        return Err(Error::Shape(format!("form over (n, r) = ({}, {}) for algebroid ({}, {})", form.n, form.r, alg.n(), alg.r())));
    }
    Ok(())
}

pub fn d_nabla(form: &PQForm, conn: &Connection) -> Result<PQForm> {
    check_form_dims(form, &conn.alg)?;
    if form.p + 1 > form.n {
        return Err(Error::Shape(format!("p+1 = {} exceeds base dimension {}", form.p + 1, form.n)));
    }
    let (f, c) = (form.clone(), conn.clone());
    Ok(PQForm::from_point_fn(form.p + 1, form.q, form.n, form.r, form.kind, move |x| {
        d_nabla_jets(&f.jets_at(x)?, &c.jets_at(x)?)
    }))
}

pub fn d_basic(form: &PQForm, conn: &Connection) -> Result<PQForm> {
    check_form_dims(form, &conn.alg)?;
    if form.q + 1 > form.r {
        return Err(Error::Shape(format!("q+1 = {} exceeds rank {}", form.q + 1, form.r)));
    }
    let (f, c) = (form.clone(), conn.clone());
    Ok(PQForm::from_point_fn(form.p, form.q + 1, form.n, form.r, form.kind, move |x| {
        let (aj, cj) = c.data_at(x)?;
        d_basic_jets(&f.jets_at(x)?, &aj, &cj)
    }))
}

/// Exterior covariant derivative of an `E`-form (`p = 0`) for an `E`-connection.
pub fn d_econn(form: &PQForm, conn: &EConnOnE) -> Result<PQForm> {
    check_form_dims(form, &conn.alg)?;
    if form.p != 0 || form.q + 1 > form.r {
        return Err(Error::Shape(format!("d_econn needs a (0, q) form with q+1 ≤ r, got ({}, {})", form.p, form.q)));
    }
    let (f, c) = (form.clone(), conn.clone());
    Ok(PQForm::from_point_fn(0, form.q + 1, form.n, form.r, form.kind, move |x| {
        let aj = c.alg.jets_at(x)?;
        d_e_jets(&f.jets_at(x)?, &aj, &c.jets_at(x)?, None)
    }))
}

pub fn e_torsion(conn: &EConnOnE, mu: &crate::algebroid::Section, nu: &crate::algebroid::Section, x: &[f64]) -> Result<Vec<f64>> {
    let aj = conn.alg.jets_at(x)?;
    let g = conn.jets_at(x)?;
    Ok(crate::jets::values(&e_torsion_jets(&aj, &g, &mu.jets_at(x)?, &nu.jets_at(x)?)))
}

pub fn e_curvature(
    conn: &EConnOnE,
    mu: &crate::algebroid::Section,
    nu: &crate::algebroid::Section,
    eta: &crate::algebroid::Section,
    x: &[f64],
) -> Result<Vec<f64>> {
    let aj = conn.alg.jets_at(x)?;
    let g = conn.jets_at(x)?;
    Ok(crate::jets::values(&e_curvature_e_jets(&aj, &g, &mu.jets_at(x)?, &nu.jets_at(x)?, &eta.jets_at(x)?)))
}

pub fn e_curvature_tn(
    conn: &EConnOnTN,
    mu: &crate::algebroid::Section,
    nu: &crate::algebroid::Section,
    v: &crate::algebroid::BaseVectorField,
    x: &[f64],
) -> Result<Vec<f64>> {
    let aj = conn.alg.jets_at(x)?;
    let be = conn.jets_at(x)?;
    Ok(crate::jets::values(&e_curvature_tn_jets(&aj, &be, &mu.jets_at(x)?, &nu.jets_at(x)?, &v.jets_at(x)?)))
}

/// Residuals of the standard identities for `∇`, its basic connections and `∇ρ` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct IdentityResiduals {
    /// `t_{∇ᵇᵃˢ} + t_{∇ρ}`.
    pub torsion_flip: f64,
    /// `R_{∇ᵇᵃˢ}` on `E` and `TN` against the basic curvature.
    pub curvature_relations: f64,
    /// Five-term basic curvature against its torsion/curvature form.
    pub five_term: f64,
    pub bianchi_first: f64,
    /// `None` for rank below three.
    pub bianchi_second: Option<f64>,
    /// `∇ᵇᵃˢ` on forms against `ρ`-pullback, for each supplied form.
    pub anchor_commutation: f64,
    /// `d_{∇ᵇᵃˢ} R∇` when the basic curvature vanishes (`< 1e-9`).
    pub basic_closed: Option<f64>,
}

fn cov_torsion(aj: &AlgebroidJets, g: &EConnOnEJets, eta: &[Jet2], mu: &[Jet2], nu: &[Jet2]) -> Vec<Jet2> {
    let a = econn_e_jets(aj, g, eta, &e_torsion_jets(aj, g, mu, nu));
    let b = e_torsion_jets(aj, g, &econn_e_jets(aj, g, eta, mu), nu);
    let c = e_torsion_jets(aj, g, mu, &econn_e_jets(aj, g, eta, nu));
    (0..aj.r).map(|k| a[k] - b[k] - c[k]).collect()
}

fn vmax(a: &[Jet2], b: &[Jet2], s: f64) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((*p + q.scale(s)).value().abs()))
}

pub fn identity_residuals_at(
    conn: &Connection,
    sections: [&crate::algebroid::Section; 3],
    y: &crate::algebroid::BaseVectorField,
    forms: &[&PQForm],
    x: &[f64],
) -> Result<IdentityResiduals> {
    let (aj, cj) = conn.data_at(x)?;
    let r = aj.r;
    let (g, gr, be) = (basic_e_jets(&aj, &cj), nabla_rho_jets(&aj, &cj), basic_tn_jets(&aj, &cj));
    let [mu, nu, eta] = sections.map(|s| s.jets_at(x)).map(|s| s.unwrap_or_default());
    if mu.len() != r || nu.len() != r || eta.len() != r {
        return Err(Error::Shape("sections do not match the rank".into()));
    }
    let xv = y.jets_at(x)?;
    let torsion_flip = vmax(&e_torsion_jets(&aj, &g, &mu, &nu), &e_torsion_jets(&aj, &gr, &mu, &nu), 1.0);

    let s = basic_curvature_form(&aj, &cj);
    let on_e = vmax(&e_curvature_e_jets(&aj, &g, &mu, &nu, &eta), &s.eval(&[&anchor_of(&aj, &eta)], &[&mu, &nu]), 1.0);
    let on_tn = vmax(&e_curvature_tn_jets(&aj, &be, &mu, &nu, &xv), &anchor_of(&aj, &s.eval(&[&xv], &[&mu, &nu])), 1.0);
    let curvature_relations = on_e.max(on_tn);

    let direct = basic_curvature_five_term(&aj, &cj).max_diff(&s);
    let rf = curvature_form(&cj);
    let sx = basic_curvature_jets(&aj, &cj, &mu, &nu, &xv);
    let t = |a: &[Jet2], b: &[Jet2]| e_torsion_jets(&aj, &g, a, b);
    let t1 = cov_jets(&cj, &xv, &t(&mu, &nu));
    let t2 = t(&cov_jets(&cj, &xv, &mu), &nu);
    let t3 = t(&mu, &cov_jets(&cj, &xv, &nu));
    let r1 = rf.eval(&[&anchor_of(&aj, &mu), &xv], &[&nu]);
    let r2 = rf.eval(&[&anchor_of(&aj, &nu), &xv], &[&mu]);
    let via: Vec<Jet2> = (0..r).map(|c| t1[c] - t2[c] - t3[c] - r1[c] + r2[c]).collect();
    let five_term = direct.max(vmax(&sx, &via, -1.0));

    let mut bianchi_first: f64 = 0.0;
    let mut bianchi_second: Option<f64> = None;
    for ec in [&g, &gr] {
        let mut res = vec![Jet2::zero(); r];
        for (a, b, c) in [(&mu, &nu, &eta), (&nu, &eta, &mu), (&eta, &mu, &nu)] {
            let rr = e_curvature_e_jets(&aj, ec, a, b, c);
            let tt = e_torsion_jets(&aj, ec, &e_torsion_jets(&aj, ec, a, b), c);
            let ct = cov_torsion(&aj, ec, a, b, c);
            for k in 0..r {
                res[k] += rr[k] - tt[k] - ct[k];
            }
        }
        bianchi_first = bianchi_first.max(res.iter().fold(0.0, |m, v| m.max(v.value().abs())));
        if r >= 3 {
            let second = d_e_jets(&e_curvature_form(&aj, ec), &aj, ec, None)?.max_abs();
            bianchi_second = Some(bianchi_second.unwrap_or(0.0).max(second));
        }
    }

    let mut anchor_commutation: f64 = 0.0;
    for w in forms {
        let p = w.p;
        if w.q != 0 || w.kind != ValueKind::E || p > 2 {
            return Err(Error::Shape("anchor commutation takes E-valued (p, 0)-forms with p ≤ 2".into()));
        }
        let wj = w.jets_at(x)?;
        let dw = d_basic_jets(&wj, &aj, &cj)?;
        let args = [&nu, &eta];
        let rn: Vec<Vec<Jet2>> = args[..p].iter().map(|v| anchor_of(&aj, v)).collect();
        let rr: Vec<&[Jet2]> = rn.iter().map(|v| v.as_slice()).collect();
        let mut lhs = econn_e_jets(&aj, &g, &mu, &wj.eval(&rr, &[]));
        for j in 0..p {
            let moved = anchor_of(&aj, &econn_e_jets(&aj, &g, &mu, args[j]));
            let mut a2 = rr.clone();
            a2[j] = &moved;
            let tv = wj.eval(&a2, &[]);
            for c in 0..r {
                lhs[c] -= tv[c];
            }
        }
        anchor_commutation = anchor_commutation.max(vmax(&lhs, &dw.eval(&rr, &[&mu]), -1.0));
    }

    let basic_closed = if s.max_abs() < 1e-9 { Some(d_basic_jets(&rf, &aj, &cj)?.max_abs()) } else { None };
    Ok(IdentityResiduals {
        torsion_flip,
        curvature_relations,
        five_term,
        bianchi_first,
        bianchi_second,
        anchor_commutation,
        basic_closed,
    })
}
