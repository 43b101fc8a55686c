//! Lie algebroids on a single chart: anchor, structure functions, brackets and axiom checks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::jets::{jet_solve_many, Expr, Jet2, JetResult, TensorField};
use crate::{Error, Result};

/// Axis-aligned box on which chart data is valid.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "domain bounds differ in length");
        Domain { lo, hi }
    }
    pub fn cube(n: usize, a: f64, b: f64) -> Self {
        Domain::new(vec![a; n], vec![b; n])
    }
    pub fn dim(&self) -> usize {
        self.lo.len()
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| *v >= *l && *v <= *h)
    }
    pub fn product(&self, other: &Domain) -> Domain {
        Domain::new(
            self.lo.iter().chain(&other.lo).copied().collect(),
            self.hi.iter().chain(&other.hi).copied().collect(),
        )
    }
    /// Uniform samples in the box shrunk by 5% per side.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(&l, &h)| {
                        let m = 0.05 * (h - l);
                        rng.gen_range(l + m..=h - m)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Chart data of a Lie algebroid in a fixed frame `e_a`.
#[derive(Clone, Debug)]
pub struct LieAlgebroid {
    n: usize,
    r: usize,
    anchor: TensorField,
    structure: TensorField,
    labels: Option<Vec<String>>,
    domain: Domain,
}

/// Anchor `ρ^i_a` at `a*n+i` and structure functions `C^c_ab` at `(c*r+a)*r+b`, as jets at a point.
#[derive(Clone, Debug)]
pub struct AlgebroidJets {
    pub n: usize,
    pub r: usize,
    pub rho: Vec<Jet2>,
    pub c: Vec<Jet2>,
}

impl AlgebroidJets {
    #[inline]
    pub fn rho(&self, a: usize, i: usize) -> Jet2 {
        self.rho[a * self.n + i]
    }
    #[inline]
    pub fn c(&self, c: usize, a: usize, b: usize) -> Jet2 {
        self.c[(c * self.r + a) * self.r + b]
    }
}

impl LieAlgebroid {
    /// Build without running the axiom suite.
    pub fn new_unchecked(
        n: usize,
        r: usize,
        anchor: TensorField,
        structure: TensorField,
        domain: Domain,
    ) -> Result<Self> {
        if anchor.shape() != [r, n] || structure.shape() != [r, r, r] || domain.dim() != n {
            return Err(Error::Shape(format!(
                "anchor {:?}, structure {:?}, domain dim {} for (n, r) = ({n}, {r})",
                anchor.shape(),
                structure.shape(),
                domain.dim()
            )));
        }
        Ok(LieAlgebroid { n, r, anchor, structure, labels: None, domain })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }
    pub fn with_domain(mut self, domain: Domain) -> Self {
        assert_eq!(domain.dim(), self.n);
        self.domain = domain;
        self
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
    pub fn anchor_field(&self) -> &TensorField {
        &self.anchor
    }
    pub fn structure_field(&self) -> &TensorField {
        &self.structure
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(x.to_vec()))
        }
    }

    pub fn jets_at(&self, x: &[f64]) -> Result<AlgebroidJets> {
        self.check_point(x)?;
        Ok(AlgebroidJets {
            n: self.n,
            r: self.r,
            rho: self.anchor.eval_at(x)?,
            c: self.structure.eval_at(x)?,
        })
    }

    /// Data at the point `x(y)`, as jets in `y`.
    pub fn jets_on(&self, x: &[Jet2]) -> Result<AlgebroidJets> {
        Ok(AlgebroidJets {
            n: self.n,
            r: self.r,
            rho: self.anchor.eval_jets(x)?,
            c: self.structure.eval_jets(x)?,
        })
    }
}

/// Constant frame section `e_a`.
pub fn frame(r: usize, a: usize) -> Vec<Jet2> {
    (0..r).map(|b| Jet2::constant(if a == b { 1.0 } else { 0.0 })).collect()
}

/// `ρ(μ)^i = ρ^i_a μ^a`.
pub fn anchor_of(aj: &AlgebroidJets, mu: &[Jet2]) -> Vec<Jet2> {
    (0..aj.n).map(|i| (0..aj.r).map(|a| aj.rho(a, i) * mu[a]).sum()).collect()
}

/// Derivative of `f` along `X = X^i ∂_i`.
pub fn along(x: &[Jet2], f: &Jet2) -> Jet2 {
    x.iter().enumerate().map(|(i, xi)| *xi * f.partial(i)).sum()
}

/// `[μ, ν]^c = μ^a ν^b C^c_ab + ρ(μ)(ν^c) − ρ(ν)(μ^c)`.
pub fn bracket_jets(aj: &AlgebroidJets, mu: &[Jet2], nu: &[Jet2]) -> Vec<Jet2> {
    let (rm, rn) = (anchor_of(aj, mu), anchor_of(aj, nu));
    (0..aj.r)
        .map(|c| {
            let mut s = along(&rm, &nu[c]) - along(&rn, &mu[c]);
            for a in 0..aj.r {
                for b in 0..aj.r {
                    s += mu[a] * nu[b] * aj.c(c, a, b);
                }
            }
            s
        })
        .collect()
}

/// Vector-field bracket `[X, Y]^j = X(Y^j) − Y(X^j)`.
pub fn vf_bracket(x: &[Jet2], y: &[Jet2]) -> Vec<Jet2> {
    (0..x.len()).map(|j| along(x, &y[j]) - along(y, &x[j])).collect()
}

/// `[ρ(μ), ρ(ν)] − ρ([μ, ν])`.
pub fn anchor_curvature_jets(aj: &AlgebroidJets, mu: &[Jet2], nu: &[Jet2]) -> Vec<Jet2> {
    let lhs = vf_bracket(&anchor_of(aj, mu), &anchor_of(aj, nu));
    let rhs = anchor_of(aj, &bracket_jets(aj, mu, nu));
    lhs.into_iter().zip(rhs).map(|(a, b)| a - b).collect()
}

/// Cyclic sum `[μ,[ν,η]] + [ν,[η,μ]] + [η,[μ,ν]]`.
pub fn jacobiator_jets(aj: &AlgebroidJets, mu: &[Jet2], nu: &[Jet2], eta: &[Jet2]) -> Vec<Jet2> {
    let t1 = bracket_jets(aj, mu, &bracket_jets(aj, nu, eta));
    let t2 = bracket_jets(aj, nu, &bracket_jets(aj, eta, mu));
    let t3 = bracket_jets(aj, eta, &bracket_jets(aj, mu, nu));
    (0..aj.r).map(|c| t1[c] + t2[c] + t3[c]).collect()
}

/// A section `μ = μ^a e_a`.
#[derive(Clone, Debug)]
pub struct Section(pub TensorField);

/// A vector field `X = X^i ∂_i` on the base chart.
#[derive(Clone, Debug)]
pub struct BaseVectorField(pub TensorField);

impl Section {
    pub fn frame(r: usize, a: usize, n: usize) -> Self {
        Section(TensorField::constant(vec![r], n, frame(r, a).iter().map(Jet2::value).collect()))
    }
    pub fn from_exprs(n: usize, es: Vec<Expr>) -> Self {
        Section(TensorField::from_exprs(vec![es.len()], n, es))
    }
    pub fn random_poly<R: Rng>(r: usize, n: usize, deg: usize, rng: &mut R) -> Self {
        Section::from_exprs(n, (0..r).map(|_| Expr::random_poly(n, deg, rng)).collect())
    }
    pub fn rank(&self) -> usize {
        self.0.len()
    }
    pub fn jets_at(&self, x: &[f64]) -> Result<Vec<Jet2>> {
        Ok(self.0.eval_at(x)?)
    }
}

impl BaseVectorField {
    pub fn from_exprs(n: usize, es: Vec<Expr>) -> Self {
        BaseVectorField(TensorField::from_exprs(vec![es.len()], n, es))
    }
    pub fn random_poly<R: Rng>(n: usize, deg: usize, rng: &mut R) -> Self {
        BaseVectorField::from_exprs(n, (0..n).map(|_| Expr::random_poly(n, deg, rng)).collect())
    }
    pub fn jets_at(&self, x: &[f64]) -> Result<Vec<Jet2>> {
        Ok(self.0.eval_at(x)?)
    }
}

fn check_rank(e: &LieAlgebroid, s: &Section) -> Result<()> {
    if s.rank() != e.r() || s.0.in_dim() != e.n() {
        return Err(Error::Shape(format!(
            "section of rank {} over dim {} for algebroid of rank {} over dim {}",
            s.rank(),
            s.0.in_dim(),
            e.r(),
            e.n()
        )));
    }
    Ok(())
}

pub fn anchor_apply(e: &LieAlgebroid, mu: &Section, x: &[f64]) -> Result<Vec<f64>> {
    check_rank(e, mu)?;
    let aj = e.jets_at(x)?;
    Ok(anchor_of(&aj, &mu.jets_at(x)?).iter().map(Jet2::value).collect())
}

/// The bracket as a new section.
pub fn bracket(e: &LieAlgebroid, mu: &Section, nu: &Section) -> Result<Section> {
    check_rank(e, mu)?;
    check_rank(e, nu)?;
    let (e, mu, nu) = (e.clone(), mu.clone(), nu.clone());
    let r = e.r();
    Ok(Section(TensorField::from_point_fn(vec![r], e.n(), move |x| {
        let aj = e.jets_on(&Jet2::variables(x)?).map_err(|err| crate::jets::JetError::Eval(err.to_string()))?;
        Ok(bracket_jets(&aj, &mu.0.eval_at(x)?, &nu.0.eval_at(x)?))
    })))
}

pub fn anchor_curvature(e: &LieAlgebroid, mu: &Section, nu: &Section, x: &[f64]) -> Result<Vec<f64>> {
    check_rank(e, mu)?;
    check_rank(e, nu)?;
    let aj = e.jets_at(x)?;
    Ok(anchor_curvature_jets(&aj, &mu.jets_at(x)?, &nu.jets_at(x)?).iter().map(Jet2::value).collect())
}

pub fn jacobiator(
    e: &LieAlgebroid,
    mu: &Section,
    nu: &Section,
    eta: &Section,
    x: &[f64],
) -> Result<Vec<f64>> {
    for s in [mu, nu, eta] {
        check_rank(e, s)?;
    }
    let aj = e.jets_at(x)?;
    Ok(jacobiator_jets(&aj, &mu.jets_at(x)?, &nu.jets_at(x)?, &eta.jets_at(x)?)
        .iter()
        .map(Jet2::value)
        .collect())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AxiomReport {
    pub points: usize,
    pub antisymmetry: f64,
    pub anchor_homomorphism: f64,
    pub jacobiator: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Per-point maxima of (antisymmetry, anchor curvature, Jacobiator) on frame sections.
pub fn axiom_residuals_at(e: &LieAlgebroid, x: &[f64]) -> Result<[f64; 3]> {
    let aj = e.jets_at(x)?;
    let r = e.r();
    let mut out = [0.0f64; 3];
    for c in 0..r {
        for a in 0..r {
            for b in 0..r {
                out[0] = out[0].max((aj.c(c, a, b) + aj.c(c, b, a)).value().abs());
            }
        }
    }
    let fr: Vec<Vec<Jet2>> = (0..r).map(|a| frame(r, a)).collect();
    for a in 0..r {
        for b in a + 1..r {
            let v = anchor_curvature_jets(&aj, &fr[a], &fr[b]);
            out[1] = out[1].max(crate::jets::max_abs(&v));
            for c in b + 1..r {
                let j = jacobiator_jets(&aj, &fr[a], &fr[b], &fr[c]);
                out[2] = out[2].max(crate::jets::max_abs(&j));
            }
        }
    }
    Ok(out)
}

pub fn check_axioms(e: &LieAlgebroid, points: &[Vec<f64>], tol: f64) -> Result<AxiomReport> {
    let per: Vec<[f64; 3]> =
        points.par_iter().map(|x| axiom_residuals_at(e, x)).collect::<Result<_>>()?;
    let m = per.iter().fold([0.0f64; 3], |acc, v| {
        [acc[0].max(v[0]), acc[1].max(v[1]), acc[2].max(v[2])]
    });
    let pass = m.iter().all(|v| *v < tol);
    Ok(AxiomReport {
        points: points.len(),
        antisymmetry: m[0],
        anchor_homomorphism: m[1],
        jacobiator: m[2],
        tol,
        pass,
    })
}

pub(crate) fn validated(e: LieAlgebroid) -> Result<LieAlgebroid> {
    let rep = check_axioms(&e, &e.domain().sample(0, 20), 1e-8)?;
    if rep.pass {
        Ok(e)
    } else {
        Err(Error::AxiomsFailed {
            antisymmetry: rep.antisymmetry,
            anchor: rep.anchor_homomorphism,
            jacobiator: rep.jacobiator,
        })
    }
}

/// `TN` with the identity anchor in the coordinate frame, over `[-1, 1]^n`.
pub fn tangent_algebroid(n: usize) -> LieAlgebroid {
    let mut rho = vec![0.0; n * n];
    for i in 0..n {
        rho[i * n + i] = 1.0;
    }
    LieAlgebroid::new_unchecked(
        n,
        n,
        TensorField::constant(vec![n, n], n, rho),
        TensorField::zeros(vec![n, n, n], n),
        Domain::cube(n, -1.0, 1.0),
    )
    .expect("consistent shapes")
}

/// Action algebroid for constant structure constants and an anchor given by the action.
pub fn action_algebroid(c_const: &[f64], anchor: TensorField, domain: Domain) -> Result<LieAlgebroid> {
    let s = anchor.shape().to_vec();
    if s.len() != 2 || c_const.len() != s[0].pow(3) {
        return Err(Error::Shape(format!("anchor {s:?} with {} structure constants", c_const.len())));
    }
    let (r, n) = (s[0], s[1]);
    let c = TensorField::constant(vec![r, r, r], n, c_const.to_vec());
    validated(LieAlgebroid::new_unchecked(n, r, anchor, c, domain)?)
}

/// `TN` in a non-holonomic frame `F_a = F^i_a ∂_i` (entry `a*n+i`), `C` from `[F_a, F_b] = C^c_ab F_c`.
pub fn frame_algebroid(frame: Vec<Expr>, n: usize, domain: Domain) -> Result<LieAlgebroid> {
    if frame.len() != n * n {
        return Err(Error::Shape(format!("frame with {} entries for n = {n}", frame.len())));
    }
    let dframe: Vec<Vec<Expr>> = frame.iter().map(|e| (0..n).map(|i| e.diff(i)).collect()).collect();
    let anchor = TensorField::from_exprs(vec![n, n], n, frame.clone());
    let structure = TensorField::from_jet_fn(vec![n, n, n], n, move |x| {
        let f = frame.iter().map(|e| e.eval(x)).collect::<JetResult<Vec<_>>>()?;
        let df = dframe
            .iter()
            .map(|row| row.iter().map(|e| e.eval(x)).collect::<JetResult<Vec<_>>>())
            .collect::<JetResult<Vec<_>>>()?;
        let m = n * n;
        let mut mat = vec![Jet2::zero(); n * n];
        for j in 0..n {
            for c in 0..n {
                mat[j * n + c] = f[c * n + j];
            }
        }
        let mut rhs = vec![Jet2::zero(); n * m];
        for a in 0..n {
            for b in 0..n {
                for j in 0..n {
                    rhs[j * m + a * n + b] = (0..n)
                        .map(|i| f[a * n + i] * df[b * n + j][i] - f[b * n + i] * df[a * n + j][i])
                        .sum();
                }
            }
        }
        jet_solve_many(&mat, &rhs, m)
    });
    validated(LieAlgebroid::new_unchecked(n, n, anchor, structure, domain)?)
}

/// Lie algebra bundle: zero anchor, fibrewise brackets `C^c_ab(x)`.
pub fn lab(c_field: TensorField, n: usize, domain: Domain) -> Result<LieAlgebroid> {
    let s = c_field.shape().to_vec();
    if s.len() != 3 || s[0] != s[1] || s[1] != s[2] {
        return Err(Error::Shape(format!("structure field {s:?}")));
    }
    let r = s[0];
    validated(LieAlgebroid::new_unchecked(n, r, TensorField::zeros(vec![r, n], n), c_field, domain)?)
}

/// `E₁ × E₂` over `N₁ × N₂` with block-diagonal anchor and bracket.
pub fn direct_product(e1: &LieAlgebroid, e2: &LieAlgebroid) -> LieAlgebroid {
    let (n1, n2, r1, r2) = (e1.n(), e2.n(), e1.r(), e2.r());
    let (n, r) = (n1 + n2, r1 + r2);
    let (a1, a2) = (e1.anchor.clone(), e2.anchor.clone());
    let anchor = TensorField::from_point_fn(vec![r, n], n, move |x| {
        let v = Jet2::variables(x)?;
        let (p, q) = (a1.eval_jets(&v[..n1])?, a2.eval_jets(&v[n1..])?);
        let mut out = vec![Jet2::zero(); r * n];
        for a in 0..r1 {
            for i in 0..n1 {
                out[a * n + i] = p[a * n1 + i];
            }
        }
        for a in 0..r2 {
            for i in 0..n2 {
                out[(r1 + a) * n + n1 + i] = q[a * n2 + i];
            }
        }
        Ok(out)
    });
    let (c1, c2) = (e1.structure.clone(), e2.structure.clone());
    let structure = TensorField::from_point_fn(vec![r, r, r], n, move |x| {
        let v = Jet2::variables(x)?;
        let (p, q) = (c1.eval_jets(&v[..n1])?, c2.eval_jets(&v[n1..])?);
        let mut out = vec![Jet2::zero(); r * r * r];
        for c in 0..r1 {
            for a in 0..r1 {
                for b in 0..r1 {
                    out[(c * r + a) * r + b] = p[(c * r1 + a) * r1 + b];
                }
            }
        }
        for c in 0..r2 {
            for a in 0..r2 {
                for b in 0..r2 {
                    out[((r1 + c) * r + r1 + a) * r + r1 + b] = q[(c * r2 + a) * r2 + b];
                }
            }
        }
        Ok(out)
    });
    let mut e = LieAlgebroid::new_unchecked(n, r, anchor, structure, e1.domain.product(&e2.domain))
        .expect("consistent shapes");
    if let (Some(l1), Some(l2)) = (e1.labels(), e2.labels()) {
        e = e.with_labels(l1.iter().chain(l2).cloned().collect());
    }
    e
}

/// Levi-Civita symbol on three indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `C^k_ij = ε_ijk` in layout `(k*3+i)*3+j`.
pub fn su2_structure() -> Vec<f64> {
    let mut c = vec![0.0; 27];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                c[(k * 3 + i) * 3 + j] = levi_civita(i, j, k);
            }
        }
    }
    c
}

/// `su(2)` acting on `ℝ³` by `ρ(e_j) = −ε_{jkl} x^k ∂_l`.
pub fn su2_example() -> LieAlgebroid {
    let mut es = Vec::with_capacity(9);
    for j in 0..3 {
        for l in 0..3 {
            let e = (0..3)
                .filter(|&k| levi_civita(j, k, l) != 0.0)
                .fold(Expr::c(0.0), |acc, k| acc + Expr::x(k) * (-levi_civita(j, k, l)));
            es.push(e);
        }
    }
    LieAlgebroid::new_unchecked(
        3,
        3,
        TensorField::from_exprs(vec![3, 3], 3, es),
        TensorField::constant(vec![3, 3, 3], 3, su2_structure()),
        Domain::cube(3, -2.0, 2.0),
    )
    .expect("consistent shapes")
    .with_labels(vec!["e1".into(), "e2".into(), "e3".into()])
}

type Mat2 = [[Complex64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut o = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

/// `Re tr(a† b)`.
fn hs_inner(a: &Mat2, b: &Mat2) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            s += a[i][j].conj() * b[i][j];
        }
    }
    s.re
}

/// The basis `β_l = g_w iσ_l/2`, `β_4 = g′ i/(2 n_γ)`.
pub fn electroweak_basis(g_w: f64, g_p: f64, n_gamma: u32) -> [Mat2; 4] {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let pauli = [[[z, o], [o, z]], [[z, -i], [i, z]], [[o, z], [z, -o]]];
    let s = i * (g_w / 2.0);
    let mut out = [[[z; 2]; 2]; 4];
    for l in 0..3 {
        for a in 0..2 {
            for b in 0..2 {
                out[l][a][b] = s * pauli[l][a][b];
            }
        }
    }
    let u = i * (g_p / (2.0 * n_gamma as f64));
    out[3] = [[u, z], [z, u]];
    out
}

/// Structure constants of `su(2) ⊕ u(1)` in the β-basis from explicit matrix commutators.
pub fn electroweak_structure(g_w: f64, g_p: f64, n_gamma: u32) -> Vec<f64> {
    let beta = electroweak_basis(g_w, g_p, n_gamma);
    let mut c = vec![0.0; 64];
    for a in 0..4 {
        for b in 0..4 {
            let (ab, ba) = (mat_mul(&beta[a], &beta[b]), mat_mul(&beta[b], &beta[a]));
            let mut comm = ab;
            for p in 0..2 {
                for q in 0..2 {
                    comm[p][q] -= ba[p][q];
                }
            }
            for k in 0..4 {
                c[(k * 4 + a) * 4 + b] = hs_inner(&beta[k], &comm) / hs_inner(&beta[k], &beta[k]);
            }
        }
    }
    c
}

/// `su(2) ⊕ u(1)` acting on `ℂ² ≅ ℝ⁴` with the explicit vector fields `γ(β_l)`,
/// over a box away from the origin.
pub fn electroweak_example(g_w: f64, g_p: f64, n_gamma: u32) -> Result<LieAlgebroid> {
    if !(g_w > 0.0 && g_p > 0.0 && n_gamma > 0) {
        return Err(Error::Usage(format!("couplings must be positive, got g_w={g_w}, g'={g_p}, n={n_gamma}")));
    }
    let x = Expr::x;
    let h = g_w / 2.0;
    let rows: [[(f64, usize); 4]; 3] = [
        [(1.0, 3), (-1.0, 2), (1.0, 1), (-1.0, 0)],
        [(-1.0, 2), (-1.0, 3), (1.0, 0), (1.0, 1)],
        [(1.0, 1), (-1.0, 0), (-1.0, 3), (1.0, 2)],
    ];
    let mut es: Vec<Expr> = rows
        .iter()
        .flat_map(|row| row.iter().map(move |&(s, k)| x(k) * (s * h)))
        .collect();
    es.extend((0..4).map(|k| x(k) * (g_p / 2.0)));
    let anchor = TensorField::from_exprs(vec![4, 4], 4, es);
    Ok(LieAlgebroid::new_unchecked(
        4,
        4,
        anchor,
        TensorField::constant(vec![4, 4, 4], 4, electroweak_structure(g_w, g_p, n_gamma)),
        Domain::cube(4, 0.5, 1.5),
    )?
    .with_labels(vec!["b1".into(), "b2".into(), "b3".into(), "b4".into()]))
}
