//! Octonions from the G₂ 3-form and the parallelisable 7-sphere.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::algebroid::{validated, Domain, LieAlgebroid};
use crate::connection::{basic_e_jets, torsion_form, Connection, FormJets, PQForm, ValueKind};
use crate::gauge::{GaugeData, Metric};
use crate::jets::{jet_inverse, jet_solve_many, Jet2, JetResult, TensorField};
use crate::{Error, Result};

/// Octonion `x⁰e₀ + x` with `coeffs[0] = x⁰`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Oct(pub [f64; 8]);

/// Fully antisymmetric constant 3-form on ℝ⁷, zero-based indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Phi3Form([[[f64; 7]; 7]; 7]);

const TRIPLES: [([usize; 3], f64); 7] = [
    ([1, 2, 3], 1.0),
    ([1, 4, 5], 1.0),
    ([1, 6, 7], 1.0),
    ([2, 4, 6], 1.0),
    ([2, 5, 7], -1.0),
    ([3, 4, 7], -1.0),
    ([3, 5, 6], -1.0),
];

/// `φ = w¹²³ + w¹ ∧ (w⁴⁵ + w⁶⁷) + …` with the seven signed triples (one-based above).
pub fn phi() -> &'static Phi3Form {
    static PHI: OnceLock<Phi3Form> = OnceLock::new();
    PHI.get_or_init(|| {
        let mut c = [[[0.0; 7]; 7]; 7];
        for (t, s) in TRIPLES {
            let [i, j, k] = t.map(|v| v - 1);
            for (p, sg) in [([i, j, k], 1.0), ([j, k, i], 1.0), ([k, i, j], 1.0), ([j, i, k], -1.0), ([i, k, j], -1.0), ([k, j, i], -1.0)] {
                c[p[0]][p[1]][p[2]] = s * sg;
            }
        }
        Phi3Form(c)
    })
}

impl Phi3Form {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[i][j][k]
    }
    pub fn eval(&self, x: &[f64; 7], y: &[f64; 7], z: &[f64; 7]) -> f64 {
        let mut s = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                for k in 0..7 {
                    s += self.0[i][j][k] * x[i] * y[j] * z[k];
                }
            }
        }
        s
    }
    pub fn nonzero_count(&self) -> usize {
        self.0.iter().flatten().flatten().filter(|v| **v != 0.0).count()
    }
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                for k in 0..7 {
                    let v = self.0[i][j][k];
                    r = r.max((v + self.0[j][i][k]).abs()).max((v + self.0[i][k][j]).abs());
                }
            }
        }
        r
    }
}

/// `P(x, y)ᵏ = φ_ijk xⁱ yʲ`.
pub fn pmap(x: &[f64; 7], y: &[f64; 7]) -> [f64; 7] {
    let f = phi();
    let mut out = [0.0; 7];
    for (k, o) in out.iter_mut().enumerate() {
        for i in 0..7 {
            for j in i + 1..7 {
                *o += f.get(i, j, k) * (x[i] * y[j] - x[j] * y[i]);
            }
        }
    }
    out
}

fn dot7(x: &[f64; 7], y: &[f64; 7]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Residual of `P(x, P(x, y)) = −⟨x, x⟩y + ⟨x, y⟩x`.
pub fn p_double_residual(x: &[f64; 7], y: &[f64; 7]) -> f64 {
    let l = pmap(x, &pmap(x, y));
    let (xx, xy) = (dot7(x, x), dot7(x, y));
    (0..7).map(|k| (l[k] + xx * y[k] - xy * x[k]).abs()).fold(0.0, f64::max)
}

impl Oct {
    pub fn e(j: usize) -> Oct {
        let mut c = [0.0; 8];
        c[j] = 1.0;
        Oct(c)
    }
    pub fn new(x0: f64, x: [f64; 7]) -> Oct {
        let mut c = [0.0; 8];
        c[0] = x0;
        c[1..].copy_from_slice(&x);
        Oct(c)
    }
    pub fn re(&self) -> f64 {
        self.0[0]
    }
    pub fn im(&self) -> [f64; 7] {
        let mut x = [0.0; 7];
        x.copy_from_slice(&self.0[1..]);
        x
    }
    pub fn conj(&self) -> Oct {
        let x = self.im();
        Oct::new(self.re(), x.map(|v| -v))
    }
    pub fn dot(&self, w: &Oct) -> f64 {
        self.0.iter().zip(&w.0).map(|(a, b)| a * b).sum()
    }
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
    pub fn scale(&self, s: f64) -> Oct {
        Oct(self.0.map(|v| v * s))
    }
    pub fn inverse(&self) -> Option<Oct> {
        let n2 = self.dot(self);
        (n2 > 0.0).then(|| self.conj().scale(1.0 / n2))
    }
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `(x⁰ + x)(y⁰ + y) = x⁰y⁰ − ⟨x, y⟩ + x⁰y + y⁰x + P(x, y)`.
impl Mul for Oct {
    type Output = Oct;
    fn mul(self, w: Oct) -> Oct {
        let (x0, x, y0, y) = (self.re(), self.im(), w.re(), w.im());
        let p = pmap(&x, &y);
        let mut v = [0.0; 7];
        for k in 0..7 {
            v[k] = x0 * y[k] + y0 * x[k] + p[k];
        }
        Oct::new(x0 * y0 - dot7(&x, &y), v)
    }
}

impl Add for Oct {
    type Output = Oct;
    fn add(self, w: Oct) -> Oct {
        let mut c = self.0;
        c.iter_mut().zip(w.0).for_each(|(a, b)| *a += b);
        Oct(c)
    }
}

impl Sub for Oct {
    type Output = Oct;
    fn sub(self, w: Oct) -> Oct {
        self + (-w)
    }
}

impl Neg for Oct {
    type Output = Oct;
    fn neg(self) -> Oct {
        self.scale(-1.0)
    }
}

/// Matrix of `z ↦ e_j · z` on ℝ⁸, row-major.
pub fn left_mul_matrix(j: usize) -> [[f64; 8]; 8] {
    let mut m = [[0.0; 8]; 8];
    for k in 0..8 {
        let col = Oct::e(j) * Oct::e(k);
        for (row, v) in m.iter_mut().zip(col.0) {
            row[k] = v;
        }
    }
    m
}

fn left_mul_all() -> &'static [[[f64; 8]; 8]; 8] {
    static L: OnceLock<[[[f64; 8]; 8]; 8]> = OnceLock::new();
    L.get_or_init(|| std::array::from_fn(left_mul_matrix))
}

/// `Y_j|_z = e_j · z` for `j ∈ 1..=7`.
pub fn frame_y(z: &Oct, j: usize) -> Result<Oct> {
    let dev = (z.norm() - 1.0).abs();
    if dev > 1e-10 {
        return Err(Error::Precondition { what: "unit octonion".into(), residual: dev });
    }
    if !(1..=7).contains(&j) {
        return Err(Error::Shape(format!("frame index {j} outside 1..=7")));
    }
    Ok(Oct::e(j) * *z)
}

/// Stereographic chart `σ(u) = ((1 − |u|²)e₀ + 2u)/(1 + |u|²)`.
pub fn s7_chart(u: &[f64; 7]) -> Oct {
    let s: f64 = u.iter().map(|v| v * v).sum();
    Oct::new((1.0 - s) / (1.0 + s), u.map(|v| 2.0 * v / (1.0 + s)))
}

/// `σ` over jets.
pub fn s7_chart_jets(u: &[Jet2]) -> JetResult<Vec<Jet2>> {
    let s: Jet2 = u.iter().map(|v| *v * *v).sum();
    let inv = (s + 1.0).recip()?;
    let mut z = vec![(Jet2::constant(1.0) - s) * inv];
    z.extend(u.iter().map(|v| *v * inv * 2.0));
    Ok(z)
}

/// `∂σᵐ/∂uᵏ` at `m*7+k`, over jets.
pub fn s7_chart_jac(u: &[Jet2]) -> JetResult<Vec<Jet2>> {
    let s: Jet2 = u.iter().map(|v| *v * *v).sum();
    let inv = (s + 1.0).recip()?;
    let inv2 = inv * inv;
    let mut out = vec![Jet2::zero(); 56];
    for k in 0..7 {
        out[k] = u[k] * inv2 * -4.0;
        for m in 0..7 {
            let mut v = u[m] * u[k] * inv2 * -4.0;
            if m == k {
                v += inv * 2.0;
            }
            out[(m + 1) * 7 + k] = v;
        }
    }
    Ok(out)
}

fn apply(m: &[[f64; 8]; 8], z: &[Jet2]) -> Vec<Jet2> {
    m.iter().map(|row| row.iter().zip(z).map(|(a, b)| *b * *a).sum()).collect()
}

/// Chart components of `Y_a` (anchor entry `a*7+k`) from `(DσᵀDσ)v = DσᵀY_a`.
fn anchor_jets(u: &[Jet2]) -> JetResult<Vec<Jet2>> {
    let z = s7_chart_jets(u)?;
    let jac = s7_chart_jac(u)?;
    let mut gram = vec![Jet2::zero(); 49];
    for k in 0..7 {
        for l in 0..7 {
            gram[k * 7 + l] = (0..8).map(|m| jac[m * 7 + k] * jac[m * 7 + l]).sum();
        }
    }
    let lm = left_mul_all();
    let mut rhs = vec![Jet2::zero(); 49];
    for a in 0..7 {
        let y = apply(&lm[a + 1], &z);
        for k in 0..7 {
            rhs[k * 7 + a] = (0..8).map(|m| jac[m * 7 + k] * y[m]).sum();
        }
    }
    let v = jet_solve_many(&gram, &rhs, 7)?;
    let mut out = vec![Jet2::zero(); 49];
    for a in 0..7 {
        for k in 0..7 {
            out[a * 7 + k] = v[k * 7 + a];
        }
    }
    Ok(out)
}

/// `Cᶜ_ab = ⟨[Y_a, Y_b], Y_c⟩` with `[Y_a, Y_b] = (L_b L_a − L_a L_b)z` in ℝ⁸.
fn structure_jets(u: &[Jet2]) -> JetResult<Vec<Jet2>> {
    let z = s7_chart_jets(u)?;
    let lm = left_mul_all();
    let y: Vec<Vec<Jet2>> = (1..8).map(|j| apply(&lm[j], &z)).collect();
    let ly: Vec<Vec<Vec<Jet2>>> = (1..8).map(|i| y.iter().map(|v| apply(&lm[i], v)).collect()).collect();
    let mut out = vec![Jet2::zero(); 343];
    for a in 0..7 {
        for b in 0..7 {
            let br: Vec<Jet2> = (0..8).map(|m| ly[b][a][m] - ly[a][b][m]).collect();
            for c in 0..7 {
                out[(c * 7 + a) * 7 + b] = (0..8).map(|m| br[m] * y[c][m]).sum();
            }
        }
    }
    Ok(out)
}

/// Chart box with `|u| < 2`.
pub fn s7_domain() -> Domain {
    Domain::cube(7, -0.75, 0.75)
}

/// `TS⁷` in the stereographic chart and the frame `Y_j`.
pub fn s7_algebroid() -> Result<LieAlgebroid> {
    let anchor = TensorField::from_jet_fn(vec![7, 7], 7, anchor_jets);
    let structure = TensorField::from_jet_fn(vec![7, 7, 7], 7, structure_jets);
    let labels = (1..8).map(|j| format!("Y{j}")).collect();
    validated(LieAlgebroid::new_unchecked(7, 7, anchor, structure, s7_domain())?.with_labels(labels))
}

/// `∇_{Y_a} Y_b = [Y_a, Y_b]`, i.e. `ω^b_{ak} = (ρ⁻¹)ⁱ_k Cᵇ_ia`.
pub fn s7_connection(alg: &LieAlgebroid) -> Result<Connection> {
    let omega = TensorField::from_jet_fn(vec![7, 7, 7], 7, |u| {
        let rho = anchor_jets(u)?;
        let c = structure_jets(u)?;
        let inv = jet_inverse(&rho, 7)?;
        let mut out = vec![Jet2::zero(); 343];
        for b in 0..7 {
            for a in 0..7 {
                for k in 0..7 {
                    out[(b * 7 + a) * 7 + k] = (0..7).map(|i| inv[k * 7 + i] * c[(b * 7 + i) * 7 + a]).sum();
                }
            }
        }
        Ok(out)
    });
    Connection::new(alg.clone(), omega)
}

/// Round metric `4/(1 + |u|²)² δ`.
fn round_metric() -> TensorField {
    TensorField::from_jet_fn(vec![7, 7], 7, |u| {
        let s: Jet2 = u.iter().map(|v| *v * *v).sum();
        let f = ((s + 1.0) * (s + 1.0)).recip()? * 4.0;
        Ok((0..49).map(|k| if k / 7 == k % 7 { f } else { Jet2::zero() }).collect())
    })
}

/// Flat basic connection in the frame `Y_j`, `ζ = t_∇ = −t_{∇ᵇᵃˢ}`, `κ = δ`, round `g`.
pub fn s7_gauge_data() -> Result<GaugeData> {
    let alg = s7_algebroid()?;
    let conn = s7_connection(&alg)?;
    let c = conn.clone();
    let zeta = PQForm::from_point_fn(2, 0, 7, 7, ValueKind::E, move |x| {
        let (aj, cj) = c.data_at(x)?;
        let t = torsion_form(&aj, &basic_e_jets(&aj, &cj));
        let inv = jet_inverse(&aj.rho, 7)?;
        let mut z = FormJets::zeros(2, 0, 7, 7, ValueKind::E);
        for k in 0..7 {
            for l in 0..7 {
                let off = z.offset(&[k, l], &[]);
                for a in 0..7 {
                    for b in 0..7 {
                        let w = inv[k * 7 + a] * inv[l * 7 + b];
                        let v = t.get(&[], &[a, b]);
                        for e in 0..7 {
                            z.comps[off + e] -= w * v[e];
                        }
                    }
                }
            }
        }
        Ok(z)
    });
    let metric = Metric::new(TensorField::constant(vec![7, 7], 7, identity7()), round_metric(), alg.domain())?;
    GaugeData::new(conn, zeta, metric, 1e-7)
}

fn identity7() -> Vec<f64> {
    (0..49).map(|k| if k / 7 == k % 7 { 1.0 } else { 0.0 }).collect()
}

/// `(e_j z, w) + (z, e_j w)`.
pub fn adjoint_skew_residual(j: usize, z: &Oct, w: &Oct) -> f64 {
    ((Oct::e(j) * *z).dot(w) + z.dot(&(Oct::e(j) * *w))).abs()
}
