//! Batch verification over the example zoo with JSON reports.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::algebroid::{
    axiom_residuals_at, bracket_jets, su2_example, BaseVectorField, LieAlgebroid, Section,
};
use crate::connection::{PQForm, ValueKind};
use crate::fields::{
    bianchi_g_residual, delta_oracle_defect, field_redefinition_residuals, gauge_delta_g, nested_gauge_curvature,
    pullback_commutes_with_d, pullback_pre_bracket, richardson_slope, FieldConfig, Spacetime,
};
use crate::gauge::{
    canonical_nonclassical_example, compat_report, compose_lambda, conjugation_residual, electroweak_gauge_data,
    extension_example, inverse_lambda, obstruction_report, product_tn_lab_example, redefine, su2_gauge_data,
    table_diff, tangent_flat_example, GaugeData, Metric, Redef,
};
use crate::jets::{values, Expr, ScalarField, TensorField};
use crate::octonion::s7_gauge_data;
use crate::{Error, Result};

pub const EXAMPLES: [&str; 7] =
    ["su2", "electroweak", "lab-nonclassical", "octonion-s7", "product-tn-lab", "tangent-flat", "extension"];

/// Negative fixture: a rescaled bracket and a non-invariant fibre metric.
pub const CORRUPTED: &str = "su2-corrupted";

/// An entry of the example zoo.
pub struct Example {
    pub name: String,
    pub algebroid: LieAlgebroid,
    pub data: Option<GaugeData>,
    pub potential: ScalarField,
}

fn squares(n: usize) -> ScalarField {
    ScalarField::from_expr(n, (0..n).map(|i| Expr::x(i) * Expr::x(i)).fold(Expr::c(0.0), |a, b| a + b))
}

fn with_data(name: &str, data: GaugeData, invariant_square: bool) -> Example {
    let n = data.algebroid().n();
    let potential = if invariant_square { squares(n) } else { ScalarField::constant(n, 0.3) };
    Example { name: name.into(), algebroid: data.algebroid().clone(), data: Some(data), potential }
}

fn corrupted() -> Result<Example> {
    let su2 = su2_example();
    let c: Vec<f64> = values(&su2.jets_at(&[0.0; 3])?.c).iter().map(|v| 1.1 * v).collect();
    let alg = LieAlgebroid::new_unchecked(
        3,
        3,
        su2.anchor_field().clone(),
        TensorField::constant(vec![3, 3, 3], 3, c),
        su2.domain().clone(),
    )?;
    let good = su2_gauge_data()?;
    let kappa = TensorField::constant(vec![3, 3], 3, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]);
    let metric = Metric::new_unchecked(kappa, good.metric().g().clone())?;
    let data = GaugeData::new_unchecked(good.connection().clone(), good.zeta().clone(), metric)?;
    Ok(Example { name: CORRUPTED.into(), algebroid: alg, data: Some(data), potential: squares(3) })
}

pub fn example(name: &str) -> Result<Example> {
    Ok(match name {
        "su2" => with_data(name, su2_gauge_data()?, true),
        "electroweak" => with_data(name, electroweak_gauge_data(0.65, 0.35, 1)?, false),
        "lab-nonclassical" => with_data(name, canonical_nonclassical_example()?, true),
        "octonion-s7" => with_data(name, s7_gauge_data()?, false),
        "product-tn-lab" => with_data(name, product_tn_lab_example()?, false),
        "tangent-flat" => with_data(name, tangent_flat_example(3)?, false),
        "extension" => {
            let (alg, _, _) = extension_example()?;
            let n = alg.n();
            Example { name: name.into(), algebroid: alg, data: None, potential: ScalarField::constant(n, 0.0) }
        }
        CORRUPTED => corrupted()?,
        other => return Err(Error::Usage(format!("unknown example '{other}'; expected one of {}", EXAMPLES.join(", ")))),
    })
}

/// `f64` written as a JSON number in `{:.6e}` notation, `null` when not finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sci(pub f64);

impl Serialize for Sci {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.6e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    #[serde(rename = "check-id")]
    pub id: String,
    #[serde(rename = "paper-anchor")]
    pub anchor: String,
    pub points: usize,
    #[serde(rename = "max-residual")]
    pub max_residual: Sci,
    pub tol: Sci,
    pub pass: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub example: String,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub observables: BTreeMap<String, Sci>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub points: usize,
    pub suites: Vec<Report>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub example: Option<String>,
    pub seed: u64,
    pub points: usize,
    pub tol: Option<f64>,
    pub dts: Vec<f64>,
    pub lambda_seed: u64,
    pub lambdas: usize,
}

impl SuiteConfig {
    pub fn new(example: &str, seed: u64, points: usize) -> Self {
        SuiteConfig {
            example: Some(example.into()),
            seed,
            points,
            tol: None,
            dts: vec![1e-2, 1e-3, 1e-4],
            lambda_seed: seed.wrapping_add(1),
            lambdas: 5,
        }
    }
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::Usage("--points must be at least 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Usage(format!("--tol must be positive, got {t}")));
            }
        }
        if self.dts.len() < 2 || self.dts.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Usage("--dt needs at least two positive steps".into()));
        }
        Ok(())
    }
}

struct Builder<'a> {
    cfg: &'a SuiteConfig,
    report: Report,
}

impl<'a> Builder<'a> {
    fn new(suite: &str, ex: &Example, cfg: &'a SuiteConfig) -> Self {
        let report =
            Report { suite: suite.into(), example: ex.name.clone(), checks: vec![], observables: BTreeMap::new(), pass: true };
        Builder { cfg, report }
    }
    fn record(&mut self, id: &str, anchor: &str, points: usize, residual: Result<f64>, default_tol: f64) {
        let tol = self.cfg.tol.unwrap_or(default_tol);
        let (max_residual, note) = match residual {
            Ok(r) => (r, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        let pass = max_residual.is_finite() && max_residual < tol;
        self.report.checks.push(CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            points,
            max_residual: Sci(max_residual),
            tol: Sci(tol),
            pass,
            skipped: false,
            note,
        });
    }
    fn skip(&mut self, id: &str, anchor: &str, why: String) {
        self.report.checks.push(CheckRecord {
            id: id.into(),
            anchor: anchor.into(),
            points: 0,
            max_residual: Sci(f64::NAN),
            tol: Sci(self.cfg.tol.unwrap_or(0.0)),
            pass: true,
            skipped: true,
            note: Some(why),
        });
    }
    fn observe(&mut self, key: &str, v: f64) {
        self.report.observables.insert(key.into(), Sci(v));
    }
    fn finish(mut self) -> Report {
        self.report.pass = self.report.checks.iter().all(|c| c.pass);
        self.report
    }
}

fn sweep<F>(points: &[Vec<f64>], f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let rs: Vec<f64> = points.par_iter().map(|x| f(x)).collect::<Result<_>>()?;
    Ok(rs.into_iter().fold(0.0, f64::max))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn need_data<'e>(ex: &'e Example, suite: &str) -> Result<&'e GaugeData> {
    ex.data.as_ref().ok_or_else(|| Error::Usage(format!("example '{}' carries no gauge data for '{suite}'", ex.name)))
}

pub fn run_axioms(ex: &Example, cfg: &SuiteConfig) -> Report {
    let mut b = Builder::new("axioms", ex, cfg);
    let pts = ex.algebroid.domain().sample(cfg.seed, cfg.points);
    let per: Result<Vec<[f64; 3]>> = pts.par_iter().map(|x| axiom_residuals_at(&ex.algebroid, x)).collect();
    let col = |k: usize| per.as_ref().map(|v| v.iter().fold(0.0f64, |m, r| m.max(r[k]))).map_err(|e| Error::Usage(e.to_string()));
    b.record("antisymmetry", "Def. 3.1.1", pts.len(), col(0), 1e-12);
    b.record("anchor-homomorphism", "Eq. 3.7", pts.len(), col(1), 1e-9);
    b.record("jacobiator", "Eq. 3.11", pts.len(), col(2), 1e-8);
    b.finish()
}

pub fn run_compat(ex: &Example, cfg: &SuiteConfig) -> Result<Report> {
    let data = need_data(ex, "compat")?;
    let mut b = Builder::new("compat", ex, cfg);
    let pts = ex.algebroid.domain().sample(cfg.seed, cfg.points);
    match compat_report(data, &pts, cfg.tol.unwrap_or(1e-7)) {
        Ok(rep) => {
            b.record("curvature-primitive", "Thm. 4.7.5", pts.len(), Ok(rep.curvature_primitive), 1e-7);
            b.record("basic-curvature", "Def. 3.7.4", pts.len(), Ok(rep.basic_curvature), 1e-7);
            b.record("kappa-compatibility", "Thm. 4.7.5", pts.len(), Ok(rep.kappa_compatibility), 1e-8);
            b.record("g-compatibility", "Thm. 4.7.5", pts.len(), Ok(rep.g_compatibility), 1e-8);
            b.observe("max-curvature", rep.max_curvature);
        }
        Err(e) => b.record("compat-report", "Thm. 4.7.5", pts.len(), Err(e), 1e-7),
    }
    if let Ok(obs) = obstruction_report(data, &pts, &[]) {
        b.observe("obstruction-norm", obs.max_norm);
    }
    Ok(b.finish())
}

struct MaxAcc(Result<f64>);

impl MaxAcc {
    fn new() -> Self {
        MaxAcc(Ok(0.0))
    }
    fn push(&mut self, r: Result<f64>) {
        if let Ok(m) = &self.0 {
            self.0 = r.map(|v| m.max(v));
        }
    }
}

pub fn run_redef(ex: &Example, cfg: &SuiteConfig) -> Result<Report> {
    let data = need_data(ex, "redef")?;
    let alg = data.algebroid();
    let (n, r) = (alg.n(), alg.r());
    let mut b = Builder::new("redef", ex, cfg);
    let pts = alg.domain().sample(cfg.seed, cfg.points);
    let mut g = rng(cfg.lambda_seed);
    let mut reds = Vec::new();
    for k in 0..cfg.lambdas {
        match Redef::random_poly(alg, 2, 0.05, &mut g) {
            Ok(red) => match redefine(data, &red) {
                Ok(t) => reds.push((red, t)),
                Err(e) => b.skip(&format!("lambda-{k}"), "Def. 4.5.1", format!("near-singular Λ: {e}")),
            },
            Err(e) => b.skip(&format!("lambda-{k}"), "Def. 4.5.1", format!("near-singular Λ: {e}")),
        }
    }
    let mut sg = rng(cfg.seed ^ 0x5ec);
    let (mu, nu) = (Section::random_poly(r, n, 2, &mut sg), Section::random_poly(r, n, 2, &mut sg));
    let y = BaseVectorField::random_poly(n, 2, &mut sg);
    let st = Spacetime::minkowski(3);
    let fc = field_config(ex, 3, cfg.seed)?;
    let spts = spacetime_points(3, cfg.points, cfg.seed);

    let (mut conj, mut kap, mut gm, mut flat, mut prim) = (MaxAcc::new(), MaxAcc::new(), MaxAcc::new(), MaxAcc::new(), MaxAcc::new());
    let (mut dd, mut gcov, mut lag, mut inv, mut comp) = (MaxAcc::new(), MaxAcc::new(), MaxAcc::new(), MaxAcc::new(), MaxAcc::new());
    for (k, (red, t)) in reds.iter().enumerate() {
        conj.push(sweep(&pts, |x| conjugation_residual(data.connection(), t.connection(), red, &mu, &nu, &y, x)));
        match compat_report(t, &pts, 1.0) {
            Ok(rep) => {
                kap.push(Ok(rep.kappa_compatibility));
                gm.push(Ok(rep.g_compatibility));
                flat.push(Ok(rep.basic_curvature));
                prim.push(Ok(rep.curvature_primitive));
            }
            Err(e) => prim.push(Err(e)),
        }
        let fr = spts
            .par_iter()
            .map(|x| field_redefinition_residuals(data, t, red, &st, &ex.potential, &fc, x))
            .collect::<Result<Vec<_>>>();
        match fr {
            Ok(v) => {
                dd.push(Ok(v.iter().fold(0.0, |m, f| m.max(f.coupling))));
                gcov.push(Ok(v.iter().fold(0.0, |m, f| m.max(f.field_strength))));
                lag.push(Ok(v.iter().fold(0.0, |m, f| m.max(f.lagrangian))));
            }
            Err(e) => lag.push(Err(e)),
        }
        let back = redefine(t, &inverse_lambda(alg, red));
        inv.push(back.and_then(|bk| sweep(&pts, |x| table_diff(data, &bk, x))));
        if let Some((red2, _)) = reds.get(k + 1) {
            let twice = redefine(t, red2);
            let once = compose_lambda(alg, red, red2).and_then(|c| redefine(data, &c));
            comp.push(twice.and_then(|tw| once.and_then(|on| sweep(&pts, |x| table_diff(&tw, &on, x)))));
        }
    }
    let np = pts.len();
    b.record("conjugation", "Eq. 4.107", np, conj.0, 1e-8);
    b.record("kappa-preservation", "Eq. 4.127", np, kap.0, 1e-7);
    b.record("g-preservation", "Eq. 4.128", np, gm.0, 1e-7);
    b.record("basic-flatness-preservation", "Eq. 4.129", np, flat.0, 1e-7);
    b.record("compat-preservation", "Eq. 4.156", np, prim.0, 1e-7);
    b.record("coupling-covariance", "Prop. 4.6.3", spts.len(), dd.0, 1e-9);
    b.record("g-covariance", "Eq. 4.154", spts.len(), gcov.0, 1e-8);
    b.record("lagrangian-invariance", "Eq. 4.162", spts.len(), lag.0, 1e-8);
    b.record("inverse-law", "Lemma 4.5.8", np, inv.0, 1e-8);
    b.record("composition-law", "Lemma 4.7.17", np, comp.0, 1e-8);
    let lambdas: Vec<Redef> = reds.iter().map(|(l, _)| l.clone()).collect();
    match obstruction_report(data, &pts, &lambdas) {
        Ok(obs) => {
            b.record("obstruction-invariance", "Eq. 5.17", np, Ok(obs.invariance), 1e-10);
            b.observe("obstruction-norm", obs.max_norm);
        }
        Err(Error::WrongCategory(_)) => {}
        Err(e) => b.record("obstruction-invariance", "Eq. 5.17", np, Err(e), 1e-10),
    }
    Ok(b.finish())
}

fn spacetime_points(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    crate::algebroid::Domain::cube(d, -0.5, 0.5).sample(seed ^ 0xf1e1d, count)
}

/// Random polynomial fields whose `Φ` stays well inside the example's chart box.
pub fn field_config(ex: &Example, d: usize, seed: u64) -> Result<FieldConfig> {
    let dom = ex.algebroid.domain();
    let centre: Vec<f64> = dom.lo().iter().zip(dom.hi()).map(|(a, b)| 0.5 * (a + b)).collect();
    let width = dom.lo().iter().zip(dom.hi()).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
    FieldConfig::random_poly(d, ex.algebroid.r(), &centre, 0.04 * width, 2, &mut rng(seed ^ 0xf1e1d))
}

pub fn run_fields(ex: &Example, cfg: &SuiteConfig) -> Result<Report> {
    let data = need_data(ex, "fields")?;
    let alg = data.algebroid();
    let (n, r) = (alg.n(), alg.r());
    let mut b = Builder::new("fields", ex, cfg);
    let d = 3;
    let st = Spacetime::minkowski(d);
    let fc = field_config(ex, d, cfg.seed)?;
    let pts = spacetime_points(d, cfg.points, cfg.seed);
    let np = pts.len();
    b.record("delta-g", "Eq. 4.145", np, sweep(&pts, |x| Ok(gauge_delta_g(data, &fc, x)?.iter().fold(0.0f64, |m, v| m.max(v.abs())))), 1e-7);

    let flow_pts = &pts[..np.min(4)];
    let slopes = flow_pts
        .par_iter()
        .map(|x| richardson_slope(data, &st, &ex.potential, &fc, x, &cfg.dts).map(|(s, _)| (s - 1.0).abs()))
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    b.record("lagrangian-richardson", "Eq. 4.152", flow_pts.len(), slopes, 0.2);
    let oracle = flow_pts
        .par_iter()
        .map(|x| {
            let defects = cfg.dts.iter().map(|&dt| delta_oracle_defect(data, &fc, x, dt, false)).collect::<Result<Vec<f64>>>()?;
            let (d0, d1) = (defects[0], defects[defects.len() - 1]);
            if d1 < 1e-10 {
                return Ok(0.0);
            }
            let slope = (d0.ln() - d1.ln()) / (cfg.dts[0].ln() - cfg.dts[cfg.dts.len() - 1].ln());
            Ok((1.0 - slope).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    b.record("delta-f-oracle-order", "Eq. 4.88", flow_pts.len(), oracle, 0.2);

    let mut sg = rng(cfg.seed ^ 0x5ec);
    let (mu, nu) = (Section::random_poly(r, n, 2, &mut sg), Section::random_poly(r, n, 2, &mut sg));
    b.record(
        "nested-curvature",
        "Thm. 4.3.37",
        np,
        sweep(&pts, |x| Ok(nested_gauge_curvature(data.connection(), &mu, &nu, &fc, x)?.residual)),
        1e-7,
    );
    let ypts = alg.domain().sample(cfg.seed, cfg.points);
    b.record(
        "pre-bracket",
        "Eq. 4.75",
        ypts.len(),
        sweep(&ypts, |y| {
            let pb = pullback_pre_bracket(alg, &mu, &nu, y)?;
            let br = values(&bracket_jets(&alg.jets_at(y)?, &mu.jets_at(y)?, &nu.jets_at(y)?));
            Ok(pb.iter().zip(&br).fold(0.0f64, |m, (a, c)| m.max((a - c).abs())))
        }),
        1e-12,
    );
    let alpha = PQForm::random_poly(1, 0, n, r, ValueKind::E, 2, &mut sg);
    b.record("pullback-d", "Eq. A.2", np, sweep(&pts, |x| pullback_commutes_with_d(data.connection(), &alpha, &fc, x)), 1e-8);
    if alg.domain().sample(0, 1).iter().all(|x| alg.jets_at(x).map(|a| a.rho.iter().all(|v| v.max_diff(&Default::default()) == 0.0)).unwrap_or(false)) {
        let bianchi = pts
            .par_iter()
            .map(|x| bianchi_g_residual(data, &fc, x))
            .collect::<Result<Vec<_>>>();
        match bianchi {
            Ok(v) => {
                b.record("bianchi-defect", "Thm. 5.1.42", np, Ok(v.iter().fold(0.0, |m, d| m.max(d.residual))), 1e-7);
                b.observe("pulled-obstruction", v.iter().fold(0.0, |m, d| m.max(d.pulled_obstruction)));
            }
            Err(e) => b.record("bianchi-defect", "Thm. 5.1.42", np, Err(e), 1e-7),
        }
    }
    Ok(b.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Axioms,
    Compat,
    Redef,
    Fields,
    All,
}

/// Runs the requested suites; `Err` only for usage errors.
pub fn execute(kind: SuiteKind, cfg: &SuiteConfig) -> Result<RunReport> {
    cfg.validate()?;
    let names: Vec<String> = match (&cfg.example, kind) {
        (Some(e), _) => vec![e.clone()],
        (None, SuiteKind::All) => EXAMPLES.iter().map(|s| s.to_string()).collect(),
        (None, _) => return Err(Error::Usage("--example is required".into())),
    };
    let mut suites = Vec::new();
    for name in names {
        let ex = example(&name).map_err(|e| match e {
            Error::Usage(_) => e,
            other => Error::Usage(format!("example '{name}' could not be built: {other}")),
        })?;
        let has_data = ex.data.is_some();
        match kind {
            SuiteKind::Axioms => suites.push(run_axioms(&ex, cfg)),
            SuiteKind::Compat => suites.push(run_compat(&ex, cfg)?),
            SuiteKind::Redef => suites.push(run_redef(&ex, cfg)?),
            SuiteKind::Fields => suites.push(run_fields(&ex, cfg)?),
            SuiteKind::All => {
                suites.push(run_axioms(&ex, cfg));
                if has_data {
                    suites.push(run_compat(&ex, cfg)?);
                    suites.push(run_redef(&ex, cfg)?);
                    suites.push(run_fields(&ex, cfg)?);
                }
            }
        }
    }
    let pass = suites.iter().all(|s| s.pass);
    Ok(RunReport { version: env!("CARGO_PKG_VERSION").into(), seed: cfg.seed, points: cfg.points, suites, pass, timestamp: None })
}

pub fn to_json(report: &RunReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Usage(e.to_string()))
}

fn human(report: &RunReport) -> String {
    let mut s = String::new();
    for suite in &report.suites {
        for c in &suite.checks {
            let status = if c.skipped { "SKIP" } else if c.pass { "PASS" } else { "FAIL" };
            s += &format!(
                "{status} {}/{} {} max={:.3e} tol={:.1e} [{}]{}\n",
                suite.suite,
                suite.example,
                c.id,
                c.max_residual.0,
                c.tol.0,
                c.anchor,
                c.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
            );
        }
        for (k, v) in &suite.observables {
            s += &format!("  {}/{} {k} = {:.6e}\n", suite.suite, suite.example, v.0);
        }
    }
    s += if report.pass { "overall: PASS\n" } else { "overall: FAIL\n" };
    s
}

#[derive(Parser, Debug)]
#[command(name = "algebroid-lab", version, about = "Verify Lie algebroid gauge-theory identities on the example zoo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lie algebroid axioms.
    Axioms(RunArgs),
    /// Compatibility conditions of the gauge data.
    Compat(RunArgs),
    /// Field-redefinition invariants.
    Redef(RunArgs),
    /// Field strengths, gauge variations and flows.
    Fields(RunArgs),
    /// Every suite, on every example unless one is named.
    Suite(RunArgs),
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub example: Option<String>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    /// Overrides every per-check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4])]
    pub dt: Vec<f64>,
    #[arg(long)]
    pub lambda_seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub lambdas: usize,
    /// `-` for stdout.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub json: bool,
    /// Leave the timestamp out of the JSON report.
    #[arg(long)]
    pub no_timestamp: bool,
}

impl RunArgs {
    pub fn config(&self) -> SuiteConfig {
        SuiteConfig {
            example: self.example.clone(),
            seed: self.seed,
            points: self.points,
            tol: self.tol,
            dts: self.dt.clone(),
            lambda_seed: self.lambda_seed.unwrap_or(self.seed.wrapping_add(1)),
            lambdas: self.lambdas,
        }
    }
}

fn timestamp() -> String {
    let t = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("{t}")
}

/// Parse, run and emit; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let (kind, a) = match &cli.command {
        Command::Axioms(a) => (SuiteKind::Axioms, a),
        Command::Compat(a) => (SuiteKind::Compat, a),
        Command::Redef(a) => (SuiteKind::Redef, a),
        Command::Fields(a) => (SuiteKind::Fields, a),
        Command::Suite(a) => (SuiteKind::All, a),
    };
    let mut report = match execute(kind, &a.config()) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    if !a.no_timestamp {
        report.timestamp = Some(timestamp());
    }
    let code = if report.pass { 0 } else { 1 };
    let json = match to_json(&report) {
        Ok(j) => j,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    match a.output.as_deref() {
        Some("-") => {
            let _ = writeln!(stdout, "{json}");
        }
        Some(path) => {
            if let Err(e) = std::fs::write(path, format!("{json}\n")) {
                let _ = writeln!(stderr, "error: cannot write {path}: {e}");
                return 2;
            }
            if !a.json {
                let _ = write!(stdout, "{}", human(&report));
            }
        }
        None => {
            let _ = if a.json { writeln!(stdout, "{json}") } else { write!(stdout, "{}", human(&report)) };
        }
    }
    code
}
