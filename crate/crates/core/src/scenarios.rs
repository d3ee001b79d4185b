//! The catalog of concrete equation instances.
//!
//! Every scenario bundles, per spatial dimension, the operators N and M, the
//! multiplication operator L, the coefficient A(t) and the invariant
//! generators, together with the time operator, the equation form and the
//! known closed-form solutions. The residual of a scenario is
//!
//! ```text
//! O_t u - Σ_d A_d X_d(u L_d u) - Σ_d N_d M_d u - (Σ_d A_d) u
//! ```
//!
//! with X = M for form (a) and X = N for form (b).

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Axis, Field, Interval, TimeField};
use crate::frac::{Clock, FracParams};
use crate::kernels::{brownian_burgers_solution, hyperbolic_heat_density, KernelPoint};
use crate::operators::{partial, LinearMult, Sample, SpatialOp, Stencil, TimeOp, MAX_DIMS};
use crate::specialfn::{hermite_gen, HermiteArgs, MittagLeffler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GenTag {
    /// M ω = 1
    Unit,
    /// M ω = 0
    Kernel,
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub tag: GenTag,
    pub label: String,
    pub field: Field,
}

/// Eigenvalue of L on the generators.
#[derive(Debug, Clone)]
pub enum Eigenvalue {
    Constant(f64),
    Varying(TimeField),
}

impl Eigenvalue {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Eigenvalue::Constant(c) => *c,
            Eigenvalue::Varying(f) => f.eval(t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DimSpec {
    pub axis: Axis,
    pub n: SpatialOp,
    pub m: SpatialOp,
    pub l: LinearMult,
    pub a: TimeField,
    pub lambda: Option<Eigenvalue>,
    pub generators: Vec<Generator>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub label: String,
    pub equation: String,
    pub field: Field,
    /// Solution of the linear companion equation linked to `field` by the
    /// exponential transform, when one is known in closed form.
    pub companion: Option<Field>,
    /// Evaluating the field runs a quadrature per point.
    pub expensive: bool,
    /// Sub-box for residual grids that avoids zeros of the companion.
    pub region: Option<Vec<Interval>>,
}

/// Which operator composition the metric's Laplace–Beltrami operator
/// reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Σ N_d M_d
    NM,
    /// Σ M_d N_d, the companion-equation operator
    MN,
}

/// Diagonal metric on coordinates that map onto scenario axes.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub label: String,
    pub g_diag: Vec<Field>,
    /// Scenario axis for each metric coordinate; `None` coordinates are
    /// held at 0 and the test fields do not depend on them.
    pub coords: Vec<Option<usize>>,
    pub pairing: Pairing,
}

impl MetricSpec {
    /// Lifts a scenario point into metric coordinates.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        self.coords.iter().map(|c| c.map_or(0.0, |i| x[i])).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub equation: String,
    pub summary: String,
    pub dims: Vec<DimSpec>,
    pub time: Axis,
    pub time_op: TimeOp,
    pub form: Form,
    pub solutions: Vec<Solution>,
    pub metric: Option<MetricSpec>,
    pub params: ScenarioParams,
    pub variants: Vec<Scenario>,
    pub note: Option<String>,
}

impl Scenario {
    pub fn bounds(&self) -> Vec<Interval> {
        self.dims.iter().map(|d| d.axis.interval).collect()
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// The first listed solution.
    pub fn exact(&self) -> &Solution {
        &self.solutions[0]
    }

    pub fn solution(&self, label: &str) -> Result<&Solution> {
        self.solutions
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::Parameter(format!("scenario {} has no solution {label}", self.id)))
    }

    pub fn sum_a(&self, t: f64) -> f64 {
        self.dims.iter().map(|d| d.a.eval(t)).sum()
    }

    pub fn is_classical(&self) -> bool {
        self.time_op.is_classical()
    }

    pub fn generator_count(&self) -> usize {
        self.dims.iter().map(|d| d.generators.len()).sum()
    }

    pub fn descriptor(&self) -> ScenarioDescriptor {
        let (beta, clock) = match &self.time_op {
            TimeOp::Classical => (None, None),
            TimeOp::Fractional(p) => (Some(p.beta), Some(p.clock.name().to_string())),
        };
        ScenarioDescriptor {
            id: self.id.clone(),
            equation: self.equation.clone(),
            summary: self.summary.clone(),
            dims: self
                .dims
                .iter()
                .map(|d| DimDescriptor {
                    name: d.axis.name.clone(),
                    interval: d.axis.interval,
                    n: d.n.label.clone(),
                    m: d.m.label.clone(),
                    generators: d.generators.iter().map(|g| (g.label.clone(), g.tag)).collect(),
                })
                .collect(),
            time: self.time.clone(),
            time_op: self.time_op.kind().to_string(),
            beta,
            clock,
            form: self.form,
            solutions: self.solutions.iter().map(|s| s.label.clone()).collect(),
            metric: self.metric.as_ref().map(|m| m.label.clone()),
            params: self.params.clone(),
            variants: self.variants.iter().map(|v| v.id.clone()).collect(),
            note: self.note.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DimDescriptor {
    pub name: String,
    pub interval: Interval,
    pub n: String,
    pub m: String,
    pub generators: Vec<(String, GenTag)>,
}

/// Serializable summary of a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioDescriptor {
    pub id: String,
    pub equation: String,
    pub summary: String,
    pub dims: Vec<DimDescriptor>,
    pub time: Axis,
    pub time_op: String,
    pub beta: Option<f64>,
    pub clock: Option<String>,
    pub form: Form,
    pub solutions: Vec<String>,
    pub metric: Option<String>,
    pub params: ScenarioParams,
    pub variants: Vec<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    Identity,
    Log1p,
}

impl ClockKind {
    pub fn clock(self) -> Clock {
        match self {
            ClockKind::Identity => Clock::Identity,
            ClockKind::Log1p => Clock::Log1p,
        }
    }
}

/// Free constants shared by the catalog.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioParams {
    /// Pole of A(t) = 1/(t - t0) for classical scenarios.
    pub t0: f64,
    /// Integration constant of the Riccati coefficient.
    pub c: f64,
    pub beta: f64,
    /// Eigenvalue C (one dimension) or A (several) of the linearized system.
    pub target: f64,
    pub clock: ClockKind,
    /// Tolerance of kernel quadratures inside solution fields.
    pub kernel_rel_tol: f64,
    pub kernel_step: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            t0: -1.0,
            c: 0.1,
            beta: 0.6,
            target: 0.8,
            clock: ClockKind::Identity,
            kernel_rel_tol: 1e-12,
            kernel_step: 1e-3,
        }
    }
}

pub const IDS: [&str; 9] = [
    "euclid-classic",
    "euclid-frac",
    "hyp-sinh",
    "hyp-csch",
    "hyp-mixed",
    "hyp-frac",
    "hyp-2d",
    "schwarzschild",
    "cigar",
];

/// The catalog at default parameters.
pub fn catalog() -> Vec<Scenario> {
    catalog_with(&ScenarioParams::default()).expect("default parameters are valid")
}

pub fn catalog_with(p: &ScenarioParams) -> Result<Vec<Scenario>> {
    IDS.iter().map(|id| build(id, p)).collect()
}

/// Looks up a scenario or one of its variants (`parent:variant`).
pub fn find(id: &str) -> Result<Scenario> {
    find_with(id, &ScenarioParams::default())
}

pub fn find_with(id: &str, p: &ScenarioParams) -> Result<Scenario> {
    let (base, variant) = match id.split_once(':') {
        Some((b, v)) => (b, Some(v)),
        None => (id, None),
    };
    let sc = build(base, p)?;
    match variant {
        None => Ok(sc),
        Some(_) => sc
            .variants
            .into_iter()
            .find(|v| v.id == id)
            .ok_or_else(|| Error::UnknownScenario(id.to_string())),
    }
}

pub fn build(id: &str, p: &ScenarioParams) -> Result<Scenario> {
    match id {
        "euclid-classic" => Ok(euclid_classic(p)),
        "euclid-frac" => euclid_frac(p),
        "hyp-sinh" => Ok(hyp_sinh(p)),
        "hyp-csch" => Ok(hyp_csch(p)),
        "hyp-mixed" => Ok(hyp_mixed(p)),
        "hyp-frac" => hyp_frac(p),
        "hyp-2d" => hyp_2d(p),
        "schwarzschild" => schwarzschild(p),
        "cigar" => cigar(p),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

// ---- shared pieces ----

fn riccati_a(t0: f64) -> TimeField {
    TimeField::new(move |t| 1.0 / (t - t0))
}

/// b(t) = c s / (1 - 2 c s), s = t - t0
pub fn riccati_b(c: f64, t0: f64) -> TimeField {
    TimeField::new(move |t| {
        let s = c * (t - t0);
        s / (1.0 - 2.0 * s)
    })
}

/// t ↦ E_β(C f(t)^β)
pub fn mittag_coefficient(beta: f64, target: f64, clock: Clock) -> Result<TimeField> {
    let ml = Arc::new(MittagLeffler::new(beta)?);
    Ok(TimeField::new(move |t| {
        let s = clock.value(t).max(0.0);
        ml.eval(target * s.powf(beta)).unwrap_or(f64::NAN)
    }))
}

/// Equal-split coefficient target / (m [1 + 2 λ E_β(target f^β)]).
pub fn equal_split_a(m: usize, lambda: f64, e: &TimeField, target: f64) -> TimeField {
    let e = e.clone();
    TimeField::new(move |t| target / (m as f64 * (1.0 + 2.0 * lambda * e.eval(t))))
}

fn frac_op(p: &ScenarioParams) -> Result<TimeOp> {
    Ok(TimeOp::Fractional(FracParams::new(p.beta, p.clock.clock())?))
}

fn unit(axis: usize, label: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Generator {
    Generator {
        tag: GenTag::Unit,
        label: label.to_string(),
        field: Field::of_axis(axis, f),
    }
}

fn one() -> Generator {
    Generator {
        tag: GenTag::Kernel,
        label: "1".into(),
        field: Field::constant(1.0),
    }
}

fn ln_tanh_half(eta: f64) -> f64 {
    (0.5 * eta).tanh().ln()
}

fn heat_poly(n: u32, f: f64, h: f64) -> f64 {
    hermite_gen(HermiteArgs { n, fval: f, hval: h }).unwrap_or(f64::NAN)
}

/// Solutions (t - t0) n H_{n-1}(f, t) / H_n(f, t) with companion H_n(f, t),
/// for a generator f with N f = 1.
fn hermite_solutions(t0: f64, f: fn(f64) -> f64, equation: &str, h3_region: Option<Interval>) -> Vec<Solution> {
    [2u32, 3]
        .iter()
        .map(|&n| {
            let u = Field::new(move |x, t| {
                let fv = f(x[0]);
                (t - t0) * n as f64 * heat_poly(n - 1, fv, t) / heat_poly(n, fv, t)
            });
            let psi = Field::new(move |x, t| heat_poly(n, f(x[0]), t));
            Solution {
                label: format!("hermite-{n}"),
                equation: equation.to_string(),
                field: u,
                companion: Some(psi),
                expensive: false,
                region: if n == 3 { h3_region.map(|r| vec![r]) } else { None },
            }
        })
        .collect()
}

/// u = b(t)(ω + 1) with the Riccati coefficient, and its companion
/// (1 - 2cs)^(-1/2) exp(c (ω + 1)² / (2 (1 - 2cs))).
fn riccati_solution(p: &ScenarioParams, omega: fn(f64) -> f64, equation: &str) -> Solution {
    let b = riccati_b(p.c, p.t0);
    let (c, t0) = (p.c, p.t0);
    let psi = Field::new(move |x, t| {
        let d = 1.0 - 2.0 * c * (t - t0);
        let w = omega(x[0]) + 1.0;
        (0.5 * c * w * w / d).exp() / d.sqrt()
    });
    Solution {
        label: "riccati".into(),
        equation: equation.to_string(),
        field: Field::of_axis(0, move |x| omega(x) + 1.0).times(&b),
        companion: Some(psi),
        expensive: false,
        region: None,
    }
}

/// E_β(C f^β) Σ ω over every generator.
fn mittag_solution(dims: &[DimSpec], e: &TimeField, equation: &str) -> Solution {
    let gens: Vec<Field> = dims.iter().flat_map(|d| d.generators.iter().map(|g| g.field.clone())).collect();
    let sum = Field::new(move |x, t| gens.iter().map(|g| g.eval(x, t)).sum());
    Solution {
        label: "mittag".into(),
        equation: equation.to_string(),
        field: sum.times(e),
        companion: None,
        expensive: false,
        region: None,
    }
}

fn classical_dim(axis: Axis, n: SpatialOp, a: TimeField, generators: Vec<Generator>) -> DimSpec {
    DimSpec {
        axis,
        m: n.clone(),
        n,
        l: LinearMult::identity(),
        a,
        lambda: Some(Eigenvalue::Constant(1.0)),
        generators,
    }
}

// ---- entries ----

fn euclid_classic(p: &ScenarioParams) -> Scenario {
    let dim = classical_dim(
        Axis::new("x", -1.0, 1.0),
        SpatialOp::partial(0, "d/dx"),
        riccati_a(p.t0),
        vec![unit(0, "x", |x| x), one()],
    );
    let mut solutions = vec![riccati_solution(p, |x| x, "3.20")];
    solutions.extend(hermite_solutions(p.t0, |x| x, "2.14", Some(Interval::new(0.25, 0.9))));
    Scenario {
        id: "euclid-classic".into(),
        equation: "1.1".into(),
        summary: "viscous Burgers equation with source, A = 1/(t - t0)".into(),
        dims: vec![dim],
        time: Axis::new("t", 0.1, 2.0),
        time_op: TimeOp::Classical,
        form: Form::A,
        solutions,
        metric: None,
        params: p.clone(),
        variants: vec![],
        note: None,
    }
}

fn euclid_frac(p: &ScenarioParams) -> Result<Scenario> {
    let e = mittag_coefficient(p.beta, p.target, p.clock.clock())?;
    let dim = DimSpec {
        axis: Axis::new("x", -1.0, 1.0),
        n: SpatialOp::partial(0, "d/dx"),
        m: SpatialOp::partial(0, "d/dx"),
        l: LinearMult::identity(),
        a: equal_split_a(1, 1.0, &e, p.target),
        lambda: Some(Eigenvalue::Constant(1.0)),
        generators: vec![unit(0, "x", |x| x), one()],
    };
    let sol = mittag_solution(std::slice::from_ref(&dim), &e, "3.13");
    Ok(Scenario {
        id: "euclid-frac".into(),
        equation: "3.12".into(),
        summary: "fractional Burgers equation with Mittag-Leffler coefficient".into(),
        dims: vec![dim],
        time: Axis::new("t", 0.1, 2.0),
        time_op: frac_op(p)?,
        form: Form::A,
        solutions: vec![sol],
        metric: None,
        params: p.clone(),
        variants: vec![],
        note: None,
    })
}

fn sinh_op() -> SpatialOp {
    SpatialOp::new(0, "sinh(eta) d/deta", Field::of_axis(0, f64::sinh))
}

fn csch_op() -> SpatialOp {
    SpatialOp::new(0, "(1/sinh(eta)) d/deta", Field::of_axis(0, |e| 1.0 / e.sinh()))
}

fn eta_axis() -> Axis {
    Axis::new("eta", 0.2, 3.0)
}

fn hyperbolic_metric(coords: Vec<Option<usize>>, pairing: Pairing) -> MetricSpec {
    MetricSpec {
        label: "hyperbolic polar: d eta^2 + sinh^2(eta) d alpha^2".into(),
        g_diag: vec![Field::constant(1.0), Field::of_axis(0, |e| e.sinh().powi(2))],
        coords,
        pairing,
    }
}

fn hyp_sinh(p: &ScenarioParams) -> Scenario {
    let dim = classical_dim(
        eta_axis(),
        sinh_op(),
        riccati_a(p.t0),
        vec![unit(0, "ln tanh(eta/2)", ln_tanh_half), one()],
    );
    let mut solutions = hermite_solutions(p.t0, ln_tanh_half, "2.20", None);
    solutions.push(riccati_solution(p, ln_tanh_half, "3.22"));
    Scenario {
        id: "hyp-sinh".into(),
        equation: "2.18".into(),
        summary: "Burgers-type equation with N = M = sinh(eta) d/deta".into(),
        dims: vec![dim],
        time: Axis::new("t", 0.1, 2.0),
        time_op: TimeOp::Classical,
        form: Form::A,
        solutions,
        metric: None,
        params: p.clone(),
        variants: vec![],
        note: None,
    }
}

fn hyp_csch(p: &ScenarioParams) -> Scenario {
    let dim = classical_dim(eta_axis(), csch_op(), riccati_a(p.t0), vec![unit(0, "cosh(eta)", f64::cosh), one()]);
    let mut solutions = hermite_solutions(p.t0, f64::cosh, "2.21", None);
    solutions.push(riccati_solution(p, f64::cosh, "2.21"));
    Scenario {
        id: "hyp-csch".into(),
        equation: "2.21".into(),
        summary: "Burgers-type equation with N = M = (1/sinh(eta)) d/deta".into(),
        dims: vec![dim],
        time: Axis::new("t", 0.1, 2.0),
        time_op: TimeOp::Classical,
        form: Form::A,
        solutions,
        metric: None,
        params: p.clone(),
        variants: vec![],
        note: None,
    }
}

fn hyp_mixed(p: &ScenarioParams) -> Scenario {
    let dim = DimSpec {
        axis: eta_axis(),
        n: sinh_op(),
        m: csch_op(),
        l: LinearMult::new(Field::of_axis(0, |e| 1.0 / e.sinh().powi(2))),
        a: riccati_a(p.t0),
        lambda: None,
        generators: vec![],
    };
    let (t0, step, tol) = (p.t0, p.kernel_step, p.kernel_rel_tol);
    let u = Field::new(move |x, t| {
        KernelPoint::new(x[0], t)
            .and_then(|kp| brownian_burgers_solution(kp, t0, step, tol))
            .unwrap_or(f64::NAN)
    });
    let phi = Field::new(move |x, t| {
        KernelPoint::new(x[0], t)
            .and_then(|kp| hyperbolic_heat_density(kp, tol))
            .unwrap_or(f64::NAN)
    });
    Scenario {
        id: "hyp-mixed".into(),
        equation: "2.23".into(),
        summary: "form (b) with N = sinh d, M = (1/sinh) d, L = 1/sinh^2; solution from the hyperbolic heat kernel".into(),
        dims: vec![dim],
        time: Axis::new("t", 0.1, 2.0),
        time_op: TimeOp::Classical,
        form: Form::B,
        solutions: vec![Solution {
            label: "kernel".into(),
            equation: "2.26".into(),
            field: u,
            companion: Some(phi),
            expensive: true,
            region: None,
        }],
        metric: Some(hyperbolic_metric(vec![Some(0), None], Pairing::MN)),
        params: p.clone(),
        variants: vec![],
        note: Some("companion operator M N is the radial hyperbolic Laplacian".into()),
    }
}

fn hyp_frac(p: &ScenarioParams) -> Result<Scenario> {
    let e = mittag_coefficient(p.beta, p.target, p.clock.clock())?;
    let make = |n: SpatialOp| DimSpec {
        axis: eta_axis(),
        n,
        m: sinh_op(),
        l: LinearMult::identity(),
        a: equal_split_a(1, 1.0, &e, p.target),
        lambda: Some(Eigenvalue::Constant(1.0)),
        generators: vec![unit(0, "ln tanh(eta/2)", ln_tanh_half), one()],
    };
    let dim = make(sinh_op());
    let sol = mittag_solution(std::slice::from_ref(&dim), &e, "3.15");
    let lb_dim = make(csch_op());
    let lb_sol = mittag_solution(std::slice::from_ref(&lb_dim), &e, "3.15");
    let variant = Scenario {
        id: "hyp-frac:laplacian".into(),
        equation: "3.16".into(),
        summary: "N = (1/sinh) d so that N M is the radial hyperbolic Laplacian".into(),
        dims: vec![lb_dim],
        time: Axis::new("t", 0.1, 2.0),
        time_op: frac_op(p)?,
        form: Form::A,
        solutions: vec![lb_sol],
        metric: Some(hyperbolic_metric(vec![Some(0), None], Pairing::NM)),
        params: p.clone(),
        variants: vec![],
        note: None,
    };
    Ok(Scenario {
        id: "hyp-frac".into(),
        equation: "3.14".into(),
        summary: "fractional Burgers-type equation with N = M = sinh(eta) d/deta".into(),
        dims: vec![dim],
        time: Axis::new("t", 0.1, 2.0),
        time_op: frac_op(p)?,
        form: Form::A,
        solutions: vec![sol],
        metric: None,
        params: p.clone(),
        variants: vec![variant],
        note: None,
    })
}

fn hyp_2d(p: &ScenarioParams) -> Result<Scenario> {
    let e = mittag_coefficient(p.beta, p.target, p.clock.clock())?;
    let a = equal_split_a(2, 1.0, &e, p.target);
    let eta = DimSpec {
        axis: eta_axis(),
        n: csch_op(),
        m: sinh_op(),
        l: LinearMult::identity(),
        a: a.clone(),
        lambda: Some(Eigenvalue::Constant(1.0)),
        generators: vec![unit(0, "ln tanh(eta/2)", ln_tanh_half), one()],
    };
    let alpha = DimSpec {
        axis: Axis::new("alpha", -1.0, 1.0),
        n: SpatialOp::new(1, "(1/sinh^2(eta)) d/dalpha", Field::of_axis(0, |e| 1.0 / e.sinh().powi(2))),
        m: SpatialOp::partial(1, "d/dalpha"),
        l: LinearMult::identity(),
        a,
        lambda: Some(Eigenvalue::Constant(1.0)),
        generators: vec![unit(1, "alpha", |x| x), one()],
    };
    let dims = vec![eta, alpha];
    let sol = mittag_solution(&dims, &e, "4.16");
    Ok(Scenario {
        id: "hyp-2d".into(),
        equation: "4.13".into(),
        summary: "full hyperbolic Laplacian in (eta, alpha), fractional time".into(),
        dims,
        time: Axis::new("t", 0.1, 2.0),
        time_op: frac_op(p)?,
        form: Form::A,
        solutions: vec![sol],
        metric: Some(hyperbolic_metric(vec![Some(0), Some(1)], Pairing::NM)),
        params: p.clone(),
        variants: vec![],
        note: None,
    })
}

/// 2GM with G = M = c = 1.
const RS: f64 = 2.0;

fn schwarzschild(p: &ScenarioParams) -> Result<Scenario> {
    let e = mittag_coefficient(p.beta, p.target, p.clock.clock())?;
    let a = equal_split_a(4, 1.0, &e, p.target);
    let dim = |axis: Axis, n: SpatialOp, m: SpatialOp, generators| DimSpec {
        axis,
        n,
        m,
        l: LinearMult::identity(),
        a: a.clone(),
        lambda: Some(Eigenvalue::Constant(1.0)),
        generators,
    };
    let dims = vec![
        dim(
            Axis::new("t", -1.0, 1.0),
            SpatialOp::new(0, "r/(r - 2GM) d/dt", Field::new(|x, _| x[1] / (x[1] - RS))),
            SpatialOp::partial(0, "d/dt"),
            vec![unit(0, "t", |t| t), one()],
        ),
        dim(
            Axis::new("r", 0.2, 1.8),
            SpatialOp::new(1, "(1/r^2) d/dr", Field::new(|x, _| 1.0 / (x[1] * x[1]))),
            SpatialOp::new(1, "(2GM - r) r d/dr", Field::new(|x, _| (RS - x[1]) * x[1])),
            vec![unit(1, "(1/2GM) ln(r/(2GM - r))", |r| (r / (RS - r)).ln() / RS), one()],
        ),
        dim(
            Axis::new("theta", 0.3, 2.8),
            SpatialOp::new(
                2,
                "-(1/(r^2 sin(theta))) d/dtheta",
                Field::new(|x, _| -1.0 / (x[1] * x[1] * x[2].sin())),
            ),
            SpatialOp::new(2, "sin(theta) d/dtheta", Field::of_axis(2, f64::sin)),
            vec![unit(2, "ln tan(theta/2)", |th| (0.5 * th).tan().ln()), one()],
        ),
        dim(
            Axis::new("phi", 0.0, std::f64::consts::TAU),
            SpatialOp::new(
                3,
                "-(1/(r sin(theta))^2) d/dphi",
                Field::new(|x, _| -1.0 / (x[1] * x[2].sin()).powi(2)),
            ),
            SpatialOp::partial(3, "d/dphi"),
            vec![unit(3, "phi", |ph| ph), one()],
        ),
    ];
    let sol = mittag_solution(&dims, &e, "4.29");
    let metric = MetricSpec {
        label: "Schwarzschild, G = M = c = 1".into(),
        g_diag: vec![
            Field::new(|x, _| 1.0 - RS / x[1]),
            Field::new(|x, _| -1.0 / (1.0 - RS / x[1])),
            Field::new(|x, _| -x[1] * x[1]),
            Field::new(|x, _| -(x[1] * x[2].sin()).powi(2)),
        ],
        coords: vec![Some(0), Some(1), Some(2), Some(3)],
        pairing: Pairing::NM,
    };
    Ok(Scenario {
        id: "schwarzschild".into(),
        equation: "4.25".into(),
        summary: "Laplace-Beltrami of the Schwarzschild metric in (t, r, theta, phi), evolution time tau".into(),
        dims,
        time: Axis::new("tau", 0.1, 1.0),
        time_op: frac_op(p)?,
        form: Form::A,
        solutions: vec![sol],
        metric: Some(metric),
        params: p.clone(),
        variants: vec![],
        note: Some("r is restricted to (0, 2GM) where ln(r/(2GM - r)) is defined".into()),
    })
}

fn cigar_factor(x: &[f64], t: f64) -> f64 {
    (4.0 * t).exp() + x[0] * x[0] + x[1] * x[1]
}

fn cigar(p: &ScenarioParams) -> Result<Scenario> {
    let e = mittag_coefficient(p.beta, p.target, p.clock.clock())?;
    let a = equal_split_a(2, 1.0, &e, p.target);
    let dim = |axis: usize, name: &str| DimSpec {
        axis: Axis::new(name, -1.0, 1.0),
        n: SpatialOp::new(axis, &format!("(e^4t + x^2 + y^2) d/d{name}"), Field::new(cigar_factor)),
        m: SpatialOp::partial(axis, &format!("d/d{name}")),
        l: LinearMult::identity(),
        a: a.clone(),
        lambda: Some(Eigenvalue::Constant(1.0)),
        generators: vec![unit(axis, name, |x| x), one()],
    };
    let dims = vec![dim(0, "x"), dim(1, "y")];
    let sol = mittag_solution(&dims, &e, "4.34");
    let metric = MetricSpec {
        label: "cigar soliton (dx^2 + dy^2)/(e^4t + x^2 + y^2)".into(),
        g_diag: vec![
            Field::new(|x, t| 1.0 / cigar_factor(x, t)),
            Field::new(|x, t| 1.0 / cigar_factor(x, t)),
        ],
        coords: vec![Some(0), Some(1)],
        pairing: Pairing::NM,
    };
    Ok(Scenario {
        id: "cigar".into(),
        equation: "4.32".into(),
        summary: "Laplace-Beltrami of the time-dependent cigar soliton metric".into(),
        dims,
        time: Axis::new("t", 0.1, 1.0),
        time_op: frac_op(p)?,
        form: Form::A,
        solutions: vec![sol],
        metric: Some(metric),
        params: p.clone(),
        variants: vec![],
        note: Some("the metric factor is frozen at the evaluation time".into()),
    })
}

// ---- metric Laplacian ----

/// (1/√|g|) Σ_d ∂_d(√|g| g^{dd} ∂_d u) for a diagonal metric, by nested
/// Richardson central differences at `step`.
pub fn beltrami_from_metric<U>(g_diag: &[Field], point: &[f64], t: f64, u: &U, step: f64) -> Result<f64>
where
    U: Fn(&[f64], f64) -> f64 + ?Sized,
{
    let n = point.len();
    if g_diag.len() != n || n > MAX_DIMS {
        return Err(Error::Arity {
            expected: g_diag.len(),
            got: n,
        });
    }
    let sqrt_det = |x: &[f64], t: f64| g_diag.iter().map(|g| g.eval(x, t)).product::<f64>().abs().sqrt();
    let vol = sqrt_det(point, t);
    if !(vol > 1e-300) || !vol.is_finite() {
        return Err(Error::SingularMetric { point: point.to_vec() });
    }
    let mut total = 0.0;
    for (d, g) in g_diag.iter().enumerate() {
        let flux = |x: &[f64], t: f64| sqrt_det(x, t) / g.eval(x, t) * partial(u, x, t, d, step, Stencil::Richardson);
        total += partial(&flux, point, t, d, step, Stencil::Richardson);
    }
    let v = total / vol;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::SingularMetric { point: point.to_vec() })
    }
}

/// Σ_d N_d M_d u (or Σ_d M_d N_d u) by nested differencing.
pub fn composed_laplacian<U>(sc: &Scenario, pairing: Pairing, u: &U, x: &[f64], t: f64, step: &[f64], stencil: Stencil) -> f64
where
    U: Fn(&[f64], f64) -> f64 + ?Sized,
{
    sc.dims
        .iter()
        .map(|d| {
            let (outer, inner) = match pairing {
                Pairing::NM => (&d.n, &d.m),
                Pairing::MN => (&d.m, &d.n),
            };
            let h = step[outer.axis];
            let inner_u = |y: &[f64], s: f64| inner.apply_raw(u, y, s, h, stencil);
            outer.apply_raw(&inner_u, x, t, h, stencil)
        })
        .sum()
}

/// max |Δ_g u - Σ_d (composed pair) u| over the samples, with the Laplace–
/// Beltrami side evaluated on u lifted to the metric coordinates.
pub fn metric_mismatch(sc: &Scenario, u: &Field, samples: &[Sample], step_frac: f64) -> Result<f64> {
    let m = sc
        .metric
        .as_ref()
        .ok_or_else(|| Error::UnsupportedCheck(format!("{} carries no metric", sc.id)))?;
    let steps: Vec<f64> = sc.bounds().iter().map(|b| step_frac * b.extent()).collect();
    let h = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let ndim = sc.ndim();
    let lifted = |y: &[f64], t: f64| {
        let mut x = vec![0.0; ndim];
        for (c, i) in m.coords.iter().enumerate() {
            if let Some(i) = i {
                x[*i] = y[c];
            }
        }
        u.eval(&x, t)
    };
    let uf = |x: &[f64], t: f64| u.eval(x, t);
    let mut worst = 0.0_f64;
    for s in samples {
        let lb = beltrami_from_metric(&m.g_diag, &m.embed(&s.x), s.t, &lifted, h)?;
        let comp = composed_laplacian(sc, m.pairing, &uf, &s.x, s.t, &steps, Stencil::Richardson);
        let dev = (lb - comp).abs();
        if !dev.is_finite() {
            return Err(Error::NonFinite {
                point: s.x.clone(),
                t: s.t,
            });
        }
        worst = worst.max(dev);
    }
    Ok(worst)
}
