//! Invariant-subspace reduction.
//!
//! On a scenario whose generators ω satisfy M ω ∈ {0, 1}, N M ω = 0 and
//! L ω = λ ω, the ansatz u = Σ_d Σ_l b_d^(l)(t) ω_d^(l)(x_d) turns the PDE
//! into the coefficient system
//!
//! ```text
//! O_t b = b · [Σ_d 2 A_d λ_d Σ_{unit l} b_d^(l) + Σ_d A_d]
//! ```

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Interval, TimeField};
use crate::frac::Clock;
use crate::operators::{apply_composed, Probe, Sample, TimeOp};
use crate::scenarios::{equal_split_a, mittag_coefficient, riccati_b, Eigenvalue, Form, GenTag, Scenario};

/// Maximum deviation per generator property.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct InvariantReport {
    /// |M ω - 1| (and |N ω - 1| in form (b)) over unit generators
    pub unit: f64,
    /// |M ω| over kernel generators
    pub kernel: f64,
    /// |N M ω|
    pub annihilated: f64,
    /// |L ω - λ ω|
    pub eigen: f64,
}

impl InvariantReport {
    pub fn max(&self) -> f64 {
        self.unit.max(self.kernel).max(self.annihilated).max(self.eigen)
    }
}

pub fn check_invariant_space(sc: &Scenario, samples: &[Sample], probe: &Probe) -> Result<InvariantReport> {
    let mut rep = InvariantReport::default();
    for d in &sc.dims {
        let h = probe.step(d.m.axis);
        for g in &d.generators {
            let w = |x: &[f64], t: f64| g.field.eval(x, t);
            for s in samples {
                let mw = probe.apply(&d.m, &w, s)?;
                match g.tag {
                    GenTag::Unit => {
                        rep.unit = rep.unit.max((mw - 1.0).abs());
                        if sc.form == Form::B {
                            let nw = probe.apply(&d.n, &w, s)?;
                            rep.unit = rep.unit.max((nw - 1.0).abs());
                        }
                    }
                    GenTag::Kernel => rep.kernel = rep.kernel.max(mw.abs()),
                }
                let nm = apply_composed(&d.n, &d.m, &w, &s.x, s.t, h, probe.stencil, &probe.bounds)?;
                rep.annihilated = rep.annihilated.max(nm.abs());
                if let Some(lam) = &d.lambda {
                    let v = g.field.eval(&s.x, s.t);
                    rep.eigen = rep.eigen.max((d.l.apply(v, &s.x, s.t) - lam.eval(s.t) * v).abs());
                }
            }
        }
    }
    Ok(rep)
}

type RhsFn = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffLabel {
    pub dim: usize,
    pub label: String,
    pub unit: bool,
}

#[derive(Clone)]
enum Rhs {
    Bracket { a: Vec<TimeField>, lambda: Vec<Eigenvalue> },
    Custom(Arc<RhsFn>),
}

/// O_t b = rhs(t, b), one unknown per generator.
#[derive(Clone)]
pub struct CoeffSystem {
    pub unknowns: Vec<CoeffLabel>,
    pub time_op: TimeOp,
    rhs: Rhs,
}

impl std::fmt::Debug for CoeffSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoeffSystem")
            .field("unknowns", &self.unknowns)
            .field("time_op", &self.time_op.kind())
            .finish()
    }
}

impl CoeffSystem {
    /// A system with an arbitrary right-hand side.
    pub fn from_fn<F>(unknowns: Vec<CoeffLabel>, time_op: TimeOp, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        CoeffSystem {
            unknowns,
            time_op,
            rhs: Rhs::Custom(Arc::new(f)),
        }
    }

    pub fn len(&self) -> usize {
        self.unknowns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty()
    }

    /// Σ_d 2 A_d λ_d Σ_unit b_d + Σ_d A_d; `None` for custom systems.
    pub fn bracket(&self, t: f64, b: &[f64]) -> Option<f64> {
        match &self.rhs {
            Rhs::Bracket { a, lambda } => {
                let mut unit_sums = vec![0.0; a.len()];
                for (lab, v) in self.unknowns.iter().zip(b) {
                    if lab.unit {
                        unit_sums[lab.dim] += v;
                    }
                }
                let mut s = 0.0;
                for d in 0..a.len() {
                    let ad = a[d].eval(t);
                    s += 2.0 * ad * lambda[d].eval(t) * unit_sums[d] + ad;
                }
                Some(s)
            }
            Rhs::Custom(_) => None,
        }
    }

    pub fn rhs(&self, t: f64, b: &[f64]) -> Vec<f64> {
        match &self.rhs {
            Rhs::Bracket { .. } => {
                let k = self.bracket(t, b).expect("bracket system");
                b.iter().map(|v| v * k).collect()
            }
            Rhs::Custom(f) => f(t, b),
        }
    }

    /// Largest spread of rhs_i / b_i across unknowns at the given states,
    /// which is zero when every equation shares the bracket factor.
    pub fn factor_spread(&self, states: &[(f64, Vec<f64>)]) -> f64 {
        let mut worst = 0.0_f64;
        for (t, b) in states {
            let r = self.rhs(*t, b);
            let ratios: Vec<f64> = r.iter().zip(b).filter(|(_, v)| v.abs() > 1e-12).map(|(r, v)| r / v).collect();
            if let (Some(lo), Some(hi)) = (ratios.iter().copied().reduce(f64::min), ratios.iter().copied().reduce(f64::max)) {
                worst = worst.max(hi - lo);
            }
        }
        worst
    }
}

pub fn build_coeff_system(sc: &Scenario) -> Result<CoeffSystem> {
    if sc.generator_count() == 0 {
        return Err(Error::Parameter(format!("scenario {} has no invariant generators", sc.id)));
    }
    let mut unknowns = Vec::new();
    let mut lambda = Vec::new();
    for (i, d) in sc.dims.iter().enumerate() {
        let lam = d
            .lambda
            .clone()
            .ok_or_else(|| Error::Parameter(format!("dimension {} of {} has no eigenvalue", d.axis.name, sc.id)))?;
        lambda.push(lam);
        for g in &d.generators {
            unknowns.push(CoeffLabel {
                dim: i,
                label: format!("b_{}[{}]", d.axis.name, g.label),
                unit: g.tag == GenTag::Unit,
            });
        }
    }
    Ok(CoeffSystem {
        unknowns,
        time_op: sc.time_op.clone(),
        rhs: Rhs::Bracket {
            a: sc.dims.iter().map(|d| d.a.clone()).collect(),
            lambda,
        },
    })
}

/// Equal-split coefficients A_d(t) for a constant target of the bracket.
#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    pub target: f64,
    pub a: Vec<TimeField>,
    /// Largest |bracket - target| over the certification samples.
    pub max_dev: f64,
}

fn scenario_clock(sc: &Scenario) -> (f64, Clock) {
    match &sc.time_op {
        TimeOp::Classical => (1.0, Clock::Identity),
        TimeOp::Fractional(p) => (p.beta, p.clock.clone()),
    }
}

/// A_d(t) = target / (m [1 + 2 λ_d k_d E_β(target f^β)]) with k_d the number
/// of unit generators of dimension d, so that the bracket evaluated at
/// b ≡ E_β equals `target`.
pub fn solve_constraint(sc: &Scenario, target: f64) -> Result<ConstraintSpec> {
    let m = sc.ndim();
    let (beta, clock) = scenario_clock(sc);
    let e = mittag_coefficient(beta, target, clock)?;
    let mut a = Vec::with_capacity(m);
    for d in &sc.dims {
        let lam = match &d.lambda {
            Some(Eigenvalue::Constant(c)) => *c,
            Some(Eigenvalue::Varying(_)) => {
                return Err(Error::UnsupportedConstraint(format!(
                    "eigenvalue of L on {} varies in time",
                    d.axis.name
                )))
            }
            None => {
                return Err(Error::UnsupportedConstraint(format!(
                    "L has no eigenvalue on the {} generators",
                    d.axis.name
                )))
            }
        };
        let units = d.generators.iter().filter(|g| g.tag == GenTag::Unit).count() as f64;
        a.push(equal_split_a(m, lam * units, &e, target));
    }
    // certify on 20 times
    let mut sys = build_coeff_system(sc)?;
    sys.rhs = Rhs::Bracket {
        a: a.clone(),
        lambda: sc.dims.iter().map(|d| d.lambda.clone().expect("checked above")).collect(),
    };
    let mut max_dev = 0.0_f64;
    for t in sc.time.interval.nodes(20) {
        let ev = e.eval(t);
        let b = vec![ev; sys.len()];
        let k = sys.bracket(t, &b).expect("bracket system");
        max_dev = max_dev.max((k - target).abs());
    }
    if !(max_dev <= 1e-9 * target.abs().max(1.0)) {
        return Err(Error::Parameter(format!("constraint identity off by {max_dev:e}")));
    }
    Ok(ConstraintSpec { target, a, max_dev })
}

#[derive(Debug, Clone)]
pub enum ClosedForm {
    /// b(t) = E_β(C f(t)^β)
    Mittag { beta: f64, clock: Clock, c: f64 },
    /// b(t) = c (t - t0) / (1 - 2c (t - t0)), checked for poles on `interval`
    Riccati { c: f64, t0: f64, interval: Interval },
}

pub fn coeff_closed_form(kind: &ClosedForm) -> Result<TimeField> {
    match kind {
        ClosedForm::Mittag { beta, clock, c } => mittag_coefficient(*beta, *c, clock.clone()),
        ClosedForm::Riccati { c, t0, interval } => {
            if *c != 0.0 {
                let pole = t0 + 0.5 / c;
                if interval.contains(pole) {
                    return Err(Error::Pole { at: pole });
                }
            }
            Ok(riccati_b(*c, *t0))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Rows `t, b0, b1, ...` with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Parameter(format!("csv output failed: {e}"));
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        out.write_record(&header).map_err(io)?;
        for (t, v) in self.times.iter().zip(&self.values) {
            let mut row = vec![crate::report::g12(*t)];
            row.extend(v.iter().map(|x| crate::report::g12(*x)));
            out.write_record(&row).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Parameter(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// Classic RK4 on [t1, t_end] with `steps` uniform steps.
pub fn integrate_coeff_system(sys: &CoeffSystem, init: &[f64], t1: f64, t_end: f64, steps: usize) -> Result<Trajectory> {
    if !sys.time_op.is_classical() {
        return Err(Error::UnsupportedCheck(
            "fractional coefficient systems have no step-local form".into(),
        ));
    }
    if steps < 100 {
        return Err(Error::Parameter(format!("need at least 100 steps, got {steps}")));
    }
    if init.len() != sys.len() {
        return Err(Error::Arity {
            expected: sys.len(),
            got: init.len(),
        });
    }
    let h = (t_end - t1) / steps as f64;
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut y = init.to_vec();
    let mut times = vec![t1];
    let mut values = vec![y.clone()];
    for i in 0..steps {
        let t = t1 + h * i as f64;
        let k1 = sys.rhs(t, &y);
        let k2 = sys.rhs(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = sys.rhs(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = sys.rhs(t + h, &axpy(&y, &k3, h));
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let tn = t1 + h * (i + 1) as f64;
        if y.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
            return Err(Error::BlowUp { t: tn });
        }
        times.push(tn);
        values.push(y.clone());
    }
    Ok(Trajectory {
        labels: sys.unknowns.iter().map(|u| u.label.clone()).collect(),
        times,
        values,
    })
}

/// u = Σ_d Σ_l b_d^(l)(t) ω_d^(l)(x), coefficients in generator order.
pub fn assemble_solution(sc: &Scenario, coeffs: &[TimeField]) -> Result<Field> {
    let gens: Vec<Field> = sc.dims.iter().flat_map(|d| d.generators.iter().map(|g| g.field.clone())).collect();
    if coeffs.len() != gens.len() {
        return Err(Error::Arity {
            expected: gens.len(),
            got: coeffs.len(),
        });
    }
    let coeffs = coeffs.to_vec();
    Ok(Field::new(move |x, t| {
        gens.iter().zip(&coeffs).map(|(g, b)| b.eval(t) * g.eval(x, t)).sum()
    }))
}

/// The equal-coefficient choice: the Riccati coefficient for classical
/// scenarios and E_β(C f^β) for fractional ones, repeated per generator.
pub fn default_coefficients(sc: &Scenario) -> Result<Vec<TimeField>> {
    let p = &sc.params;
    let b = match &sc.time_op {
        TimeOp::Classical => coeff_closed_form(&ClosedForm::Riccati {
            c: p.c,
            t0: p.t0,
            interval: sc.time.interval,
        })?,
        TimeOp::Fractional(f) => coeff_closed_form(&ClosedForm::Mittag {
            beta: f.beta,
            clock: f.clock.clone(),
            c: p.target,
        })?,
    };
    Ok(vec![b; sc.generator_count()])
}
