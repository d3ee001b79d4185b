//! Grid residuals of a scenario's PDE for a candidate solution, with a
//! per-term breakdown and convergence sweeps.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Interval};
use crate::frac::caputo_f;
use crate::operators::{time_partial, Stencil, TimeOp};
use crate::report::{g12, ser_g12, ser_g12_map};
use crate::scenarios::{Form, Scenario, Solution};

/// Largest tolerated share of excluded grid points.
pub const MAX_EXCLUDED: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    /// Nodes per spatial axis.
    pub counts: Vec<usize>,
    /// Node intervals per axis, already shrunk by the margin.
    pub intervals: Vec<Interval>,
    pub time_nodes: usize,
    pub time_interval: Interval,
    /// Cells for fractional time derivatives.
    pub frac_nodes: usize,
    /// Differencing step as a fraction of each full axis extent.
    pub step_frac: f64,
    pub stencil: Stencil,
    pub margin: f64,
    /// Full extents used to turn `step_frac` into steps.
    pub extents: Vec<f64>,
    pub time_extent: f64,
}

impl GridSpec {
    /// `n` nodes per spatial axis and `nt` time nodes on the scenario box
    /// shrunk by a 5% margin.
    pub fn for_scenario(sc: &Scenario, n: usize, nt: usize) -> Self {
        let margin = 0.05;
        GridSpec {
            counts: vec![n; sc.ndim()],
            intervals: sc.bounds().iter().map(|b| b.shrink(margin)).collect(),
            time_nodes: nt,
            time_interval: sc.time.interval.shrink(margin),
            frac_nodes: 2048,
            step_frac: 1e-3,
            stencil: Stencil::Richardson,
            margin,
            extents: sc.bounds().iter().map(|b| b.extent()).collect(),
            time_extent: sc.time.interval.extent(),
        }
    }

    /// Like [`GridSpec::for_scenario`], restricted to the solution's region
    /// when it has one.
    pub fn for_solution(sc: &Scenario, sol: &Solution, n: usize, nt: usize) -> Self {
        let mut g = Self::for_scenario(sc, n, nt);
        if let Some(r) = &sol.region {
            g.intervals = r.clone();
        }
        g
    }

    pub fn with_interval(mut self, axis: usize, iv: Interval) -> Self {
        self.intervals[axis] = iv;
        self
    }

    pub fn with_counts(mut self, counts: Vec<usize>) -> Self {
        self.counts = counts;
        self
    }

    pub fn with_step(mut self, step_frac: f64, stencil: Stencil) -> Self {
        self.step_frac = step_frac;
        self.stencil = stencil;
        self
    }

    pub fn with_frac_nodes(mut self, nodes: usize) -> Self {
        self.frac_nodes = nodes;
        self
    }

    pub fn step(&self, axis: usize) -> f64 {
        self.step_frac * self.extents[axis]
    }

    pub fn time_step(&self) -> f64 {
        self.step_frac * self.time_extent
    }

    pub fn validate(&self, sc: &Scenario) -> Result<()> {
        if self.counts.len() != sc.ndim() || self.intervals.len() != sc.ndim() {
            return Err(Error::Arity {
                expected: sc.ndim(),
                got: self.counts.len(),
            });
        }
        if self.counts.iter().any(|&c| c < 4) || self.time_nodes < 4 {
            return Err(Error::Parameter("grid needs at least 4 nodes per axis".into()));
        }
        // nested stencils reach two steps
        for (d, (iv, full)) in self.intervals.iter().zip(sc.bounds()).enumerate() {
            let reach = 2.0 * self.step(d);
            if iv.lo - reach < full.lo || iv.hi + reach > full.hi {
                return Err(Error::Stencil {
                    point: vec![iv.lo, iv.hi],
                    axis: d,
                });
            }
        }
        if sc.is_classical() {
            let full = sc.time.interval;
            let h = self.time_step();
            if self.time_interval.lo - h < full.lo || self.time_interval.hi + h > full.hi {
                return Err(Error::Stencil {
                    point: vec![self.time_interval.lo, self.time_interval.hi],
                    axis: sc.ndim(),
                });
            }
        }
        Ok(())
    }

    fn points(&self) -> Vec<(Vec<f64>, f64)> {
        let axes: Vec<Vec<f64>> = self.intervals.iter().zip(&self.counts).map(|(iv, &n)| iv.nodes(n)).collect();
        let times = self.time_interval.nodes(self.time_nodes);
        let mut out = Vec::new();
        let mut idx = vec![0usize; axes.len()];
        loop {
            let x: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| axes[d][i]).collect();
            for &t in &times {
                out.push((x.clone(), t));
            }
            // odometer increment
            let mut d = 0;
            loop {
                if d == axes.len() {
                    return out;
                }
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    pub fn total_points(&self) -> usize {
        self.counts.iter().product::<usize>() * self.time_nodes
    }
}

/// Signed terms of the residual at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    pub t: f64,
    pub u: f64,
    pub time: f64,
    /// A_d X_d(u L_d u) per dimension
    pub nonlinear: Vec<f64>,
    pub diffusion: f64,
    pub source: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    #[serde(serialize_with = "ser_g12")]
    pub max_abs: f64,
    /// Root mean square over the evaluated points.
    #[serde(serialize_with = "ser_g12")]
    pub l2: f64,
    #[serde(serialize_with = "ser_g12_map")]
    pub per_term: BTreeMap<String, f64>,
    /// max(1, max |u|), for quoting relative residuals.
    #[serde(serialize_with = "ser_g12")]
    pub normalization: f64,
    pub excluded: usize,
    pub total: usize,
    pub grid: GridSpec,
}

fn eval_point(sc: &Scenario, u: &Field, grid: &GridSpec, x: &[f64], t: f64) -> Result<PointRecord> {
    let uf = |y: &[f64], s: f64| u.eval(y, s);
    let st = grid.stencil;
    let time = match &sc.time_op {
        TimeOp::Classical => time_partial(&uf, x, t, grid.time_step(), st),
        TimeOp::Fractional(p) => caputo_f(p, |s| u.eval(x, s), t, grid.frac_nodes)?,
    };
    let mut nonlinear = Vec::with_capacity(sc.ndim());
    let mut diffusion = 0.0;
    let mut sum_a = 0.0;
    for d in &sc.dims {
        let a = d.a.eval(t);
        sum_a += a;
        let xop = match sc.form {
            Form::A => &d.m,
            Form::B => &d.n,
        };
        let h = grid.step(xop.axis);
        let v = |y: &[f64], s: f64| {
            let w = u.eval(y, s);
            w * d.l.apply(w, y, s)
        };
        nonlinear.push(a * xop.apply_raw(&v, x, t, h, st));
        let h = grid.step(d.n.axis);
        let inner = |y: &[f64], s: f64| d.m.apply_raw(&uf, y, s, h, st);
        diffusion += d.n.apply_raw(&inner, x, t, h, st);
    }
    let value = u.eval(x, t);
    let source = sum_a * value;
    let residual = time - nonlinear.iter().sum::<f64>() - diffusion - source;
    if !residual.is_finite() || !value.is_finite() {
        return Err(Error::NonFinite { point: x.to_vec(), t });
    }
    Ok(PointRecord {
        x: x.to_vec(),
        t,
        u: value,
        time,
        nonlinear,
        diffusion,
        source,
        residual,
    })
}

/// Residual report together with the per-point records.
pub fn evaluate_detailed(sc: &Scenario, u: &Field, grid: &GridSpec) -> Result<(ResidualReport, Vec<PointRecord>)> {
    grid.validate(sc)?;
    let pts = grid.points();
    let results: Vec<Result<PointRecord>> = pts.par_iter().map(|(x, t)| eval_point(sc, u, grid, x, *t)).collect();
    let total = results.len();
    let mut records = Vec::with_capacity(total);
    // stencil, log-domain and quadrature failures exclude the point
    records.extend(results.into_iter().flatten());
    let excluded = total - records.len();
    if excluded as f64 > MAX_EXCLUDED * total as f64 || records.is_empty() {
        return Err(Error::Exclusions { excluded, total });
    }

    let mut per_term: BTreeMap<String, f64> = BTreeMap::new();
    let mut bump = |k: String, v: f64| {
        let e = per_term.entry(k).or_insert(0.0);
        *e = e.max(v.abs());
    };
    let (mut max_abs, mut sq, mut max_u) = (0.0_f64, 0.0, 0.0_f64);
    for r in &records {
        max_abs = max_abs.max(r.residual.abs());
        sq += r.residual * r.residual;
        max_u = max_u.max(r.u.abs());
        bump("time".into(), r.time);
        for (d, v) in sc.dims.iter().zip(&r.nonlinear) {
            bump(format!("nonlinear[{}]", d.axis.name), *v);
        }
        bump("diffusion".into(), r.diffusion);
        bump("source".into(), r.source);
    }
    let report = ResidualReport {
        max_abs,
        l2: (sq / records.len() as f64).sqrt(),
        per_term,
        normalization: max_u.max(1.0),
        excluded,
        total,
        grid: grid.clone(),
    };
    Ok((report, records))
}

pub fn evaluate(sc: &Scenario, u: &Field, grid: &GridSpec) -> Result<ResidualReport> {
    evaluate_detailed(sc, u, grid).map(|(r, _)| r)
}

/// Per-point CSV dump: coordinates, t, u, every term and the residual.
pub fn write_points_csv<W: Write>(sc: &Scenario, records: &[PointRecord], w: W) -> Result<()> {
    let io = |e: csv::Error| Error::Parameter(format!("csv output failed: {e}"));
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = sc.dims.iter().map(|d| d.axis.name.clone()).collect();
    header.extend([sc.time.name.clone(), "u".into(), "time".into()]);
    header.extend(sc.dims.iter().map(|d| format!("nonlinear[{}]", d.axis.name)));
    header.extend(["diffusion".into(), "source".into(), "residual".into()]);
    out.write_record(&header).map_err(io)?;
    for r in records {
        let mut row: Vec<String> = r.x.iter().map(|v| g12(*v)).collect();
        row.extend([g12(r.t), g12(r.u), g12(r.time)]);
        row.extend(r.nonlinear.iter().map(|v| g12(*v)));
        row.extend([g12(r.diffusion), g12(r.source), g12(r.residual)]);
        out.write_record(&row).map_err(io)?;
    }
    out.flush().map_err(|e| Error::Parameter(format!("csv output failed: {e}")))?;
    Ok(())
}

/// u + eps x₀², the deliberately wrong control.
pub fn perturb(u: &Field, eps: f64) -> Field {
    let u = u.clone();
    Field::new(move |x, t| u.eval(x, t) + eps * x[0] * x[0])
}

/// What a sweep refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Refine {
    /// Halve the differencing step (second-order central stencils), points fixed.
    Step,
    /// Double the fractional cells, spatial step held fixed.
    FracNodes,
}

impl Refine {
    pub fn for_scenario(sc: &Scenario) -> Self {
        if sc.is_classical() {
            Refine::Step
        } else {
            Refine::FracNodes
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSample {
    #[serde(serialize_with = "ser_g12")]
    pub h: f64,
    #[serde(serialize_with = "ser_g12")]
    pub max_abs: f64,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub refine: Refine,
    pub samples: Vec<SweepSample>,
    /// Least-squares slope of ln max_abs against ln h.
    #[serde(serialize_with = "ser_g12")]
    pub order: f64,
}

impl Sweep {
    /// Each level is at most `1 + slack` times the previous one.
    pub fn decreasing(&self, slack: f64) -> bool {
        self.samples.windows(2).all(|w| w[1].max_abs <= (1.0 + slack) * w[0].max_abs)
    }
}

/// Least-squares slope of y against x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Evaluates `levels` successive refinements of `base` and fits the order.
///
/// Step sweeps start from `base.step_frac` with central stencils; node
/// sweeps start from `base.frac_nodes` and use h = 1/nodes.
pub fn convergence_sweep(sc: &Scenario, u: &Field, base: &GridSpec, levels: usize, refine: Refine) -> Result<Sweep> {
    if levels < 3 {
        return Err(Error::Parameter(format!("a sweep needs at least 3 levels, got {levels}")));
    }
    let mut samples = Vec::with_capacity(levels);
    for k in 0..levels {
        let scale = (1u64 << k) as f64;
        let (grid, h) = match refine {
            Refine::Step => {
                let g = base.clone().with_step(base.step_frac / scale, Stencil::Central);
                let h = g.step_frac;
                (g, h)
            }
            Refine::FracNodes => {
                let nodes = base.frac_nodes << k;
                (base.clone().with_frac_nodes(nodes), 1.0 / nodes as f64)
            }
        };
        let rep = evaluate(sc, u, &grid)?;
        samples.push(SweepSample {
            h,
            max_abs: rep.max_abs,
            excluded: rep.excluded,
        });
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.h.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.max_abs.max(1e-300).ln()).collect();
    Ok(Sweep {
        refine,
        order: fit_slope(&xs, &ys),
        samples,
    })
}
