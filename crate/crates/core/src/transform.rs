//! Exponential (Cole–Hopf-type) transform between the nonlinear equation
//! and its linear companion O_t ψ = M N ψ.
//!
//! Forward: u = (1/A) N ln ψ. Backward: ψ = exp(A N⁻¹u + κ(t)), where
//! N⁻¹u = ∫_{x0}^x u/a.
//!
//! A constant κ makes ψ solve the companion equation only up to a factor
//! depending on t. The heat gauge removes it: evaluating the companion
//! equation at the anchor, where N⁻¹u vanishes, gives
//!
//! ```text
//! κ'(t) = A [(M u)(x0) + A u(x0) (L u)(x0)],   κ(t1) = 0.
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Interval, TimeField};
use crate::operators::{inverse_spatial, LinearMult, Sample, SpatialOp, Stencil};
use crate::quad::adaptive_gk;
use crate::scenarios::Scenario;

/// Below this |ψ| the logarithm is not evaluated.
pub const PSI_GUARD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum Gauge {
    /// κ ≡ 0
    Anchor,
    /// κ from the anchor ODE, starting at `t1`.
    Heat { m: SpatialOp, l: LinearMult, t1: f64 },
}

#[derive(Debug, Clone)]
pub struct TransformContext {
    pub n: SpatialOp,
    pub a: TimeField,
    pub x0: f64,
    pub nodes: usize,
    pub bounds: Vec<Interval>,
    /// Differencing step along N's axis.
    pub step: f64,
    pub gauge: Gauge,
}

impl TransformContext {
    /// Context for the first dimension of a scenario: anchor at the left
    /// end of the domain, heat gauge started at the beginning of the time
    /// interval.
    pub fn for_scenario(sc: &Scenario) -> Result<Self> {
        let d = sc
            .dims
            .first()
            .ok_or_else(|| Error::Parameter("scenario has no dimensions".into()))?;
        let iv = d.axis.interval;
        let ctx = TransformContext {
            n: d.n.clone(),
            a: d.a.clone(),
            x0: iv.lo,
            nodes: 256,
            bounds: sc.bounds(),
            step: 1e-4 * iv.extent(),
            gauge: Gauge::Heat {
                m: d.m.clone(),
                l: d.l.clone(),
                t1: sc.time.interval.lo,
            },
        };
        ctx.validate(sc)?;
        Ok(ctx)
    }

    pub fn with_anchor(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_gauge(mut self, gauge: Gauge) -> Self {
        self.gauge = gauge;
        self
    }

    /// A nonzero on the time interval and N's coefficient nonzero on the
    /// domain, both sampled on 64 nodes.
    pub fn validate(&self, sc: &Scenario) -> Result<()> {
        for t in sc.time.interval.nodes(64) {
            let a = self.a.eval(t);
            if !a.is_finite() || a == 0.0 {
                return Err(Error::Domain {
                    what: "A vanishes or is singular",
                    value: t,
                });
            }
        }
        let mut probe: Vec<f64> = self.bounds.iter().map(|b| 0.5 * (b.lo + b.hi)).collect();
        let iv = self.bounds[self.n.axis];
        let mut sign = 0.0;
        for x in iv.nodes(64) {
            probe[self.n.axis] = x;
            let c = self.n.coeff.eval(&probe, sc.time.interval.lo);
            if !c.is_finite() || c == 0.0 || (sign != 0.0 && c.signum() != sign) {
                return Err(Error::SingularPath { at: x });
            }
            sign = c.signum();
        }
        Ok(())
    }

    fn gauge_rate(&self, u: &Field, x: &[f64], t: f64) -> f64 {
        match &self.gauge {
            Gauge::Anchor => 0.0,
            Gauge::Heat { m, l, .. } => {
                let mut p = x.to_vec();
                p[self.n.axis] = self.x0;
                let uf = |y: &[f64], s: f64| u.eval(y, s);
                let mu = m.apply_raw(&uf, &p, t, self.step, Stencil::Richardson);
                let u0 = u.eval(&p, t);
                let a = self.a.eval(t);
                a * (mu + a * u0 * l.apply(u0, &p, t))
            }
        }
    }

    /// κ(t) for the configured gauge.
    pub fn kappa(&self, u: &Field, x: &[f64], t: f64) -> Result<f64> {
        match &self.gauge {
            Gauge::Anchor => Ok(0.0),
            Gauge::Heat { t1, .. } => {
                if t == *t1 {
                    return Ok(0.0);
                }
                let r = adaptive_gk(|s| self.gauge_rate(u, x, s), *t1, t, 1e-14, 1e-12, 500)?;
                Ok(r.value)
            }
        }
    }
}

/// u = (1/A(t)) N(ln ψ) at `point`.
pub fn forward(ctx: &TransformContext, psi: &Field, point: &[f64], t: f64) -> Result<f64> {
    let v = psi.eval(point, t);
    if !(v.abs() >= PSI_GUARD) || v < 0.0 {
        return Err(Error::LogDomain {
            point: point.to_vec(),
            t,
            value: v,
        });
    }
    let ln_psi = |x: &[f64], s: f64| psi.eval(x, s).ln();
    let d = ctx.n.apply(&ln_psi, point, t, ctx.step, Stencil::Richardson, &ctx.bounds)?;
    Ok(d / ctx.a.eval(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Backward {
    pub psi: f64,
    /// Integration constant in ψ = exp(A (N⁻¹u + c1)).
    pub c1: f64,
}

/// ψ = exp(A(t) N⁻¹u + κ(t)) at `point`.
pub fn backward(ctx: &TransformContext, u: &Field, point: &[f64], t: f64) -> Result<Backward> {
    let uf = |x: &[f64], s: f64| u.eval(x, s);
    let integral = inverse_spatial(&ctx.n, &uf, ctx.x0, point, t, ctx.nodes)?;
    let a = ctx.a.eval(t);
    let kappa = ctx.kappa(u, point, t)?;
    let psi = (a * integral + kappa).exp();
    if !psi.is_finite() {
        return Err(Error::NonFinite { point: point.to_vec(), t });
    }
    Ok(Backward { psi, c1: kappa / a })
}

/// The backward transform as a field. Errors evaluate to NaN.
pub fn backward_field(ctx: &TransformContext, u: &Field) -> Field {
    let (ctx, u) = (ctx.clone(), u.clone());
    Field::new(move |x, t| backward(&ctx, &u, x, t).map(|b| b.psi).unwrap_or(f64::NAN))
}

/// max |forward(backward(u)) - u| over the samples.
pub fn roundtrip_check(ctx: &TransformContext, u: &Field, samples: &[Sample]) -> Result<f64> {
    // κ depends on t only and is annihilated by N, so the anchor gauge suffices
    let anchor = ctx.clone().with_gauge(Gauge::Anchor);
    let psi = backward_field(&anchor, u);
    let mut worst = 0.0_f64;
    for s in samples {
        let back = forward(&anchor, &psi, &s.x, s.t)?;
        worst = worst.max((back - u.eval(&s.x, s.t)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::find;
    use approx::assert_relative_eq;

    fn euclid() -> (Scenario, TransformContext) {
        let sc = find("euclid-classic").unwrap();
        let ctx = TransformContext::for_scenario(&sc).unwrap();
        (sc, ctx)
    }

    #[test]
    fn forward_of_second_heat_polynomial() {
        let (_, ctx) = euclid();
        let h2 = Field::new(|x, t| x[0] * x[0] + 2.0 * t);
        let u = forward(&ctx, &h2, &[0.5], 1.0).unwrap();
        // (t - t0) 2x / (x² + 2t)
        assert_relative_eq!(u, 2.0 * 1.0 / 2.25, max_relative = 1e-9);
        let big = TransformContext {
            bounds: vec![Interval::new(-2.0, 2.0)],
            ..ctx.clone()
        };
        assert_relative_eq!(forward(&big, &h2, &[1.0], 1.0).unwrap(), 4.0 / 3.0, max_relative = 1e-9);
        assert_eq!(forward(&ctx, &Field::constant(3.0), &[0.2], 1.0).unwrap(), 0.0);
        let h3 = Field::new(|x, t| x[0].powi(3) + 6.0 * t * x[0]);
        assert!(matches!(forward(&ctx, &h3, &[0.0], 1.0), Err(Error::LogDomain { .. })));
    }

    #[test]
    fn forward_ignores_constant_factors() {
        let (_, ctx) = euclid();
        let psi = Field::new(|x, t| (x[0] * x[0] + 2.0 * t) * (0.3 * x[0]).exp());
        let scaled = psi.scale(17.0);
        let a = forward(&ctx, &psi, &[0.4], 0.8).unwrap();
        let b = forward(&ctx, &scaled, &[0.4], 0.8).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn backward_of_zero_and_of_the_riccati_solution() {
        let (sc, ctx) = euclid();
        let zero = Field::constant(0.0);
        assert_eq!(backward(&ctx, &zero, &[0.3], 1.0).unwrap().psi, 1.0);
        // anchor x0 = 0: ψ = exp(A b (x²/2 + x))
        let anchored = ctx.clone().with_anchor(0.0).with_gauge(Gauge::Anchor);
        let u = &sc.solution("riccati").unwrap().field;
        let (x, t): (f64, f64) = (0.6, 1.2);
        let b = 0.1 * (t + 1.0) / (1.0 - 0.2 * (t + 1.0));
        let expected = (b / (t + 1.0) * (0.5 * x * x + x)).exp();
        let got = backward(&anchored, u, &[x], t).unwrap();
        assert_relative_eq!(got.psi, expected, max_relative = 1e-10);
        assert_eq!(got.c1, 0.0);
    }

    #[test]
    fn heat_gauge_matches_the_closed_form_companion() {
        for id in ["euclid-classic", "hyp-sinh"] {
            let sc = find(id).unwrap();
            let sol = sc.solution("riccati").unwrap();
            let ctx = TransformContext {
                nodes: 1024,
                ..TransformContext::for_scenario(&sc).unwrap()
            };
            let psi = backward_field(&ctx, &sol.field);
            let closed = sol.companion.as_ref().unwrap();
            // equal up to a constant factor
            let x0 = [sc.bounds()[0].lo + 0.3];
            let k = closed.eval(&x0, 0.5) / psi.eval(&x0, 0.5);
            for (x, t) in [(0.1, 0.5), (0.5, 1.5), (0.9, 1.9)] {
                let p = [sc.bounds()[0].lo + x * sc.bounds()[0].extent()];
                assert_relative_eq!(k * psi.eval(&p, t), closed.eval(&p, t), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn roundtrip_on_riccati_solutions() {
        for id in ["euclid-classic", "hyp-sinh"] {
            let sc = find(id).unwrap();
            let ctx = TransformContext::for_scenario(&sc).unwrap();
            let samples = crate::sampling::interior_samples(&sc.bounds(), sc.time.interval, 50, 0.05, 3);
            let u = &sc.solution("riccati").unwrap().field;
            assert!(roundtrip_check(&ctx, u, &samples).unwrap() < 1e-5);
            assert_eq!(roundtrip_check(&ctx, &Field::constant(0.0), &samples).unwrap(), 0.0);
        }
    }
}
