//! First-order spatial operators a(x)∂ₓ, multiplication operators, time
//! operators, and numerical checks of the structural hypotheses the
//! Cole–Hopf bridge and the invariant-subspace reduction rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Interval, TimeField};
use crate::frac::{caputo_f, FracParams};
use crate::quad::simpson;

/// Largest supported number of spatial coordinates.
pub const MAX_DIMS: usize = 8;

/// Finite-difference rule for first derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// Second-order central difference at step h.
    Central,
    /// Central differences at h and h/2 combined to fourth order.
    #[default]
    Richardson,
}

impl Stencil {
    fn combine<F: Fn(f64) -> f64>(self, f: F, h: f64) -> f64 {
        let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
        match self {
            Stencil::Central => d(h),
            Stencil::Richardson => (4.0 * d(0.5 * h) - d(h)) / 3.0,
        }
    }
}

/// Derivative of `u` along `axis` at `(x, t)`, without bounds checks.
pub fn partial<U>(u: &U, x: &[f64], t: f64, axis: usize, h: f64, stencil: Stencil) -> f64
where
    U: Fn(&[f64], f64) -> f64 + ?Sized,
{
    let n = x.len();
    let mut buf = [0.0; MAX_DIMS];
    buf[..n].copy_from_slice(x);
    let x0 = x[axis];
    stencil.combine(
        |dh| {
            let mut p = buf;
            p[axis] = x0 + dh;
            u(&p[..n], t)
        },
        h,
    )
}

/// Derivative of `u` in time at `(x, t)`, without bounds checks.
pub fn time_partial<U>(u: &U, x: &[f64], t: f64, h: f64, stencil: Stencil) -> f64
where
    U: Fn(&[f64], f64) -> f64 + ?Sized,
{
    stencil.combine(|dh| u(x, t + dh), h)
}

/// The operator a(x, t) ∂ along one coordinate.
///
/// `zeroth` adds a multiplicative term; it exists only to build operators
/// that deliberately violate the derivation property.
#[derive(Debug, Clone)]
pub struct SpatialOp {
    pub coeff: Field,
    pub axis: usize,
    pub label: String,
    pub zeroth: Option<Field>,
}

impl SpatialOp {
    pub fn new(axis: usize, label: &str, coeff: Field) -> Self {
        SpatialOp {
            coeff,
            axis,
            label: label.to_string(),
            zeroth: None,
        }
    }

    /// Plain ∂ along `axis`.
    pub fn partial(axis: usize, label: &str) -> Self {
        SpatialOp::new(axis, label, Field::constant(1.0))
    }

    pub fn with_zeroth_order(mut self, c: Field) -> Self {
        self.zeroth = Some(c);
        self
    }

    /// Applies the operator without bounds or finiteness checks.
    pub fn apply_raw<U>(&self, u: &U, x: &[f64], t: f64, h: f64, stencil: Stencil) -> f64
    where
        U: Fn(&[f64], f64) -> f64 + ?Sized,
    {
        let d = partial(u, x, t, self.axis, h, stencil);
        let mut v = self.coeff.eval(x, t) * d;
        if let Some(z) = &self.zeroth {
            v += z.eval(x, t) * u(x, t);
        }
        v
    }

    pub fn apply<U>(&self, u: &U, x: &[f64], t: f64, h: f64, stencil: Stencil, bounds: &[Interval]) -> Result<f64>
    where
        U: Fn(&[f64], f64) -> f64 + ?Sized,
    {
        check_reach(x, self.axis, h, bounds)?;
        finite(self.apply_raw(u, x, t, h, stencil), x, t)
    }
}

fn check_reach(x: &[f64], axis: usize, reach: f64, bounds: &[Interval]) -> Result<()> {
    if let Some(iv) = bounds.get(axis) {
        let slack = 1e-12 * iv.extent().abs().max(1.0);
        if x[axis] - reach < iv.lo - slack || x[axis] + reach > iv.hi + slack {
            return Err(Error::Stencil { point: x.to_vec(), axis });
        }
    }
    Ok(())
}

fn finite(v: f64, x: &[f64], t: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { point: x.to_vec(), t })
    }
}

/// coeff(x) times the Richardson-extrapolated central difference of `u`.
pub fn apply_spatial<U>(op: &SpatialOp, u: &U, x: &[f64], t: f64, step: f64, bounds: &[Interval]) -> Result<f64>
where
    U: Fn(&[f64], f64) -> f64 + ?Sized,
{
    op.apply(u, x, t, step, Stencil::Richardson, bounds)
}

/// outer(inner(u)) by nested differencing at the same step.
#[allow(clippy::too_many_arguments)]
pub fn apply_composed<U>(
    outer: &SpatialOp,
    inner: &SpatialOp,
    u: &U,
    x: &[f64],
    t: f64,
    h: f64,
    stencil: Stencil,
    bounds: &[Interval],
) -> Result<f64>
where
    U: Fn(&[f64], f64) -> f64 + ?Sized,
{
    if outer.axis == inner.axis {
        check_reach(x, outer.axis, 2.0 * h, bounds)?;
    } else {
        check_reach(x, outer.axis, h, bounds)?;
        check_reach(x, inner.axis, h, bounds)?;
    }
    let inner_u = |y: &[f64], s: f64| inner.apply_raw(u, y, s, h, stencil);
    finite(outer.apply_raw(&inner_u, x, t, h, stencil), x, t)
}

/// Antiderivative ∫_{x0}^{x[axis]} u / a along the operator's axis by
/// composite Simpson with `nodes` cells.
pub fn inverse_spatial<U>(op: &SpatialOp, u: &U, x0: f64, x: &[f64], t: f64, nodes: usize) -> Result<f64>
where
    U: Fn(&[f64], f64) -> f64 + ?Sized,
{
    if nodes < 16 {
        return Err(Error::Parameter(format!("inverse needs at least 16 nodes, got {nodes}")));
    }
    let n = x.len();
    let axis = op.axis;
    let mut buf = [0.0; MAX_DIMS];
    buf[..n].copy_from_slice(x);
    let end = x[axis];
    let coeff_at = |s: f64| {
        let mut p = buf;
        p[axis] = s;
        op.coeff.eval(&p[..n], t)
    };
    // scan the Simpson nodes for zeros or sign changes of the coefficient
    let cells = nodes + nodes % 2;
    let hstep = (end - x0) / cells as f64;
    let mut prev = coeff_at(x0);
    for i in 0..=cells {
        let s = x0 + hstep * i as f64;
        let a = coeff_at(s);
        if !a.is_finite() || a == 0.0 || a.signum() != prev.signum() {
            return Err(Error::SingularPath { at: s });
        }
        prev = a;
    }
    let v = simpson(
        |s| {
            let mut p = buf;
            p[axis] = s;
            u(&p[..n], t) / op.coeff.eval(&p[..n], t)
        },
        x0,
        end,
        cells,
    );
    finite(v, x, t)
}

/// Multiplication by λ(x, t).
#[derive(Debug, Clone)]
pub struct LinearMult {
    pub multiplier: Field,
    pub identity: bool,
}

impl LinearMult {
    pub fn identity() -> Self {
        LinearMult {
            multiplier: Field::constant(1.0),
            identity: true,
        }
    }

    pub fn new(multiplier: Field) -> Self {
        LinearMult {
            multiplier,
            identity: false,
        }
    }

    #[inline]
    pub fn apply(&self, value: f64, x: &[f64], t: f64) -> f64 {
        if self.identity {
            value
        } else {
            self.multiplier.eval(x, t) * value
        }
    }
}

#[derive(Debug, Clone)]
pub enum TimeOp {
    Classical,
    Fractional(FracParams),
}

impl TimeOp {
    pub fn is_classical(&self) -> bool {
        matches!(self, TimeOp::Classical)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TimeOp::Classical => "classical",
            TimeOp::Fractional(_) => "fractional",
        }
    }
}

/// A point-time pair at which a check is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub t: f64,
}

/// Differencing setup shared by the hypothesis checks.
#[derive(Debug, Clone)]
pub struct Probe {
    pub bounds: Vec<Interval>,
    pub time: Interval,
    /// Step as a fraction of each axis extent.
    pub step_frac: f64,
    pub stencil: Stencil,
    /// Cells for fractional time derivatives.
    pub frac_nodes: usize,
}

impl Probe {
    pub fn new(bounds: Vec<Interval>, time: Interval) -> Self {
        Probe {
            bounds,
            time,
            step_frac: 1e-4,
            stencil: Stencil::Richardson,
            frac_nodes: 2048,
        }
    }

    pub fn step(&self, axis: usize) -> f64 {
        self.step_frac * self.bounds[axis].extent()
    }

    pub fn time_step(&self) -> f64 {
        self.step_frac * self.time.extent()
    }

    pub fn apply<U>(&self, op: &SpatialOp, u: &U, s: &Sample) -> Result<f64>
    where
        U: Fn(&[f64], f64) -> f64 + ?Sized,
    {
        op.apply(u, &s.x, s.t, self.step(op.axis), self.stencil, &self.bounds)
    }

    pub fn time_derivative<U>(&self, u: &U, s: &Sample) -> Result<f64>
    where
        U: Fn(&[f64], f64) -> f64 + ?Sized,
    {
        let h = self.time_step();
        check_reach(&[s.t], 0, h, &[self.time])?;
        finite(time_partial(u, &s.x, s.t, h, self.stencil), &s.x, s.t)
    }
}

/// max |op(uv) - u op(v) - v op(u)|
pub fn check_leibniz(op: &SpatialOp, u: &Field, v: &Field, samples: &[Sample], probe: &Probe) -> Result<f64> {
    let uv = |x: &[f64], t: f64| u.eval(x, t) * v.eval(x, t);
    let uf = |x: &[f64], t: f64| u.eval(x, t);
    let vf = |x: &[f64], t: f64| v.eval(x, t);
    let mut worst = 0.0_f64;
    for s in samples {
        let lhs = probe.apply(op, &uv, s)?;
        let rhs = u.eval(&s.x, s.t) * probe.apply(op, &vf, s)? + v.eval(&s.x, s.t) * probe.apply(op, &uf, s)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// max |∂ₜ(op u) - op(∂ₜ u)| for the classical time derivative.
pub fn check_commutator(ot: &TimeOp, op: &SpatialOp, u: &Field, samples: &[Sample], probe: &Probe) -> Result<f64> {
    if !ot.is_classical() {
        return Err(Error::UnsupportedCheck(
            "commutator check is defined for the classical time derivative only".into(),
        ));
    }
    let h = probe.step(op.axis);
    let ht = probe.time_step();
    let stencil = probe.stencil;
    let uf = |x: &[f64], t: f64| u.eval(x, t);
    let op_u = |x: &[f64], t: f64| op.apply_raw(&uf, x, t, h, stencil);
    let dt_u = |x: &[f64], t: f64| time_partial(&uf, x, t, ht, stencil);
    let mut worst = 0.0_f64;
    for s in samples {
        // reach checks for both compositions
        probe.apply(op, &uf, s)?;
        probe.time_derivative(&uf, s)?;
        let lhs = time_partial(&op_u, &s.x, s.t, ht, stencil);
        let rhs = op.apply_raw(&dt_u, &s.x, s.t, h, stencil);
        worst = worst.max(finite(lhs - rhs, &s.x, s.t)?.abs());
    }
    Ok(worst)
}

/// max |m(u) - l·n(u)|
pub fn check_factorization(m: &SpatialOp, l: &LinearMult, n: &SpatialOp, u: &Field, samples: &[Sample], probe: &Probe) -> Result<f64> {
    let uf = |x: &[f64], t: f64| u.eval(x, t);
    let mut worst = 0.0_f64;
    for s in samples {
        let mu = probe.apply(m, &uf, s)?;
        let nu = probe.apply(n, &uf, s)?;
        worst = worst.max((mu - l.apply(nu, &s.x, s.t)).abs());
    }
    Ok(worst)
}

/// max |O A + A²| over the sample times.
pub fn check_a_ode(ot: &TimeOp, a: &TimeField, t_samples: &[f64], probe: &Probe) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &t in t_samples {
        let at = a.eval(t);
        if !at.is_finite() || at.abs() > 1e12 {
            return Err(Error::Domain {
                what: "coefficient A is singular at the sample",
                value: t,
            });
        }
        let oa = match ot {
            TimeOp::Classical => {
                let h = probe.time_step();
                probe
                    .time
                    .contains(t - h)
                    .then_some(())
                    .ok_or(Error::Stencil { point: vec![t], axis: 0 })?;
                probe.stencil.combine(|dh| a.eval(t + dh), h)
            }
            TimeOp::Fractional(p) => caputo_f(p, |s| a.eval(s), t, probe.frac_nodes)?,
        };
        worst = worst.max(finite(oa + at * at, &[], t)?.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sinh_op() -> SpatialOp {
        SpatialOp::new(0, "sinh(eta) d/deta", Field::of_axis(0, f64::sinh))
    }

    fn ln_tanh() -> Field {
        Field::of_axis(0, |e: f64| (0.5 * e).tanh().ln())
    }

    #[test]
    fn sinh_operator_maps_ln_tanh_to_one() {
        let b = [Interval::new(0.2, 3.0)];
        let v = apply_spatial(&sinh_op(), &|x: &[f64], t| ln_tanh().eval(x, t), &[1.0], 0.0, 1e-4, &b).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let op = SpatialOp::partial(0, "d/dx");
        let v = apply_spatial(&op, &|_: &[f64], _| 7.0, &[0.3], 0.0, 1e-4, &[]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn schwarzschild_radial_operator_on_its_generator() {
        // (2GM - c²r) r ∂_r with G = M = c = 1
        let op = SpatialOp::new(0, "radial", Field::of_axis(0, |r| (2.0 - r) * r));
        let u = |x: &[f64], _: f64| 0.5 * (x[0] / (2.0 - x[0])).ln();
        let v = apply_spatial(&op, &u, &[0.8], 0.0, 1e-4, &[Interval::new(0.2, 1.8)]).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn richardson_is_exact_on_cubics() {
        let op = SpatialOp::partial(0, "d/dx");
        let u = |x: &[f64], _: f64| 2.0 * x[0].powi(3) - x[0] * x[0] + 0.5;
        let v = apply_spatial(&op, &u, &[0.7], 0.0, 1e-2, &[]).unwrap();
        assert_relative_eq!(v, 6.0 * 0.49 - 1.4, max_relative = 1e-12);
    }

    #[test]
    fn stencil_outside_domain_is_reported() {
        let op = SpatialOp::partial(0, "d/dx");
        let r = apply_spatial(&op, &|x: &[f64], _| x[0], &[0.99995], 0.0, 1e-3, &[Interval::new(-1.0, 1.0)]);
        match r {
            Err(Error::Stencil { point, axis }) => {
                assert_eq!(axis, 0);
                assert_eq!(point, vec![0.99995]);
            }
            other => panic!("expected stencil error, got {other:?}"),
        }
    }

    #[test]
    fn inverse_of_csch() {
        let op = sinh_op();
        let zero = inverse_spatial(&op, &|_: &[f64], _| 0.0, 1.0, &[2.0], 0.0, 64).unwrap();
        assert_eq!(zero, 0.0);
        // 10⁶-node trapezoid oracle for ∫₁² csch s ds, which equals ln tanh 1 - ln tanh ½
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let mut oracle = 0.5 * (1.0 / 1f64.sinh() + 1.0 / 2f64.sinh());
        for i in 1..n {
            oracle += 1.0 / (1.0 + h * i as f64).sinh();
        }
        oracle *= h;
        let closed = 1f64.tanh().ln() - 0.5f64.tanh().ln();
        assert!((oracle - closed).abs() < 1e-10);
        let v = inverse_spatial(&op, &|_: &[f64], _| 1.0, 1.0, &[2.0], 0.0, 64).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
        let fine = inverse_spatial(&op, &|_: &[f64], _| 1.0, 1.0, &[2.0], 0.0, 1024).unwrap();
        assert!((fine - oracle).abs() < 1e-11, "{fine} vs {oracle}");
    }

    #[test]
    fn inverse_then_apply_roundtrips() {
        let op = sinh_op();
        let u = |x: &[f64], _: f64| (x[0] * 0.7).cos() + x[0];
        let anti = |x: &[f64], t: f64| inverse_spatial(&op, &u, 1.0, x, t, 200).unwrap();
        for x in [0.5, 1.3, 2.4] {
            let back = apply_spatial(&op, &anti, &[x], 0.0, 1e-4, &[]).unwrap();
            assert!((back - u(&[x], 0.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn inverse_rejects_singular_paths() {
        let op = SpatialOp::new(0, "x d/dx", Field::of_axis(0, |x| x));
        let r = inverse_spatial(&op, &|_: &[f64], _| 1.0, -1.0, &[1.0], 0.0, 64);
        assert!(matches!(r, Err(Error::SingularPath { .. })));
        assert!(matches!(
            inverse_spatial(&op, &|_: &[f64], _| 1.0, 1.0, &[2.0], 0.0, 8),
            Err(Error::Parameter(_))
        ));
    }

    fn probe1(lo: f64, hi: f64) -> Probe {
        Probe::new(vec![Interval::new(lo, hi)], Interval::new(0.0, 3.0))
    }

    #[test]
    fn leibniz_holds_for_derivations_and_fails_with_zeroth_order() {
        let probe = probe1(-2.0, 2.0);
        let u = Field::of_axis(0, |x| x.sin());
        let v = Field::of_axis(0, |x| x * x + 1.0);
        let op = SpatialOp::new(0, "a d/dx", Field::of_axis(0, |x| 2.0 + x.cos()));
        let s = vec![Sample { x: vec![0.4], t: 1.0 }, Sample { x: vec![-1.1], t: 1.0 }];
        assert!(check_leibniz(&op, &u, &v, &s, &probe).unwrap() < 1e-6);
        let one = Field::constant(1.0);
        assert!(check_leibniz(&op, &one, &v, &s, &probe).unwrap() < 1e-12);
        let broken = SpatialOp::partial(0, "d/dx + 1").with_zeroth_order(Field::constant(1.0));
        let x = Field::of_axis(0, |x| x);
        let dev = check_leibniz(&broken, &x, &x, &[Sample { x: vec![1.0], t: 1.0 }], &probe).unwrap();
        assert!((dev - 1.0).abs() < 1e-8);
    }

    #[test]
    fn commutator_detects_time_dependent_coefficients() {
        let probe = Probe::new(vec![Interval::new(-1.0, 1.0); 2], Interval::new(0.1, 1.0));
        let u = Field::new(|x, t| x[0] * x[0] * (1.0 + t) + x[1]);
        let s = vec![Sample {
            x: vec![0.3, -0.2],
            t: 0.5,
        }];
        let static_op = SpatialOp::new(0, "sinh", Field::of_axis(0, |x| 2.0 + x.sinh()));
        assert!(check_commutator(&TimeOp::Classical, &static_op, &u, &s, &probe).unwrap() < 1e-5);
        let cigar = SpatialOp::new(0, "cigar", Field::new(|x, t| (4.0 * t).exp() + x[0] * x[0] + x[1] * x[1]));
        let dev = check_commutator(&TimeOp::Classical, &cigar, &u, &s, &probe).unwrap();
        // 4 e^{4t} ∂ₓu
        let expected = 4.0 * 2f64.exp() * 2.0 * 0.3 * 1.5;
        assert_relative_eq!(dev, expected, max_relative = 1e-6);
        let c = Field::constant(2.0);
        assert!(check_commutator(&TimeOp::Classical, &cigar, &c, &s, &probe).unwrap() < 1e-12);
        let frac = TimeOp::Fractional(FracParams::new(0.5, crate::frac::Clock::Identity).unwrap());
        assert!(matches!(
            check_commutator(&frac, &static_op, &u, &s, &probe),
            Err(Error::UnsupportedCheck(_))
        ));
    }

    #[test]
    fn factorization_of_the_mixed_hyperbolic_pair() {
        let probe = probe1(0.2, 3.0);
        let m = SpatialOp::new(0, "csch d", Field::of_axis(0, |e| 1.0 / e.sinh()));
        let n = sinh_op();
        let l = LinearMult::new(Field::of_axis(0, |e| 1.0 / (e.sinh() * e.sinh())));
        let u = Field::of_axis(0, |e| (e * 1.3).sin() + e * e);
        let s: Vec<Sample> = [0.5, 1.2, 2.5].iter().map(|&e| Sample { x: vec![e], t: 1.0 }).collect();
        assert!(check_factorization(&m, &l, &n, &u, &s, &probe).unwrap() < 1e-8);
        assert!(check_factorization(&n, &LinearMult::identity(), &n, &u, &s, &probe).unwrap() == 0.0);
        let wrong = LinearMult::new(Field::constant(2.0));
        let s1 = &s[1..2];
        let mu = probe.apply(&m, &|x: &[f64], t| u.eval(x, t), &s1[0]).unwrap();
        assert!(check_factorization(&m, &wrong, &n, &u, s1, &probe).unwrap() >= 0.1 * mu.abs());
    }

    #[test]
    fn riccati_identity_for_a() {
        let probe = Probe::new(vec![], Interval::new(0.0, 2.5));
        let ts: Vec<f64> = (0..20).map(|i| 0.1 + 1.9 * i as f64 / 19.0).collect();
        let a = TimeField::new(|t| 1.0 / (t + 1.0));
        assert!(check_a_ode(&TimeOp::Classical, &a, &ts, &probe).unwrap() < 1e-6);
        let a0 = TimeField::new(|t| 1.0 / t);
        assert!(check_a_ode(&TimeOp::Classical, &a0, &[1.0], &probe).unwrap() < 1e-6);
        let c = TimeField::constant(0.5);
        let dev = check_a_ode(&TimeOp::Classical, &c, &[1.0], &probe).unwrap();
        assert_relative_eq!(dev, 0.25, max_relative = 1e-12);
        assert!(matches!(
            check_a_ode(&TimeOp::Classical, &a0, &[0.0], &probe),
            Err(Error::Domain { .. })
        ));
    }
}
