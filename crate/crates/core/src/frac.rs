//! Caputo-type fractional evolution operator taken with respect to an
//! increasing clock function f(t).
//!
//! For order β ∈ (0, 1) the operator is
//!
//! ```text
//! (1/Γ(1-β)) ∫₀ᵗ (f(t) - f(τ))^(-β) b'(τ) dτ
//! ```
//!
//! Substituting s = f(τ) turns it into the classical Caputo derivative of
//! B(s) = b(f⁻¹(s)) at s = f(t), which is then discretized with the L1
//! scheme on a uniform s-grid. Order β = 1 is the classical limit
//! (1/f'(t)) d/dt.

use crate::error::{Error, Result};
use crate::field::TimeField;
use crate::specialfn::{gamma, MittagLeffler};

/// Increasing clock f with f(0) = 0.
#[derive(Debug, Clone)]
pub enum Clock {
    /// f(t) = t
    Identity,
    /// f(t) = ln(1 + t)
    Log1p,
    Custom {
        name: String,
        f: TimeField,
        fprime: TimeField,
    },
}

impl Clock {
    pub fn name(&self) -> &str {
        match self {
            Clock::Identity => "t",
            Clock::Log1p => "ln(1+t)",
            Clock::Custom { name, .. } => name,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Clock::Identity => t,
            Clock::Log1p => t.ln_1p(),
            Clock::Custom { f, .. } => f.eval(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Clock::Identity => 1.0,
            Clock::Log1p => 1.0 / (1.0 + t),
            Clock::Custom { fprime, .. } => fprime.eval(t),
        }
    }

    /// f⁻¹(s), searching `[0, hint]` for custom clocks.
    pub fn inverse(&self, s: f64, hint: f64) -> f64 {
        match self {
            Clock::Identity => s,
            Clock::Log1p => s.exp_m1(),
            Clock::Custom { .. } => {
                let (mut lo, mut hi) = (0.0, hint.max(f64::MIN_POSITIVE));
                while self.value(hi) < s && hi < 1e12 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.value(mid) < s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 4.0 * f64::EPSILON * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FracParams {
    pub beta: f64,
    pub clock: Clock,
}

impl FracParams {
    pub fn new(beta: f64, clock: Clock) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Parameter(format!("fractional order {beta} outside (0, 1]")));
        }
        Ok(FracParams { beta, clock })
    }

    /// Sampled check that f(0) = 0, f increases and f' > 0 on `[0, t_end]`.
    pub fn validate(&self, t_end: f64, samples: usize) -> Result<()> {
        let f0 = self.clock.value(0.0);
        if f0.abs() > 1e-12 {
            return Err(Error::Parameter(format!("clock f(0) = {f0}, expected 0")));
        }
        let n = samples.max(2);
        let mut prev = f0;
        for i in 1..=n {
            let t = t_end * i as f64 / n as f64;
            let v = self.clock.value(t);
            if !(v > prev) {
                return Err(Error::Parameter(format!("clock {} not increasing near t = {t}", self.clock.name())));
            }
            if !(self.clock.derivative(t) > 0.0) {
                return Err(Error::Parameter(format!("clock derivative not positive at t = {t}")));
            }
            prev = v;
        }
        Ok(())
    }
}

/// L1 approximation of the Caputo-type derivative of `b` at time `t`.
///
/// `nodes` is the number of uniform cells on `[0, f(t)]`; the error is
/// O(Δs^(2-β)) for smooth B and degrades to O(Δs^(1+β)) when B carries an
/// s^β term at the origin.
pub fn caputo_f<B: Fn(f64) -> f64>(p: &FracParams, b: B, t: f64, nodes: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain {
            what: "fractional derivative needs t > 0",
            value: t,
        });
    }
    if nodes < 8 {
        return Err(Error::Parameter(format!("need at least 8 fractional nodes, got {nodes}")));
    }
    if p.beta == 1.0 {
        let h = 1e-3 * t;
        let d = |h: f64| (b(t + h) - b(t - h)) / (2.0 * h);
        let db = (4.0 * d(0.5 * h) - d(h)) / 3.0;
        return Ok(db / p.clock.derivative(t));
    }
    if !(p.beta > 0.0 && p.beta < 1.0) {
        return Err(Error::Parameter(format!("fractional order {} outside (0, 1]", p.beta)));
    }

    let s_end = p.clock.value(t);
    if !(s_end > 0.0) {
        return Err(Error::Parameter(format!("clock value f({t}) = {s_end} is not positive")));
    }
    let ds = s_end / nodes as f64;
    let mut values = Vec::with_capacity(nodes + 1);
    let mut prev_tau = -1.0;
    for j in 0..=nodes {
        let tau = if j == nodes { t } else { p.clock.inverse(ds * j as f64, t) };
        if !(tau > prev_tau) {
            return Err(Error::Parameter(format!("clock {} not increasing near t = {tau}", p.clock.name())));
        }
        prev_tau = tau;
        values.push(b(tau));
    }

    let one_minus = 1.0 - p.beta;
    // Kahan–Babuška summation in a fixed order
    let mut sum = 0.0;
    let mut comp = 0.0;
    for j in 0..nodes {
        let k = (nodes - 1 - j) as f64;
        let w = (k + 1.0).powf(one_minus) - k.powf(one_minus);
        let term = w * (values[j + 1] - values[j]);
        let s = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - s) + term
        } else {
            (term - s) + sum
        };
        sum = s;
    }
    Ok((sum + comp) * ds.powf(-p.beta) / gamma(2.0 - p.beta)?)
}

/// Largest normalized deviation from the eigen-relation
/// O b = C b for b(t) = E_β(C f(t)^β) over the sample times.
pub fn eigen_check(p: &FracParams, c: f64, t_samples: &[f64], nodes: usize) -> Result<f64> {
    let ml = MittagLeffler::new(p.beta)?;
    let b = |tau: f64| {
        let s = p.clock.value(tau).max(0.0);
        ml.eval(c * s.powf(p.beta)).unwrap_or(f64::NAN)
    };
    let mut worst = 0.0_f64;
    for &t in t_samples {
        let lhs = caputo_f(p, b, t, nodes)?;
        let rhs = c * ml.eval(c * p.clock.value(t).powf(p.beta))?;
        let dev = (lhs - rhs).abs() / (1.0 + rhs.abs());
        if !dev.is_finite() {
            return Err(Error::NonFinite { point: vec![], t });
        }
        worst = worst.max(dev);
    }
    Ok(worst)
}
