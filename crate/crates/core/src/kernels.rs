//! Transition density of Brownian motion on the hyperbolic plane (radial
//! part) and the Burgers-type solution built from it.
//!
//! ```text
//! φ(η, t) = e^(-t/4) / (√π (2t)^(3/2)) ∫_η^∞ ψ e^(-ψ²/4t) / √(cosh ψ - cosh η) dψ
//! ```
//!
//! The substitution ψ = η + v² together with
//! cosh(η + v²) - cosh η = 2 sinh(η + v²/2) sinh(v²/2) turns the integrand
//! into a smooth function of v, which is then integrated adaptively.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::adaptive_gk;

const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub eta: f64,
    pub t: f64,
}

impl KernelPoint {
    pub fn new(eta: f64, t: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain {
                what: "kernel needs eta > 0",
                value: eta,
            });
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain {
                what: "kernel needs t > 0",
                value: t,
            });
        }
        Ok(KernelPoint { eta, t })
    }
}

// sinh(x)/x, accurate near zero
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// Upper limit of the ψ integral.
pub fn psi_max(eta: f64, t: f64) -> f64 {
    eta + 8.0 * (2.0 * t).sqrt() + 5.0
}

/// φ(η, t) by adaptive Gauss–Kronrod in v = √(ψ - η).
pub fn hyperbolic_heat_density(p: KernelPoint, rel_tol: f64) -> Result<f64> {
    if !(1e-12..1e-3).contains(&rel_tol) {
        return Err(Error::Parameter(format!("kernel rel_tol {rel_tol} outside [1e-12, 1e-3)")));
    }
    let KernelPoint { eta, t } = p;
    let integrand = |v: f64| {
        let v2 = v * v;
        let psi = eta + v2;
        2.0 * psi * (-psi * psi / (4.0 * t)).exp() / ((eta + 0.5 * v2).sinh() * sinhc(0.5 * v2)).sqrt()
    };
    let v_max = (psi_max(eta, t) - eta).sqrt();
    let r = adaptive_gk(integrand, 0.0, v_max, 0.0, rel_tol, MAX_SEGMENTS)?;
    let norm = (-t / 4.0).exp() / (std::f64::consts::PI.sqrt() * (2.0 * t).powf(1.5));
    let phi = norm * r.value;
    if !(phi > 0.0) {
        // the integrand is positive, so this only happens on underflow
        return Err(Error::Accuracy {
            estimate: phi,
            requested: rel_tol,
        });
    }
    Ok(phi)
}

/// Cached densities keyed by exact coordinates. Filled once, then shared
/// read-only.
#[derive(Debug, Clone, Default)]
pub struct DensityTable {
    rel_tol: f64,
    values: HashMap<(u64, u64), f64>,
}

impl DensityTable {
    pub fn build(points: &[KernelPoint], rel_tol: f64) -> Result<Self> {
        let computed: Vec<Result<f64>> = points.par_iter().map(|&p| hyperbolic_heat_density(p, rel_tol)).collect();
        let mut values = HashMap::with_capacity(points.len());
        for (p, v) in points.iter().zip(computed) {
            values.insert((p.eta.to_bits(), p.t.to_bits()), v?);
        }
        Ok(DensityTable { rel_tol, values })
    }

    pub fn get(&self, p: KernelPoint) -> Option<f64> {
        self.values.get(&(p.eta.to_bits(), p.t.to_bits())).copied()
    }

    /// Cached value, or a fresh evaluation at the table's tolerance.
    pub fn density(&self, p: KernelPoint) -> Result<f64> {
        match self.get(p) {
            Some(v) => Ok(v),
            None => hyperbolic_heat_density(p, self.rel_tol),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// u(η, t) = (t - t₀) sinh η ∂_η ln φ, the derivative taken by Richardson
/// extrapolation of central differences at `step` and `step/2`.
pub fn brownian_burgers_solution(p: KernelPoint, t0: f64, step: f64, rel_tol: f64) -> Result<f64> {
    if p.t == t0 {
        return Err(Error::Domain {
            what: "solution needs t != t0",
            value: p.t,
        });
    }
    if p.eta <= step {
        return Err(Error::Stencil {
            point: vec![p.eta],
            axis: 0,
        });
    }
    let ln_phi = |eta: f64| -> Result<f64> { Ok(hyperbolic_heat_density(KernelPoint { eta, t: p.t }, rel_tol)?.ln()) };
    let d = |h: f64| -> Result<f64> { Ok((ln_phi(p.eta + h)? - ln_phi(p.eta - h)?) / (2.0 * h)) };
    let dw = (4.0 * d(0.5 * step)? - d(step)?) / 3.0;
    Ok((p.t - t0) * p.eta.sinh() * dw)
}

/// ln φ on an integer-offset stencil around a base point, with memoized
/// density evaluations.
struct LnPhiStencil {
    eta: f64,
    t: f64,
    h: f64,
    rel_tol: f64,
    cache: HashMap<(i32, i32), f64>,
}

impl LnPhiStencil {
    fn new(p: KernelPoint, h: f64, rel_tol: f64) -> Self {
        LnPhiStencil {
            eta: p.eta,
            t: p.t,
            h,
            rel_tol,
            cache: HashMap::new(),
        }
    }

    fn phi(&mut self, i: i32, j: i32) -> Result<f64> {
        if let Some(&v) = self.cache.get(&(i, j)) {
            return Ok(v);
        }
        let p = KernelPoint::new(self.eta + i as f64 * self.h, self.t + j as f64 * self.h)?;
        let v = hyperbolic_heat_density(p, self.rel_tol)?;
        self.cache.insert((i, j), v);
        Ok(v)
    }

    fn ln(&mut self, i: i32, j: i32) -> Result<f64> {
        Ok(self.phi(i, j)?.ln())
    }
}

// fourth-order central difference weights on offsets -3..=3
const D1: [f64; 7] = [0.0, 1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0, 0.0];
const D2: [f64; 7] = [0.0, -1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0, 0.0];
const D3: [f64; 7] = [1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0];

fn apply_weights<F: FnMut(i32) -> Result<f64>>(w: &[f64; 7], h_pow: f64, mut f: F) -> Result<f64> {
    let mut s = 0.0;
    for (k, &c) in w.iter().enumerate() {
        if c != 0.0 {
            s += c * f(k as i32 - 3)?;
        }
    }
    Ok(s / h_pow)
}

/// Terms of the radial hyperbolic heat equation ∂ₜφ = (1/sinh η)∂_η(sinh η ∂_η φ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatResidual {
    pub dt: f64,
    pub laplacian: f64,
    /// |dt - laplacian| / max(|dt|, 1e-12)
    pub relative: f64,
}

pub fn heat_residual(p: KernelPoint, step: f64, rel_tol: f64) -> Result<HeatResidual> {
    let mut s = LnPhiStencil::new(p, step, rel_tol);
    let h = step;
    let dt = apply_weights(&D1, h, |j| s.phi(0, j))?;
    let d1 = apply_weights(&D1, h, |i| s.phi(i, 0))?;
    let d2 = apply_weights(&D2, h * h, |i| s.phi(i, 0))?;
    let laplacian = d2 + d1 / p.eta.tanh();
    Ok(HeatResidual {
        dt,
        laplacian,
        relative: (dt - laplacian).abs() / dt.abs().max(1e-12),
    })
}

/// Terms of ∂ₜu - A·N(L u²) - N M u - A u for the kernel solution, with
/// N = sinh η ∂_η, M = (1/sinh η)∂_η, L = 1/sinh²η, A = 1/(t - t₀).
///
/// With w = ln φ and u = (t - t₀) sinh η w_η each term reduces to
/// derivatives of w, which are taken by fourth-order differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersResidual {
    pub u: f64,
    pub time: f64,
    pub nonlinear: f64,
    pub diffusion: f64,
    pub source: f64,
    pub residual: f64,
    /// |residual| over the largest term magnitude
    pub relative: f64,
}

pub fn burgers_residual(p: KernelPoint, t0: f64, step: f64, rel_tol: f64) -> Result<BurgersResidual> {
    let mut st = LnPhiStencil::new(p, step, rel_tol);
    let h = step;
    let w1 = apply_weights(&D1, h, |i| st.ln(i, 0))?;
    let w2 = apply_weights(&D2, h * h, |i| st.ln(i, 0))?;
    let w3 = apply_weights(&D3, h * h * h, |i| st.ln(i, 0))?;
    let w1t = apply_weights(&D1, h, |j| apply_weights(&D1, h, |i| st.ln(i, j)))?;

    let s = p.t - t0;
    let sh = p.eta.sinh();
    let coth = 1.0 / p.eta.tanh();
    let u = s * sh * w1;
    let time = sh * (w1 + s * w1t);
    let nonlinear = 2.0 * s * sh * w1 * w2;
    let diffusion = s * sh * (-w1 / (sh * sh) + coth * w2 + w3);
    let source = sh * w1;
    let residual = time - nonlinear - diffusion - source;
    let scale = [time, nonlinear, diffusion, source].iter().fold(1e-12_f64, |m, v| m.max(v.abs()));
    Ok(BurgersResidual {
        u,
        time,
        nonlinear,
        diffusion,
        source,
        residual,
        relative: residual.abs() / scale,
    })
}
