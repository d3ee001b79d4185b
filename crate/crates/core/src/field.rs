//! Evaluable scalar fields.
//!
//! A [`Field`] is a real function of a spatial point and a time value. Every
//! solution, operator coefficient, generator and metric component in the crate
//! is a `Field`; functions of time alone use [`TimeField`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

type FieldFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type TimeFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Field(Arc<FieldFn>);

impl Field {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Field(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Field::new(move |_, _| c)
    }

    /// A field depending only on coordinate `axis`.
    pub fn of_axis<F>(axis: usize, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Field::new(move |x, _| f(x[axis]))
    }

    pub fn of_time(f: TimeField) -> Self {
        Field::new(move |_, t| f.eval(t))
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.0)(x, t)
    }

    pub fn add(&self, other: &Field) -> Field {
        let (a, b) = (self.clone(), other.clone());
        Field::new(move |x, t| a.eval(x, t) + b.eval(x, t))
    }

    pub fn mul(&self, other: &Field) -> Field {
        let (a, b) = (self.clone(), other.clone());
        Field::new(move |x, t| a.eval(x, t) * b.eval(x, t))
    }

    pub fn scale(&self, k: f64) -> Field {
        let a = self.clone();
        Field::new(move |x, t| k * a.eval(x, t))
    }

    /// Pointwise product with a function of time.
    pub fn times(&self, b: &TimeField) -> Field {
        let (a, b) = (self.clone(), b.clone());
        Field::new(move |x, t| b.eval(t) * a.eval(x, t))
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Field(..)")
    }
}

#[derive(Clone)]
pub struct TimeField(Arc<TimeFn>);

impl TimeField {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TimeField(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        TimeField::new(move |_| c)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

impl fmt::Debug for TimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TimeField(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn extent(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Shrinks both ends by `frac` of the extent.
    pub fn shrink(&self, frac: f64) -> Interval {
        let d = frac * self.extent();
        Interval::new(self.lo + d, self.hi - d)
    }

    /// `n` equally spaced nodes including both ends.
    pub fn nodes(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.5 * (self.lo + self.hi)],
            _ => {
                let h = self.extent() / (n - 1) as f64;
                (0..n).map(|i| self.lo + h * i as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub interval: Interval,
}

impl Axis {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Axis {
            name: name.to_string(),
            interval: Interval::new(lo, hi),
        }
    }
}
