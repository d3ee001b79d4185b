//! Check outcomes and number formatting shared by reports and the CLI.

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..12).contains(&exp) {
        trim(format!("{:.*}", (11 - exp).max(0) as usize, x))
    } else {
        let s = format!("{:.11e}", x);
        let (mant, e) = s.split_once('e').expect("exponent");
        format!("{}e{}", trim(mant.to_string()), e)
    }
}

/// Serializes an f64 through [`g12`] as a JSON number where possible.
pub fn ser_g12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    match g12(*x).parse::<f64>() {
        Ok(v) if v.is_finite() => s.serialize_f64(v),
        _ => s.serialize_none(),
    }
}

/// Serializes a map of f64 values through [`g12`].
pub fn ser_g12_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &G12(*v))?;
    }
    map.end()
}

struct G12(f64);

impl Serialize for G12 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_g12(&self.0, s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    #[serde(serialize_with = "ser_g12")]
    pub max_dev: f64,
    #[serde(serialize_with = "ser_g12")]
    pub tol: f64,
    pub pass: bool,
}

impl CheckOutcome {
    /// Passes when `max_dev < tol`.
    pub fn below(name: &str, max_dev: f64, tol: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            max_dev,
            tol,
            pass: max_dev < tol,
        }
    }

    /// Passes when `max_dev >= tol`, for controls that must be flagged.
    pub fn flagged(name: &str, max_dev: f64, tol: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            max_dev,
            tol,
            pass: max_dev >= tol,
        }
    }

    pub fn failed(name: &str, why: &str) -> Self {
        CheckOutcome {
            name: format!("{name}: {why}"),
            max_dev: f64::NAN,
            tol: 0.0,
            pass: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(g12(std::f64::consts::E), "2.71828182846");
        assert_eq!(g12(20.0), "20");
        assert_eq!(g12(-0.001), "-0.001");
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(1.5e-9), "1.5e-9");
        assert_eq!(g12(6.02214076e23), "6.02214076e23");
        assert_eq!(g12(0.0), "0");
    }
}
