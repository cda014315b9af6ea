//! Built-in potential families.

use super::expr::{Func, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `amplitude * sech((x - center) / width)`
    SechPulse { amplitude: f64, center: f64, width: f64 },
    /// `amplitude * (sech(x - shift) + sign * sech(x + shift))`, `sign = ±1`
    DoubleSech { amplitude: f64, shift: f64, sign: f64 },
    /// `amplitude * sech(x) * (1 + skew * tanh(x))`
    SkewedSech { amplitude: f64, skew: f64 },
}

/// Config-file form: `{"name": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuiltinSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl Builtin {
    pub fn sech() -> Self {
        Builtin::SechPulse {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        }
    }

    pub fn double_sech(amplitude: f64, shift: f64, sign: f64) -> Self {
        Builtin::DoubleSech { amplitude, shift, sign }
    }

    pub fn from_spec(spec: &BuiltinSpec) -> Result<Self, String> {
        let allowed: &[(&str, f64)] = match spec.name.as_str() {
            "sech-pulse" => &[("amplitude", 1.0), ("center", 0.0), ("width", 1.0)],
            "double-sech" => &[("amplitude", 0.25), ("shift", 2.0), ("sign", 1.0)],
            "skewed-sech" => &[("amplitude", 0.8), ("skew", 0.3)],
            other => return Err(format!("unknown builtin '{other}'")),
        };
        for key in spec.params.keys() {
            if !allowed.iter().any(|(k, _)| k == key) {
                return Err(format!("builtin '{}' has no parameter '{key}'", spec.name));
            }
        }
        let get = |k: &str| {
            spec.params
                .get(k)
                .copied()
                .unwrap_or_else(|| allowed.iter().find(|(n, _)| *n == k).map(|p| p.1).unwrap())
        };
        let b = match spec.name.as_str() {
            "sech-pulse" => Builtin::SechPulse {
                amplitude: get("amplitude"),
                center: get("center"),
                width: get("width"),
            },
            "double-sech" => Builtin::DoubleSech {
                amplitude: get("amplitude"),
                shift: get("shift"),
                sign: get("sign"),
            },
            _ => Builtin::SkewedSech {
                amplitude: get("amplitude"),
                skew: get("skew"),
            },
        };
        b.validate()?;
        Ok(b)
    }

    pub fn to_spec(&self) -> BuiltinSpec {
        let (name, params): (&str, Vec<(&str, f64)>) = match *self {
            Builtin::SechPulse { amplitude, center, width } => (
                "sech-pulse",
                vec![("amplitude", amplitude), ("center", center), ("width", width)],
            ),
            Builtin::DoubleSech { amplitude, shift, sign } => (
                "double-sech",
                vec![("amplitude", amplitude), ("shift", shift), ("sign", sign)],
            ),
            Builtin::SkewedSech { amplitude, skew } => ("skewed-sech", vec![("amplitude", amplitude), ("skew", skew)]),
        };
        BuiltinSpec {
            name: name.to_string(),
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("parameter {what} must be finite"))
            }
        };
        match *self {
            Builtin::SechPulse { amplitude, center, width } => {
                finite(amplitude, "amplitude")?;
                finite(center, "center")?;
                if !(width > 0.0 && width.is_finite()) {
                    return Err("width must be positive".into());
                }
            }
            Builtin::DoubleSech { amplitude, shift, sign } => {
                finite(amplitude, "amplitude")?;
                finite(shift, "shift")?;
                if sign != 1.0 && sign != -1.0 {
                    return Err("sign must be +1 or -1".into());
                }
            }
            Builtin::SkewedSech { amplitude, skew } => {
                finite(amplitude, "amplitude")?;
                finite(skew, "skew")?;
            }
        }
        Ok(())
    }

    /// Default analyticity half-width, safely inside the nearest pole of sech.
    pub fn default_strip(&self) -> f64 {
        match *self {
            Builtin::SechPulse { width, .. } => 0.9 * FRAC_PI_2 * width,
            _ => 0.9 * FRAC_PI_2,
        }
    }

    pub fn eval<S: Scalar>(&self, x: S) -> S {
        let c = S::constant;
        match *self {
            Builtin::SechPulse { amplitude, center, width } => c(amplitude) * ((x - c(center)) / c(width)).apply(Func::Sech),
            Builtin::DoubleSech { amplitude, shift, sign } => {
                c(amplitude) * ((x - c(shift)).apply(Func::Sech) + c(sign) * (x + c(shift)).apply(Func::Sech))
            }
            Builtin::SkewedSech { amplitude, skew } => {
                c(amplitude) * x.apply(Func::Sech) * (c(1.0) + c(skew) * x.apply(Func::Tanh))
            }
        }
    }
}

impl std::fmt::Display for Builtin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Builtin::SechPulse { amplitude, center, width } => {
                write!(f, "{amplitude}*sech((x - {center})/{width})")
            }
            Builtin::DoubleSech { amplitude, shift, sign } => {
                let op = if sign > 0.0 { '+' } else { '-' };
                write!(f, "{amplitude}*(sech(x - {shift}) {op} sech(x + {shift}))")
            }
            Builtin::SkewedSech { amplitude, skew } => write!(f, "{amplitude}*sech(x)*(1 + {skew}*tanh(x))"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn spec_round_trip_and_defaults() {
        let s = BuiltinSpec {
            name: "double-sech".into(),
            params: [("sign".to_string(), -1.0)].into_iter().collect(),
        };
        let b = Builtin::from_spec(&s).unwrap();
        assert_eq!(b, Builtin::double_sech(0.25, 2.0, -1.0));
        assert_eq!(Builtin::from_spec(&b.to_spec()).unwrap(), b);
    }

    #[test]
    fn rejects_bad_specs() {
        let bad_name = BuiltinSpec {
            name: "gaussian".into(),
            params: BTreeMap::new(),
        };
        assert!(Builtin::from_spec(&bad_name).is_err());
        let bad_key = BuiltinSpec {
            name: "sech-pulse".into(),
            params: [("height".to_string(), 1.0)].into_iter().collect(),
        };
        assert!(Builtin::from_spec(&bad_key).is_err());
        let bad_sign = BuiltinSpec {
            name: "double-sech".into(),
            params: [("sign".to_string(), 0.5)].into_iter().collect(),
        };
        assert!(Builtin::from_spec(&bad_sign).is_err());
    }

    #[test]
    fn skewed_value() {
        let b = Builtin::SkewedSech { amplitude: 0.8, skew: 0.3 };
        let x = 0.7f64;
        let exact = 0.8 / x.cosh() * (1.0 + 0.3 * x.tanh());
        assert!((b.eval(Complex64::new(x, 0.0)).re - exact).abs() < 1e-15);
    }
}
