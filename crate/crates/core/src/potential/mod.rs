//! Analytic real potentials evaluable on a strip around the real axis.

pub mod builtin;
pub mod expr;

pub use builtin::{Builtin, BuiltinSpec};
pub use expr::{parse, Expr, ParseError};

use crate::numerics::Dual;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl std::str::FromStr for Parity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            "none" => Ok(Parity::None),
            other => Err(format!("unknown parity '{other}' (expected even, odd or none)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation at {x} outside the analyticity strip |Im x| < {strip}")]
    OutOfStrip { x: Complex64, strip: f64 },
    #[error("potential does not decay: |V(±{at})| = {tail:e} with sup |V| = {v0:e}")]
    NonDecaying { at: f64, tail: f64, v0: f64 },
    #[error("invalid builtin: {0}")]
    InvalidBuiltin(String),
    #[error("invalid potential specification: {0}")]
    InvalidSpec(String),
    #[error("potential is not real on the real axis (Im V({x}) = {im:e})")]
    NotReal { x: f64, im: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Expr { text: String, tree: Expr },
    Builtin(Builtin),
}

/// A local extremum of `|V|` on the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    /// `V(x)` (signed).
    pub value: f64,
    pub is_max: bool,
}

/// Cached sampling of `V` on the real axis.
#[derive(Debug, Clone)]
pub struct Profile {
    pub v0: f64,
    pub argmax: f64,
    pub extrema: Vec<Extremum>,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile {
    /// Smallest interval containing every sample with `|V| >= level`, padded
    /// by one grid step.
    pub fn hull_above(&self, level: f64) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|v| v.abs() >= level)?;
        let last = self.values.iter().rposition(|v| v.abs() >= level)?;
        let step = self.xs[1] - self.xs[0];
        Some((self.xs[first] - step, self.xs[last] + step))
    }

    /// Half-width of the region where `|V| >= 1e-8 V0`.
    pub fn support_radius(&self) -> f64 {
        match self.hull_above(1e-8 * self.v0) {
            Some((a, b)) => a.abs().max(b.abs()),
            None => 1.0,
        }
    }
}

/// Config-file form of a potential.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<Parity>,
}

pub const SCAN_RADIUS: f64 = 100.0;
const SCAN_POINTS: usize = 40001;
pub const DEFAULT_PARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Potential {
    source: Source,
    strip_halfwidth: f64,
    parity: Parity,
    profile: OnceLock<Result<Profile, PotentialError>>,
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.strip_halfwidth == other.strip_halfwidth && self.parity == other.parity
    }
}

impl Potential {
    pub fn from_builtin(b: Builtin) -> Self {
        Self {
            strip_halfwidth: b.default_strip(),
            source: Source::Builtin(b),
            parity: Parity::None,
            profile: OnceLock::new(),
        }
    }

    pub fn sech() -> Self {
        Self::from_builtin(Builtin::sech())
    }

    /// Parses an expression in `x`. Parity starts as `None`.
    pub fn parse(text: &str) -> Result<Self, PotentialError> {
        let tree = parse(text)?;
        Ok(Self {
            source: Source::Expr {
                text: text.to_string(),
                tree,
            },
            strip_halfwidth: 0.9 * FRAC_PI_2,
            parity: Parity::None,
            profile: OnceLock::new(),
        })
    }

    /// Builds a potential from its config form; parity is detected when not
    /// declared.
    pub fn from_spec(spec: &PotentialSpec) -> Result<Self, PotentialError> {
        let mut p = match (&spec.expr, &spec.builtin) {
            (Some(text), None) => Self::parse(text)?,
            (None, Some(b)) => Self::from_builtin(Builtin::from_spec(b).map_err(PotentialError::InvalidBuiltin)?),
            _ => {
                return Err(PotentialError::InvalidSpec(
                    "exactly one of \"expr\" and \"builtin\" must be given".into(),
                ))
            }
        };
        if let Some(s) = spec.strip_halfwidth {
            if !(s > 0.0 && s.is_finite()) {
                return Err(PotentialError::InvalidSpec("strip_halfwidth must be positive".into()));
            }
            p.strip_halfwidth = s;
        }
        p.parity = match spec.parity {
            Some(par) => par,
            None => p.detect_parity(256, DEFAULT_PARITY_TOL),
        };
        Ok(p)
    }

    pub fn to_spec(&self) -> PotentialSpec {
        let (expr, builtin) = match &self.source {
            Source::Expr { text, .. } => (Some(text.clone()), None),
            Source::Builtin(b) => (None, Some(b.to_spec())),
        };
        PotentialSpec {
            expr,
            builtin,
            strip_halfwidth: Some(self.strip_halfwidth),
            parity: Some(self.parity),
        }
    }

    pub fn with_strip(mut self, strip_halfwidth: f64) -> Self {
        self.strip_halfwidth = strip_halfwidth;
        self
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn strip_halfwidth(&self) -> f64 {
        self.strip_halfwidth
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn in_strip(&self, x: Complex64) -> bool {
        x.im.abs() < self.strip_halfwidth
    }

    /// Value of the analytic continuation at `x`, rejected outside the strip.
    pub fn eval(&self, x: Complex64) -> Result<Complex64, PotentialError> {
        if !self.in_strip(x) {
            return Err(PotentialError::OutOfStrip {
                x,
                strip: self.strip_halfwidth,
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the strip guard, for callers that track their own
    /// domain (continuation paths that leave the strip briefly).
    pub fn eval_unchecked(&self, x: Complex64) -> Complex64 {
        match &self.source {
            Source::Expr { tree, .. } => tree.eval(x),
            Source::Builtin(b) => b.eval(x),
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval_unchecked(Complex64::new(x, 0.0)).re
    }

    /// `(V(x), V'(x))` by forward-mode differentiation.
    pub fn eval_with_derivative(&self, x: Complex64) -> Result<(Complex64, Complex64), PotentialError> {
        if !self.in_strip(x) {
            return Err(PotentialError::OutOfStrip {
                x,
                strip: self.strip_halfwidth,
            });
        }
        Ok(self.eval_with_derivative_unchecked(x))
    }

    pub fn eval_with_derivative_unchecked(&self, x: Complex64) -> (Complex64, Complex64) {
        let d = match &self.source {
            Source::Expr { tree, .. } => tree.eval(Dual::variable(x)),
            Source::Builtin(b) => b.eval(Dual::variable(x)),
        };
        (d.v, d.d)
    }

    /// Real-axis profile: dense scan plus refined extrema of `|V|`.
    pub fn profile(&self) -> Result<&Profile, PotentialError> {
        self.profile
            .get_or_init(|| self.compute_profile())
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn compute_profile(&self) -> Result<Profile, PotentialError> {
        let step = 2.0 * SCAN_RADIUS / (SCAN_POINTS - 1) as f64;
        let xs: Vec<f64> = (0..SCAN_POINTS).map(|i| -SCAN_RADIUS + i as f64 * step).collect();
        let mut values = Vec::with_capacity(SCAN_POINTS);
        for &x in &xs {
            let v = self.eval_unchecked(Complex64::new(x, 0.0));
            if !(v.re.is_finite() && v.im.is_finite()) || v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                return Err(PotentialError::NotReal { x, im: v.im });
            }
            values.push(v.re);
        }
        let abs = |v: f64| v.abs();
        let mut extrema = Vec::new();
        for i in 1..SCAN_POINTS - 1 {
            let (a, b, c) = (abs(values[i - 1]), abs(values[i]), abs(values[i + 1]));
            let is_max = b > a && b >= c;
            let is_min = b < a && b <= c;
            if is_max || is_min {
                let x = golden_extremum(|x| self.eval_real(x).abs(), xs[i - 1], xs[i + 1], is_max);
                extrema.push(Extremum {
                    x,
                    value: self.eval_real(x),
                    is_max,
                });
            }
        }
        let (mut v0, mut argmax) = (abs(values[0]), xs[0]);
        for e in extrema.iter().filter(|e| e.is_max) {
            if e.value.abs() > v0 {
                v0 = e.value.abs();
                argmax = e.x;
            }
        }
        let tail = abs(values[0]).max(abs(values[SCAN_POINTS - 1]));
        if v0 == 0.0 || tail > 1e-3 * v0 {
            return Err(PotentialError::NonDecaying {
                at: SCAN_RADIUS,
                tail,
                v0,
            });
        }
        Ok(Profile {
            v0,
            argmax,
            extrema,
            xs,
            values,
        })
    }

    /// `V0 = sup |V|` over the real axis.
    pub fn sup_abs(&self) -> Result<f64, PotentialError> {
        self.profile().map(|p| p.v0)
    }

    /// Classifies parity from residuals on a quasi-random real grid.
    pub fn detect_parity(&self, n_samples: usize, tol: f64) -> Parity {
        let n = n_samples.max(16);
        let radius = self.profile().map(|p| p.support_radius()).unwrap_or(10.0).max(1.0);
        let golden = 0.618_033_988_749_894_9;
        let mut even = true;
        let mut odd = true;
        let mut nontrivial = false;
        for i in 0..n {
            let u = (0.5 + i as f64 * golden).fract();
            let x = radius * (2.0 * u - 1.0);
            let a = self.eval_real(x);
            let b = self.eval_real(-x);
            let scale = tol * (1.0 + a.abs());
            even &= (a - b).abs() <= scale;
            odd &= (a + b).abs() <= scale;
            nontrivial |= a.abs() > tol;
        }
        if !nontrivial {
            return Parity::None;
        }
        if even {
            Parity::Even
        } else if odd {
            Parity::Odd
        } else {
            Parity::None
        }
    }

    /// Human-readable form.
    pub fn describe(&self) -> String {
        match &self.source {
            Source::Expr { text, .. } => text.clone(),
            Source::Builtin(b) => b.to_string(),
        }
    }
}

fn golden_extremum<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = |x: f64| if maximize { -f(x) } else { f(x) };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn even_double() -> Potential {
        Potential::parse("0.25*(sech(x-2)+sech(x+2))").unwrap()
    }

    #[test]
    fn sech_values() {
        let v = Potential::sech();
        assert!((v.eval(c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let expected = 1.0 / 1f64.cos();
        assert!((v.eval(c(0.0, 1.0)).unwrap() - c(expected, 0.0)).norm() < 1e-12);
        assert!((expected - 1.850_816).abs() < 1e-6);
        assert!(matches!(v.eval(c(0.0, 2.0)), Err(PotentialError::OutOfStrip { .. })));
    }

    #[test]
    fn parsed_double_sech_matches_builtin() {
        let parsed = even_double();
        let b = Potential::from_builtin(Builtin::double_sech(0.25, 2.0, 1.0));
        for i in 0..50 {
            let z = c(-6.0 + 0.24 * i as f64, 0.3 * ((i % 7) as f64 / 7.0 - 0.5));
            assert!((parsed.eval(z).unwrap() - b.eval(z).unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn parity_detection() {
        assert_eq!(even_double().detect_parity(256, 1e-10), Parity::Even);
        let odd = Potential::parse("0.25*(sech(x-2)-sech(x+2))").unwrap();
        assert_eq!(odd.detect_parity(256, 1e-10), Parity::Odd);
        let shifted = Potential::parse("sech(x-1)").unwrap();
        assert_eq!(shifted.detect_parity(256, 1e-10), Parity::None);
        let skewed = Potential::from_builtin(Builtin::SkewedSech { amplitude: 0.8, skew: 0.3 });
        assert_eq!(skewed.detect_parity(16, 1e-10), Parity::None);
    }

    #[test]
    fn sup_abs_values() {
        assert!((Potential::sech().sup_abs().unwrap() - 1.0).abs() < 1e-12);
        let quarter = Potential::parse("0.25*sech(x)").unwrap();
        assert!((quarter.sup_abs().unwrap() - 0.25).abs() < 1e-12);
        let v0 = even_double().sup_abs().unwrap();
        assert!(v0 > 0.25 && v0 < 0.30, "{v0}");
        // dense-grid oracle
        let dense = (0..=400_000)
            .map(|i| {
                let x = -8.0 + 16.0 * i as f64 / 400_000.0;
                0.25 * (1.0 / (x - 2.0).cosh() + 1.0 / (x + 2.0).cosh())
            })
            .fold(0.0f64, f64::max);
        assert!((v0 - dense).abs() <= 1e-8 * v0, "{v0} vs {dense}");
        // the central minimum of |V| is recorded as an extremum
        let p = even_double();
        let prof = p.profile().unwrap();
        assert!(prof.extrema.iter().any(|e| !e.is_max && e.x.abs() < 1e-6));
    }

    #[test]
    fn non_decaying_rejected() {
        let p = Potential::parse("1 + 0*x").unwrap();
        assert!(matches!(p.sup_abs(), Err(PotentialError::NonDecaying { .. })));
    }

    #[test]
    fn derivative_by_dual_numbers() {
        let p = Potential::parse("sech(x)^2 * tanh(x)").unwrap();
        let (v, d) = p.eval_with_derivative(c(0.3, 0.1)).unwrap();
        let f = |z: Complex64| (1.0 / z.cosh()).powi(2) * z.tanh();
        assert!((v - f(c(0.3, 0.1))).norm() < 1e-14);
        let eps = 1e-5;
        let fd = (f(c(0.3 + eps, 0.1)) - f(c(0.3 - eps, 0.1))) / (2.0 * eps);
        assert!((d - fd).norm() < 1e-9);
    }

    #[test]
    fn spec_forms() {
        let spec: PotentialSpec = serde_json::from_str(r#"{"builtin": {"name": "double-sech", "params": {"sign": -1}}}"#).unwrap();
        let p = Potential::from_spec(&spec).unwrap();
        assert_eq!(p.parity(), Parity::Odd);
        let spec: PotentialSpec = serde_json::from_str(r#"{"expr": "sech(x)", "parity": "none"}"#).unwrap();
        assert_eq!(Potential::from_spec(&spec).unwrap().parity(), Parity::None);
        let both: PotentialSpec = serde_json::from_str(r#"{"expr": "sech(x)", "builtin": {"name": "sech-pulse"}}"#).unwrap();
        assert!(Potential::from_spec(&both).is_err());
        let back = Potential::from_spec(&p.to_spec()).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn conjugate_symmetry(xs in prop::collection::vec((-6.0f64..6.0, -1.3f64..1.3), 100)) {
            for p in [Potential::sech(), even_double(), Potential::from_builtin(Builtin::SkewedSech { amplitude: 0.8, skew: 0.3 })] {
                for &(re, im) in &xs {
                    let z = c(re, im);
                    let a = p.eval(z.conj()).unwrap();
                    let b = p.eval(z).unwrap().conj();
                    prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
                }
            }
        }

        #[test]
        fn real_on_real_axis(x in -50.0f64..50.0) {
            for p in [Potential::sech(), even_double()] {
                let v = p.eval(c(x, 0.0)).unwrap();
                prop_assert!(v.im.abs() <= 1e-15 * (1.0 + v.re.abs()));
            }
        }

        #[test]
        fn parsed_sech_matches_builtin(xs in prop::collection::vec((-20.0f64..20.0, -1.3f64..1.3), 100)) {
            let parsed = Potential::parse("sech(x)").unwrap();
            let b = Potential::sech();
            for &(re, im) in &xs {
                let z = c(re, im);
                prop_assert!((parsed.eval(z).unwrap() - b.eval(z).unwrap()).norm() <= 1e-14);
            }
        }
    }
}
