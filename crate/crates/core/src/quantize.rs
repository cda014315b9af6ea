//! Bohr-Sommerfeld quantization and tunnelling splitting predictions.

use crate::action::{actions_with, ActionError, ActionKind, ActionOptions, ActionSet};
use crate::numerics::roots::{newton, NewtonError, NewtonOptions};
use crate::potential::{Parity, Potential};
use crate::turning::{classify, TurningConfiguration, TurningError};
use num_complex::Complex64;
use serde::{Serialize, Serializer};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizeError {
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Turning(#[from] TurningError),
    #[error("window ({lo}, {hi}) is outside the lobe regime: {reason}")]
    Window { lo: f64, hi: f64, reason: String },
    #[error("quantization root for k = {k} escapes the window ({lo}, {hi})")]
    WindowEscape { k: i64, lo: f64, hi: f64 },
    #[error("Newton failed: {0}")]
    Newton(String),
    #[error("configuration is {found}, operation needs {needed}")]
    WrongConfiguration { found: &'static str, needed: &'static str },
    #[error("duplicate roots {a} and {b} (predicted gap {gap:e})")]
    DuplicateRoot { a: Complex64, b: Complex64, gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "SL-BS")]
    SlBs,
    #[serde(rename = "DL-BS")]
    DlBs,
    #[serde(rename = "DL-FULL-QC")]
    DlFullQc,
    #[serde(rename = "DL-SPLIT-EVEN")]
    DlSplitEven,
    #[serde(rename = "DL-SPLIT-ODD")]
    DlSplitOdd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvaluePrediction {
    pub k: i64,
    pub h: f64,
    pub method: Method,
    pub mu_ref: Complex64,
    #[serde(rename = "lambda")]
    pub lambda_pred: Vec<Complex64>,
    #[serde(serialize_with = "opt_complex")]
    pub gap: Option<Complex64>,
    pub flags: Vec<String>,
}

fn opt_complex<S: Serializer>(v: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(z) => z.serialize(s),
        None => s.serialize_none(),
    }
}

impl EigenvaluePrediction {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("prediction serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbOptions {
    pub actions: ActionOptions,
    /// Newton stops once `|F| <= residual_tol`.
    pub residual_tol: f64,
    /// Imaginary parts of real roots above this are reported with a flag.
    pub reality_tol: f64,
    pub max_iter: usize,
}

impl Default for WkbOptions {
    fn default() -> Self {
        Self {
            actions: ActionOptions::default(),
            residual_tol: 1e-12,
            reality_tol: 1e-10,
            max_iter: 100,
        }
    }
}

/// A potential together with its reference level and search window.
#[derive(Debug, Clone)]
pub struct WkbProblem {
    pub potential: Potential,
    pub mu0: f64,
    pub window: (f64, f64),
    pub config: TurningConfiguration,
    pub options: WkbOptions,
}

fn lambda_of(mu: Complex64) -> Complex64 {
    Complex64::i() * mu
}

impl WkbProblem {
    pub fn new(potential: Potential, mu0: f64, window: (f64, f64)) -> Result<Self, QuantizeError> {
        let config = classify(&potential, mu0)?;
        Ok(Self {
            potential,
            mu0,
            window,
            config,
            options: WkbOptions::default(),
        })
    }

    /// Window `(mu0 - eps, mu0 + eps)`.
    pub fn around(potential: Potential, mu0: f64, eps: f64) -> Result<Self, QuantizeError> {
        Self::new(potential, mu0, (mu0 - eps, mu0 + eps))
    }

    fn kind_name(&self) -> &'static str {
        if self.config.is_double() {
            "double-lobe"
        } else {
            "single-lobe"
        }
    }

    pub fn action_set(&self, mu: Complex64) -> Result<ActionSet, QuantizeError> {
        Ok(actions_with(
            &self.potential,
            &self.config,
            mu,
            &self.options.actions,
        )?)
    }

    /// `(I, I')` (single lobe) or `(I_l, I_l')` (double lobe) at real `mu`.
    fn primary(&self, mu: f64) -> Result<(f64, f64), QuantizeError> {
        let (i, d) = self.action_set(Complex64::new(mu, 0.0))?.primary();
        Ok((i.re, d.re))
    }

    fn window_actions(&self) -> Result<(f64, f64), QuantizeError> {
        let (lo, hi) = self.window;
        let wrap = |e: QuantizeError| QuantizeError::Window {
            lo,
            hi,
            reason: e.to_string(),
        };
        let a = self.primary(lo).map_err(wrap)?.0;
        let b = self.primary(hi).map_err(wrap)?.0;
        Ok((a, b))
    }

    /// All `k` with `(k + 1/2) pi h` strictly inside the range of `I` over the window.
    pub fn enumerate_indices(&self, h: f64) -> Result<Vec<i64>, QuantizeError> {
        let (lo, hi) = self.window;
        if !(hi > lo) {
            return Ok(Vec::new());
        }
        let (a, b) = self.window_actions()?;
        let (imin, imax) = (a.min(b), a.max(b));
        let mut ks = Vec::new();
        let mut k = ((imin / (PI * h)) - 0.5).floor().max(0.0) as i64;
        loop {
            let target = (k as f64 + 0.5) * PI * h;
            if target >= imax {
                break;
            }
            if target > imin {
                ks.push(k);
            }
            k += 1;
        }
        Ok(ks)
    }

    /// Real root of `I(mu) = (k + 1/2) pi h` inside the window, by Newton
    /// safeguarded with bisection (I is monotone on the window).
    fn solve_real(&self, h: f64, k: i64) -> Result<(f64, Vec<String>), QuantizeError> {
        let (lo, hi) = self.window;
        let target = (k as f64 + 0.5) * PI * h;
        let escape = QuantizeError::WindowEscape { k, lo, hi };
        let (i_lo, i_hi) = self.window_actions()?;
        let (f_lo, f_hi) = (i_lo - target, i_hi - target);
        if f_lo == 0.0 || f_hi == 0.0 || f_lo * f_hi > 0.0 {
            return Err(escape);
        }
        let (mut a, mut b) = if f_lo < 0.0 { (lo, hi) } else { (hi, lo) };
        // f(a) < 0 < f(b)
        let mut mu = 0.5 * (lo + hi);
        for _ in 0..self.options.max_iter {
            let (i, d) = self.primary(mu)?;
            let f = i - target;
            if f.abs() <= self.options.residual_tol {
                return Ok((mu, Vec::new()));
            }
            if f < 0.0 {
                a = mu;
            } else {
                b = mu;
            }
            let step = f / d;
            let cand = mu - step;
            let next = if (cand - a) * (cand - b) < 0.0 && step.is_finite() {
                cand
            } else {
                0.5 * (a + b)
            };
            if (next - mu).abs() <= 1e-16 * mu.abs() {
                return Ok((next, vec![format!("residual {:.1e} above tolerance", f.abs())]));
            }
            mu = next;
        }
        Err(QuantizeError::Newton(format!("no convergence for k = {k}")))
    }

    pub fn solve_bs_single(&self, h: f64, k: i64) -> Result<EigenvaluePrediction, QuantizeError> {
        if self.config.is_double() {
            return Err(QuantizeError::WrongConfiguration {
                found: self.kind_name(),
                needed: "single-lobe",
            });
        }
        let (mu, flags) = self.solve_real(h, k)?;
        let mu = Complex64::new(mu, 0.0);
        Ok(EigenvaluePrediction {
            k,
            h,
            method: Method::SlBs,
            mu_ref: mu,
            lambda_pred: vec![lambda_of(mu)],
            gap: None,
            flags,
        })
    }

    fn require_symmetric_double(&self) -> Result<Parity, QuantizeError> {
        if !self.config.is_double() {
            return Err(QuantizeError::WrongConfiguration {
                found: self.kind_name(),
                needed: "double-lobe",
            });
        }
        match self.potential.parity() {
            Parity::None => Err(QuantizeError::WrongConfiguration {
                found: "non-symmetric double-lobe",
                needed: "even or odd double-lobe (use the full quantization condition)",
            }),
            p => Ok(p),
        }
    }

    pub fn solve_bs_double(&self, h: f64, k: i64) -> Result<EigenvaluePrediction, QuantizeError> {
        self.require_symmetric_double()?;
        let (mu, flags) = self.solve_real(h, k)?;
        let mu = Complex64::new(mu, 0.0);
        Ok(EigenvaluePrediction {
            k,
            h,
            method: Method::DlBs,
            mu_ref: mu,
            lambda_pred: vec![lambda_of(mu)],
            gap: None,
            flags,
        })
    }

    /// Leading-order splitting `g = exp(-J/h) h / (2 I')` at the reference point.
    pub fn splitting_factor(&self, h: f64, mu_dl: f64) -> Result<(f64, bool), QuantizeError> {
        let set = self.action_set(Complex64::new(mu_dl, 0.0))?;
        let (_, d_i) = set.primary();
        let (j, _) = set.j().expect("double-lobe action set");
        let exponent = j.re / h;
        if exponent > 700.0 {
            return Ok((0.0, true));
        }
        Ok(((-exponent).exp() * h / (2.0 * d_i.re), false))
    }

    pub fn predict_splitting(&self, h: f64, k: i64) -> Result<EigenvaluePrediction, QuantizeError> {
        let parity = self.require_symmetric_double()?;
        let base = self.solve_bs_double(h, k)?;
        let mu = base.mu_ref;
        let (g, underflow) = self.splitting_factor(h, mu.re)?;
        let mut flags = base.flags;
        if underflow {
            flags.push("underflow".into());
        }
        let i = Complex64::i();
        let (method, lambda, gap) = match parity {
            Parity::Even => {
                flags.push("vertical".into());
                (
                    Method::DlSplitEven,
                    vec![lambda_of(mu) + i * g, lambda_of(mu) - i * g],
                    Complex64::new(2.0 * g, 0.0),
                )
            }
            _ => {
                flags.push("horizontal".into());
                (
                    Method::DlSplitOdd,
                    vec![lambda_of(mu) + g, lambda_of(mu) - g],
                    Complex64::new(0.0, -2.0 * g),
                )
            }
        };
        Ok(EigenvaluePrediction {
            k,
            h,
            method,
            mu_ref: mu,
            lambda_pred: lambda,
            gap: Some(gap),
            flags,
        })
    }

    /// `G(mu)` and `G'(mu)` of the full double-lobe condition
    /// `4 cos(I_l/h) cos(I_r/h) - s exp(-2J/h) sin(I_l/h) sin(I_r/h)`.
    pub fn full_qc_residual(&self, h: f64, mu: Complex64, sign: f64) -> Result<(Complex64, Complex64), QuantizeError> {
        let set = self.action_set(mu)?;
        let ActionKind::Double {
            i_l,
            i_r,
            j,
            d_i_l,
            d_i_r,
            d_j,
        } = set.kind
        else {
            return Err(QuantizeError::WrongConfiguration {
                found: self.kind_name(),
                needed: "double-lobe",
            });
        };
        let (cl, sl) = ((i_l / h).cos(), (i_l / h).sin());
        let (cr, sr) = ((i_r / h).cos(), (i_r / h).sin());
        let e = (-2.0 * j / h).exp();
        let g = 4.0 * cl * cr - sign * e * sl * sr;
        let dl = d_i_l / h;
        let dr = d_i_r / h;
        let dg = 4.0 * (-sl * dl * cr - cl * sr * dr)
            - sign * e * (-2.0 * d_j / h * sl * sr + cl * dl * sr + sl * cr * dr);
        Ok((g, dg))
    }

    /// Both roots of the full condition flanking `seed_mu`, seeded at
    /// `seed_mu ± g` (`sign = +1`) or `seed_mu ± i g` (`sign = -1`).
    pub fn solve_full_qc_double(&self, h: f64, seed_mu: f64, sign: f64) -> Result<(Vec<Complex64>, Vec<String>), QuantizeError> {
        if !self.config.is_double() {
            return Err(QuantizeError::WrongConfiguration {
                found: self.kind_name(),
                needed: "double-lobe",
            });
        }
        let (g, underflow) = self.splitting_factor(h, seed_mu)?;
        let set = self.action_set(Complex64::new(seed_mu, 0.0))?;
        let j = set.j().expect("double-lobe").0.re;
        let mu = Complex64::new(seed_mu, 0.0);
        if underflow || 2.0 * j / h > 700.0 || g.abs() < 1e-300 {
            return Ok((vec![mu, mu], vec!["underflow".into()]));
        }
        let offset = if sign > 0.0 {
            Complex64::new(g, 0.0)
        } else {
            Complex64::new(0.0, g)
        };
        let opts = NewtonOptions {
            step_tol: 1e-15,
            value_tol: 0.0,
            max_iter: self.options.max_iter,
            max_step: 0.5 * g.abs(),
        };
        let mut roots = Vec::new();
        for seed in [mu + offset, mu - offset] {
            let r = newton(|z| self.full_qc_residual(h, z, sign), seed, &opts).map_err(|e| match e {
                NewtonError::Eval(q) => q,
                other => QuantizeError::Newton(other.to_string()),
            })?;
            roots.push(r.root);
        }
        if (roots[0] - roots[1]).norm() < 1e-3 * 2.0 * g.abs() {
            return Err(QuantizeError::DuplicateRoot {
                a: roots[0],
                b: roots[1],
                gap: 2.0 * g.abs(),
            });
        }
        Ok((roots, Vec::new()))
    }

    /// Full-condition prediction record: `mu_ref = mu_k^dl`, both roots as `lambda`.
    pub fn predict_full_qc(&self, h: f64, k: i64) -> Result<EigenvaluePrediction, QuantizeError> {
        let base = self.solve_bs_double(h, k)?;
        let sign = self.config.middle_sign().unwrap_or(1) as f64;
        let (mut roots, mut flags) = self.solve_full_qc_double(h, base.mu_ref.re, sign)?;
        roots.sort_by(|a, b| (b.re + b.im).total_cmp(&(a.re + a.im)));
        flags.extend(base.flags);
        Ok(EigenvaluePrediction {
            k,
            h,
            method: Method::DlFullQc,
            mu_ref: base.mu_ref,
            lambda_pred: roots.iter().map(|&m| lambda_of(m)).collect(),
            gap: Some(roots[0] - roots[1]),
            flags,
        })
    }

    /// Predictions for every admissible `k` at `h`: single-lobe BS, or the
    /// splitting formula for symmetric double lobes (plain BS otherwise).
    pub fn predict_all(&self, h: f64) -> Result<Vec<EigenvaluePrediction>, QuantizeError> {
        let ks = self.enumerate_indices(h)?;
        let mut out = Vec::new();
        for k in ks {
            let p = if !self.config.is_double() {
                self.solve_bs_single(h, k)?
            } else if self.potential.parity() != Parity::None {
                self.predict_splitting(h, k)?
            } else {
                return Err(QuantizeError::WrongConfiguration {
                    found: "non-symmetric double-lobe",
                    needed: "even or odd potential for automatic predictions",
                });
            };
            out.push(p);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Builtin;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sech_problem() -> WkbProblem {
        WkbProblem::new(Potential::sech(), 0.5, (0.05, 0.95)).unwrap()
    }

    fn even() -> WkbProblem {
        let v = Potential::from_builtin(Builtin::double_sech(0.25, 2.0, 1.0)).with_parity(Parity::Even);
        WkbProblem::new(v, 0.2, (0.14, 0.235)).unwrap()
    }

    fn odd() -> WkbProblem {
        let v = Potential::from_builtin(Builtin::double_sech(0.25, 2.0, -1.0)).with_parity(Parity::Odd);
        WkbProblem::new(v, 0.2, (0.14, 0.235)).unwrap()
    }

    #[test]
    fn enumerate_sech() {
        let p = sech_problem();
        assert_eq!(p.enumerate_indices(0.2).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(p.enumerate_indices(2.0).unwrap().is_empty());
        let mut z = sech_problem();
        z.window = (0.5, 0.5);
        assert!(z.enumerate_indices(0.2).unwrap().is_empty());
    }

    #[test]
    fn satsuma_yajima_values() {
        let p = sech_problem();
        let r = p.solve_bs_single(0.2, 2).unwrap();
        assert!((r.mu_ref - c(0.5, 0.0)).norm() < 1e-10);
        assert!((r.lambda_pred[0] - c(0.0, 0.5)).norm() < 1e-10);
        let r = p.solve_bs_single(0.2, 0).unwrap();
        assert!((r.lambda_pred[0] - c(0.0, 0.9)).norm() < 1e-10);
        assert!(matches!(p.solve_bs_single(0.1, 9), Err(QuantizeError::WindowEscape { k: 9, .. })));
    }

    #[test]
    fn satsuma_yajima_all_indices() {
        let p = WkbProblem::new(Potential::sech(), 0.5, (0.01, 0.99)).unwrap();
        for n in [4usize, 5, 10] {
            let h = 1.0 / n as f64;
            let ks = p.enumerate_indices(h).unwrap();
            assert_eq!(ks.len(), n);
            for k in ks {
                let r = p.solve_bs_single(h, k).unwrap();
                let exact = h * (n as f64 - k as f64 - 0.5);
                assert!((r.lambda_pred[0] - c(0.0, exact)).norm() <= 1e-10, "N={n} k={k}: {}", r.lambda_pred[0]);
            }
        }
    }

    #[test]
    fn neighbour_separation() {
        let p = sech_problem();
        let h = 0.1;
        let ks = p.enumerate_indices(h).unwrap();
        let mus: Vec<f64> = ks.iter().map(|&k| p.solve_bs_single(h, k).unwrap().mu_ref.re).collect();
        let cmax = PI; // |I'| = pi for sech
        for w in mus.windows(2) {
            assert!((w[0] - w[1]).abs() >= PI * h / cmax - 1e-12);
        }
    }

    #[test]
    fn double_reference_points() {
        let e = even();
        let ks = e.enumerate_indices(0.1).unwrap();
        assert_eq!(ks, vec![0]);
        let r = e.solve_bs_double(0.1, 0).unwrap();
        let (i, _) = e.action_set(r.mu_ref).unwrap().primary();
        assert!((i.re - 0.5 * PI * 0.1).abs() <= 1e-12);
        assert_eq!(r.mu_ref.im, 0.0);
        assert!((r.mu_ref.re - 0.211_794).abs() < 2e-6, "{}", r.mu_ref);
        // odd reference point differs because the odd V^2 differs
        let o = odd().solve_bs_double(0.1, 0).unwrap();
        assert!((o.mu_ref.re - 0.188_864).abs() < 2e-6, "{}", o.mu_ref);
    }

    #[test]
    fn splitting_shapes() {
        let e = even().predict_splitting(0.1, 0).unwrap();
        assert_eq!(e.method, Method::DlSplitEven);
        for l in &e.lambda_pred {
            assert_eq!(l.re, 0.0);
        }
        let mid = (e.lambda_pred[0] + e.lambda_pred[1]) * 0.5;
        assert!((mid - c(0.0, e.mu_ref.re)).norm() < 1e-15);
        let o = odd().predict_splitting(0.1, 0).unwrap();
        assert_eq!(o.method, Method::DlSplitOdd);
        assert_eq!(o.lambda_pred[0].im, o.lambda_pred[1].im);
        assert!(o.lambda_pred[0].re != 0.0 && (o.lambda_pred[0].re + o.lambda_pred[1].re).abs() < 1e-18);
        // |lambda+ - lambda-| against the formula from independently evaluated actions
        let p = even();
        let set = p.action_set(e.mu_ref).unwrap();
        let (j, _) = set.j().unwrap();
        let (_, di) = set.primary();
        let expected = 2.0 * (-j.re / 0.1).exp() * 0.1 / (2.0 * di.re.abs());
        assert!(((e.lambda_pred[0] - e.lambda_pred[1]).norm() - expected).abs() < 1e-15);
    }

    #[test]
    fn gap_limit() {
        let p = even();
        let mu = 0.2;
        let mut last = f64::INFINITY;
        for h in [0.1, 0.05, 0.02, 0.01, 0.005] {
            let (g, _) = p.splitting_factor(h, mu).unwrap();
            assert!(g.abs() < last);
            last = g.abs();
        }
        let set = p.action_set(c(mu, 0.0)).unwrap();
        let j = set.j().unwrap().0.re;
        let h = 1e-3;
        let (g, _) = p.splitting_factor(h, mu).unwrap();
        assert!((g.abs().ln() * h + j).abs() < 0.01);
        let (g, flag) = p.splitting_factor(1e-4, mu).unwrap();
        assert!(flag && g == 0.0);
    }

    #[test]
    fn full_qc_even_roots_real_odd_conjugate() {
        let e = even();
        let base = e.solve_bs_double(0.1, 0).unwrap();
        let (roots, _) = e.solve_full_qc_double(0.1, base.mu_ref.re, 1.0).unwrap();
        assert!(roots.iter().all(|r| r.im.abs() < 1e-12));
        let (g, _) = e.splitting_factor(0.1, base.mu_ref.re).unwrap();
        let gap = (roots[0] - roots[1]).norm();
        assert!((gap - 2.0 * g.abs()).abs() <= 3.0 * 0.1 * 2.0 * g.abs(), "{gap} vs {}", 2.0 * g.abs());

        let o = odd();
        let base = o.solve_bs_double(0.1, 0).unwrap();
        let (roots, _) = o.solve_full_qc_double(0.1, base.mu_ref.re, -1.0).unwrap();
        assert!((roots[0] - roots[1].conj()).norm() < 1e-10, "{roots:?}");
        assert!(roots[0].im.abs() > 1e-6);
    }

    #[test]
    fn full_qc_underflow_collapses_to_reference() {
        let e = even();
        let h = 0.0005;
        let base = e.solve_bs_double(h, e.enumerate_indices(h).unwrap()[0]).unwrap();
        let (roots, flags) = e.solve_full_qc_double(h, base.mu_ref.re, 1.0).unwrap();
        assert_eq!(roots, vec![base.mu_ref, base.mu_ref]);
        assert_eq!(flags, vec!["underflow".to_string()]);
    }

    #[test]
    fn json_line_shape() {
        let e = even().predict_splitting(0.1, 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(v["method"], "DL-SPLIT-EVEN");
        assert_eq!(v["lambda"].as_array().unwrap().len(), 2);
        assert!(v["gap"].is_array());
        let s = sech_problem().solve_bs_single(0.2, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json_line()).unwrap();
        assert!(v["gap"].is_null());
        assert_eq!(v["method"], "SL-BS");
    }

    #[test]
    fn wrong_configuration_errors() {
        assert!(matches!(sech_problem().solve_bs_double(0.2, 0), Err(QuantizeError::WrongConfiguration { .. })));
        assert!(matches!(even().solve_bs_single(0.1, 0), Err(QuantizeError::WrongConfiguration { .. })));
        let mut e = even();
        e.potential = e.potential.clone().with_parity(Parity::None);
        assert!(matches!(e.predict_splitting(0.1, 0), Err(QuantizeError::WrongConfiguration { .. })));
    }
}
