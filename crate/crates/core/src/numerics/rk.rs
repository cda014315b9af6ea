//! Dormand-Prince 5(4) with PI step-size control, for small complex systems.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Initial step; chosen from the span when absent.
    pub initial_step: Option<f64>,
}

impl Default for RkSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_steps: 2_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RkError {
    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepSizeUnderflow { x: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("non-finite state at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct RkOutcome<const N: usize> {
    pub y: [Complex64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// Last step size that the controller proposed; reuse it to continue.
    pub next_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

fn axpy<const N: usize>(y: &[Complex64; N], terms: &[(f64, &[Complex64; N])], h: f64) -> [Complex64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        let s = coef * h;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

/// Integrates `dy/dx = f(x, y)` from `x0` to `x1` (either direction).
///
/// After every accepted step `after_step(x, &mut y)` may rescale or otherwise
/// modify the state; it returns `true` when it did, which invalidates the
/// first-same-as-last derivative.
pub fn integrate<const N: usize, F, H>(
    mut f: F,
    x0: f64,
    y0: [Complex64; N],
    x1: f64,
    spec: &RkSpec,
    mut after_step: H,
) -> Result<RkOutcome<N>, RkError>
where
    F: FnMut(f64, &[Complex64; N]) -> [Complex64; N],
    H: FnMut(f64, &mut [Complex64; N]) -> bool,
{
    let span = x1 - x0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let mut y = y0;
    let mut x = x0;
    if span == 0.0 {
        return Ok(RkOutcome {
            y,
            accepted: 0,
            rejected: 0,
            next_step: 0.0,
        });
    }
    let mut h = spec
        .initial_step
        .map(|s| s.abs())
        .unwrap_or(span.abs() * 1e-3)
        .min(span.abs())
        * dir;
    let alpha = 0.2 - 0.75 * BETA;
    let mut err_old: f64 = 1e-4;
    let mut k1 = f(x, &y);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut last_rejected = false;

    while (x1 - x) * dir > 0.0 {
        if accepted + rejected >= spec.max_steps {
            return Err(RkError::MaxSteps(spec.max_steps));
        }
        let closing = (x + 1.01 * h - x1) * dir >= 0.0;
        if closing {
            h = x1 - x;
        }
        if !closing && h.abs() <= 1e-14 * x.abs().max(1.0) {
            return Err(RkError::StepSizeUnderflow { x, h });
        }

        let k2 = f(x + C2 * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = f(x + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(x + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(
            x + C5 * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = f(
            x + h,
            &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        );
        let y_new = axpy(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
        let k7 = f(x + h, &y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = spec.abs_tol + spec.rel_tol * y[i].norm().max(y_new[i].norm());
            err += (e.norm() / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            if y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) && h.abs() < 1e-300 {
                return Err(RkError::NonFinite { x });
            }
            h *= FAC_MIN;
            rejected += 1;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            let mut fac = SAFETY * err.max(1e-10).powf(-alpha) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_old = err.max(1e-4);
            x = if closing { x1 } else { x + h };
            y = y_new;
            k1 = k7;
            accepted += 1;
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(RkError::NonFinite { x });
            }
            if after_step(x, &mut y) {
                k1 = f(x, &y);
            }
            h *= fac;
            last_rejected = false;
        } else {
            let fac = (SAFETY * err.powf(-alpha)).clamp(FAC_MIN, 1.0);
            h *= fac;
            rejected += 1;
            last_rejected = true;
        }
    }

    Ok(RkOutcome {
        y,
        accepted,
        rejected,
        next_step: h.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_flow() {
        let lam = c(-0.7, 2.0);
        let out = integrate(|_, y: &[Complex64; 1]| [lam * y[0]], 0.0, [c(1.0, 0.0)], 3.0, &RkSpec::default(), |_, _| false).unwrap();
        let exact = (lam * 3.0).exp();
        assert!((out.y[0] - exact).norm() < 1e-9 * exact.norm().max(1.0), "{} vs {}", out.y[0], exact);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        // y'' = -y as a first-order system, integrated from 10 down to 0
        let y10 = [c(10f64.cos(), 0.0), c(-10f64.sin(), 0.0)];
        let out = integrate(|_, y: &[Complex64; 2]| [y[1], -y[0]], 10.0, y10, 0.0, &RkSpec::default(), |_, _| false).unwrap();
        assert!((out.y[0] - c(1.0, 0.0)).norm() < 1e-9);
        assert!(out.y[1].norm() < 1e-9);
    }

    #[test]
    fn rescaling_hook_preserves_direction() {
        let lam = c(5.0, 0.0);
        let mut log_scale = 0.0;
        let out = integrate(
            |_, y: &[Complex64; 1]| [lam * y[0]],
            0.0,
            [c(1.0, 0.0)],
            20.0,
            &RkSpec::default(),
            |_, y| {
                let n = y[0].norm();
                if n > 2.0 {
                    y[0] /= n;
                    log_scale += n.ln();
                    true
                } else {
                    false
                }
            },
        )
        .unwrap();
        let total = out.y[0].norm().ln() + log_scale;
        assert!((total - 100.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn step_budget_exhaustion() {
        let spec = RkSpec {
            max_steps: 10,
            ..RkSpec::default()
        };
        let r = integrate(|_, y: &[Complex64; 1]| [y[0] * 50.0], 0.0, [c(1.0, 0.0)], 10.0, &spec, |_, _| false);
        assert!(matches!(r, Err(RkError::MaxSteps(10))));
    }
}
