//! Tanh-sinh (double exponential) quadrature along straight complex segments.
//!
//! The substitution `s = tanh(π/2 · sinh t)` pushes the endpoints to
//! `t = ±∞` and makes the transformed integrand decay double exponentially,
//! so algebraic endpoint singularities of order `> -1` are integrated at the
//! same rate as smooth integrands. Nodes near an endpoint are generated from
//! the complement `1 - |s|`, computed without cancellation, and handed to the
//! integrand as an explicit offset from that endpoint.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Tolerances for [`integrate_segment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Finest level allowed; level `l` evaluates at most `2^l` nodes.
    pub max_level: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_level: 14,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("tanh-sinh quadrature did not converge: estimate {estimate}, last correction {correction:e}")]
    NonConvergence { estimate: Complex64, correction: f64 },
    #[error("integrand returned a non-finite value at t = {at}")]
    NonFinite { at: Complex64 },
}

/// A quadrature node on the segment `[a, b]`.
///
/// `from_a = t - a` and `from_b = t - b` are exact to working precision even
/// when `t` itself rounds onto an endpoint.
#[derive(Debug, Clone, Copy)]
pub struct SegmentNode {
    pub t: Complex64,
    pub from_a: Complex64,
    pub from_b: Complex64,
}

/// Result of a quadrature together with its convergence diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub level: u32,
    pub evaluations: usize,
}

// Beyond |t| = 4.5 the complement 1 - |s| is below 1e-60.
const T_MAX: f64 = 4.5;

struct Abscissa {
    /// 1 - s for s = tanh(π/2 sinh t), t >= 0
    complement: f64,
    weight: f64,
}

fn abscissa(t: f64) -> Abscissa {
    let u = FRAC_PI_2 * t.sinh();
    let e = (-2.0 * u).exp();
    let complement = 2.0 * e / (1.0 + e);
    let weight = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
    Abscissa { complement, weight }
}

/// Integrates `f` along the straight segment from `a` to `b`.
pub fn integrate_segment<F>(
    mut f: F,
    a: Complex64,
    b: Complex64,
    spec: &QuadratureSpec,
) -> Result<Complex64, QuadratureError>
where
    F: FnMut(Complex64) -> Complex64,
{
    integrate_segment_nodes(
        |node| {
            // A node that rounds onto an endpoint carries no information for
            // an integrand that only sees `t`.
            if node.t == a || node.t == b {
                Complex64::new(0.0, 0.0)
            } else {
                f(node.t)
            }
        },
        a,
        b,
        spec,
    )
    .map(|r| r.value)
}

/// Like [`integrate_segment`], but the integrand sees each node's offsets
/// from both endpoints, which lets it evaluate singular or vanishing factors
/// accurately right next to an endpoint.
pub fn integrate_segment_nodes<F>(
    mut f: F,
    a: Complex64,
    b: Complex64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult, QuadratureError>
where
    F: FnMut(SegmentNode) -> Complex64,
{
    let half = (b - a) * 0.5;
    if half.norm() == 0.0 {
        return Ok(QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            level: 0,
            evaluations: 0,
        });
    }

    let mut evaluations = 0usize;
    let mut eval_pair = |t: f64, evaluations: &mut usize| -> Result<(Complex64, f64), QuadratureError> {
        let ab = abscissa(t);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        // node near b: s = 1 - c ; node near a: s = -(1 - c)
        let offsets = if t == 0.0 {
            vec![(half, -half)]
        } else {
            let c = ab.complement;
            vec![(half * (2.0 - c), -half * c), (half * c, -half * (2.0 - c))]
        };
        for (from_a, from_b) in offsets {
            let t_node = if from_a.norm() <= from_b.norm() { a + from_a } else { b + from_b };
            let node = SegmentNode {
                t: t_node,
                from_a,
                from_b,
            };
            let v = f(node);
            *evaluations += 1;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(QuadratureError::NonFinite { at: t_node });
            }
            sum += v * ab.weight;
            l1 += v.norm() * ab.weight;
        }
        Ok((sum, l1))
    };

    // Level 0: step 1 over [-T_MAX, T_MAX].
    let mut step = 1.0;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut l1 = 0.0;
    let n0 = T_MAX as i64;
    for k in 0..=n0 {
        let (s, a1) = eval_pair(k as f64 * step, &mut evaluations)?;
        sum += s;
        l1 += a1;
    }
    let mut estimate = half * sum * step;
    let mut last_correction = f64::INFINITY;

    let mut level = 0u32;
    loop {
        level += 1;
        let nodes_at_level = (2.0 * T_MAX / (step * 0.5)) as u64;
        if level > 24 || nodes_at_level > (1u64 << spec.max_level) {
            return Err(QuadratureError::NonConvergence {
                estimate,
                correction: last_correction,
            });
        }
        step *= 0.5;
        // new nodes are odd multiples of the halved step
        let mut k = 1i64;
        loop {
            let t = k as f64 * step;
            if t > T_MAX {
                break;
            }
            let (s, a1) = eval_pair(t, &mut evaluations)?;
            sum += s;
            l1 += a1;
            k += 2;
        }
        let refined = half * sum * step;
        let correction = (refined - estimate).norm();
        let scale = refined.norm().max(1e-3 * half.norm() * l1 * step);
        estimate = refined;
        last_correction = correction;
        if level >= 3 && correction <= spec.rel_tol * scale {
            return Ok(QuadratureResult {
                value: estimate,
                error_estimate: correction,
                level,
                evaluations,
            });
        }
        if scale == 0.0 && level >= 3 {
            return Ok(QuadratureResult {
                value: estimate,
                error_estimate: 0.0,
                level,
                evaluations,
            });
        }
    }
}

/// Nine-point Gauss-Legendre rule on a short segment; used for incremental
/// path integrals where the integrand is smooth on the segment.
pub fn gauss_legendre_segment<F>(mut f: F, a: Complex64, b: Complex64) -> Complex64
where
    F: FnMut(Complex64) -> Complex64,
{
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.330_239_355_001_259_8),
        (0.324_253_423_403_808_9, 0.312_347_077_040_002_84),
        (0.613_371_432_700_590_4, 0.260_610_696_402_935_5),
        (0.836_031_107_326_635_8, 0.180_648_160_694_857_4),
        (0.968_160_239_507_626_1, 0.081_274_388_361_574_4),
    ];
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let mut sum = f(mid) * NODES[0].1;
    for &(x, w) in &NODES[1..] {
        sum += (f(mid + half * x) + f(mid - half * x)) * w;
    }
    sum * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let v = integrate_segment(|t| 1.0 / t.sqrt(), c(0.0), c(1.0), &QuadratureSpec::default()).unwrap();
        assert!((v - c(2.0)).norm() < 1e-10, "{v}");
    }

    #[test]
    fn sine_half_period() {
        let v = integrate_segment(|t| t.sin(), c(0.0), c(PI), &QuadratureSpec::default()).unwrap();
        assert!((v - c(2.0)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn singular_at_upper_endpoint_with_offsets() {
        // ∫_0^1 (1 - t)^{-1/2} dt = 2, evaluated through the endpoint offset
        let r = integrate_segment_nodes(
            |n| 1.0 / (-n.from_b).sqrt(),
            c(0.0),
            c(1.0),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((r.value - c(2.0)).norm() < 1e-10, "{}", r.value);
    }

    #[test]
    fn inverse_sqrt_at_both_endpoints_with_offsets() {
        let r = integrate_segment_nodes(
            |n| 1.0 / (n.from_a * -n.from_b).sqrt(),
            c(-1.0),
            c(1.0),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((r.value - c(PI)).norm() < 1e-10, "{}", r.value);
    }

    #[test]
    fn closed_form_library() {
        let spec = QuadratureSpec::default();
        let cases: Vec<(Box<dyn Fn(Complex64) -> Complex64>, Complex64, Complex64, Complex64)> = vec![
            (Box::new(|t: Complex64| t.exp()), c(0.0), c(1.0), c(std::f64::consts::E - 1.0)),
            (Box::new(|t: Complex64| t * t), c(-1.0), c(2.0), c(3.0)),
            (Box::new(|t: Complex64| 1.0 / (1.0 + t * t)), c(0.0), c(1.0), c(PI / 4.0)),
            (Box::new(|t: Complex64| (1.0 - t * t).sqrt()), c(-1.0), c(1.0), c(PI / 2.0)),
            (Box::new(|t: Complex64| 1.0 / (1.0 + t)), c(0.0), c(2.0), c(3f64.ln())),
            (Box::new(|t: Complex64| t.ln()), c(0.0), c(1.0), c(-1.0)),
            (Box::new(|t: Complex64| t.cos()), c(0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 1f64.sinh())),
            (Box::new(|t: Complex64| t.exp()), Complex64::new(0.0, 0.0), Complex64::new(0.0, PI), c(-2.0)),
            (Box::new(|t: Complex64| (t * (1.0 - t)).sqrt()), c(0.0), c(1.0), c(PI / 8.0)),
            (Box::new(|t: Complex64| 1.0 / t.cosh()), c(-30.0), c(30.0), c(4.0 * (15f64).tanh().atan())),
        ];
        for (i, (f, a, b, exact)) in cases.iter().enumerate() {
            let v = integrate_segment(f, *a, *b, &spec).unwrap();
            let err = (v - exact).norm() / exact.norm().max(1.0);
            assert!(err < 1e-9, "case {i}: got {v}, expected {exact}");
        }
    }

    #[test]
    fn sech_action_closed_form() {
        // ∫ sqrt(sech² t - 1/4) over the lobe of sech at level 1/2 equals π/2
        let a = -(2f64).acosh();
        let spec = QuadratureSpec::default();
        let v = integrate_segment(
            |t| {
                let s = 1.0 / t.cosh();
                (s * s - 0.25).sqrt()
            },
            c(a),
            c(-a),
            &spec,
        )
        .unwrap();
        assert!((v.re - PI / 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn non_convergence_reported() {
        let spec = QuadratureSpec {
            rel_tol: 1e-15,
            max_level: 6,
        };
        let r = integrate_segment(|t| c((40.0 * t).sin().norm()), c(0.0), c(3.0), &spec);
        assert!(matches!(r, Err(QuadratureError::NonConvergence { .. })));
    }

    #[test]
    fn gauss_legendre_polynomial_exact() {
        let v = gauss_legendre_segment(|t| t.powi(9) + t * t, c(0.0), c(1.0));
        assert!((v - c(0.1 + 1.0 / 3.0)).norm() < 1e-14);
    }
}
