//! Action integrals between turning points and their `mu` derivatives.
//!
//! Each integral runs along the straight segment joining two turning points.
//! On a segment with midpoint value `w_mid` the integrand is
//! `q_mid * sqrt(w(t) / w_mid)`, with `q_mid` a square root of `w_mid`
//! chosen positive at real `mu` and continued in `mu` from there.

use crate::numerics::quadrature::{integrate_segment_nodes, QuadratureError, QuadratureSpec, SegmentNode};
use crate::potential::Potential;
use crate::turning::{classify, continue_in_mu, ContinuationOptions, LobeKind, TurningConfiguration, TurningError};
use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use std::f64::consts::FRAC_PI_4;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActionError {
    #[error(transparent)]
    Turning(#[from] TurningError),
    #[error("quadrature failed on segment {segment}: {source}")]
    Quadrature {
        segment: &'static str,
        #[source]
        source: QuadratureError,
    },
    #[error("branch tracking failed on segment {segment} near mu = {mu}")]
    BranchTracking { segment: &'static str, mu: Complex64 },
    #[error("segment {segment} leaves the analyticity strip")]
    OutsideStrip { segment: &'static str },
    #[error("expected a {expected} configuration at mu = {mu}")]
    KindMismatch { expected: &'static str, mu: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionKind {
    Single {
        i: Complex64,
        d_i: Complex64,
    },
    Double {
        i_l: Complex64,
        i_r: Complex64,
        j: Complex64,
        d_i_l: Complex64,
        d_i_r: Complex64,
        d_j: Complex64,
    },
}

/// How the square-root branches were fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchAnchor {
    /// Real `mu` at which every integrand is positive.
    pub anchor_mu: f64,
    /// Number of `mu` steps from the anchor to the target.
    pub steps: usize,
    /// Per segment: `+1` if the continued midpoint root equals the principal
    /// square root at the target, `-1` otherwise.
    pub signs: Vec<i8>,
    pub mid_values: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    pub mu: Complex64,
    pub kind: ActionKind,
    pub branch_anchor: BranchAnchor,
    /// Turning points at `mu` used for the integrals.
    pub config: TurningConfiguration,
}

impl ActionSet {
    /// `(I, I')` for single lobes and `(I_l, I_l')` for double lobes.
    pub fn primary(&self) -> (Complex64, Complex64) {
        match self.kind {
            ActionKind::Single { i, d_i } => (i, d_i),
            ActionKind::Double { i_l, d_i_l, .. } => (i_l, d_i_l),
        }
    }

    pub fn j(&self) -> Option<(Complex64, Complex64)> {
        match self.kind {
            ActionKind::Double { j, d_j, .. } => Some((j, d_j)),
            _ => None,
        }
    }

    pub fn conj(&self) -> ActionSet {
        let kind = match self.kind {
            ActionKind::Single { i, d_i } => ActionKind::Single {
                i: i.conj(),
                d_i: d_i.conj(),
            },
            ActionKind::Double {
                i_l,
                i_r,
                j,
                d_i_l,
                d_i_r,
                d_j,
            } => ActionKind::Double {
                i_l: i_l.conj(),
                i_r: i_r.conj(),
                j: j.conj(),
                d_i_l: d_i_l.conj(),
                d_i_r: d_i_r.conj(),
                d_j: d_j.conj(),
            },
        };
        ActionSet {
            mu: self.mu.conj(),
            kind,
            branch_anchor: self.branch_anchor.clone(),
            config: self.config.conj(),
        }
    }

    /// Largest componentwise distance to another action set (values and
    /// derivatives).
    pub fn distance(&self, other: &ActionSet) -> f64 {
        let flat = |a: &ActionSet| match a.kind {
            ActionKind::Single { i, d_i } => vec![i, d_i],
            ActionKind::Double {
                i_l,
                i_r,
                j,
                d_i_l,
                d_i_r,
                d_j,
            } => vec![i_l, i_r, j, d_i_l, d_i_r, d_j],
        };
        let (a, b) = (flat(self), flat(other));
        if a.len() != b.len() {
            return f64::INFINITY;
        }
        a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

impl Serialize for ActionSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Triple {
            #[serde(rename = "Il")]
            i_l: Complex64,
            #[serde(rename = "Ir")]
            i_r: Complex64,
            #[serde(rename = "J")]
            j: Complex64,
        }
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("mu", &self.mu)?;
        match self.kind {
            ActionKind::Single { i, d_i } => {
                m.serialize_entry("I", &i)?;
                m.serialize_entry("dI", &d_i)?;
            }
            ActionKind::Double {
                i_l,
                i_r,
                j,
                d_i_l,
                d_i_r,
                d_j,
            } => {
                m.serialize_entry("I", &Triple { i_l, i_r, j })?;
                m.serialize_entry(
                    "dI",
                    &Triple {
                        i_l: d_i_l,
                        i_r: d_i_r,
                        j: d_j,
                    },
                )?;
            }
        }
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionOptions {
    pub quadrature: QuadratureSpec,
    /// Endpoint offsets below `linear_zone * |b - a|` use the linear model
    /// `w ~ w'(endpoint) * offset`.
    pub linear_zone: f64,
}

impl Default for ActionOptions {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSpec::default(),
            linear_zone: 1e-7,
        }
    }
}

/// One integration segment: endpoints and the sign `s` in `w = s (V^2 - mu^2)`.
#[derive(Debug, Clone, Copy)]
struct Segment {
    name: &'static str,
    a: Complex64,
    b: Complex64,
    sign: f64,
}

fn segments(cfg: &TurningConfiguration) -> Vec<Segment> {
    match cfg.kind {
        LobeKind::SingleLobe { alpha_l, alpha_r } => vec![Segment {
            name: "I",
            a: alpha_l,
            b: alpha_r,
            sign: 1.0,
        }],
        LobeKind::DoubleLobe {
            alpha_l,
            beta_l,
            beta_r,
            alpha_r,
            ..
        } => vec![
            Segment {
                name: "I_l",
                a: alpha_l,
                b: beta_l,
                sign: 1.0,
            },
            Segment {
                name: "I_r",
                a: beta_r,
                b: alpha_r,
                sign: 1.0,
            },
            Segment {
                name: "J",
                a: beta_l,
                b: beta_r,
                sign: -1.0,
            },
        ],
    }
}

fn w_at(v: &Potential, mu: Complex64, sign: f64, x: Complex64) -> Complex64 {
    let vx = v.eval_unchecked(x);
    (vx * vx - mu * mu) * sign
}

fn mid_value(v: &Potential, mu: Complex64, seg: &Segment) -> Complex64 {
    w_at(v, mu, seg.sign, (seg.a + seg.b) * 0.5)
}

fn pick_root(w: Complex64, previous: Complex64) -> Complex64 {
    let r = w.sqrt();
    if (r - previous).norm() <= (r + previous).norm() {
        r
    } else {
        -r
    }
}

/// Turning points and midpoint roots at `mu`, walked from the real anchor
/// `Re mu` along a vertical path.
fn walk_to(
    v: &Potential,
    mu: Complex64,
    expected_double: bool,
) -> Result<(TurningConfiguration, Vec<Complex64>, usize), ActionError> {
    let anchor = classify(v, mu.re)?;
    if anchor.is_double() != expected_double {
        return Err(ActionError::KindMismatch {
            expected: if expected_double { "double-lobe" } else { "single-lobe" },
            mu,
        });
    }
    let mut q: Vec<Complex64> = segments(&anchor)
        .iter()
        .map(|s| mid_value(v, anchor.mu, s).sqrt())
        .collect();
    if mu.im == 0.0 {
        return Ok((anchor, q, 0));
    }
    let opts = ContinuationOptions::for_mu0(mu.re);
    let mut n = ((mu.im.abs() / (opts.eps / 16.0)).ceil() as usize).max(4);
    'attempt: for _ in 0..4 {
        let mut cfg = anchor.clone();
        q = segments(&anchor)
            .iter()
            .map(|s| mid_value(v, anchor.mu, s).sqrt())
            .collect();
        for k in 1..=n {
            let mu_k = Complex64::new(mu.re, mu.im * k as f64 / n as f64);
            cfg = continue_in_mu(v, &cfg, mu_k, 1, &opts)?;
            for (qi, seg) in q.iter_mut().zip(segments(&cfg)) {
                let next = pick_root(mid_value(v, mu_k, &seg), *qi);
                if (next / *qi).arg().abs() > FRAC_PI_4 {
                    n *= 4;
                    continue 'attempt;
                }
                *qi = next;
            }
        }
        cfg.mu = mu;
        return Ok((cfg, q, n));
    }
    Err(ActionError::BranchTracking {
        segment: "midpoint",
        mu,
    })
}

/// Integrates `q` and `-s mu / q` over a segment.
fn integrate(
    v: &Potential,
    mu: Complex64,
    seg: &Segment,
    q_mid: Complex64,
    opts: &ActionOptions,
) -> Result<(Complex64, Complex64), ActionError> {
    if !v.in_strip(seg.a) || !v.in_strip(seg.b) {
        return Err(ActionError::OutsideStrip { segment: seg.name });
    }
    let len = (seg.b - seg.a).norm();
    let zone = opts.linear_zone * len;
    let w_mid = q_mid * q_mid;
    let slope = |x: Complex64| {
        let (vx, dv) = v.eval_with_derivative_unchecked(x);
        vx * dv * 2.0 * seg.sign
    };
    let (slope_a, slope_b) = (slope(seg.a), slope(seg.b));
    let w_node = |n: &SegmentNode| {
        if n.from_a.norm() < zone {
            slope_a * n.from_a
        } else if n.from_b.norm() < zone {
            slope_b * n.from_b
        } else {
            w_at(v, mu, seg.sign, n.t)
        }
    };
    let q_of = |n: &SegmentNode| q_mid * (w_node(n) / w_mid).sqrt();
    let fail = |source| ActionError::Quadrature {
        segment: seg.name,
        source,
    };
    let value = integrate_segment_nodes(|n| q_of(&n), seg.a, seg.b, &opts.quadrature)
        .map_err(fail)?
        .value;
    let deriv = integrate_segment_nodes(|n| -seg.sign * mu / q_of(&n), seg.a, seg.b, &opts.quadrature)
        .map_err(fail)?
        .value;
    Ok((value, deriv))
}

fn compute(v: &Potential, mu: Complex64, double: bool, opts: &ActionOptions) -> Result<ActionSet, ActionError> {
    let (cfg, q, steps) = walk_to(v, mu, double)?;
    let segs = segments(&cfg);
    let mut results = Vec::with_capacity(segs.len());
    for (seg, &qm) in segs.iter().zip(&q) {
        results.push(integrate(v, mu, seg, qm, opts)?);
    }
    let signs = segs
        .iter()
        .zip(&q)
        .map(|(s, &qm)| {
            let principal = mid_value(v, mu, s).sqrt();
            if (principal - qm).norm() <= (principal + qm).norm() {
                1
            } else {
                -1
            }
        })
        .collect();
    let kind = if double {
        ActionKind::Double {
            i_l: results[0].0,
            i_r: results[1].0,
            j: results[2].0,
            d_i_l: results[0].1,
            d_i_r: results[1].1,
            d_j: results[2].1,
        }
    } else {
        ActionKind::Single {
            i: results[0].0,
            d_i: results[0].1,
        }
    };
    Ok(ActionSet {
        mu,
        kind,
        branch_anchor: BranchAnchor {
            anchor_mu: mu.re,
            steps,
            signs,
            mid_values: q,
        },
        config: cfg,
    })
}

/// `I(mu)` and `I'(mu)` for a single lobe. The configuration fixes the lobe
/// type; turning points are recomputed at `Re mu` and continued to `mu`.
pub fn action_single(v: &Potential, cfg: &TurningConfiguration, mu: Complex64) -> Result<ActionSet, ActionError> {
    action_single_with(v, cfg, mu, &ActionOptions::default())
}

pub fn action_single_with(
    v: &Potential,
    cfg: &TurningConfiguration,
    mu: Complex64,
    opts: &ActionOptions,
) -> Result<ActionSet, ActionError> {
    if cfg.is_double() {
        return Err(ActionError::KindMismatch {
            expected: "single-lobe",
            mu,
        });
    }
    compute(v, mu, false, opts)
}

/// `I_l`, `I_r`, `J` and their derivatives for a double lobe.
pub fn action_double(v: &Potential, cfg: &TurningConfiguration, mu: Complex64) -> Result<ActionSet, ActionError> {
    action_double_with(v, cfg, mu, &ActionOptions::default())
}

pub fn action_double_with(
    v: &Potential,
    cfg: &TurningConfiguration,
    mu: Complex64,
    opts: &ActionOptions,
) -> Result<ActionSet, ActionError> {
    if !cfg.is_double() {
        return Err(ActionError::KindMismatch {
            expected: "double-lobe",
            mu,
        });
    }
    compute(v, mu, true, opts)
}

/// Dispatches on the configuration kind.
pub fn actions(v: &Potential, cfg: &TurningConfiguration, mu: Complex64) -> Result<ActionSet, ActionError> {
    actions_with(v, cfg, mu, &ActionOptions::default())
}

pub fn actions_with(
    v: &Potential,
    cfg: &TurningConfiguration,
    mu: Complex64,
    opts: &ActionOptions,
) -> Result<ActionSet, ActionError> {
    compute(v, mu, cfg.is_double(), opts)
}
