//! Stokes lines: level curves `Re z(x; x0) = 0` of `z(x; x0) = ∫_{x0}^x f`,
//! `f = i sqrt(V^2 - mu^2)`, emanating from simple turning points.

use crate::numerics::quadrature::{gauss_legendre_segment, integrate_segment, QuadratureSpec};
use crate::potential::Potential;
use crate::turning::TurningConfiguration;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StokesError {
    #[error("turning point {x} is not simple (|dw/dx| = {derivative:e})")]
    NotSimple { x: Complex64, derivative: f64 },
    #[error("step collapse near x = {at}")]
    StepCollapse { at: Complex64 },
    #[error("direction index {0} is not 0, 1 or 2")]
    Direction(u8),
    #[error("launch integral failed: {0}")]
    Launch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub max_len: f64,
    /// Local position error allowed per step.
    pub step_tol: f64,
    pub launch_offset: f64,
    /// Tracing stops within this distance of another turning point.
    pub capture_radius: f64,
    pub max_step: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            max_len: 6.0,
            step_tol: 1e-9,
            launch_offset: 1e-4,
            capture_radius: 1e-3,
            max_step: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxLength,
    StripExit,
    TurningPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct Polyline {
    pub source: usize,
    pub dir: u8,
    /// Launch argument in `[0, 2 pi)`.
    pub angle: f64,
    pub vertices: Vec<Complex64>,
    pub termination: Termination,
    /// Index of the turning point reached, for `TurningPoint` terminations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    pub arc_length: f64,
    /// Largest `|Re z|` observed at the vertices.
    pub max_level_error: f64,
}

fn sqrt_near(w: Complex64, reference: Complex64) -> Complex64 {
    let s = w.sqrt();
    if (s - reference).norm_sqr() <= (s + reference).norm_sqr() {
        s
    } else {
        -s
    }
}

fn rem_2pi(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI - 1e-12 {
        0.0
    } else {
        r
    }
}

/// `dw/dx` at `x0` with `w = V^2 - mu^2`.
fn w_prime(v: &Potential, x0: Complex64) -> Complex64 {
    let (vx, dv) = v.eval_with_derivative_unchecked(x0);
    2.0 * vx * dv
}

/// The three launch arguments `(2/3)(n pi - arg sqrt(w'(x0)))`, indexed by
/// direction: `2 pi d / 3` from a base of `0` where `Re w' > 0` (left-edge
/// points) and `pi / 3` otherwise.
pub fn launch_angles(v: &Potential, x0: Complex64) -> [f64; 3] {
    let wp = w_prime(v, x0);
    let psi = wp.sqrt().arg();
    let base = if wp.re > 0.0 { 0.0 } else { PI / 3.0 };
    let mut out = [0.0; 3];
    for n in 0..3 {
        let phi = rem_2pi(2.0 / 3.0 * (n as f64 * PI - psi));
        let d = (((phi - base).rem_euclid(2.0 * PI)) / (2.0 * PI / 3.0)).round() as usize % 3;
        out[d] = phi;
    }
    out
}

struct Tracer<'a> {
    v: &'a Potential,
    mu: Complex64,
}

impl Tracer<'_> {
    fn f(&self, x: Complex64, reference: Complex64) -> Complex64 {
        let vx = self.v.eval_unchecked(x);
        Complex64::i() * sqrt_near(vx * vx - self.mu * self.mu, -Complex64::i() * reference)
    }

    /// Unit tangent of the level curve, oriented along `prev`.
    fn tangent(&self, x: Complex64, prev: Complex64) -> Complex64 {
        let vx = self.v.eval_unchecked(x);
        let f = Complex64::i() * (vx * vx - self.mu * self.mu).sqrt();
        let t = Complex64::i() * f.conj() / f.norm();
        if (t * prev.conj()).re >= 0.0 {
            t
        } else {
            -t
        }
    }

    fn rk4(&self, x: Complex64, dir: Complex64, ds: f64) -> (Complex64, Complex64) {
        let k1 = self.tangent(x, dir);
        let k2 = self.tangent(x + 0.5 * ds * k1, k1);
        let k3 = self.tangent(x + 0.5 * ds * k2, k1);
        let k4 = self.tangent(x + ds * k3, k1);
        (x + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k4)
    }

    /// `∫ f` along the segment with the branch continued from `f_start`.
    fn increment(&self, a: Complex64, b: Complex64, f_start: Complex64) -> (Complex64, Complex64) {
        let dz = gauss_legendre_segment(|t| self.f(t, f_start), a, b);
        (dz, self.f(b, f_start))
    }
}

/// Traces the Stokes line from turning point `points[source]` in direction
/// `dir`; the other points of `points` act as terminal attractors.
pub fn trace_stokes(
    v: &Potential,
    mu: Complex64,
    points: &[Complex64],
    source: usize,
    dir: u8,
    opts: &TraceOptions,
) -> Result<Polyline, StokesError> {
    if dir > 2 {
        return Err(StokesError::Direction(dir));
    }
    let x0 = points[source];
    let wp = w_prime(v, x0);
    if wp.norm() < 1e-10 {
        return Err(StokesError::NotSimple {
            x: x0,
            derivative: wp.norm(),
        });
    }
    let angle = launch_angles(v, x0)[dir as usize];
    let tr = Tracer { v, mu };
    let e = Complex64::from_polar(1.0, angle);
    let mut x = x0 + opts.launch_offset * e;
    let spec = QuadratureSpec::default();
    let mut z = integrate_segment(
        |t| {
            let vt = v.eval_unchecked(t);
            Complex64::i() * (vt * vt - mu * mu).sqrt()
        },
        x0,
        x,
        &spec,
    )
    .map_err(|q| StokesError::Launch(q.to_string()))?;
    let vx = v.eval_unchecked(x);
    let mut fx = Complex64::i() * (vx * vx - mu * mu).sqrt();
    let mut heading = e;
    let mut vertices = vec![x0, x];
    let mut arc = opts.launch_offset;
    let mut max_err = z.re.abs();
    let strip = v.strip_halfwidth();
    let others: Vec<(usize, Complex64)> =
        points.iter().copied().enumerate().filter(|(j, _)| *j != source).collect();
    let mut ds = 0.1 * opts.launch_offset;
    loop {
        let near = others.iter().map(|(_, p)| (x - p).norm()).fold(f64::INFINITY, f64::min);
        if let Some(&(j, _)) = others.iter().find(|(_, p)| (x - *p).norm() <= opts.capture_radius) {
            return Ok(Polyline {
                source,
                dir,
                angle,
                vertices,
                termination: Termination::TurningPoint,
                target: Some(j),
                arc_length: arc,
                max_level_error: max_err,
            });
        }
        if arc >= opts.max_len || x.im.abs() >= strip {
            let termination = if x.im.abs() >= strip {
                Termination::StripExit
            } else {
                Termination::MaxLength
            };
            return Ok(Polyline {
                source,
                dir,
                angle,
                vertices,
                termination,
                target: None,
                arc_length: arc,
                max_level_error: max_err,
            });
        }
        let dist = near.min((x - x0).norm());
        ds = ds
            .min(opts.max_step)
            .min(0.25 * dist)
            .min((near - 0.5 * opts.capture_radius).max(0.25 * opts.capture_radius))
            .min(opts.max_len - arc + 1e-12);
        // step doubling error control
        let (full, _) = tr.rk4(x, heading, ds);
        let (half, h1) = tr.rk4(x, heading, 0.5 * ds);
        let (two, h2) = tr.rk4(half, h1, 0.5 * ds);
        let err = (full - two).norm();
        if err > opts.step_tol {
            ds *= (0.9 * (opts.step_tol / err).powf(0.2)).max(0.2);
            if ds < 1e-12 {
                return Err(StokesError::StepCollapse { at: x });
            }
            continue;
        }
        let mut xn = two;
        let (dz, mut fn_) = tr.increment(x, xn, fx);
        let mut zn = z + dz;
        // project back onto Re z = 0
        for _ in 0..2 {
            let delta = -zn.re * fn_.conj() / fn_.norm_sqr();
            if !(delta.re.is_finite() && delta.im.is_finite()) || delta.norm() > 0.5 * ds {
                break;
            }
            let (dz, f2) = tr.increment(xn, xn + delta, fn_);
            xn += delta;
            zn += dz;
            fn_ = f2;
        }
        arc += (xn - x).norm();
        let step_dir = xn - x;
        heading = if step_dir.norm() > 0.0 {
            let t = tr.tangent(xn, h2);
            if (t * step_dir.conj()).re >= 0.0 {
                t
            } else {
                -t
            }
        } else {
            h2
        };
        x = xn;
        z = zn;
        fx = fn_;
        max_err = max_err.max(z.re.abs());
        vertices.push(x);
        ds *= (0.9 * (opts.step_tol / err.max(1e-300)).powf(0.2)).min(2.0);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cut {
    pub source: usize,
    pub dir: u8,
    /// Index into `lines`.
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Connection {
    Bounded,
    Broken,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairStatus {
    pub pair: [usize; 2],
    pub status: Connection,
}

#[derive(Debug, Clone, Serialize)]
pub struct StokesGraph {
    pub mu: Complex64,
    pub labels: Vec<&'static str>,
    pub points: Vec<Complex64>,
    pub cuts: Vec<Cut>,
    pub lines: Vec<Polyline>,
    /// Lobe pairs and whether a Stokes line joins them.
    pub connections: Vec<PairStatus>,
    pub flags: Vec<String>,
}

impl StokesGraph {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("graph serializes")
    }

    pub fn connection(&self, a: usize, b: usize) -> Option<Connection> {
        self.connections
            .iter()
            .find(|p| p.pair == [a, b] || p.pair == [b, a])
            .map(|p| p.status)
    }
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let cross = |a: Complex64, b: Complex64| a.re * b.im - a.im * b.re;
    let d = cross(p2 - p1, q2 - q1);
    if d == 0.0 {
        return false;
    }
    let t = cross(q1 - p1, q2 - q1) / d;
    let u = cross(q1 - p1, p2 - p1) / d;
    t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0
}

fn polylines_cross(a: &[Complex64], b: &[Complex64]) -> bool {
    let bbox = |s: &[Complex64]| {
        s.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |m, z| {
            (m.0.min(z.re), m.1.max(z.re), m.2.min(z.im), m.3.max(z.im))
        })
    };
    for sa in a.windows(2) {
        let ba = bbox(sa);
        for sb in b.windows(2) {
            let bb = bbox(sb);
            if ba.1 < bb.0 || bb.1 < ba.0 || ba.3 < bb.2 || bb.3 < ba.2 {
                continue;
            }
            if segments_cross(sa[0], sa[1], sb[0], sb[1]) {
                return true;
            }
        }
    }
    false
}

/// Traces all three lines at every turning point of `cfg`, attaches the cuts
/// and reports whether each lobe's pair of points is joined.
pub fn build_graph(v: &Potential, cfg: &TurningConfiguration, opts: &TraceOptions) -> Result<StokesGraph, StokesError> {
    let points = cfg.points();
    let jobs: Vec<(usize, u8)> = (0..points.len()).flat_map(|s| (0..3u8).map(move |d| (s, d))).collect();
    let lines = jobs
        .par_iter()
        .map(|&(s, d)| trace_stokes(v, cfg.mu, &points, s, d, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let cut_dirs: Vec<(usize, u8)> = if cfg.is_double() {
        vec![(0, 1), (1, 2), (2, 1), (3, 2)]
    } else {
        vec![(0, 1), (1, 2)]
    };
    let cuts: Vec<Cut> = cut_dirs
        .iter()
        .map(|&(s, d)| Cut {
            source: s,
            dir: d,
            line: s * 3 + d as usize,
        })
        .collect();
    let pairs: Vec<[usize; 2]> = if cfg.is_double() { vec![[0, 1], [2, 3]] } else { vec![[0, 1]] };
    let joined = |a: usize, b: usize| {
        lines.iter().any(|l| {
            l.termination == Termination::TurningPoint
                && ((l.source == a && l.target == Some(b)) || (l.source == b && l.target == Some(a)))
        })
    };
    let connections = pairs
        .iter()
        .map(|&[a, b]| PairStatus {
            pair: [a, b],
            status: if joined(a, b) { Connection::Bounded } else { Connection::Broken },
        })
        .collect();
    let mut flags = Vec::new();
    for (li, line) in lines.iter().enumerate() {
        for cut in &cuts {
            if cut.line == li || cut.source == line.source {
                continue;
            }
            let cl = &lines[cut.line].vertices;
            // skip the shared endpoint of lines joining the cut's source
            let body: &[Complex64] = if line.target == Some(cut.source) && line.vertices.len() > 2 {
                &line.vertices[..line.vertices.len() - 1]
            } else {
                &line.vertices
            };
            if polylines_cross(body, &cl[1..]) {
                flags.push(format!("line {li} crosses cut at point {} dir {}", cut.source, cut.dir));
            }
        }
    }
    Ok(StokesGraph {
        mu: cfg.mu,
        labels: cfg.labels().to_vec(),
        points,
        cuts,
        lines,
        connections,
        flags,
    })
}

/// `Re z(base - i s) - Re z(base)` at `n` depths `s` in `(0, depth]`, with the
/// branch of `sqrt(V^2 - mu^2)` positive at the real point `base`.
pub fn vertical_probe(v: &Potential, mu: Complex64, base: f64, depth: f64, n: usize) -> Vec<(f64, f64)> {
    let b = Complex64::new(base, 0.0);
    let vb = v.eval_unchecked(b);
    let mut q = (vb * vb - mu * mu).sqrt();
    if q.re < 0.0 {
        q = -q;
    }
    let mut z = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    let mut x = b;
    for j in 1..=n {
        let xn = Complex64::new(base, -depth * j as f64 / n as f64);
        let q_start = q;
        let f = |t: Complex64| {
            let vt = v.eval_unchecked(t);
            Complex64::i() * sqrt_near(vt * vt - mu * mu, q_start)
        };
        z += gauss_legendre_segment(f, x, xn);
        let vn = v.eval_unchecked(xn);
        q = sqrt_near(vn * vn - mu * mu, q_start);
        x = xn;
        out.push((depth * j as f64 / n as f64, z.re));
    }
    out
}

/// Recomputes `Re z` along a polyline by dense Gauss-Legendre sums with
/// branch continuation, independently of the tracer's bookkeeping. Returns
/// `(arc length, |Re z|)` per vertex.
pub fn level_set_errors(v: &Potential, mu: Complex64, line: &Polyline) -> Vec<(f64, f64)> {
    let x0 = line.vertices[0];
    let x1 = line.vertices[1];
    let spec = QuadratureSpec { rel_tol: 1e-12, max_level: 16 };
    let mut z = integrate_segment(
        |t| {
            let vt = v.eval_unchecked(t);
            Complex64::i() * (vt * vt - mu * mu).sqrt()
        },
        x0,
        x1,
        &spec,
    )
    .expect("launch segment converges");
    let v1 = v.eval_unchecked(x1);
    let mut f_ref = Complex64::i() * (v1 * v1 - mu * mu).sqrt();
    let mut arc = (x1 - x0).norm();
    let mut out = vec![(arc, z.re.abs())];
    for w in line.vertices[1..].windows(2) {
        let m = 4;
        for k in 0..m {
            let a = w[0] + (w[1] - w[0]) * (k as f64 / m as f64);
            let b = w[0] + (w[1] - w[0]) * ((k + 1) as f64 / m as f64);
            let fr = f_ref;
            z += gauss_legendre_segment(
                |t| {
                    let vt = v.eval_unchecked(t);
                    Complex64::i() * sqrt_near(vt * vt - mu * mu, -Complex64::i() * fr)
                },
                a,
                b,
            );
            let vb = v.eval_unchecked(b);
            f_ref = Complex64::i() * sqrt_near(vb * vb - mu * mu, -Complex64::i() * fr);
        }
        arc += (w[1] - w[0]).norm();
        out.push((arc, z.re.abs()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Builtin;
    use crate::turning::{classify, continue_in_mu, ContinuationOptions};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn launch_args(g: &StokesGraph, source: usize) -> Vec<f64> {
        g.lines.iter().filter(|l| l.source == source).map(|l| l.angle).collect()
    }

    fn close_mod_2pi(a: f64, b: f64, tol: f64) -> bool {
        let d = (a - b).rem_euclid(2.0 * PI);
        d < tol || 2.0 * PI - d < tol
    }

    #[test]
    fn launch_arguments_for_real_mu() {
        let v = Potential::sech();
        let cfg = classify(&v, 0.5).unwrap();
        let g = build_graph(&v, &cfg, &TraceOptions::default()).unwrap();
        let expect_l = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];
        let expect_r = [PI / 3.0, PI, 5.0 * PI / 3.0];
        for (a, e) in launch_args(&g, 0).iter().zip(expect_l) {
            assert!(close_mod_2pi(*a, e, 1e-9), "{a} vs {e}");
        }
        for (a, e) in launch_args(&g, 1).iter().zip(expect_r) {
            assert!(close_mod_2pi(*a, e, 1e-9), "{a} vs {e}");
        }
        assert_eq!(g.lines.len(), 6);
        assert_eq!(g.lines.iter().filter(|l| l.source == 0).count(), 3);
    }

    #[test]
    fn real_line_reaches_opposite_point() {
        let v = Potential::sech();
        let cfg = classify(&v, 0.5).unwrap();
        let pts = cfg.points();
        let line = trace_stokes(&v, cfg.mu, &pts, 0, 0, &TraceOptions::default()).unwrap();
        assert_eq!(line.termination, Termination::TurningPoint);
        assert_eq!(line.target, Some(1));
        assert!((line.arc_length - 2.0 * 2f64.acosh()).abs() < 2e-3);
        assert!(line.vertices.iter().all(|z| z.im.abs() < 1e-7));
    }

    #[test]
    fn sech_graph_bounded_then_broken() {
        let v = Potential::sech();
        let cfg = classify(&v, 0.2).unwrap();
        let g = build_graph(&v, &cfg, &TraceOptions::default()).unwrap();
        assert_eq!(g.connection(0, 1), Some(Connection::Bounded));
        let opts = ContinuationOptions::for_mu0(0.2);
        let cfg = continue_in_mu(&v, &cfg, c(0.2, 0.01), 8, &opts).unwrap();
        let g = build_graph(&v, &cfg, &TraceOptions::default()).unwrap();
        assert_eq!(g.connection(0, 1), Some(Connection::Broken));
        assert!(g.lines.iter().all(|l| l.termination != Termination::TurningPoint));
    }

    #[test]
    fn double_sech_graph_topology() {
        let v = Potential::from_builtin(Builtin::double_sech(0.25, 2.0, 1.0));
        let cfg = classify(&v, 0.2).unwrap();
        let g = build_graph(&v, &cfg, &TraceOptions::default()).unwrap();
        assert_eq!(g.points.len(), 4);
        assert_eq!(g.lines.len(), 12);
        assert_eq!(g.cuts.len(), 4);
        assert_eq!(g.connection(0, 1), Some(Connection::Bounded));
        assert_eq!(g.connection(2, 3), Some(Connection::Bounded));
        let j = g.to_json();
        for key in ["mu", "points", "cuts", "lines"] {
            assert!(j.get(key).is_some(), "{key}");
        }
        assert!(j["lines"][0]["vertices"][0].is_array());
        assert!(j["lines"][0]["termination"].is_string());
    }

    #[test]
    fn level_set_fidelity() {
        let v = Potential::sech();
        let cfg = classify(&v, 0.3).unwrap();
        let cfg = continue_in_mu(&v, &cfg, c(0.3, 0.004), 4, &ContinuationOptions::for_mu0(0.3)).unwrap();
        let g = build_graph(&v, &cfg, &TraceOptions::default()).unwrap();
        for line in &g.lines {
            for (arc, e) in level_set_errors(&v, cfg.mu, line) {
                assert!(e <= 1e-6 * (1.0 + arc), "line {} {}: {e:e} at {arc}", line.source, line.dir);
            }
        }
    }

    #[test]
    fn probe_monotone_below_lobe() {
        let v = Potential::sech();
        let s = vertical_probe(&v, c(0.2, 0.0), 0.0, 1.2, 40);
        assert!(s.windows(2).all(|w| w[1].1 > w[0].1));
        assert!(s[0].1 > 0.0);
        let v = Potential::from_builtin(Builtin::double_sech(0.25, 2.0, 1.0));
        for base in [-2.0, 2.0] {
            let s = vertical_probe(&v, c(0.2, 0.0), base, 1.0, 40);
            assert!(s.windows(2).all(|w| w[1].1 > w[0].1));
        }
    }

    #[test]
    fn bad_direction() {
        let v = Potential::sech();
        let cfg = classify(&v, 0.5).unwrap();
        assert!(matches!(
            trace_stokes(&v, cfg.mu, &cfg.points(), 0, 3, &TraceOptions::default()),
            Err(StokesError::Direction(3))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn fidelity_for_random_mu(re in 0.15f64..0.8, im in -0.02f64..0.02, d in 0u8..3) {
            let v = Potential::sech();
            let cfg = classify(&v, re).unwrap();
            let cfg = continue_in_mu(&v, &cfg, c(re, im), 4, &ContinuationOptions::for_mu0(re)).unwrap();
            let line = trace_stokes(&v, cfg.mu, &cfg.points(), 1, d, &TraceOptions::default()).unwrap();
            for (arc, e) in level_set_errors(&v, cfg.mu, &line) {
                prop_assert!(e <= 1e-6 * (1.0 + arc));
            }
        }
    }
}
