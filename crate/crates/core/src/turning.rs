//! Turning points: roots of `V(x)^2 - mu^2`, their lobe classification at real
//! `mu` and their continuation into the complex `mu` plane.

use crate::potential::{Potential, PotentialError};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TurningError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("mu0 = {mu0} is outside (0, V0) with V0 = {v0}")]
    MuOutOfRange { mu0: f64, v0: f64 },
    #[error("mu0 = {mu0} is within the guard band of the critical value {value} of |V|")]
    NearCriticalValue { mu0: f64, value: f64 },
    #[error("degenerate turning point at x = {x} (|V'| = {derivative:e})")]
    Degenerate { x: f64, derivative: f64 },
    #[error("found {count} real turning points, expected 2 or 4")]
    RootCount { count: usize, roots: Vec<f64> },
    #[error("turning points collide near mu = {mu} (separation {separation:e})")]
    Collision { mu: Complex64, separation: f64 },
    #[error("Newton corrector failed to converge near mu = {mu}")]
    NewtonDivergence { mu: Complex64 },
    #[error("ordering by real part lost at mu = {mu}")]
    OrderingLost { mu: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LobeKind {
    SingleLobe {
        alpha_l: Complex64,
        alpha_r: Complex64,
    },
    DoubleLobe {
        alpha_l: Complex64,
        beta_l: Complex64,
        beta_r: Complex64,
        alpha_r: Complex64,
        /// `+1` when `V(beta_l) = V(beta_r)`, `-1` when `V(beta_l) = -V(beta_r)`.
        middle_sign: i8,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurningConfiguration {
    pub mu: Complex64,
    pub kind: LobeKind,
    /// Sign of `Re V'` at each turning point, left to right.
    pub derivative_signs: Vec<i8>,
}

impl TurningConfiguration {
    pub fn points(&self) -> Vec<Complex64> {
        match self.kind {
            LobeKind::SingleLobe { alpha_l, alpha_r } => vec![alpha_l, alpha_r],
            LobeKind::DoubleLobe {
                alpha_l,
                beta_l,
                beta_r,
                alpha_r,
                ..
            } => vec![alpha_l, beta_l, beta_r, alpha_r],
        }
    }

    pub fn labels(&self) -> &'static [&'static str] {
        match self.kind {
            LobeKind::SingleLobe { .. } => &["alpha_l", "alpha_r"],
            LobeKind::DoubleLobe { .. } => &["alpha_l", "beta_l", "beta_r", "alpha_r"],
        }
    }

    pub fn is_double(&self) -> bool {
        matches!(self.kind, LobeKind::DoubleLobe { .. })
    }

    pub fn middle_sign(&self) -> Option<i8> {
        match self.kind {
            LobeKind::DoubleLobe { middle_sign, .. } => Some(middle_sign),
            _ => None,
        }
    }

    fn with_points(&self, mu: Complex64, p: &[Complex64]) -> Self {
        let kind = match self.kind {
            LobeKind::SingleLobe { .. } => LobeKind::SingleLobe {
                alpha_l: p[0],
                alpha_r: p[1],
            },
            LobeKind::DoubleLobe { middle_sign, .. } => LobeKind::DoubleLobe {
                alpha_l: p[0],
                beta_l: p[1],
                beta_r: p[2],
                alpha_r: p[3],
                middle_sign,
            },
        };
        Self {
            mu,
            kind,
            derivative_signs: self.derivative_signs.clone(),
        }
    }

    /// Largest `|V(x0)^2 - mu^2|` over the stored points.
    pub fn max_residual(&self, v: &Potential) -> f64 {
        self.points()
            .iter()
            .map(|&x| {
                let vx = v.eval_unchecked(x);
                (vx * vx - self.mu * self.mu).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Conjugate configuration (points at `conj mu`).
    pub fn conj(&self) -> Self {
        let p: Vec<Complex64> = self.points().iter().map(|z| z.conj()).collect();
        self.with_points(self.mu.conj(), &p)
    }

    pub fn report(&self) -> ConfigurationReport {
        ConfigurationReport {
            mu: self.mu,
            kind: if self.is_double() { "double-lobe" } else { "single-lobe" },
            labels: self.labels().to_vec(),
            points: self.points(),
            middle_sign: self.middle_sign(),
            derivative_signs: self.derivative_signs.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigurationReport {
    pub mu: Complex64,
    pub kind: &'static str,
    pub labels: Vec<&'static str>,
    pub points: Vec<Complex64>,
    pub middle_sign: Option<i8>,
    pub derivative_signs: Vec<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub grid_points: usize,
    /// Reject roots with `|V'| < degeneracy_rel * max |V'|`.
    pub degeneracy_rel: f64,
    /// Reject `mu0` within `guard_rel * V0` of a critical value of `|V|`.
    pub guard_rel: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            grid_points: 2048,
            degeneracy_rel: 1e-6,
            guard_rel: 1e-4,
        }
    }
}

fn residual_tol(mu: Complex64) -> f64 {
    1e-12 * (1.0 + mu.norm_sqr())
}

/// Safeguarded Newton on a bracket `[a, b]` of `V^2 - mu^2` (real axis).
fn refine_real_root(v: &Potential, mu: f64, mut a: f64, mut b: f64) -> f64 {
    let f = |x: f64| {
        let (vx, dv) = v.eval_with_derivative_unchecked(Complex64::new(x, 0.0));
        (vx.re * vx.re - mu * mu, 2.0 * vx.re * dv.re)
    };
    let (fa, _) = f(a);
    if fa > 0.0 {
        std::mem::swap(&mut a, &mut b);
    }
    // now f(a) <= 0 <= f(b)
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let inside = (newton - a) * (newton - b) < 0.0;
        let next = if inside && dfx.is_finite() && dfx != 0.0 {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Finds and classifies the real turning points at `mu0`.
pub fn classify(v: &Potential, mu0: f64) -> Result<TurningConfiguration, TurningError> {
    classify_with(v, mu0, &ClassifyOptions::default())
}

pub fn classify_with(v: &Potential, mu0: f64, opts: &ClassifyOptions) -> Result<TurningConfiguration, TurningError> {
    let profile = v.profile()?;
    let v0 = profile.v0;
    if !(mu0 > 0.0 && mu0 < v0) {
        return Err(TurningError::MuOutOfRange { mu0, v0 });
    }
    for e in &profile.extrema {
        if (e.value.abs() - mu0).abs() < opts.guard_rel * v0 {
            return Err(TurningError::NearCriticalValue { mu0, value: e.value });
        }
    }
    let (lo, hi) = profile
        .hull_above(0.5 * mu0)
        .ok_or(TurningError::MuOutOfRange { mu0, v0 })?;
    let n = opts.grid_points.max(16);
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    let samples: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| {
            let (vx, dv) = v.eval_with_derivative_unchecked(Complex64::new(x, 0.0));
            (vx.re * vx.re - mu0 * mu0, dv.re.abs())
        })
        .collect();
    let dv_scale = samples.iter().map(|s| s.1).fold(0.0, f64::max);

    let mut brackets = Vec::new();
    for i in 0..n - 1 {
        let (fa, fb) = (samples[i].0, samples[i + 1].0);
        if fa == 0.0 || fa * fb < 0.0 {
            brackets.push((xs[i], xs[i + 1]));
        } else if i > 0 && fa.abs() < samples[i - 1].0.abs() && fa.abs() <= fb.abs() {
            // local minimum of |f| without a sign change: look for a hidden pair
            let sub = 32;
            let (a, b) = (xs[i - 1], xs[i + 1]);
            let h = (b - a) / sub as f64;
            let g = |x: f64| v.eval_real(x).powi(2) - mu0 * mu0;
            let mut prev = g(a);
            for j in 1..=sub {
                let x = a + j as f64 * h;
                let cur = g(x);
                if prev * cur < 0.0 {
                    brackets.push((x - h, x));
                }
                prev = cur;
            }
        }
    }
    let mut roots: Vec<f64> = brackets
        .into_iter()
        .map(|(a, b)| refine_real_root(v, mu0, a, b))
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10 * (1.0 + a.abs()));

    for &r in &roots {
        let (_, dv) = v.eval_with_derivative_unchecked(Complex64::new(r, 0.0));
        if dv.re.abs() < opts.degeneracy_rel * dv_scale {
            return Err(TurningError::Degenerate {
                x: r,
                derivative: dv.re.abs(),
            });
        }
    }
    let z = |x: f64| Complex64::new(x, 0.0);
    let mu = z(mu0);
    let signs: Vec<i8> = roots
        .iter()
        .map(|&r| {
            let (_, dv) = v.eval_with_derivative_unchecked(z(r));
            if dv.re >= 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let kind = match roots.len() {
        2 => LobeKind::SingleLobe {
            alpha_l: z(roots[0]),
            alpha_r: z(roots[1]),
        },
        4 => {
            let prod = v.eval_real(roots[1]) * v.eval_real(roots[2]);
            LobeKind::DoubleLobe {
                alpha_l: z(roots[0]),
                beta_l: z(roots[1]),
                beta_r: z(roots[2]),
                alpha_r: z(roots[3]),
                middle_sign: if prod > 0.0 { 1 } else { -1 },
            }
        }
        count => return Err(TurningError::RootCount { count, roots }),
    };
    let cfg = TurningConfiguration {
        mu,
        kind,
        derivative_signs: signs,
    };
    debug_assert!(cfg.max_residual(v) <= residual_tol(mu) * 10.0);
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// Neighbourhood radius; steps satisfy `|dmu| <= eps / 16`.
    pub eps: f64,
    /// Fail when two points come closer than this.
    pub collision_tol: f64,
    pub enforce_ordering: bool,
}

impl ContinuationOptions {
    pub fn for_mu0(mu0: f64) -> Self {
        Self {
            eps: 0.05 * mu0.abs(),
            collision_tol: 1e-6,
            enforce_ordering: true,
        }
    }
}

fn corrector(v: &Potential, mu: Complex64, seed: Complex64, max_move: f64) -> Option<Complex64> {
    let mut x = seed;
    let tol = residual_tol(mu);
    for _ in 0..30 {
        let (vx, dv) = v.eval_with_derivative_unchecked(x);
        let f = vx * vx - mu * mu;
        let df = 2.0 * vx * dv;
        let step = f / df;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        x -= step;
        if (x - seed).norm() > max_move {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            let (vx, _) = v.eval_with_derivative_unchecked(x);
            return ((vx * vx - mu * mu).norm() <= tol).then_some(x);
        }
    }
    let (vx, _) = v.eval_with_derivative_unchecked(x);
    ((vx * vx - mu * mu).norm() <= tol).then_some(x)
}

fn min_separation(p: &[Complex64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            m = m.min((p[i] - p[j]).norm());
        }
    }
    m
}

fn ordered(p: &[Complex64]) -> bool {
    p.windows(2).all(|w| w[0].re < w[1].re)
}

/// Continues `cfg` along the path `mu(t)`, `t` in `[0, 1]`, with `mu(0) = cfg.mu`.
pub fn continue_along<P>(
    v: &Potential,
    cfg: &TurningConfiguration,
    path: P,
    path_length: f64,
    min_steps: usize,
    opts: &ContinuationOptions,
) -> Result<TurningConfiguration, TurningError>
where
    P: Fn(f64) -> Complex64,
{
    let mut pts = cfg.points();
    let mut mu = cfg.mu;
    if path_length == 0.0 {
        return Ok(cfg.clone());
    }
    let max_dmu = (opts.eps / 16.0).max(1e-12);
    let base = ((path_length / max_dmu).ceil() as usize).max(min_steps).max(1);
    let mut dt = 1.0 / base as f64;
    let mut t = 0.0;
    while t < 1.0 {
        let t_next = (t + dt).min(1.0);
        let mu_next = path(t_next);
        let dmu = mu_next - mu;
        let sep = min_separation(&pts);
        let mut next = Vec::with_capacity(pts.len());
        let mut ok = true;
        for &x in &pts {
            let (vx, dv) = v.eval_with_derivative_unchecked(x);
            let pred = x + mu / (vx * dv) * dmu;
            match corrector(v, mu_next, pred, 0.25 * sep) {
                Some(y) => next.push(y),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && min_separation(&next) < 0.5 * sep.min(1.0) && min_separation(&next) < opts.collision_tol {
            return Err(TurningError::Collision {
                mu: mu_next,
                separation: min_separation(&next),
            });
        }
        if !ok {
            dt *= 0.5;
            if dt < 1e-10 {
                return Err(TurningError::NewtonDivergence { mu: mu_next });
            }
            continue;
        }
        if opts.enforce_ordering && !ordered(&next) {
            return Err(TurningError::OrderingLost { mu: mu_next });
        }
        pts = next;
        mu = mu_next;
        t = t_next;
        dt = (dt * 2.0).min(1.0 / base as f64);
    }
    Ok(cfg.with_points(mu, &pts))
}

/// Continues `cfg` along the straight segment to `mu_target`.
pub fn continue_in_mu(
    v: &Potential,
    cfg: &TurningConfiguration,
    mu_target: Complex64,
    n_steps: usize,
    opts: &ContinuationOptions,
) -> Result<TurningConfiguration, TurningError> {
    let mu0 = cfg.mu;
    continue_along(v, cfg, |t| mu0 + (mu_target - mu0) * t, (mu_target - mu0).norm(), n_steps, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MigrationFrame {
    pub mu: Complex64,
    pub points: Vec<Complex64>,
}

/// Turning points along the arc `mu0 * exp(i theta)`, `theta` in `[0, total_angle]`.
pub fn migration_path(
    v: &Potential,
    mu0: f64,
    total_angle: f64,
    n_frames: usize,
    eps: Option<f64>,
) -> Result<Vec<MigrationFrame>, TurningError> {
    let start = classify(v, mu0)?;
    let frame = |c: &TurningConfiguration| MigrationFrame {
        mu: c.mu,
        points: c.points(),
    };
    if total_angle == 0.0 || n_frames <= 1 {
        return Ok(vec![frame(&start)]);
    }
    let opts = ContinuationOptions {
        eps: eps.unwrap_or(0.05 * mu0),
        collision_tol: 1e-6,
        enforce_ordering: false,
    };
    let mut frames = vec![frame(&start)];
    let mut cfg = start;
    let dtheta = total_angle / (n_frames - 1) as f64;
    for j in 1..n_frames {
        let th0 = dtheta * (j - 1) as f64;
        let arc = |t: f64| Complex64::from_polar(mu0, th0 + dtheta * t);
        cfg = continue_along(v, &cfg, arc, mu0 * dtheta.abs(), 1, &opts)?;
        // pin the frame parameter exactly
        cfg.mu = Complex64::from_polar(mu0, dtheta * j as f64);
        frames.push(frame(&cfg));
    }
    Ok(frames)
}

/// Matches two point sets up to permutation; returns the largest distance
/// under the best greedy pairing.
pub fn set_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, &y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}
