//! Complex Newton iteration.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewtonError<E> {
    #[error("Newton stagnated at {at} (|F| = {residual:e})")]
    Stagnation { at: Complex64, residual: f64 },
    #[error("Newton did not converge in {iterations} iterations (last |step| = {step:e})")]
    MaxIterations { iterations: usize, step: f64 },
    #[error(transparent)]
    Eval(E),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged when `|step| <= step_tol * (1 + |z|)`.
    pub step_tol: f64,
    /// Also converged when `|F| <= value_tol`.
    pub value_tol: f64,
    pub max_iter: usize,
    /// Cap on `|step|`, applied by scaling the Newton step down.
    pub max_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            step_tol: 1e-14,
            value_tol: 0.0,
            max_iter: 50,
            max_step: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonReport {
    pub root: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton's method for `F(z) = 0` where `eval` returns `(F(z), F'(z))`.
pub fn newton<E, F>(mut eval: F, seed: Complex64, opts: &NewtonOptions) -> Result<NewtonReport, NewtonError<E>>
where
    F: FnMut(Complex64) -> Result<(Complex64, Complex64), E>,
{
    let mut z = seed;
    let mut last_step = f64::INFINITY;
    let mut stalled = 0;
    let mut best = f64::INFINITY;
    for it in 0..opts.max_iter {
        let (fz, dfz) = eval(z).map_err(NewtonError::Eval)?;
        let r = fz.norm();
        if r <= opts.value_tol {
            return Ok(NewtonReport {
                root: z,
                residual: r,
                iterations: it,
            });
        }
        if r < best * 0.999 {
            best = r;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 8 {
                return Err(NewtonError::Stagnation { at: z, residual: r });
            }
        }
        let mut step = fz / dfz;
        if !(step.re.is_finite() && step.im.is_finite()) || dfz.norm() == 0.0 {
            return Err(NewtonError::Stagnation { at: z, residual: r });
        }
        if step.norm() > opts.max_step {
            step *= opts.max_step / step.norm();
        }
        z -= step;
        last_step = step.norm();
        if last_step <= opts.step_tol * (1.0 + z.norm()) {
            let (fz, _) = eval(z).map_err(NewtonError::Eval)?;
            return Ok(NewtonReport {
                root: z,
                residual: fz.norm(),
                iterations: it + 1,
            });
        }
    }
    Err(NewtonError::MaxIterations {
        iterations: opts.max_iter,
        step: last_step,
    })
}

/// Plain-closure form: `f` and its derivative `df`.
pub fn newton_complex<F, D>(
    f: F,
    df: D,
    seed: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<Complex64, NewtonError<std::convert::Infallible>>
where
    F: Fn(Complex64) -> Complex64,
    D: Fn(Complex64) -> Complex64,
{
    let opts = NewtonOptions {
        step_tol: tol,
        max_iter,
        ..NewtonOptions::default()
    };
    newton(|z| Ok((f(z), df(z))), seed, &opts).map(|r| r.root)
}
