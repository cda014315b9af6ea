//! Winding numbers of sampled closed curves.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindingError {
    #[error("argument increment {increment:.3} between samples {index} and {next} exceeds the limit")]
    Unresolved { index: usize, next: usize, increment: f64 },
    #[error("curve passes through zero at sample {0}")]
    ThroughZero(usize),
    #[error("refinement budget exhausted with {samples} samples")]
    Budget { samples: usize },
    #[error("evaluation failed: {0}")]
    Eval(String),
}

fn increment(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Net winding of the closed polygon `samples[0], ..., samples[n-1], samples[0]`
/// around the origin. Fails when any single argument increment exceeds `π/2`.
pub fn winding(samples: &[Complex64]) -> Result<i64, WindingError> {
    let n = samples.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = samples[i];
        let b = samples[(i + 1) % n];
        if a.norm() == 0.0 {
            return Err(WindingError::ThroughZero(i));
        }
        let d = increment(a, b);
        if d.abs() > FRAC_PI_2 {
            return Err(WindingError::Unresolved {
                index: i,
                next: (i + 1) % n,
                increment: d,
            });
        }
        total += d;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Adaptive winding of `f` along a closed curve parametrised on `[0, 1)`.
///
/// `eval` maps a batch of parameters to values (so callers may evaluate in
/// parallel). Intervals whose argument increment exceeds `threshold` are
/// bisected until none do or `max_samples` is reached.
pub fn winding_refined<E>(
    mut eval: E,
    initial: usize,
    threshold: f64,
    max_samples: usize,
) -> Result<(i64, Vec<(f64, Complex64)>), WindingError>
where
    E: FnMut(&[f64]) -> Result<Vec<Complex64>, String>,
{
    let params: Vec<f64> = (0..initial).map(|i| i as f64 / initial as f64).collect();
    let values = eval(&params).map_err(WindingError::Eval)?;
    let mut pts: Vec<(f64, Complex64)> = params.into_iter().zip(values).collect();

    loop {
        if let Some(i) = pts.iter().position(|p| p.1.norm() == 0.0) {
            return Err(WindingError::ThroughZero(i));
        }
        let n = pts.len();
        let mut mids = Vec::new();
        for i in 0..n {
            let (ta, va) = pts[i];
            let (tb, vb) = pts[(i + 1) % n];
            if increment(va, vb).abs() > threshold {
                let tb = if i + 1 == n { tb + 1.0 } else { tb };
                mids.push(0.5 * (ta + tb));
            }
        }
        if mids.is_empty() {
            let vals: Vec<Complex64> = pts.iter().map(|p| p.1).collect();
            let w = winding(&vals)?;
            return Ok((w, pts));
        }
        if n + mids.len() > max_samples {
            return Err(WindingError::Budget { samples: n });
        }
        let new_vals = eval(&mids).map_err(WindingError::Eval)?;
        pts.extend(mids.into_iter().zip(new_vals));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
}
