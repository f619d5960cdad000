//! Classic HITS on a single-layer weighted network.
//!
//! Updates alternate `y ← W·x` and `x ← Wᵀ·y`, each followed by scaling to a
//! largest entry of one. `x` (hub) converges to the dominant eigenvector of
//! `WᵀW` and `y` (authority) to that of `WWᵀ`.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitsScores {
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Scales `v` so its largest entry is one; an all-zero vector is left as is.
pub(crate) fn max_normalize(v: &mut [f64]) {
    let max = v.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for x in v.iter_mut() {
            *x /= max;
        }
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn hits_monoplex(w: &Array2<f64>, tol: f64, max_iter: usize) -> Result<HitsScores> {
    let (rows, cols) = w.dim();
    if rows != cols {
        return Err(Error::Shape {
            array: "W".into(),
            expected: (rows, rows),
            found: (rows, cols),
        });
    }
    if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Parameter(format!(
            "HITS needs finite nonnegative weights, found {v}"
        )));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Parameter(
            "HITS needs a positive tolerance and at least one iteration".into(),
        ));
    }

    let mut x = Array1::<f64>::ones(rows);
    let mut y = Array1::<f64>::ones(rows);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut y_new = w.dot(&x);
        max_normalize(y_new.as_slice_mut().expect("contiguous"));
        let mut x_new = w.t().dot(&y_new);
        max_normalize(x_new.as_slice_mut().expect("contiguous"));
        residual = max_abs_diff(x_new.as_slice().unwrap(), x.as_slice().unwrap()).max(
            max_abs_diff(y_new.as_slice().unwrap(), y.as_slice().unwrap()),
        );
        x = x_new;
        y = y_new;
        if residual <= tol {
            break;
        }
    }
    Ok(HitsScores {
        hub: x.to_vec(),
        authority: y.to_vec(),
        iterations,
        residual,
        converged: residual <= tol,
    })
}
