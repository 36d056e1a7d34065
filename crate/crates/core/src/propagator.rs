//! Step propagator `exp(-i H dt)` by a truncated Taylor series with argument
//! scaling and repeated squaring.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::HamiltonianMatrix;

/// Bound on the local error of one step, relative to the state norm.
pub const STEP_ERROR_BOUND: f64 = 1e-12;
/// Scaled argument norm after halving.
const SCALED_NORM: f64 = 0.5;
const MAX_TERMS: usize = 30;

/// `max(||A||_1, ||A||_inf)`, which bounds the spectral norm.
fn norm_bound(m: &HamiltonianMatrix) -> f64 {
    let n = m.dim();
    let mut col = vec![0.0f64; n];
    let mut row = vec![0.0f64; n];
    for (j, c) in col.iter_mut().enumerate() {
        for (i, r) in row.iter_mut().enumerate() {
            let a = m.entry(i, j).norm();
            *c += a;
            *r += a;
        }
    }
    col.into_iter().chain(row).fold(0.0, f64::max)
}

/// Tail of the exponential series after `m` terms for an argument of norm `b`.
fn remainder_bound(b: f64, m: usize) -> f64 {
    // b^(m+1)/(m+1)! * 1/(1 - b/(m+2))
    let mut term = 1.0;
    for k in 1..=m + 1 {
        term *= b / k as f64;
    }
    let ratio = b / (m + 2) as f64;
    if ratio >= 1.0 {
        f64::INFINITY
    } else {
        term / (1.0 - ratio)
    }
}

/// `exp(-i H dt)`, or [`Error::StepRejected`] when no truncation order up to
/// the internal maximum meets [`STEP_ERROR_BOUND`] after squaring.
pub fn step_propagator(h: &HamiltonianMatrix, dt: f64) -> Result<Mat<Complex64>> {
    let n = h.dim();
    let a = dt.abs() * norm_bound(h);
    if !a.is_finite() {
        return Err(Error::StepRejected { dt, halvings: 0 });
    }
    let squarings = if a > SCALED_NORM {
        (a / SCALED_NORM).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2f64.powi(squarings as i32);
    let b = a / scale;
    // error of T^(2^s) grows at most like 2^s * ||E|| * e^a
    let amplification = scale * a.exp() * 2.0;
    let terms = (1..=MAX_TERMS)
        .find(|&m| amplification * remainder_bound(b, m) <= STEP_ERROR_BOUND)
        .ok_or(Error::StepRejected { dt, halvings: 0 })?;

    let factor = Complex64::new(0.0, -dt / scale);
    let arg = Mat::from_fn(n, n, |i, j| h.entry(i, j) * factor);
    // Horner: I + B(I + B/2(I + B/3(...)))
    let eye = Mat::<Complex64>::identity(n, n);
    let mut acc = eye.clone();
    for k in (1..=terms).rev() {
        let scaled = (&arg * &acc) * faer::Scale(Complex64::new(1.0 / k as f64, 0.0));
        acc = &eye + &scaled;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    Ok(acc)
}

/// Propagator for `dt` as `(P, repeats)` with `P^repeats = exp(-i H dt)`,
/// halving the step until the series bound is met.
pub(crate) fn split_step(
    h: &HamiltonianMatrix,
    dt: f64,
    max_halvings: u32,
) -> Result<(Mat<Complex64>, usize)> {
    let mut step = dt;
    for halvings in 0..=max_halvings {
        match step_propagator(h, step) {
            Ok(p) => return Ok((p, 1usize << halvings)),
            Err(Error::StepRejected { .. }) => step /= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::StepRejected {
        dt,
        halvings: max_halvings,
    })
}

pub(crate) fn apply(p: &Mat<Complex64>, psi: &[Complex64]) -> Vec<Complex64> {
    let n = p.nrows();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (j, &x) in psi.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            *o += p[(i, j)] * x;
        }
    }
    out
}
