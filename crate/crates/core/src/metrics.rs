//! Reconstruction quality metrics.

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

fn check_dims(a: &DenseTensor, ahat: &DenseTensor) -> Result<()> {
    if a.dims() != ahat.dims() {
        return Err(Error::invalid(format!(
            "dimension mismatch: reference {:?} vs approximation {:?}",
            a.dims(),
            ahat.dims()
        )));
    }
    Ok(())
}

fn diff_norm_sq(a: &DenseTensor, ahat: &DenseTensor) -> f64 {
    a.values()
        .iter()
        .zip(ahat.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// `‖a − ahat‖_F / ‖a‖_F`.
pub fn relative_error(a: &DenseTensor, ahat: &DenseTensor) -> Result<f64> {
    check_dims(a, ahat)?;
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::invalid("relative error against a zero-norm reference"));
    }
    Ok(diff_norm_sq(a, ahat).sqrt() / norm)
}

/// `10 log10(∏I_n · max|ahat|² / ‖a − ahat‖_F²)` in dB; `+∞` when the two
/// tensors are equal.
pub fn psnr(a: &DenseTensor, ahat: &DenseTensor) -> Result<f64> {
    check_dims(a, ahat)?;
    let err = diff_norm_sq(a, ahat);
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = ahat.max_abs();
    Ok(10.0 * ((ahat.len() as f64) * peak * peak / err).log10())
}
