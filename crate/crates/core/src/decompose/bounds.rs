//! Closed-form error-bound factors for the randomized sweeps.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundFactors {
    /// Sketch-only factor `1 + t sqrt(12r/p) + u t e sqrt(s)/(p+1)`.
    pub eta_rsvd: f64,
    /// Block Krylov factor `(1 + sqrt(r/(p-1)) + e sqrt(s)/p)^(1/(2q+1))`.
    pub eta_rbki: f64,
    /// Expected power-iteration residual bound, when a spectrum is supplied.
    pub power_bound: Option<f64>,
    /// `sqrt(N-1)`.
    pub prefactor: f64,
}

pub fn eta_rsvd(r: usize, p: usize, t: f64, u: f64) -> Result<f64> {
    if p < 1 {
        return Err(Error::invalid("eta_rsvd needs oversampling p >= 1"));
    }
    let (r, p) = (r as f64, p as f64);
    let s = r + p;
    Ok(1.0 + t * (12.0 * r / p).sqrt() + u * t * E * s.sqrt() / (p + 1.0))
}

pub fn eta_rbki(r: usize, p: usize, q: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::invalid("eta_rbki needs oversampling p >= 2 (sqrt(r/(p-1)) term)"));
    }
    let (rf, pf) = (r as f64, p as f64);
    let s = rf + pf;
    let base = 1.0 + (rf / (pf - 1.0)).sqrt() + E * s.sqrt() / pf;
    Ok(base.powf(1.0 / (2 * q + 1) as f64))
}

/// `[(1 + sqrt(r/(p-1))) σ_{r+1}^{2q+1} + (e sqrt(s)/p) (Σ_{j>r} σ_j^{2(2q+1)})^{1/2}]^{1/(2q+1)}`
/// where `spectrum` lists the singular values in nonincreasing order.
pub fn power_iteration_bound(r: usize, p: usize, q: usize, spectrum: &[f64]) -> Result<f64> {
    if p < 2 {
        return Err(Error::invalid(
            "power_iteration_bound needs oversampling p >= 2 (sqrt(r/(p-1)) term)",
        ));
    }
    let (rf, pf) = (r as f64, p as f64);
    let s = rf + pf;
    let power = (2 * q + 1) as f64;
    let next = spectrum.get(r).copied().unwrap_or(0.0);
    let tail: f64 = spectrum
        .iter()
        .skip(r)
        .map(|d| d.powf(2.0 * power))
        .sum::<f64>()
        .sqrt();
    let inner = (1.0 + (rf / (pf - 1.0)).sqrt()) * next.powf(power) + E * s.sqrt() / pf * tail;
    Ok(inner.powf(1.0 / power))
}

/// All bound factors for target rank `r`, oversampling `p`, depth `q`, an
/// order-`order` tensor and probability parameters `t, u >= 1`.
pub fn bound_factors(
    r: usize,
    p: usize,
    q: usize,
    order: usize,
    t: f64,
    u: f64,
    spectrum: Option<&[f64]>,
) -> Result<BoundFactors> {
    if order < 2 {
        return Err(Error::invalid("bound factors need an order >= 2 tensor"));
    }
    if !(t >= 1.0 && u >= 1.0) {
        return Err(Error::invalid(format!("t and u must be >= 1, got t={t}, u={u}")));
    }
    Ok(BoundFactors {
        eta_rsvd: eta_rsvd(r, p, t, u)?,
        eta_rbki: eta_rbki(r, p, q)?,
        power_bound: spectrum.map(|s| power_iteration_bound(r, p, q, s)).transpose()?,
        prefactor: ((order - 1) as f64).sqrt(),
    })
}
