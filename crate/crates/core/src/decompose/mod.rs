//! Left-to-right TT sweeps.
//!
//! All four algorithms walk the modes in order. At step `n` the running
//! tensor is unfolded to `A` of shape `(r_{n-1} I_n) × (I_{n+1} ... I_N)`, a
//! range finder picks `r_n` orthonormal columns `Q`, the core is
//! `reshape(Q, [r_{n-1}, I_n, r_n])` and the running tensor becomes `QᵀA`.
//! Only the range finder differs between methods.

mod bounds;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bounds::{bound_factors, eta_rbki, eta_rsvd, power_iteration_bound, BoundFactors};
pub use sweep::{decompose, tt_rbki, tt_rsi, tt_rsvd, tt_svd};

use crate::error::{Error, Result};
use crate::linalg::RngSeed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Svd,
    Rsvd,
    Rsi,
    Rbki,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Svd, Method::Rsvd, Method::Rsi, Method::Rbki];

    pub fn name(self) -> &'static str {
        match self {
            Method::Svd => "svd",
            Method::Rsvd => "rsvd",
            Method::Rsi => "rsi",
            Method::Rbki => "rbki",
        }
    }

    pub fn is_randomized(self) -> bool {
        self != Method::Svd
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svd" | "tt-svd" => Ok(Method::Svd),
            "rsvd" | "tt-rsvd" => Ok(Method::Rsvd),
            "rsi" | "tt-rsi" => Ok(Method::Rsi),
            "rbki" | "tt-rbki" => Ok(Method::Rbki),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected svd, rsvd, rsi or rbki)"
            ))),
        }
    }
}

/// Variant switches for the randomized sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantFlags {
    /// Single QR of the stacked raw Krylov powers instead of per-block
    /// orthonormalization.
    pub naive_krylov: bool,
    /// Prepend `Ω` to the Krylov space.
    pub include_zeroth_block: bool,
    /// Take the top-`r_n` left singular vectors of the final sketch `Y`.
    /// When off, `Q` is the first `r_n` columns of the economy QR of `Y`.
    pub svd_truncate: bool,
}

impl Default for VariantFlags {
    fn default() -> Self {
        Self {
            naive_krylov: false,
            include_zeroth_block: false,
            svd_truncate: true,
        }
    }
}

/// Parameters of the randomized sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    /// Target ranks `(r_1, ..., r_{N-1})`.
    pub ranks: Vec<usize>,
    /// Oversampling `p`; sketches have `r_n + p` columns.
    pub oversampling: usize,
    /// Power-iteration / Krylov depth `q`.
    pub depth: usize,
    pub seed: RngSeed,
    #[serde(default)]
    pub variant: VariantFlags,
}

impl SketchConfig {
    pub fn new(ranks: Vec<usize>) -> Self {
        Self {
            ranks,
            oversampling: 2,
            depth: 2,
            seed: RngSeed(0),
            variant: VariantFlags::default(),
        }
    }

    pub fn with_oversampling(mut self, p: usize) -> Self {
        self.oversampling = p;
        self
    }

    pub fn with_depth(mut self, q: usize) -> Self {
        self.depth = q;
        self
    }

    pub fn with_seed(mut self, seed: impl Into<RngSeed>) -> Self {
        self.seed = seed.into();
        self
    }

    pub fn with_variant(mut self, variant: VariantFlags) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(pos) = self.ranks.iter().position(|&r| r == 0) {
            return Err(Error::invalid(format!("rank r_{} must be >= 1", pos + 1)));
        }
        if self.depth == 0 {
            return Err(Error::invalid("depth q must be >= 1"));
        }
        Ok(())
    }
}

/// Either prescribed accuracy (`δ = ε‖A‖_F / sqrt(N-1)` per step) or fixed ranks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationSpec {
    Epsilon(f64),
    Ranks(Vec<usize>),
}

/// One step of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    /// One-based step index `n`.
    pub step: usize,
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
    /// Columns of the Gaussian test matrix actually used (randomized only).
    pub sketch_width: Option<usize>,
    /// The requested sketch width or Krylov size exceeded the unfolding and
    /// was clamped.
    pub clamped: bool,
    /// Tail energy of this step's unfolding beyond `rank` (deterministic only).
    pub tail_energy: Option<f64>,
    /// `‖(I − QQᵀ) A_n‖_F` for this step's unfolding `A_n`.
    pub residual: f64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub method: Method,
    pub input_norm: f64,
    pub steps: Vec<SweepStep>,
    /// Filled by [`SweepTrace::verify`].
    pub final_rel_err: Option<f64>,
}

impl SweepTrace {
    /// `Σ ρ_n²`, which equals the squared approximation error.
    pub fn residual_sum_sq(&self) -> f64 {
        self.steps.iter().map(|s| s.residual * s.residual).sum()
    }

    /// `sqrt(Σ ε_n²)` over the recorded tail energies.
    pub fn tail_bound(&self) -> Option<f64> {
        self.steps
            .iter()
            .map(|s| s.tail_energy.map(|e| e * e))
            .sum::<Option<f64>>()
            .map(f64::sqrt)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.rank).collect()
    }

    /// Reconstructs `tt`, stores and returns its error relative to `original`.
    pub fn verify(&mut self, original: &crate::DenseTensor, tt: &crate::TtTensor) -> Result<f64> {
        let approx = tt.reconstruct()?;
        let err = crate::metrics::relative_error(original, &approx)?;
        self.final_rel_err = Some(err);
        Ok(err)
    }
}
