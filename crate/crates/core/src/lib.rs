//! Tensor-train (TT) approximation of dense tensors.
//!
//! Four left-to-right sweeps share one scaffold and differ only in how each
//! step finds the dominant column space of the current unfolding:
//!
//! - [`decompose::tt_svd`]: truncated SVD (fixed ranks or prescribed accuracy),
//! - [`decompose::tt_rsvd`]: one Gaussian sketch,
//! - [`decompose::tt_rsi`]: Gaussian sketch refined by subspace power iteration,
//! - [`decompose::tt_rbki`]: randomized block Krylov iteration.
//!
//! Around them sit the dense tensor type, the matrix kernels, the TT container
//! with its `.ttc` file format, synthetic data generators with AWGN noising and
//! the `.dten` format, and a benchmark runner emitting CSV/JSON records.

pub mod bench;
pub mod datagen;
pub mod decompose;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod tensor;
pub mod tt;

pub use decompose::{
    bound_factors, tt_rbki, tt_rsi, tt_rsvd, tt_svd, BoundFactors, Method, SketchConfig,
    SweepTrace, TruncationSpec,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, RngSeed};
pub use tensor::DenseTensor;
pub use tt::TtTensor;
