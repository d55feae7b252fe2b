use std::time::Instant;

use super::{Method, SketchConfig, SweepStep, SweepTrace, TruncationSpec, VariantFlags};
use crate::error::{Error, Result};
use crate::linalg::{
    block_krylov_basis, complete_basis, delta_rank, economy_qr, gaussian_matrix, svd,
    tail_from_values, KrylovOptions, Matrix, RngSeed,
};
use crate::tensor::DenseTensor;
use crate::tt::TtTensor;

const CANCELLATION_GUARD: f64 = 1e-6;

/// How a step picks its rank.
#[derive(Clone, Copy)]
enum StepRank {
    Fixed(usize),
    Delta(f64),
}

/// Column-space strategy of one sweep step.
enum RangeFinder<'a> {
    Svd,
    Gaussian(&'a SketchConfig),
    Power(&'a SketchConfig),
    Krylov(&'a SketchConfig),
}

struct StepOutput {
    q: Matrix,
    /// `QᵀA`, the next running tensor.
    next: Matrix,
    sketch_width: Option<usize>,
    clamped: bool,
    tail_energy: Option<f64>,
}

fn check_feasible(dims: &[usize], ranks: &[usize]) -> Result<()> {
    let n = dims.len();
    if ranks.len() + 1 != n {
        return Err(Error::invalid(format!(
            "an order-{n} tensor needs {} ranks, got {}",
            n - 1,
            ranks.len()
        )));
    }
    let mut prev = 1usize;
    for (k, &r) in ranks.iter().enumerate() {
        let rows = prev * dims[k];
        let cols: usize = dims[k + 1..].iter().product();
        if r == 0 || r > rows.min(cols) {
            return Err(Error::invalid(format!(
                "rank r_{} = {r} is infeasible: must lie in 1..={} for a {rows}x{cols} unfolding",
                k + 1,
                rows.min(cols)
            )));
        }
        prev = r;
    }
    Ok(())
}

/// First `r` columns of `q`, completed to `r` orthonormal columns if short.
fn leading_columns(q: &Matrix, r: usize) -> Matrix {
    if q.ncols() >= r {
        q.columns(0, r).into_owned()
    } else {
        complete_basis(q, r)
    }
}

/// Rank-`r` orthonormal basis extracted from the final sketch `y`.
fn truncate_sketch(y: &Matrix, r: usize, variant: &VariantFlags) -> Result<Matrix> {
    if variant.svd_truncate {
        Ok(leading_columns(&svd(y)?.u, r))
    } else {
        Ok(leading_columns(&economy_qr(y).0, r))
    }
}

fn sketch_width(r: usize, cfg: &SketchConfig, cols: usize) -> (usize, bool) {
    let want = r + cfg.oversampling;
    (want.min(cols), want > cols)
}

impl RangeFinder<'_> {
    fn step(&self, a: &Matrix, rank: StepRank, seed: RngSeed) -> Result<StepOutput> {
        match self {
            RangeFinder::Svd => {
                let full = svd(a)?;
                let r = match rank {
                    StepRank::Fixed(r) => r,
                    StepRank::Delta(delta) => delta_rank(&full.s, delta),
                };
                let tail = tail_from_values(&full.s, r + 1);
                let full = full.truncate(r);
                let mut next = full.v.transpose();
                for (i, s) in full.s.iter().enumerate() {
                    next.row_mut(i).scale_mut(*s);
                }
                Ok(StepOutput {
                    q: full.u,
                    next,
                    sketch_width: None,
                    clamped: false,
                    tail_energy: Some(tail),
                })
            }
            RangeFinder::Gaussian(cfg) | RangeFinder::Power(cfg) | RangeFinder::Krylov(cfg) => {
                let r = match rank {
                    StepRank::Fixed(r) => r,
                    StepRank::Delta(_) => unreachable!("randomized sweeps use fixed ranks"),
                };
                let (width, mut clamped) = sketch_width(r, cfg, a.ncols());
                let omega = gaussian_matrix(a.ncols(), width, seed);
                let q = match self {
                    RangeFinder::Gaussian(_) => truncate_sketch(&(a * &omega), r, &cfg.variant)?,
                    RangeFinder::Power(_) => {
                        let a_t = a.transpose();
                        let mut y = a * &omega;
                        let mut qj = economy_qr(&y).0;
                        for _ in 0..cfg.depth {
                            let q_hat = economy_qr(&(&a_t * &qj)).0;
                            y = a * &q_hat;
                            qj = economy_qr(&y).0;
                        }
                        if cfg.variant.svd_truncate {
                            leading_columns(&svd(&y)?.u, r)
                        } else {
                            leading_columns(&qj, r)
                        }
                    }
                    _ => {
                        let opts = KrylovOptions {
                            naive: cfg.variant.naive_krylov,
                            include_zeroth_block: cfg.variant.include_zeroth_block,
                        };
                        let requested = (r + cfg.oversampling) * cfg.depth;
                        let cap = if opts.include_zeroth_block {
                            a.ncols()
                        } else {
                            a.ncols().min(a.nrows())
                        };
                        clamped |= requested > cap;
                        let u = block_krylov_basis(a, &omega, cfg.depth, opts)?;
                        truncate_sketch(&(a * u), r, &cfg.variant)?
                    }
                };
                let next = q.transpose() * a;
                Ok(StepOutput {
                    q,
                    next,
                    sketch_width: Some(width),
                    clamped,
                    tail_energy: None,
                })
            }
        }
    }
}

fn run_sweep(
    t: &DenseTensor,
    method: Method,
    finder: RangeFinder<'_>,
    ranks: &[StepRank],
    seed: RngSeed,
) -> Result<(TtTensor, SweepTrace)> {
    let dims = t.dims().to_vec();
    let order = dims.len();
    let input_norm = t.frobenius_norm();
    let mut cores = Vec::with_capacity(order);
    let mut steps = Vec::with_capacity(order.saturating_sub(1));
    let mut prev_rank = 1usize;
    let mut running: Vec<f64> = t.values().to_vec();

    for n in 0..order - 1 {
        let start = Instant::now();
        let rows = prev_rank * dims[n];
        let cols = running.len() / rows;
        let a = Matrix::from_vec(rows, cols, running);
        let a_norm_sq = a.norm_squared();

        let out = finder.step(&a, ranks[n], seed.derive(n as u64))?;
        let r = out.q.ncols();
        // ρ² = ‖A‖² − ‖QᵀA‖²; recomputed directly when cancellation would
        // leave too few correct digits
        let diff = a_norm_sq - out.next.norm_squared();
        let residual = if diff > CANCELLATION_GUARD * a_norm_sq {
            diff.sqrt()
        } else {
            (&a - &out.q * &out.next).norm()
        };
        cores.push(DenseTensor::new(vec![prev_rank, dims[n], r], out.q.data.into())?);
        steps.push(SweepStep {
            step: n + 1,
            rank: r,
            rows,
            cols,
            sketch_width: out.sketch_width,
            clamped: out.clamped,
            tail_energy: out.tail_energy,
            residual,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        running = out.next.data.into();
        prev_rank = r;
    }
    cores.push(DenseTensor::new(vec![prev_rank, dims[order - 1], 1], running)?);

    let tt = TtTensor::new(cores)?;
    Ok((
        tt,
        SweepTrace {
            method,
            input_norm,
            steps,
            final_rel_err: None,
        },
    ))
}

/// Deterministic TT-SVD sweep.
///
/// With `TruncationSpec::Epsilon(ε)` each step keeps the smallest rank whose
/// discarded singular tail is at most `ε‖A‖_F / sqrt(N-1)`, so the result is
/// within `ε‖A‖_F` of the input. With fixed ranks the ranks are used exactly.
pub fn tt_svd(t: &DenseTensor, trunc: &TruncationSpec) -> Result<(TtTensor, SweepTrace)> {
    let order = t.order();
    if order == 0 {
        return Err(Error::invalid("cannot decompose an order-0 tensor"));
    }
    let ranks: Vec<StepRank> = match trunc {
        TruncationSpec::Epsilon(eps) => {
            if !(*eps >= 0.0) {
                return Err(Error::invalid(format!("epsilon must be >= 0, got {eps}")));
            }
            if order < 2 {
                return Err(Error::invalid("prescribed-accuracy mode needs an order >= 2 tensor"));
            }
            let delta = eps * t.frobenius_norm() / ((order - 1) as f64).sqrt();
            vec![StepRank::Delta(delta); order - 1]
        }
        TruncationSpec::Ranks(r) => {
            check_feasible(t.dims(), r)?;
            r.iter().map(|&r| StepRank::Fixed(r)).collect()
        }
    };
    run_sweep(t, Method::Svd, RangeFinder::Svd, &ranks, RngSeed(0))
}

fn randomized(t: &DenseTensor, cfg: &SketchConfig, method: Method) -> Result<(TtTensor, SweepTrace)> {
    if t.order() == 0 {
        return Err(Error::invalid("cannot decompose an order-0 tensor"));
    }
    cfg.validate()?;
    check_feasible(t.dims(), &cfg.ranks)?;
    let ranks: Vec<StepRank> = cfg.ranks.iter().map(|&r| StepRank::Fixed(r)).collect();
    let finder = match method {
        Method::Rsvd => RangeFinder::Gaussian(cfg),
        Method::Rsi => RangeFinder::Power(cfg),
        Method::Rbki => RangeFinder::Krylov(cfg),
        Method::Svd => unreachable!(),
    };
    run_sweep(t, method, finder, &ranks, cfg.seed)
}

/// Randomized sweep with one Gaussian sketch `Y = AΩ` per step.
pub fn tt_rsvd(t: &DenseTensor, cfg: &SketchConfig) -> Result<(TtTensor, SweepTrace)> {
    randomized(t, cfg, Method::Rsvd)
}

/// Randomized sweep with `q` rounds of orthonormalized subspace power
/// iteration on each sketch.
pub fn tt_rsi(t: &DenseTensor, cfg: &SketchConfig) -> Result<(TtTensor, SweepTrace)> {
    randomized(t, cfg, Method::Rsi)
}

/// Randomized block Krylov sweep: the sketch is `Y = AU` with `U` an
/// orthonormal basis of `[AᵀAΩ, ..., (AᵀA)^q Ω]`.
pub fn tt_rbki(t: &DenseTensor, cfg: &SketchConfig) -> Result<(TtTensor, SweepTrace)> {
    randomized(t, cfg, Method::Rbki)
}

/// Dispatches on `method`; `tt_svd` runs in fixed-rank mode with `cfg.ranks`.
pub fn decompose(method: Method, t: &DenseTensor, cfg: &SketchConfig) -> Result<(TtTensor, SweepTrace)> {
    match method {
        Method::Svd => tt_svd(t, &TruncationSpec::Ranks(cfg.ranks.clone())),
        Method::Rsvd => tt_rsvd(t, cfg),
        Method::Rsi => tt_rsi(t, cfg),
        Method::Rbki => tt_rbki(t, cfg),
    }
}
