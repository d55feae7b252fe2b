use super::{complete_basis, economy_qr, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(S) Vᵀ` with `S` nonincreasing.
///
/// Each column of `U` is signed so that its largest-magnitude entry is
/// nonnegative; the matching column of `V` is flipped with it.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// Keeps the leading `r` triplets.
    pub fn truncate(mut self, r: usize) -> Self {
        let r = r.min(self.s.len());
        self.s.truncate(r);
        self.u = self.u.columns(0, r).into_owned();
        self.v = self.v.columns(0, r).into_owned();
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Smallest rank (at least 1) whose discarded tail has norm `<= delta`.
    Delta(f64),
    Rank(usize),
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Applies the plane rotation `(c, s)` to columns `p < q` of a column-major
/// buffer with `m` rows.
fn rotate(buf: &mut [f64], m: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = buf.split_at_mut(q * m);
    let xp = &mut head[p * m..(p + 1) * m];
    let xq = &mut tail[..m];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// One-sided (Hestenes) Jacobi SVD of a square or tall matrix `w`.
///
/// Rotates column pairs until all are numerically orthogonal; the column
/// norms are then the singular values.
fn jacobi(mut w: Matrix, vectors: bool) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (m, n) = w.shape();
    let mut v = if vectors { Matrix::identity(n, n) } else { Matrix::zeros(0, 0) };
    let mut norms: Vec<f64> = (0..n).map(|j| w.column(j).norm_squared()).collect();
    // Columns whose norm falls below eps * ‖W‖_F are numerically zero: they
    // are not rotated (their entries may be subnormal, which stalls the
    // iteration) and their left vectors come from orthonormal completion.
    let scale_sq: f64 = norms.iter().sum();
    let floor_sq = (f64::EPSILON * f64::EPSILON * scale_sq).max(f64::MIN_POSITIVE);
    // rotation threshold scaled like LAPACK's one-sided Jacobi
    let tol = f64::EPSILON * (m as f64).sqrt();
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha < floor_sq || beta < floor_sq {
                    continue;
                }
                let buf = w.as_slice();
                let gamma = dot(&buf[p * m..(p + 1) * m], &buf[q * m..(q + 1) * m]);
                // sqrt each factor separately: alpha * beta underflows on
                // strongly graded inputs
                if gamma.abs() <= tol * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(w.as_mut_slice(), m, p, q, c, s);
                if vectors {
                    rotate(v.as_mut_slice(), n, p, q, c, s);
                }
                let buf = w.as_slice();
                norms[p] = dot(&buf[p * m..(p + 1) * m], &buf[p * m..(p + 1) * m]);
                norms[q] = dot(&buf[q * m..(q + 1) * m], &buf[q * m..(q + 1) * m]);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi SVD of a {m}x{n} matrix did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sigma: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let s: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    if !vectors {
        return Ok((Matrix::zeros(0, 0), s, v));
    }
    let nonzero = s.iter().take_while(|&&x| x * x >= floor_sq && x > 0.0).count();
    let mut u = Matrix::zeros(m, nonzero);
    let mut vs = Matrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        if k < nonzero {
            u.set_column(k, &(w.column(j) / sigma[j]));
        }
        vs.set_column(k, &v.column(j));
    }
    let u = if nonzero < n { complete_basis(&u, n) } else { u };
    Ok((u, s, vs))
}

/// Thin SVD with `k = min(m, n)` triplets.
///
/// The long side is first reduced by an economy QR, and the `k × k`
/// triangular factor is diagonalized by one-sided Jacobi rotations.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let (u, s, v) = if m >= n {
        let (q, r) = economy_qr(a);
        let (ur, s, v) = jacobi(r, true)?;
        (q * ur, s, v)
    } else {
        // Aᵀ = QR  =>  A = Rᵀ Qᵀ
        let (q, r) = economy_qr(&a.transpose());
        let (u, s, vr) = jacobi(r.transpose(), true)?;
        (u, s, q * vr)
    };
    let mut out = SvdResult { u, s, v };
    normalize_signs(&mut out);
    Ok(out)
}

fn normalize_signs(res: &mut SvdResult) {
    for j in 0..res.u.ncols() {
        let col = res.u.column(j);
        let pivot = col.iter().fold(0.0f64, |best, &x| {
            if x.abs() > best.abs() {
                x
            } else {
                best
            }
        });
        if pivot < 0.0 {
            res.u.column_mut(j).neg_mut();
            res.v.column_mut(j).neg_mut();
        }
    }
}

pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let r = if a.nrows() >= a.ncols() {
        economy_qr(a).1
    } else {
        economy_qr(&a.transpose()).1.transpose()
    };
    Ok(jacobi(r, false)?.1)
}

/// `sqrt(sum_{i >= j} s_i^2)` for one-based `j`, accumulated from the
/// smallest value upward.
pub fn tail_from_values(s: &[f64], j: usize) -> f64 {
    let start = j.saturating_sub(1);
    if start >= s.len() {
        return 0.0;
    }
    s[start..].iter().rev().map(|x| x * x).sum::<f64>().sqrt()
}

/// `j`-th tail energy τ_j(A) (one-based `j`).
pub fn tail_energy(a: &Matrix, j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::invalid("tail energy index starts at 1"));
    }
    Ok(tail_from_values(&singular_values(a)?, j))
}

pub fn truncated_svd(a: &Matrix, trunc: Truncation) -> Result<SvdResult> {
    let k = a.nrows().min(a.ncols());
    match trunc {
        Truncation::Rank(r) if r == 0 || r > k => {
            return Err(Error::invalid(format!(
                "rank {r} outside 1..={k} for a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        Truncation::Delta(delta) if !(delta >= 0.0) => {
            return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
        }
        _ => {}
    }
    let full = svd(a)?;
    let rank = match trunc {
        Truncation::Rank(r) => r,
        Truncation::Delta(delta) => delta_rank(&full.s, delta),
    };
    Ok(full.truncate(rank))
}

/// Smallest `r >= 1` with `tail_from_values(s, r + 1) <= delta`.
pub fn delta_rank(s: &[f64], delta: f64) -> usize {
    // tails[i] = norm of s[i..]
    let mut tails = vec![0.0; s.len() + 1];
    let mut acc = 0.0;
    for i in (0..s.len()).rev() {
        acc += s[i] * s[i];
        tails[i] = acc.sqrt();
    }
    (1..=s.len()).find(|&r| tails[r] <= delta).unwrap_or(s.len()).max(1)
}
