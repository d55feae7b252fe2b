//! Householder QR.

use nalgebra::DVector;

use super::Matrix;

/// Relative drop tolerance for [`orthonormal_basis`]: a column whose residual
/// norm is at most `DROP_TOLERANCE * |R_11|` is treated as dependent.
pub const DROP_TOLERANCE: f64 = 1e-12;

/// Householder vector for `x`, normalized to unit length, and the resulting
/// diagonal entry. Returns `None` when `x` is zero.
fn reflector(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm = v.iter().map(|e| e * e).sum::<f64>().sqrt();
    if vnorm == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|e| *e /= vnorm);
    Some((v, alpha))
}

/// Applies `I − 2vvᵀ` to rows `offset..` of column `col` of `w`.
fn reflect_column(w: &mut Matrix, v: &[f64], offset: usize, col: usize) {
    let c = &mut w.column_mut(col);
    let tail = &mut c.as_mut_slice()[offset..];
    let dot: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot;
    tail.iter_mut().zip(v).for_each(|(t, a)| *t -= f * a);
}

/// Forms the first `k` columns of `H_0 H_1 ... H_{k-1}` where reflector `i`
/// acts on rows `i..`.
fn accumulate(rows: usize, reflectors: &[Option<Vec<f64>>]) -> Matrix {
    let k = reflectors.len();
    let mut q = Matrix::zeros(rows, k);
    for i in 0..k {
        q[(i, i)] = 1.0;
    }
    for (i, v) in reflectors.iter().enumerate().rev() {
        if let Some(v) = v {
            for col in i..k {
                reflect_column(&mut q, v, i, col);
            }
        }
    }
    q
}

/// Economy-size QR: `Q` is `m × min(m,n)` with orthonormal columns and `R`
/// is `min(m,n) × n` upper triangular with a nonnegative diagonal.
///
/// Rank-deficient inputs still give an orthonormal `Q` whose span contains
/// the range of `a`.
pub fn economy_qr(a: &Matrix) -> (Matrix, Matrix) {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut w = a.clone();
    let mut reflectors = Vec::with_capacity(k);
    for j in 0..k {
        let x = &w.as_slice()[j * m + j..(j + 1) * m];
        match reflector(x) {
            Some((v, _)) => {
                for col in j..n {
                    reflect_column(&mut w, &v, j, col);
                }
                reflectors.push(Some(v));
            }
            None => reflectors.push(None),
        }
    }
    let mut q = accumulate(m, &reflectors);
    let mut r = Matrix::zeros(k, n);
    for col in 0..n {
        for row in 0..k.min(col + 1) {
            r[(row, col)] = w[(row, col)];
        }
    }
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    (q, r)
}

/// Orthonormal basis of the column span of `a`, processing columns left to
/// right and skipping any column whose component orthogonal to the columns
/// already accepted has norm at most `DROP_TOLERANCE * |R_11|`. At most
/// `cap` columns are kept.
pub fn orthonormal_basis(a: &Matrix, cap: usize) -> Matrix {
    let (m, n) = a.shape();
    let cap = cap.min(m).min(n);
    let mut w = a.clone();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(cap);
    let mut signs = Vec::with_capacity(cap);
    let mut lead: Option<f64> = None;
    for col in 0..n {
        let k = reflectors.len();
        if k == cap {
            break;
        }
        let x = &w.as_slice()[col * m + k..(col + 1) * m];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = DROP_TOLERANCE * lead.unwrap_or(0.0);
        if norm <= tol || norm == 0.0 {
            continue;
        }
        lead.get_or_insert(norm);
        let (v, alpha) = reflector(x).expect("nonzero column");
        for c in col..n {
            reflect_column(&mut w, &v, k, c);
        }
        reflectors.push(Some(v));
        signs.push(alpha.signum());
    }
    let mut q = accumulate(m, &reflectors);
    for (j, s) in signs.into_iter().enumerate() {
        if s < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Extends the orthonormal columns of `q` to `min(k, m)` orthonormal
/// columns by orthogonalizing unit vectors `e_0, e_1, ...` against the
/// current basis (two Gram-Schmidt passes). The columns of `q` are kept
/// bit-exact.
pub fn complete_basis(q: &Matrix, k: usize) -> Matrix {
    let m = q.nrows();
    let k = k.min(m);
    if q.ncols() >= k {
        return q.columns(0, k).into_owned();
    }
    let mut out = Matrix::zeros(m, k);
    out.columns_mut(0, q.ncols()).copy_from(q);
    let mut have = q.ncols();
    let mut used = vec![false; m];
    // Σ_i ‖P e_i‖² = have, so few unit vectors fail the first threshold;
    // the best one always has residual >= sqrt((m - have) / m).
    for threshold in [0.5, 0.5 / (m as f64).sqrt()] {
        for i in 0..m {
            if have == k {
                return out;
            }
            if used[i] {
                continue;
            }
            let mut v = DVector::zeros(m);
            v[i] = 1.0;
            for _ in 0..2 {
                let basis = out.columns(0, have);
                let c = basis.transpose() * &v;
                v -= basis * c;
            }
            let norm = v.norm();
            if norm > threshold {
                out.set_column(have, &(v / norm));
                used[i] = true;
                have += 1;
            }
        }
    }
    out
}
