//! Dense SVD-based helpers shared by the lifting and certification code.

use nalgebra::DMatrix;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Singular values in descending order, `min(rows, cols)` of them.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn rank_threshold(sigma_max: f64, rows: usize, cols: usize, rel_tol: f64) -> f64 {
    rel_tol * rows.max(cols) as f64 * sigma_max
}

/// Count of singular values above `rel_tol * max(rows, cols) * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    rank_from_values(&singular_values(m), m.nrows(), m.ncols(), rel_tol)
}

pub(crate) fn rank_from_values(sv: &[f64], rows: usize, cols: usize, rel_tol: f64) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let thr = rank_threshold(smax, rows, cols, rel_tol);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Right singular structure of a matrix: the row space and null space as
/// orthonormal bases, plus the spectrum they were cut from.
pub struct RightSplit {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `rank x cols`, orthonormal rows spanning the row space.
    pub row_basis: DMatrix<f64>,
    /// `cols x (cols - rank)`, orthonormal columns spanning the null space.
    pub null_basis: DMatrix<f64>,
}

/// Full right-singular split. Wide inputs are padded with zero rows so the
/// factorisation always returns a complete `cols x cols` right factor.
pub fn right_split(m: &DMatrix<f64>, rel_tol: f64) -> RightSplit {
    right_split_with_scale(m, rel_tol, None)
}

/// As [`right_split`], but measures the rank threshold against `scale`
/// instead of the matrix's own largest singular value. Used for sub-blocks
/// whose parent has a known norm, so a numerically-zero block is rank 0.
pub fn right_split_with_scale(m: &DMatrix<f64>, rel_tol: f64, scale: Option<f64>) -> RightSplit {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return RightSplit {
            singular_values: Vec::new(),
            rank: 0,
            row_basis: DMatrix::zeros(0, 0),
            null_basis: DMatrix::zeros(0, 0),
        };
    }
    let padded;
    let work = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    let svd = work.clone().svd(false, true);
    let v_t = svd.v_t.expect("right factor requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let all: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sv: Vec<f64> = all[..rows.min(cols)].to_vec();
    let rank = match scale {
        None => rank_from_values(&sv, rows, cols, rel_tol),
        Some(s) => {
            let thr = rank_threshold(s, rows, cols, rel_tol);
            sv.iter().filter(|&&v| v > thr).count()
        }
    };

    let mut row_basis = DMatrix::zeros(rank, cols);
    for (k, &i) in order[..rank].iter().enumerate() {
        row_basis.row_mut(k).copy_from(&v_t.row(i));
    }
    let mut null_basis = DMatrix::zeros(cols, cols - rank);
    for (k, &i) in order[rank..].iter().enumerate() {
        null_basis.column_mut(k).copy_from(&v_t.row(i).transpose());
    }
    RightSplit {
        singular_values: sv,
        rank,
        row_basis,
        null_basis,
    }
}

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Select columns of `m` in the given order.
pub fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}
