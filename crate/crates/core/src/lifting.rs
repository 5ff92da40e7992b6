//! Lifted covariance constraints and the semi-random surrogate.
//!
//! For a signature matrix `S` the covariance map `γ ↦ S diag(γ) Sᵀ` is linear
//! in `γ`. Its distinct equations are the diagonal block `A1 = S ⊙ S` and the
//! strictly-lower-triangular block `A2`, whose row for the pair `(i, j)`,
//! `j < i`, is the entrywise product of rows `i` and `j` of `S`.

use std::collections::HashSet;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::signatures::SignatureMatrix;

pub use crate::linalg::{numerical_rank, singular_values};

#[derive(Debug, Clone)]
pub struct LiftedSystem {
    pub l: usize,
    pub n: usize,
    pub d: usize,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    /// `(i, j)` pairs (0-based, `j < i`) giving the row order of `a2`.
    pub pair_index: Vec<(usize, usize)>,
}

/// Which stack of lifted equations to certify against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackMode {
    /// `[A1; A2]`, valid for every signature model.
    Full,
    /// `[1ᵀ; A2]`, valid only when `A1` is the all-ones matrix.
    Reduced,
}

/// Pairs `(i, j)` with `0 <= j < i < l`, sorted by `(j, i)`.
pub fn pair_index(l: usize) -> Vec<(usize, usize)> {
    (0..l)
        .flat_map(|j| ((j + 1)..l).map(move |i| (i, j)))
        .collect()
}

pub fn lift(s: &SignatureMatrix) -> LiftedSystem {
    lift_matrix(&s.entries)
}

pub fn lift_matrix(s: &DMatrix<f64>) -> LiftedSystem {
    let (l, n) = s.shape();
    let pairs = pair_index(l);
    let a1 = s.map(|v| v * v);
    let mut a2 = DMatrix::zeros(pairs.len(), n);
    for col in 0..n {
        let sc = s.column(col);
        for (row, &(i, j)) in pairs.iter().enumerate() {
            a2[(row, col)] = sc[i] * sc[j];
        }
    }
    LiftedSystem {
        l,
        n,
        d: pairs.len(),
        a1,
        a2,
        pair_index: pairs,
    }
}

pub fn stacked_constraints(sys: &LiftedSystem, mode: StackMode) -> Result<DMatrix<f64>> {
    let n = sys.n;
    match mode {
        StackMode::Full => {
            let mut m = DMatrix::zeros(sys.l + sys.d, n);
            m.view_mut((0, 0), (sys.l, n)).copy_from(&sys.a1);
            m.view_mut((sys.l, 0), (sys.d, n)).copy_from(&sys.a2);
            Ok(m)
        }
        StackMode::Reduced => {
            if sys.a1.iter().any(|&v| v != 1.0) {
                return Err(Error::InvalidMode(
                    "reduced stack requires S ⊙ S to be the all-ones matrix".into(),
                ));
            }
            Ok(ones_over(&sys.a2))
        }
    }
}

/// `[1ᵀ; block]`.
pub fn ones_over(block: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, n) = block.shape();
    let mut m = DMatrix::zeros(d + 1, n);
    m.row_mut(0).fill(1.0);
    m.view_mut((1, 0), (d, n)).copy_from(block);
    m
}

/// Number of distinct `r_i XOR r_j` over index pairs. In Sylvester indexing
/// the entrywise product of Hadamard rows `a` and `b` is row `a ^ b`, so this
/// counts the distinct rows of `A2` for a sub-sampled Hadamard signature.
pub fn hadamard_rank_oracle(rows: &[usize]) -> Result<usize> {
    let mut seen = HashSet::with_capacity(rows.len());
    for &r in rows {
        if !seen.insert(r) {
            return Err(invalid(format!("duplicate Hadamard row index {r}")));
        }
    }
    let mut xors = HashSet::new();
    for (a, &ra) in rows.iter().enumerate() {
        for &rb in &rows[a + 1..] {
            xors.insert(ra ^ rb);
        }
    }
    Ok(xors.len())
}

/// Haar-distributed orthogonal matrix: QR of an IID Gaussian matrix with the
/// columns of `Q` flipped so that `R` has a positive diagonal.
pub fn haar_orthogonal(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(invalid("haar_orthogonal needs n >= 1"));
    }
    let mut rng = rng::stream(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng::gaussian(&mut rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        if r[(k, k)] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(q)
}

#[derive(Debug, Clone)]
pub struct SemiRandomSystem {
    pub n: usize,
    pub d: usize,
    /// `(1 + d) x n`: the all-ones row over the right-rotated block.
    pub constraints: DMatrix<f64>,
    pub spectrum: Vec<f64>,
    pub seed: u64,
}

impl SemiRandomSystem {
    /// The `d x n` right-rotationally-invariant block.
    pub fn rotated_block(&self) -> DMatrix<f64> {
        self.constraints.rows(1, self.d).into_owned()
    }
}

/// `[1ᵀ; [diag(spectrum) 0] Vᵀ]` with `V` Haar on `O(n)`.
pub fn semi_random_system(spectrum: &[f64], n: usize, seed: u64) -> Result<SemiRandomSystem> {
    let d = spectrum.len();
    if d > n {
        return Err(invalid(format!("spectrum length {d} exceeds N = {n}")));
    }
    if let Some(bad) = spectrum.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(invalid(format!("spectrum entry {bad} is not a non-negative real")));
    }
    let v = haar_orthogonal(n, seed)?;
    let block = DMatrix::from_fn(d, n, |i, j| spectrum[i] * v[(j, i)]);
    Ok(SemiRandomSystem {
        n,
        d,
        constraints: ones_over(&block),
        spectrum: spectrum.to_vec(),
        seed,
    })
}
