//! Rank scans of the sub-sampled Hadamard lift and spectrum dumps.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::lifting::{hadamard_rank_oracle, lift};
use crate::linalg::{numerical_rank, singular_values, DEFAULT_RANK_TOL};
use crate::signatures::{sample_signature, SignatureModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankScanRow {
    pub n: usize,
    pub l: usize,
    pub d: usize,
    pub seed: u64,
    pub measured_rank: usize,
    pub oracle_rank: usize,
}

/// Numerical rank of `A2` against the XOR-count oracle for every
/// `(N, L)` size and seed.
///
/// The oracle counts distinct Sylvester rows among the pairwise products, so
/// it is exact when the `N` sampled columns keep those rows independent.
/// That is typical once `N` is comfortably above the oracle value but is not
/// guaranteed near it; disagreements are logged and left to the caller.
pub fn rank_scan(n_full: usize, sizes: &[(usize, usize)], seeds: &[u64]) -> Result<Vec<RankScanRow>> {
    let model = SignatureModel::SubsampledHadamard { n_full };
    let mut rows = Vec::with_capacity(sizes.len() * seeds.len());
    for &(n, l) in sizes {
        if l < 2 {
            return Err(invalid(format!("L = {l} must be at least 2")));
        }
        for &seed in seeds {
            let s = sample_signature(model, l, n, seed)?;
            let row_idx = s
                .row_indices
                .as_deref()
                .ok_or_else(|| invalid("Hadamard sample carries no row indices"))?;
            let oracle = hadamard_rank_oracle(row_idx)?;
            let measured = numerical_rank(&lift(&s).a2, DEFAULT_RANK_TOL);
            if measured != oracle {
                log::warn!("rank scan N = {n}, L = {l}, seed {seed}: measured {measured}, oracle {oracle}");
            }
            rows.push(RankScanRow {
                n,
                l,
                d: l * (l - 1) / 2,
                seed,
                measured_rank: measured,
                oracle_rank: oracle,
            });
        }
    }
    Ok(rows)
}

/// Singular values of `A2` for one draw, descending.
pub fn spectrum(model: SignatureModel, l: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    let s = sample_signature(model, l, n, seed)?;
    Ok(singular_values(&lift(&s).a2))
}
