//! Random signature matrices: IID Gaussian, Rademacher, and doubly
//! sub-sampled Sylvester-Hadamard.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Largest Sylvester order accepted by [`hadamard_full`].
pub const MAX_HADAMARD_LOG2: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SignatureModel {
    Gaussian,
    Rademacher,
    #[serde(rename = "hadamard")]
    SubsampledHadamard { n_full: usize },
}

impl SignatureModel {
    /// True when every entry is +-1, so `S ⊙ S` is the all-ones matrix.
    pub fn is_sign_valued(&self) -> bool {
        !matches!(self, SignatureModel::Gaussian)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SignatureModel::Gaussian => "gaussian",
            SignatureModel::Rademacher => "rademacher",
            SignatureModel::SubsampledHadamard { .. } => "hadamard",
        }
    }

    /// Small integer tag used when deriving per-trial seeds.
    pub fn tag(&self) -> u64 {
        match self {
            SignatureModel::Gaussian => 1,
            SignatureModel::Rademacher => 2,
            SignatureModel::SubsampledHadamard { n_full } => 3 ^ ((*n_full as u64) << 8),
        }
    }
}

impl fmt::Display for SignatureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `gaussian`, `rademacher`, `hadamard` (default `n_full` 1024) or
/// `hadamard:<n_full>`.
impl FromStr for SignatureModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "gaussian" => Ok(SignatureModel::Gaussian),
            "rademacher" => Ok(SignatureModel::Rademacher),
            "hadamard" => Ok(SignatureModel::SubsampledHadamard { n_full: 1024 }),
            other => match other.strip_prefix("hadamard:") {
                Some(n) => n
                    .parse()
                    .map(|n_full| SignatureModel::SubsampledHadamard { n_full })
                    .map_err(|_| invalid(format!("bad n_full in model '{s}'"))),
                None => Err(invalid(format!("unknown signature model '{s}'"))),
            },
        }
    }
}

/// An `L x N` signature matrix with its provenance.
#[derive(Debug, Clone)]
pub struct SignatureMatrix {
    pub entries: DMatrix<f64>,
    pub model: SignatureModel,
    pub seed: u64,
    /// Sylvester row indices used, in row order (Hadamard model only).
    pub row_indices: Option<Vec<usize>>,
    /// Sylvester column indices used, in column order (Hadamard model only).
    pub col_indices: Option<Vec<usize>>,
}

impl SignatureMatrix {
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }
}

/// Entry `(i, j)` of the Sylvester-Hadamard matrix: `(-1)^popcount(i & j)`.
#[inline]
pub fn sylvester_entry(i: usize, j: usize) -> i8 {
    if (i & j).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// The `2^q x 2^q` Sylvester-Hadamard matrix, built by the doubling
/// recursion `H_2n = [[H_n, H_n], [H_n, -H_n]]`.
pub fn hadamard_full(q: u32) -> Result<DMatrix<i8>> {
    if q > MAX_HADAMARD_LOG2 {
        return Err(Error::ResourceLimit(format!(
            "Hadamard order 2^{q} exceeds 2^{MAX_HADAMARD_LOG2}"
        )));
    }
    let mut h = DMatrix::from_element(1, 1, 1i8);
    for _ in 0..q {
        let n = h.nrows();
        let mut next = DMatrix::zeros(2 * n, 2 * n);
        next.view_mut((0, 0), (n, n)).copy_from(&h);
        next.view_mut((0, n), (n, n)).copy_from(&h);
        next.view_mut((n, 0), (n, n)).copy_from(&h);
        next.view_mut((n, n), (n, n)).copy_from(&(-&h));
        h = next;
    }
    Ok(h)
}

pub fn sample_signature(model: SignatureModel, l: usize, n: usize, seed: u64) -> Result<SignatureMatrix> {
    if l == 0 || n == 0 {
        return Err(invalid(format!("signature dimensions must be positive, got {l}x{n}")));
    }
    let mut rng = rng::stream(seed);
    let (entries, row_indices, col_indices) = match model {
        SignatureModel::Gaussian => {
            // Column-major fill order is part of the reproducibility contract.
            let m = DMatrix::from_fn(l, n, |_, _| rng::gaussian(&mut rng));
            (m, None, None)
        }
        SignatureModel::Rademacher => {
            let m = DMatrix::from_fn(l, n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
            (m, None, None)
        }
        SignatureModel::SubsampledHadamard { n_full } => {
            if !n_full.is_power_of_two() {
                return Err(invalid(format!("n_full = {n_full} is not a power of two")));
            }
            if n_full < l.max(n) {
                return Err(invalid(format!(
                    "n_full = {n_full} is smaller than max(L, N) = {}",
                    l.max(n)
                )));
            }
            if n_full.trailing_zeros() > MAX_HADAMARD_LOG2 {
                return Err(Error::ResourceLimit(format!("n_full = {n_full} too large")));
            }
            let rows = sample_without_replacement(n_full, l, &mut rng);
            let cols = sample_without_replacement(n_full, n, &mut rng);
            let m = DMatrix::from_fn(l, n, |i, j| f64::from(sylvester_entry(rows[i], cols[j])));
            (m, Some(rows), Some(cols))
        }
    };
    Ok(SignatureMatrix {
        entries,
        model,
        seed,
        row_indices,
        col_indices,
    })
}

/// Partial Fisher-Yates over `0..n`, returning the first `k` positions.
fn sample_without_replacement<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let (chosen, _) = idx.partial_shuffle(rng, k);
    chosen.to_vec()
}

/// Plain-text dump: a header line `rows cols` followed by one
/// whitespace-separated line per row.
pub fn write_matrix_text<W: std::io::Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix_text<R: std::io::Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut tokens = text.split_whitespace();
    let mut next_usize = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| invalid(format!("matrix file: missing {what}")))?
            .parse()
            .map_err(|_| invalid(format!("matrix file: bad {what}")))
    };
    let rows = next_usize("row count")?;
    let cols = next_usize("column count")?;
    let values: Vec<f64> = tokens
        .map(|t| t.parse::<f64>().map_err(|_| invalid(format!("matrix file: bad entry '{t}'"))))
        .collect::<Result<_>>()?;
    if values.len() != rows * cols {
        return Err(invalid(format!(
            "matrix file: expected {} entries, found {}",
            rows * cols,
            values.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram_i64(h: &DMatrix<i8>) -> DMatrix<i64> {
        let n = h.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| i64::from(h[(i, k)]) * i64::from(h[(j, k)])).sum()
        })
    }

    #[test]
    fn hadamard_base_cases() {
        assert_eq!(hadamard_full(0).unwrap(), DMatrix::from_element(1, 1, 1));
        assert_eq!(hadamard_full(1).unwrap(), DMatrix::from_row_slice(2, 2, &[1, 1, 1, -1]));
    }

    #[test]
    fn hadamard_orthogonality_q3() {
        let h = hadamard_full(3).unwrap();
        assert_eq!(gram_i64(&h), DMatrix::identity(8, 8) * 8);
    }

    #[test]
    fn hadamard_matches_popcount_indexing() {
        let h = hadamard_full(5).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                assert_eq!(h[(i, j)], sylvester_entry(i, j));
            }
        }
    }

    #[test]
    fn hadamard_order_guard() {
        assert!(matches!(hadamard_full(17), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn two_by_two_hadamard_is_a_permutation() {
        let model = SignatureModel::SubsampledHadamard { n_full: 2 };
        for seed in 0..10 {
            let s = sample_signature(model, 2, 2, seed).unwrap();
            let m = &s.entries;
            // A row/column permutation of [[1,1],[1,-1]] has exactly one -1.
            assert_eq!(m.iter().filter(|&&v| v == -1.0).count(), 1);
            assert_eq!(m.iter().filter(|&&v| v == 1.0).count(), 3);
        }
    }

    #[test]
    fn full_subsample_reproduces_hadamard_up_to_permutation() {
        let model = SignatureModel::SubsampledHadamard { n_full: 8 };
        let s = sample_signature(model, 8, 8, 42).unwrap();
        let rows = s.row_indices.as_ref().unwrap();
        let cols = s.col_indices.as_ref().unwrap();
        let h = hadamard_full(3).unwrap();
        let mut sorted_rows = rows.clone();
        sorted_rows.sort_unstable();
        assert_eq!(sorted_rows, (0..8).collect::<Vec<_>>());
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(s.entries[(i, j)], f64::from(h[(rows[i], cols[j])]));
            }
        }
    }

    #[test]
    fn rademacher_entries_are_signs() {
        let s = sample_signature(SignatureModel::Rademacher, 50, 50, 9).unwrap();
        assert!(s.entries.iter().all(|&v| v == 1.0 || v == -1.0));
        assert!(s.entries.iter().any(|&v| v == 1.0));
        assert!(s.entries.iter().any(|&v| v == -1.0));
    }

    #[test]
    fn gaussian_moments() {
        let s = sample_signature(SignatureModel::Gaussian, 200, 200, 11).unwrap();
        let n = s.entries.len() as f64;
        let mean = s.entries.sum() / n;
        let var = s.entries.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 0.1, "var {var}");
    }

    #[test]
    fn sampling_is_reproducible() {
        for model in [
            SignatureModel::Gaussian,
            SignatureModel::Rademacher,
            SignatureModel::SubsampledHadamard { n_full: 64 },
        ] {
            let a = sample_signature(model, 6, 40, 5).unwrap();
            let b = sample_signature(model, 6, 40, 5).unwrap();
            assert_eq!(a.entries, b.entries);
            let c = sample_signature(model, 6, 40, 6).unwrap();
            assert_ne!(a.entries, c.entries);
        }
    }

    #[test]
    fn sign_models_square_to_ones() {
        for model in [SignatureModel::Rademacher, SignatureModel::SubsampledHadamard { n_full: 64 }] {
            let s = sample_signature(model, 7, 30, 1).unwrap();
            assert!(s.entries.iter().all(|v| v * v == 1.0));
        }
    }

    #[test]
    fn dimension_errors() {
        assert!(sample_signature(SignatureModel::Gaussian, 0, 3, 0).is_err());
        assert!(sample_signature(SignatureModel::Rademacher, 3, 0, 0).is_err());
        let h = SignatureModel::SubsampledHadamard { n_full: 8 };
        assert!(sample_signature(h, 4, 9, 0).is_err());
        let bad = SignatureModel::SubsampledHadamard { n_full: 12 };
        assert!(sample_signature(bad, 4, 4, 0).is_err());
    }

    #[test]
    fn hadamard_indices_distinct() {
        let s = sample_signature(SignatureModel::SubsampledHadamard { n_full: 1024 }, 25, 300, 3).unwrap();
        let mut r = s.row_indices.unwrap();
        r.sort_unstable();
        r.dedup();
        assert_eq!(r.len(), 25);
        let mut c = s.col_indices.unwrap();
        c.sort_unstable();
        c.dedup();
        assert_eq!(c.len(), 300);
    }

    #[test]
    fn model_parsing() {
        assert_eq!("gaussian".parse::<SignatureModel>().unwrap(), SignatureModel::Gaussian);
        assert_eq!(
            "hadamard:2048".parse::<SignatureModel>().unwrap(),
            SignatureModel::SubsampledHadamard { n_full: 2048 }
        );
        assert!("bernoulli".parse::<SignatureModel>().is_err());
    }

    #[test]
    fn matrix_text_roundtrip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.5, 0.1, 3.0, 4.0, 1e-17]);
        let mut buf = Vec::new();
        write_matrix_text(&mut buf, &m).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("2 3\n"));
        assert_eq!(read_matrix_text(&buf[..]).unwrap(), m);
        assert!(read_matrix_text("2 2\n1 2 3".as_bytes()).is_err());
    }
}
