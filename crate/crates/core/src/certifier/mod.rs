//! Certification of the identifiability event `N(A) ∩ C = {0}` where
//! `C = {x : x_i >= 0 for i in I}` and `I` indexes the inactive users.
//!
//! The decision is made by one LP plus a rank check:
//!
//! ```text
//! maximize   Σ_{i∈I} x_i
//! subject to R x = 0,  Σ_{i∈I} x_i <= 1,  x_I >= 0,  x_{I_c} free
//! ```
//!
//! where `R` has orthonormal rows spanning the row space of `A`. Any nonzero
//! cone direction in the null space either has `Σ x_I > 0`, in which case it
//! rescales to an LP point of value 1, or is supported on `I_c`, in which
//! case the columns of `R` on `I_c` are dependent. The LP optimum is
//! therefore exactly 0 or 1.

pub mod oracles;
pub mod simplex;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{inf_norm, right_split, right_split_with_scale, select_columns, vec_inf_norm};

pub use oracles::{angular_sweep_oracle, pgd_oracle, PgdResult};
pub use simplex::{simplex_solve, LpSolution, PivotRule, SimplexOptions, StandardLp};

/// Witness residual bound, relative to `‖A‖∞ ‖x‖∞`.
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-8;
/// Allowed negativity of a witness on `I`.
pub const WITNESS_SIGN_TOL: f64 = 1e-9;

/// The feasible-direction cone at a ground truth with `K` active users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSpec {
    pub n: usize,
    pub k: usize,
    /// Inactive users (sign-constrained coordinates), sorted.
    pub inactive: Vec<usize>,
    /// Active users (free coordinates), sorted.
    pub active: Vec<usize>,
}

impl ConeSpec {
    /// Active set = the last `k` indices.
    pub fn canonical(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(invalid(format!("K = {k} exceeds N = {n}")));
        }
        Ok(ConeSpec {
            n,
            k,
            inactive: (0..n - k).collect(),
            active: (n - k..n).collect(),
        })
    }

    pub fn from_active(n: usize, active: &[usize]) -> Result<Self> {
        let mut is_active = vec![false; n];
        for &a in active {
            if a >= n {
                return Err(invalid(format!("active index {a} out of range for N = {n}")));
            }
            if is_active[a] {
                return Err(invalid(format!("duplicate active index {a}")));
            }
            is_active[a] = true;
        }
        let (act, inact): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_active[i]);
        Ok(ConeSpec {
            n,
            k: act.len(),
            inactive: inact,
            active: act,
        })
    }

    /// Apply a column permutation: new index of old coordinate `i` is `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let act: Vec<usize> = self.active.iter().map(|&i| perm[i]).collect();
        ConeSpec::from_active(self.n, &act)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Identifiable,
    NotIdentifiable,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertifierConfig {
    pub feas_tol: f64,
    /// `None` means `50 * (rows + cols)` of the LP tableau.
    pub max_iterations: Option<usize>,
    pub rank_tol: f64,
}

impl Default for CertifierConfig {
    fn default() -> Self {
        CertifierConfig {
            feas_tol: 1e-9,
            max_iterations: None,
            rank_tol: crate::linalg::DEFAULT_RANK_TOL,
        }
    }
}

impl CertifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0 && self.feas_tol < 0.5) {
            return Err(invalid(format!("feasibility tolerance {} out of (0, 0.5)", self.feas_tol)));
        }
        if !(self.rank_tol > 0.0) {
            return Err(invalid("rank tolerance must be positive"));
        }
        if self.max_iterations == Some(0) {
            return Err(invalid("max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    pub feas: f64,
    pub rank: f64,
    pub witness_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub lp_opt: f64,
    /// Rank of the compressed constraints restricted to the active columns.
    /// Computed only when the LP optimum is 0.
    #[serde(rename = "rank_Ic")]
    pub rank_ic: Option<usize>,
    /// Numerical rank of the full constraint matrix.
    pub rank: usize,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    pub tolerances: Tolerances,
}

impl Certificate {
    pub fn is_identifiable(&self) -> bool {
        self.verdict == Verdict::Identifiable
    }
}

/// Checks the witness invariants against the original constraints.
pub fn witness_is_valid(a: &DMatrix<f64>, cone: &ConeSpec, x: &[f64]) -> bool {
    let xn = vec_inf_norm(x);
    if (xn - 1.0).abs() > 1e-12 {
        return false;
    }
    let ax = a * DVector::from_column_slice(x);
    let bound = WITNESS_RESIDUAL_TOL * inf_norm(a) * xn;
    ax.amax() <= bound && cone.inactive.iter().all(|&i| x[i] >= -WITNESS_SIGN_TOL)
}

fn normalise(mut x: Vec<f64>) -> Vec<f64> {
    let m = vec_inf_norm(&x);
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v /= m);
    }
    x
}

/// Assemble the certification LP over the compressed constraints `r`.
///
/// Columns: `x_I` (|I|), `x_Ic⁺` (K), `x_Ic⁻` (K), normalisation slack.
pub fn certification_lp(r: &DMatrix<f64>, cone: &ConeSpec) -> StandardLp {
    let rank = r.nrows();
    let (ni, k) = (cone.inactive.len(), cone.k);
    let cols = ni + 2 * k + 1;
    let mut a = DMatrix::zeros(rank + 1, cols);
    for row in 0..rank {
        for (c, &i) in cone.inactive.iter().enumerate() {
            a[(row, c)] = r[(row, i)];
        }
        for (c, &i) in cone.active.iter().enumerate() {
            a[(row, ni + c)] = r[(row, i)];
            a[(row, ni + k + c)] = -r[(row, i)];
        }
    }
    for c in 0..ni {
        a[(rank, c)] = 1.0;
    }
    a[(rank, cols - 1)] = 1.0;
    let mut b = vec![0.0; rank + 1];
    b[rank] = 1.0;
    let mut c = vec![0.0; cols];
    c[..ni].fill(1.0);
    StandardLp { a, b, c }
}

fn lp_point_to_x(sol: &LpSolution, cone: &ConeSpec) -> Vec<f64> {
    let (ni, k) = (cone.inactive.len(), cone.k);
    let mut x = vec![0.0; cone.n];
    for (c, &i) in cone.inactive.iter().enumerate() {
        x[i] = sol.x[c];
    }
    for (c, &i) in cone.active.iter().enumerate() {
        x[i] = sol.x[ni + c] - sol.x[ni + k + c];
    }
    x
}

pub fn certify(a: &DMatrix<f64>, cone: &ConeSpec, cfg: &CertifierConfig) -> Result<Certificate> {
    if a.ncols() != cone.n {
        return Err(invalid(format!(
            "constraint matrix has {} columns but the cone has N = {}",
            a.ncols(),
            cone.n
        )));
    }
    cfg.validate()?;
    let tolerances = Tolerances {
        feas: cfg.feas_tol,
        rank: cfg.rank_tol,
        witness_residual: WITNESS_RESIDUAL_TOL,
    };
    let split = right_split(a, cfg.rank_tol);
    let r = &split.row_basis;

    let lp = certification_lp(r, cone);
    let mut opts = SimplexOptions::for_shape(lp.a.nrows(), lp.a.ncols());
    if let Some(cap) = cfg.max_iterations {
        opts.max_iterations = cap;
    }
    let sol = simplex_solve(&lp, &opts)?;
    let opt = sol.optimum;

    if opt >= 1.0 - cfg.feas_tol {
        let x = normalise(lp_point_to_x(&sol, cone));
        if !witness_is_valid(a, cone, &x) {
            return Err(Error::NumericalFailure(
                "LP witness failed post-hoc verification".into(),
            ));
        }
        return Ok(Certificate {
            verdict: Verdict::NotIdentifiable,
            lp_opt: opt,
            rank_ic: None,
            rank: split.rank,
            iterations: sol.iterations,
            witness: Some(x),
            tolerances,
        });
    }
    if opt > cfg.feas_tol {
        return Err(Error::Ambiguous {
            optimum: opt,
            tol: cfg.feas_tol,
        });
    }

    // Rows of `r` are orthonormal, so its scale is exactly 1.
    let r_active = select_columns(r, &cone.active);
    let sub = right_split_with_scale(&r_active, cfg.rank_tol, Some(1.0));
    let rank_ic = sub.rank.min(cone.k);
    if rank_ic < cone.k {
        let z = sub.null_basis.column(0);
        let mut x = vec![0.0; cone.n];
        for (c, &i) in cone.active.iter().enumerate() {
            x[i] = z[c];
        }
        let x = normalise(x);
        if !witness_is_valid(a, cone, &x) {
            return Err(Error::NumericalFailure(
                "rank-branch witness failed post-hoc verification".into(),
            ));
        }
        return Ok(Certificate {
            verdict: Verdict::NotIdentifiable,
            lp_opt: opt,
            rank_ic: Some(rank_ic),
            rank: split.rank,
            iterations: sol.iterations,
            witness: Some(x),
            tolerances,
        });
    }
    Ok(Certificate {
        verdict: Verdict::Identifiable,
        lp_opt: opt,
        rank_ic: Some(rank_ic),
        rank: split.rank,
        iterations: sol.iterations,
        witness: None,
        tolerances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_RANK_TOL;
    use crate::rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn cfg() -> CertifierConfig {
        CertifierConfig::default()
    }

    #[test]
    fn identity_is_identifiable() {
        let a = DMatrix::identity(3, 3);
        for k in 0..=3 {
            let c = certify(&a, &ConeSpec::canonical(3, k).unwrap(), &cfg()).unwrap();
            assert_eq!(c.verdict, Verdict::Identifiable);
            assert!(c.witness.is_none());
            assert_eq!(c.rank_ic, Some(k));
        }
    }

    #[test]
    fn unconstrained_cone_uses_rank_branch() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
        let cone = ConeSpec::canonical(3, 3).unwrap();
        let c = certify(&a, &cone, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::NotIdentifiable);
        assert_eq!(c.rank_ic, Some(1));
        assert!(witness_is_valid(&a, &cone, c.witness.as_ref().unwrap()));
    }

    #[test]
    fn single_equation_lp_branch() {
        // Null space of [1 1 -1] is 2-dimensional; cone point (0.5, 0.5, 1).
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, -1.0]);
        let cone = ConeSpec::from_active(3, &[2]).unwrap();
        let c = certify(&a, &cone, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::NotIdentifiable);
        assert!((c.lp_opt - 1.0).abs() < 1e-12);
        let w = c.witness.unwrap();
        assert!(w[0] >= 0.0 && w[1] >= 0.0);
        assert!((w[0] + w[1] - w[2]).abs() < 1e-12);
        assert!((w[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pointed_cone_with_no_feasible_direction() {
        // Null space spanned by (1, -1): every ray has a negative coordinate.
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let cone = ConeSpec::canonical(2, 0).unwrap();
        let c = certify(&a, &cone, &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::Identifiable);
        assert!(c.lp_opt.abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_never_identifiable_for_nonempty_cone() {
        let a = DMatrix::zeros(2, 4);
        let c = certify(&a, &ConeSpec::canonical(4, 1).unwrap(), &cfg()).unwrap();
        assert_eq!(c.verdict, Verdict::NotIdentifiable);
        assert_eq!(c.rank, 0);
    }

    #[test]
    fn column_mismatch_is_rejected() {
        let a = DMatrix::identity(3, 3);
        assert!(certify(&a, &ConeSpec::canonical(4, 1).unwrap(), &cfg()).is_err());
    }

    #[test]
    fn cone_spec_validation() {
        assert!(ConeSpec::canonical(3, 4).is_err());
        assert!(ConeSpec::from_active(3, &[0, 0]).is_err());
        assert!(ConeSpec::from_active(3, &[3]).is_err());
        let c = ConeSpec::from_active(5, &[4, 1]).unwrap();
        assert_eq!(c.active, vec![1, 4]);
        assert_eq!(c.inactive, vec![0, 2, 3]);
    }

    #[test]
    fn certificate_json_shape() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, -1.0]);
        let c = certify(&a, &ConeSpec::canonical(3, 1).unwrap(), &cfg()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        for key in ["verdict", "lp_opt", "rank_Ic", "iterations", "witness", "tolerances"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let id = certify(&DMatrix::identity(2, 2), &ConeSpec::canonical(2, 1).unwrap(), &cfg()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&id).unwrap();
        assert!(v.get("witness").is_none());
        assert_eq!(v["verdict"], "Identifiable");
    }

    fn random_instance(seed: u64) -> (DMatrix<f64>, ConeSpec) {
        let mut r = rng::stream(seed);
        let n = r.random_range(2..=10);
        let rows = r.random_range(1..n);
        let k = r.random_range(0..=n);
        let a = DMatrix::from_fn(rows, n, |_, _| rng::gaussian(&mut r));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut r);
        (a, ConeSpec::from_active(n, &idx[..k]).unwrap())
    }

    #[test]
    fn lp_optimum_is_binary() {
        for seed in 0..500 {
            let (a, cone) = random_instance(seed);
            let c = certify(&a, &cone, &cfg()).unwrap();
            assert!(c.lp_opt.abs() <= 1e-9 || (c.lp_opt - 1.0).abs() <= 1e-9, "seed {seed}: {}", c.lp_opt);
            if let Some(w) = &c.witness {
                assert!(witness_is_valid(&a, &cone, w));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn verdict_is_permutation_equivariant(seed in 0u64..10_000, pseed in 0u64..10_000) {
            let (a, cone) = random_instance(seed);
            let n = cone.n;
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng::stream(pseed));
            // Column i of `a` moves to position perm[i].
            let mut b = DMatrix::zeros(a.nrows(), n);
            for i in 0..n {
                b.set_column(perm[i], &a.column(i));
            }
            let c1 = certify(&a, &cone, &cfg()).unwrap();
            let c2 = certify(&b, &cone.permuted(&perm).unwrap(), &cfg()).unwrap();
            prop_assert_eq!(c1.verdict, c2.verdict);
        }

        #[test]
        fn verdict_is_row_scaling_invariant(seed in 0u64..10_000, scale in prop::collection::vec(0.01f64..100.0, 12), flip in any::<u16>()) {
            let (a, cone) = random_instance(seed);
            let mut b = a.clone();
            for (i, mut row) in b.row_iter_mut().enumerate() {
                let s = if flip >> (i % 16) & 1 == 1 { -scale[i % 12] } else { scale[i % 12] };
                row *= s;
            }
            let c1 = certify(&a, &cone, &cfg()).unwrap();
            let c2 = certify(&b, &cone, &cfg()).unwrap();
            prop_assert_eq!(c1.verdict, c2.verdict);
        }
    }

    #[test]
    fn rank_matches_constraint_rank() {
        let (a, cone) = random_instance(17);
        let c = certify(&a, &cone, &cfg()).unwrap();
        assert_eq!(c.rank, crate::linalg::numerical_rank(&a, DEFAULT_RANK_TOL));
    }
}
