//! Independent cross-checks for the LP certifier. Neither is used to reach a
//! verdict; they exist so the certifier can be validated against code that
//! shares none of its machinery.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::ConeSpec;
use crate::error::{Error, Result};
use crate::linalg::{right_split, select_columns, DEFAULT_RANK_TOL};
use crate::rng;

/// Relative slack allowed on the sign constraints during the sweep.
const SWEEP_SIGN_TOL: f64 = 1e-12;

fn passes(x: &DVector<f64>, inactive: &[usize]) -> bool {
    let floor = -SWEEP_SIGN_TOL * x.norm();
    inactive.iter().all(|&i| x[i] >= floor)
}

/// Searches a null space of dimension at most 2 for a nonzero direction with
/// `x_I >= 0`. For a 2-dimensional basis the unit circle is swept on a
/// uniform grid, and every angle at which some `x_i`, `i ∈ I`, changes sign
/// is tested as well, so arcs narrower than the grid spacing are not missed.
pub fn angular_sweep_oracle(null_basis: &DMatrix<f64>, inactive: &[usize], grid_points: usize) -> Result<bool> {
    match null_basis.ncols() {
        0 => Ok(false),
        1 => {
            let b = null_basis.column(0).into_owned();
            Ok(passes(&b, inactive) || passes(&(-b), inactive))
        }
        2 => {
            let b1 = null_basis.column(0);
            let b2 = null_basis.column(1);
            let at = |theta: f64| b1 * theta.cos() + b2 * theta.sin();
            let grid = (0..grid_points).map(|g| std::f64::consts::TAU * g as f64 / grid_points as f64);
            let breaks = inactive.iter().flat_map(|&i| {
                let t = (-b1[i]).atan2(b2[i]);
                [t, t + std::f64::consts::PI]
            });
            Ok(grid.chain(breaks).any(|t| passes(&at(t), inactive)))
        }
        m => Err(Error::UnsupportedDimension(format!(
            "angular sweep handles null spaces of dimension <= 2, got {m}"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct PgdResult {
    /// Smallest `‖Ax‖²` found over the normalised search sets.
    pub residual: f64,
    pub x: Vec<f64>,
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Minimises `‖Ax‖²` over two slices of the cone:
///
/// * `Σ_{i∈I} x_i = 1, x_I >= 0` with `x_{I_c}` free (directions with mass on
///   `I`). The free block is eliminated by least squares, leaving
///   `‖P A_I x_I‖²` on the simplex, where `P` projects off the range of
///   `A_{I_c}`; that problem is solved by accelerated projected gradient;
/// * `x_I = 0, ‖x_{I_c}‖₂ = 1` (directions supported on the active set), by
///   power iteration.
///
/// A residual near zero on either slice indicates a nontrivial intersection.
/// Restarts use fixed seeds so the result is reproducible.
pub fn pgd_oracle(a: &DMatrix<f64>, cone: &ConeSpec, iterations: usize, restarts: usize) -> PgdResult {
    let n = cone.n;
    let gram = a.transpose() * a;
    let lip_of = |g: &DMatrix<f64>| 2.0 * g.symmetric_eigenvalues().amax().max(f64::MIN_POSITIVE);
    let lip = lip_of(&gram);
    let objective = |x: &DVector<f64>| x.dot(&(&gram * x));

    let mut best = PgdResult {
        residual: f64::INFINITY,
        x: vec![0.0; n],
    };
    let consider = |x: &DVector<f64>, best: &mut PgdResult| {
        let f = objective(x);
        if f < best.residual {
            best.residual = f;
            best.x = x.iter().copied().collect();
        }
    };

    if !cone.inactive.is_empty() {
        let a_i = select_columns(a, &cone.inactive);
        let a_c = select_columns(a, &cone.active);
        let range_c = right_split(&a_c.transpose(), DEFAULT_RANK_TOL).row_basis.transpose();
        let m = &a_i - &range_c * (range_c.transpose() * &a_i);
        let gm = m.transpose() * &m;
        let lip_m = lip_of(&gm);
        let f = |z: &DVector<f64>| z.dot(&(&gm * z));
        let mut best_z: Option<(f64, DVector<f64>)> = None;
        for restart in 0..restarts.max(1) {
            let mut r = rng::stream(rng::derive_seed(0x5047_445f, &[restart as u64]));
            let mut z = DVector::from_fn(cone.inactive.len(), |_, _| r.random::<f64>());
            project_simplex(z.as_mut_slice());
            let mut prev = z.clone();
            let mut fz = f(&z);
            let mut t = 1.0f64;
            for _ in 0..iterations {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let y = &z + (&z - &prev) * ((t - 1.0) / t_next);
                let mut next = &y - (&gm * &y) * (2.0 / lip_m);
                project_simplex(next.as_mut_slice());
                let f_next = f(&next);
                prev = std::mem::replace(&mut z, next);
                if f_next > fz {
                    // Adaptive restart: drop momentum when the objective rises.
                    t = 1.0;
                    prev = z.clone();
                } else {
                    t = t_next;
                }
                fz = f_next;
                if fz <= 0.0 {
                    break;
                }
            }
            if best_z.as_ref().is_none_or(|(b, _)| fz < *b) {
                best_z = Some((fz, z));
            }
        }
        if let Some((_, z)) = best_z {
            let rhs = -(&a_i * &z);
            let xc = if a_c.ncols() == 0 {
                DVector::zeros(0)
            } else {
                a_c.clone().svd(true, true).solve(&rhs, 1e-14).unwrap_or_else(|_| DVector::zeros(a_c.ncols()))
            };
            let mut x = DVector::zeros(n);
            for (v, &i) in z.iter().zip(&cone.inactive) {
                x[i] = *v;
            }
            for (v, &i) in xc.iter().zip(&cone.active) {
                x[i] = *v;
            }
            consider(&x, &mut best);
        }
    }

    if cone.k > 0 {
        let act = &cone.active;
        let sub = DMatrix::from_fn(act.len(), act.len(), |i, j| gram[(act[i], act[j])]);
        let mut r = rng::stream(rng::derive_seed(0x5048_4552, &[0]));
        let mut z = DVector::from_fn(act.len(), |_, _| rng::gaussian(&mut r));
        z /= z.norm();
        for _ in 0..iterations {
            let step = &z - (&sub * &z) * (2.0 / lip);
            let norm = step.norm();
            if norm == 0.0 {
                break;
            }
            z = step / norm;
        }
        let mut x = DVector::zeros(n);
        for (v, &i) in z.iter().zip(act) {
            x[i] = *v;
        }
        consider(&x, &mut best);
    }
    best
}
