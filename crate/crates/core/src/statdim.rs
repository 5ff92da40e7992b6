//! Projection onto `D = {x : 1ᵀx = 0, x_I >= 0}` and Monte Carlo estimates
//! of its statistical dimension.
//!
//! The projection has the closed form `x_i = (g_i - μ)₊` on `I` and
//! `x_i = g_i - μ` on `I_c`, where `μ` zeroes the piecewise-linear,
//! non-increasing function
//!
//! ```text
//! F(μ) = Σ_{i∈I} (g_i - μ)₊ + Σ_{i∈I_c} (g_i - μ).
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;
use crate::theory::{std_normal_pdf, std_normal_sf};

/// `F(μ)` for the index split given by `in_i` (true for coordinates in `I`).
pub fn mu_equation_lhs(g: &[f64], in_i: &[bool], mu: f64) -> f64 {
    g.iter()
        .zip(in_i)
        .map(|(&gi, &c)| if c { (gi - mu).max(0.0) } else { gi - mu })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSolution {
    pub mu: f64,
    /// True when `I_c` is empty: every `μ >= max g_I` solves the equation and
    /// the projection is zero regardless.
    pub degenerate: bool,
}

fn membership(n: usize, inactive: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in inactive {
        m[i] = true;
    }
    m
}

/// Exact root of `F(μ) = 0` by locating the linear piece that contains it.
pub fn lagrange_mu(g: &[f64], inactive: &[usize]) -> MuSolution {
    let in_i = membership(g.len(), inactive);
    let mut u: Vec<f64> = inactive.iter().map(|&i| g[i]).collect();
    let m = g.len() - u.len();
    if m == 0 {
        let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return MuSolution {
            mu: top.max(0.0),
            degenerate: true,
        };
    }
    let sum_c: f64 = g.iter().zip(&in_i).filter(|(_, &c)| !c).map(|(v, _)| v).sum();
    u.sort_by(|a, b| b.total_cmp(a));
    // F at breakpoint u_k is increasing in k; the active prefix is where it
    // is still negative, i.e. u_k lies above the root.
    let mut prefix = 0.0;
    let mut j = 0;
    for (k, &uk) in u.iter().enumerate() {
        let f_at = (prefix - k as f64 * uk) + (sum_c - m as f64 * uk);
        if f_at >= 0.0 {
            break;
        }
        prefix += uk;
        j = k + 1;
    }
    MuSolution {
        mu: (prefix + sum_c) / (j + m) as f64,
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub x: Vec<f64>,
    pub mu: f64,
    pub squared_norm_over_n: f64,
    pub degenerate: bool,
}

pub fn project_onto_d(g: &[f64], inactive: &[usize]) -> ProjectionResult {
    let sol = lagrange_mu(g, inactive);
    let in_i = membership(g.len(), inactive);
    let x: Vec<f64> = g
        .iter()
        .zip(&in_i)
        .map(|(&gi, &c)| if c { (gi - sol.mu).max(0.0) } else { gi - sol.mu })
        .collect();
    let sq = x.iter().map(|v| v * v).sum::<f64>() / g.len().max(1) as f64;
    ProjectionResult {
        x,
        mu: sol.mu,
        squared_norm_over_n: sq,
        degenerate: sol.degenerate,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StatDimEstimate {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Average of `‖Π_D(g)‖²/N` over IID Gaussian `g`, with `I = {0..N-K}`.
/// Sample `s` is drawn from the stream seeded by `derive_seed(seed, [N, K, s])`.
pub fn statdim_mc(n: usize, k: usize, samples: usize, seed: u64) -> Result<StatDimEstimate> {
    if n == 0 || k > n {
        return Err(invalid(format!("need 0 <= K <= N with N >= 1, got N = {n}, K = {k}")));
    }
    if samples < 2 {
        return Err(invalid("statdim_mc needs at least 2 samples"));
    }
    let inactive: Vec<usize> = (0..n - k).collect();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut r = rng::stream(rng::derive_seed(seed, &[n as u64, k as u64, s as u64]));
            let g: Vec<f64> = (0..n).map(|_| rng::gaussian(&mut r)).collect();
            project_onto_d(&g, &inactive).squared_norm_over_n
        })
        .collect();
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(StatDimEstimate {
        n,
        k,
        samples,
        mean,
        stderr: (var / samples as f64).sqrt(),
        seed,
    })
}

/// `f(μ) = (1-ε) E[(G-μ)₊²] + ε E[(G-μ)²]` for standard normal `G`.
pub fn population_objective(mu: f64, eps: f64) -> f64 {
    let tail = (1.0 + mu * mu) * std_normal_sf(mu) - mu * std_normal_pdf(mu);
    (1.0 - eps) * tail + eps * (1.0 + mu * mu)
}
