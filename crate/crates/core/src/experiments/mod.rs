//! Phase-diagram sweeps, transition estimation, the semi-random comparison
//! and rank scans.
//!
//! Every trial is a pure function of its derived seed, so results do not
//! depend on the worker count or scheduling order.

pub mod output;
pub mod scans;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certifier::{certify, CertifierConfig, ConeSpec};
use crate::error::{invalid, Error, Result};
use crate::lifting::{lift, semi_random_system, stacked_constraints, StackMode};
use crate::linalg::{numerical_rank, singular_values};
use crate::rng::derive_seed;
use crate::signatures::{sample_signature, SignatureModel};
use crate::theory::epsilon_star;

pub use output::{Manifest, PhaseCsvWriter};
pub use scans::{rank_scan, spectrum, RankScanRow};

/// Number of users `L` making `d = L(L-1)/2` closest to `αN`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChosenL {
    pub l: usize,
    pub d: usize,
    pub d_over_n: f64,
}

pub fn choose_l(alpha: f64, n: usize) -> Result<ChosenL> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha = {alpha} must be positive")));
    }
    if n < 2 {
        return Err(invalid(format!("N = {n} must be at least 2")));
    }
    let l = ((1.0 + (1.0 + 8.0 * alpha * n as f64).sqrt()) / 2.0).round() as usize;
    if l < 2 {
        return Err(invalid(format!("alpha = {alpha}, N = {n} gives L = {l} < 2")));
    }
    let d = l * (l - 1) / 2;
    Ok(ChosenL {
        l,
        d,
        d_over_n: d as f64 / n as f64,
    })
}

pub fn stack_mode(model: SignatureModel) -> StackMode {
    if model.is_sign_valued() {
        StackMode::Reduced
    } else {
        StackMode::Full
    }
}

/// Which constraint system a cell certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// The lifted system of the sampled signatures.
    Lifted,
    /// `[1ᵀ; A_RI]` with `A_RI` a Haar-rotated block whose spectrum is taken
    /// from an independent draw of the lifted system.
    SemiRandom,
}

impl SystemKind {
    fn tag(self) -> u64 {
        match self {
            SystemKind::Lifted => 0,
            SystemKind::SemiRandom => 1,
        }
    }
}

/// Spectrum fed to the semi-random surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateSpectrum {
    /// Singular values of `A2` alone.
    A2,
    /// Singular values of the stacked constraints with the all-ones direction
    /// projected out, `stack · (I - 11ᵀ/N)`.
    CentredStack,
}

/// One point of the `(α, ε)` lattice.
#[derive(Debug, Clone, Serialize)]
pub struct CellSpec {
    pub model: SignatureModel,
    pub system: SystemKind,
    pub surrogate: SurrogateSpectrum,
    pub n: usize,
    pub alpha_target: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCellResult {
    pub model: String,
    pub n: usize,
    pub l: usize,
    pub d: usize,
    pub k: usize,
    pub alpha_target: f64,
    /// Numerical rank of the certified constraint matrix over `N`, averaged
    /// over trials.
    pub alpha_achieved: f64,
    /// `K / N`.
    pub epsilon: f64,
    pub trials: usize,
    pub identifiable_count: usize,
    pub ambiguous_count: usize,
    pub base_seed: u64,
}

impl PhaseCellResult {
    /// Fraction of decided trials that were identifiable.
    pub fn probability(&self) -> f64 {
        let decided = self.trials - self.ambiguous_count;
        if decided == 0 {
            return f64::NAN;
        }
        self.identifiable_count as f64 / decided as f64
    }
}

/// Seed of trial `t` in a cell.
pub fn trial_seed(base: u64, model: SignatureModel, system: SystemKind, n: usize, l: usize, k: usize, t: usize) -> u64 {
    derive_seed(
        base,
        &[model.tag(), system.tag(), n as u64, l as u64, k as u64, t as u64],
    )
}

/// Label written to the `model` CSV column.
pub fn model_label(model: SignatureModel, system: SystemKind) -> String {
    match system {
        SystemKind::Lifted => model.name().to_string(),
        SystemKind::SemiRandom => format!("semirandom-{}", model.name()),
    }
}

fn lifted_constraints(model: SignatureModel, l: usize, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let s = sample_signature(model, l, n, seed)?;
    stacked_constraints(&lift(&s), stack_mode(model))
}

/// Spectrum the surrogate inherits from one lifted draw.
pub fn surrogate_spectrum(
    model: SignatureModel,
    kind: SurrogateSpectrum,
    l: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let s = sample_signature(model, l, n, seed)?;
    let sys = lift(&s);
    let sv = match kind {
        SurrogateSpectrum::A2 => singular_values(&sys.a2),
        SurrogateSpectrum::CentredStack => {
            let stack = stacked_constraints(&sys, stack_mode(model))?;
            let mut centred = stack;
            for mut row in centred.row_iter_mut() {
                let mean = row.mean();
                row.add_scalar_mut(-mean);
            }
            singular_values(&centred)
        }
    };
    Ok(sv.into_iter().take(n).collect())
}

/// Constraint matrix for trial `seed` of a cell.
pub fn trial_constraints(spec: &CellSpec, l: usize, seed: u64) -> Result<DMatrix<f64>> {
    match spec.system {
        SystemKind::Lifted => lifted_constraints(spec.model, l, spec.n, seed),
        SystemKind::SemiRandom => {
            let sv = surrogate_spectrum(spec.model, spec.surrogate, l, spec.n, derive_seed(seed, &[1]))?;
            Ok(semi_random_system(&sv, spec.n, derive_seed(seed, &[2]))?.constraints)
        }
    }
}

struct TrialOutcome {
    /// `None` when the certifier could not decide.
    identifiable: Option<bool>,
    rank: usize,
}

fn run_trial(spec: &CellSpec, l: usize, k: usize, seed: u64, cfg: &CertifierConfig) -> Result<TrialOutcome> {
    let a = trial_constraints(spec, l, seed)?;
    let cone = ConeSpec::canonical(spec.n, k)?;
    match certify(&a, &cone, cfg) {
        Ok(c) => Ok(TrialOutcome {
            identifiable: Some(c.is_identifiable()),
            rank: c.rank,
        }),
        Err(e) if e.is_numerical() => {
            log::warn!("trial seed {seed:#x} undecided: {e}");
            Ok(TrialOutcome {
                identifiable: None,
                rank: numerical_rank(&a, cfg.rank_tol),
            })
        }
        Err(e) => Err(e),
    }
}

/// `K = round(εN)`, clamped to `[0, N]`.
pub fn k_for(epsilon: f64, n: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon = {epsilon} outside [0, 1]")));
    }
    Ok(((epsilon * n as f64).round() as usize).min(n))
}

pub fn run_phase_cell(spec: &CellSpec, cfg: &CertifierConfig) -> Result<PhaseCellResult> {
    if spec.trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let chosen = choose_l(spec.alpha_target, spec.n)?;
    let k = k_for(spec.epsilon, spec.n)?;
    let outcomes: Vec<TrialOutcome> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(spec.base_seed, spec.model, spec.system, spec.n, chosen.l, k, t);
            run_trial(spec, chosen.l, k, seed, cfg)
        })
        .collect::<Result<_>>()?;

    let identifiable_count = outcomes.iter().filter(|o| o.identifiable == Some(true)).count();
    let ambiguous_count = outcomes.iter().filter(|o| o.identifiable.is_none()).count();
    if ambiguous_count > 0 && 100 * ambiguous_count >= spec.trials {
        return Err(Error::NumericalFailure(format!(
            "{ambiguous_count} of {} trials undecided at N = {}, L = {}, K = {k}",
            spec.trials, spec.n, chosen.l
        )));
    }
    let rank_sum: usize = outcomes.iter().map(|o| o.rank).sum();
    Ok(PhaseCellResult {
        model: model_label(spec.model, spec.system),
        n: spec.n,
        l: chosen.l,
        d: chosen.d,
        k,
        alpha_target: spec.alpha_target,
        alpha_achieved: rank_sum as f64 / (spec.trials * spec.n) as f64,
        epsilon: k as f64 / spec.n as f64,
        trials: spec.trials,
        identifiable_count,
        ambiguous_count,
        base_seed: spec.base_seed,
    })
}

/// A rectangular `(α, ε)` sweep for one model.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseConfig {
    pub model: SignatureModel,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub certifier: CertifierConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagram {
    pub model: String,
    /// Row-major over `(α, ε)`.
    pub cells: Vec<PhaseCellResult>,
}

impl PhaseDiagram {
    /// Cells of the column with the given target α, in ε order.
    pub fn column(&self, alpha: f64) -> Vec<&PhaseCellResult> {
        self.cells.iter().filter(|c| c.alpha_target == alpha).collect()
    }
}

/// Runs the lattice in parallel batches. Each finished batch is appended to
/// `sink` in lattice order before the next one starts.
pub fn run_phase_diagram(config: &PhaseConfig, mut sink: Option<&mut PhaseCsvWriter>) -> Result<PhaseDiagram> {
    if config.alphas.is_empty() || config.epsilons.is_empty() {
        return Err(invalid("the alpha and epsilon grids must be non-empty"));
    }
    let specs: Vec<CellSpec> = config
        .alphas
        .iter()
        .flat_map(|&a| {
            config.epsilons.iter().map(move |&e| CellSpec {
                model: config.model,
                system: SystemKind::Lifted,
                surrogate: SurrogateSpectrum::A2,
                n: config.n,
                alpha_target: a,
                epsilon: e,
                trials: config.trials,
                base_seed: config.seed,
            })
        })
        .collect();
    let batch = rayon::current_num_threads().max(1);
    let mut cells = Vec::with_capacity(specs.len());
    for chunk in specs.chunks(batch) {
        let done: Vec<PhaseCellResult> = chunk
            .par_iter()
            .map(|s| run_phase_cell(s, &config.certifier))
            .collect::<Result<_>>()?;
        for c in &done {
            log::info!(
                "alpha {} eps {:.4}: {}/{} identifiable",
                c.alpha_target,
                c.epsilon,
                c.identifiable_count,
                c.trials
            );
            if let Some(w) = sink.as_deref_mut() {
                w.append(c)?;
            }
        }
        cells.extend(done);
    }
    Ok(PhaseDiagram {
        model: config.model.name().to_string(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionEstimate {
    pub model: String,
    pub n: usize,
    pub alpha: f64,
    /// Mean measured rank ratio over the cells used for the estimate.
    pub alpha_achieved: f64,
    /// `None` when censored.
    pub epsilon_50: Option<f64>,
    pub method: String,
    pub censored: bool,
}

impl TransitionEstimate {
    /// Theoretical crossing at the measured rank ratio.
    pub fn epsilon_star(&self) -> Result<f64> {
        epsilon_star(self.alpha_achieved)
    }
}

fn interpolate_half(e0: f64, p0: f64, e1: f64, p1: f64) -> f64 {
    if p0 == p1 {
        return 0.5 * (e0 + e1);
    }
    e0 + (p0 - 0.5) / (p0 - p1) * (e1 - e0)
}

/// First crossing of probability 0.5 in a column sorted by ε, by linear
/// interpolation between the last cell at or above 0.5 and its successor.
pub fn crossing(points: &[(f64, f64)]) -> Option<f64> {
    points
        .windows(2)
        .find(|w| w[0].1 >= 0.5 && w[1].1 < 0.5)
        .map(|w| interpolate_half(w[0].0, w[0].1, w[1].0, w[1].1))
}

fn mean_alpha(cells: &[&PhaseCellResult]) -> f64 {
    cells.iter().map(|c| c.alpha_achieved).sum::<f64>() / cells.len().max(1) as f64
}

/// One estimate per α column of a diagram.
pub fn estimate_transition(diagram: &PhaseDiagram) -> Vec<TransitionEstimate> {
    let mut alphas: Vec<f64> = Vec::new();
    for c in &diagram.cells {
        if !alphas.contains(&c.alpha_target) {
            alphas.push(c.alpha_target);
        }
    }
    alphas
        .into_iter()
        .map(|alpha| {
            let mut col = diagram.column(alpha);
            col.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
            let points: Vec<(f64, f64)> = col.iter().map(|c| (c.epsilon, c.probability())).collect();
            let e50 = crossing(&points);
            TransitionEstimate {
                model: diagram.model.clone(),
                n: col.first().map_or(0, |c| c.n),
                alpha,
                alpha_achieved: mean_alpha(&col),
                epsilon_50: e50,
                method: "interpolation".into(),
                censored: e50.is_none(),
            }
        })
        .collect()
}

/// Adaptive search for the 50% crossing at a fixed α.
#[derive(Debug, Clone, Serialize)]
pub struct BracketConfig {
    pub model: SignatureModel,
    pub system: SystemKind,
    pub surrogate: SurrogateSpectrum,
    pub n: usize,
    pub alpha: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    /// Stop once the bracket is at most this wide in ε.
    pub resolution: f64,
    pub trials: usize,
    pub seed: u64,
    pub certifier: CertifierConfig,
}

impl BracketConfig {
    /// Bracket of half-width `half_width` around `ε*(α)`, clipped to (0, 1).
    pub fn centred(model: SignatureModel, n: usize, alpha: f64, half_width: f64) -> Result<Self> {
        let centre = epsilon_star(alpha.min(0.999))?;
        Ok(BracketConfig {
            model,
            system: SystemKind::Lifted,
            surrogate: SurrogateSpectrum::CentredStack,
            n,
            alpha,
            eps_lo: (centre - half_width).max(1.0 / n as f64),
            eps_hi: (centre + half_width).min(1.0),
            resolution: 0.02,
            trials: 50,
            seed: 0,
            certifier: CertifierConfig::default(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketResult {
    pub estimate: TransitionEstimate,
    /// Every cell evaluated, in evaluation order.
    pub cells: Vec<PhaseCellResult>,
}

/// Bisection on ε. The endpoints must straddle probability 0.5 or the
/// estimate is censored. The final estimate interpolates linearly inside the
/// last bracket.
pub fn bisect_transition(cfg: &BracketConfig) -> Result<BracketResult> {
    if !(cfg.eps_lo < cfg.eps_hi) || cfg.eps_lo < 0.0 || cfg.eps_hi > 1.0 {
        return Err(invalid(format!("bad epsilon bracket [{}, {}]", cfg.eps_lo, cfg.eps_hi)));
    }
    if !(cfg.resolution > 0.0) {
        return Err(invalid("resolution must be positive"));
    }
    let cell = |eps: f64| {
        let spec = CellSpec {
            model: cfg.model,
            system: cfg.system,
            surrogate: cfg.surrogate,
            n: cfg.n,
            alpha_target: cfg.alpha,
            epsilon: eps,
            trials: cfg.trials,
            base_seed: cfg.seed,
        };
        run_phase_cell(&spec, &cfg.certifier)
    };
    let (lo, hi) = rayon::join(|| cell(cfg.eps_lo), || cell(cfg.eps_hi));
    let (mut lo, mut hi) = (lo?, hi?);
    let mut cells = vec![lo.clone(), hi.clone()];
    let label = model_label(cfg.model, cfg.system);
    let estimate = |lo: &PhaseCellResult, hi: &PhaseCellResult, cells: &[PhaseCellResult], e50: Option<f64>| {
        let refs: Vec<&PhaseCellResult> = cells.iter().collect();
        TransitionEstimate {
            model: label.clone(),
            n: cfg.n,
            alpha: cfg.alpha,
            alpha_achieved: mean_alpha(&refs),
            epsilon_50: e50,
            method: format!("bisection({:.3},{:.3})", lo.epsilon, hi.epsilon),
            censored: e50.is_none(),
        }
    };
    if lo.probability() < 0.5 || hi.probability() >= 0.5 {
        log::warn!(
            "bracket [{}, {}] does not straddle 0.5 (p = {}, {})",
            lo.epsilon,
            hi.epsilon,
            lo.probability(),
            hi.probability()
        );
        let est = estimate(&lo, &hi, &cells, None);
        return Ok(BracketResult { estimate: est, cells });
    }
    while hi.epsilon - lo.epsilon > cfg.resolution {
        let k_mid = ((lo.k + hi.k) as f64 / 2.0).round() as usize;
        if k_mid == lo.k || k_mid == hi.k {
            break;
        }
        let mid = cell(k_mid as f64 / cfg.n as f64)?;
        log::info!(
            "{} alpha {}: eps {:.4} -> {}/{}",
            label,
            cfg.alpha,
            mid.epsilon,
            mid.identifiable_count,
            mid.trials
        );
        cells.push(mid.clone());
        if mid.probability() >= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let e50 = interpolate_half(lo.epsilon, lo.probability(), hi.epsilon, hi.probability());
    let est = estimate(&lo, &hi, &cells, Some(e50));
    Ok(BracketResult { estimate: est, cells })
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub lifted: BracketResult,
    pub surrogate: BracketResult,
    /// `ε₅₀(lifted) - ε₅₀(surrogate)` when neither is censored.
    pub difference: Option<f64>,
}

/// Bracketing search on the lifted model and on its semi-random surrogate,
/// with the same bracket and seed.
pub fn compare_semirandom(cfg: &BracketConfig) -> Result<Comparison> {
    let lifted_cfg = BracketConfig {
        system: SystemKind::Lifted,
        ..cfg.clone()
    };
    let surrogate_cfg = BracketConfig {
        system: SystemKind::SemiRandom,
        ..cfg.clone()
    };
    let (lifted, surrogate) = rayon::join(|| bisect_transition(&lifted_cfg), || bisect_transition(&surrogate_cfg));
    let (lifted, surrogate) = (lifted?, surrogate?);
    let difference = match (lifted.estimate.epsilon_50, surrogate.estimate.epsilon_50) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    Ok(Comparison {
        lifted,
        surrogate,
        difference,
    })
}
