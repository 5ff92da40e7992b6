//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! A `--config` JSON file supplies defaults using the flag names as keys
//! (`{"n": 400, "alpha": [0.3, 0.5]}`); flags given on the command line win.
//! Each run writes `manifest.json` whose `config` object is itself a valid
//! `--config` file.

use std::ffi::OsString;
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::certifier::{certify, CertifierConfig, ConeSpec};
use crate::error::{invalid, Result};
use crate::experiments::output::{
    ensure_dir, write_phase_csv, write_rank_scan_csv, write_spectrum_csv, write_statdim_csv, write_theory_csv,
    write_transitions_csv,
};
use crate::experiments::{
    bisect_transition, choose_l, compare_semirandom, estimate_transition, k_for, rank_scan, run_phase_diagram,
    spectrum, trial_constraints, BracketConfig, CellSpec, Manifest, PhaseConfig, PhaseCsvWriter, SurrogateSpectrum,
    SystemKind,
};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::signatures::{read_matrix_text, SignatureModel};
use crate::statdim::statdim_mc;
use crate::theory::theory_curve;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "idphase", version, about = "Identifiability certification and phase-transition experiments")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Tabulate the boundary δ*(ε) to theory_curve.csv.
    Theory(TheoryArgs),
    /// Monte Carlo statistical dimension of the projected cone to statdim.csv.
    Statdim(StatdimArgs),
    /// Certify one constraint matrix (from a file or freshly sampled).
    Certify(CertifyArgs),
    /// Sweep an (α, ε) lattice to phase_diagram.csv and transitions.csv.
    Phase(PhaseArgs),
    /// Locate the 50% crossing in ε by bisection for each α.
    Transition(TransitionArgs),
    /// Compare crossings of the lifted model and its semi-random surrogate.
    CompareSemirandom(CompareArgs),
    /// Hadamard A2 rank against the XOR-count oracle to rank_scan.csv.
    RankScan(RankScanArgs),
    /// Singular values of A2 for one draw to spectrum.csv.
    Spectrum(SpectrumArgs),
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct Common {
    /// Output directory [env: IDPHASE_OUT, default: out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file of flag defaults
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct ModelArgs {
    /// Signature model: gaussian, rademacher or hadamard
    #[arg(long, default_value = "gaussian")]
    model: String,
    /// Order of the full Sylvester matrix for the hadamard model
    #[arg(long, default_value_t = 1024)]
    n_full: usize,
}

impl ModelArgs {
    fn resolve(&self) -> Result<SignatureModel> {
        let m: SignatureModel = self.model.parse()?;
        Ok(match m {
            SignatureModel::SubsampledHadamard { .. } if !self.model.contains(':') => {
                SignatureModel::SubsampledHadamard { n_full: self.n_full }
            }
            other => other,
        })
    }
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct TolArgs {
    /// LP feasibility tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol_feas: f64,
    /// Relative tolerance for numerical rank
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol_rank: f64,
    /// Simplex iteration cap [default: 50 * (rows + cols)]
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl TolArgs {
    fn certifier(&self) -> Result<CertifierConfig> {
        let c = CertifierConfig {
            feas_tol: self.tol_feas,
            max_iterations: self.max_iterations,
            rank_tol: self.tol_rank,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct TheoryArgs {
    #[arg(long, default_value_t = 0.01)]
    eps_min: f64,
    #[arg(long, default_value_t = 0.99)]
    eps_max: f64,
    #[arg(long, default_value_t = 99)]
    steps: usize,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct StatdimArgs {
    #[arg(long, default_value_t = 4000)]
    n: usize,
    /// Active fractions, comma separated (ignored when --k is given)
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.3, 0.5])]
    eps: Vec<f64>,
    /// Active counts, comma separated
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct CertifyArgs {
    /// Whitespace-separated matrix file ("rows cols" header line)
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Number of active users; the active set is the last K columns
    #[arg(long)]
    k: Option<usize>,
    /// Active fraction, used when --k is absent
    #[arg(long)]
    eps: Option<f64>,
    /// Columns when sampling
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Rank ratio target used to pick L when sampling
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

fn default_alphas() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn default_eps_grid() -> Vec<f64> {
    (1..=45).map(|i| (i * 2) as f64 / 100.0).collect()
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct PhaseArgs {
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Target rank ratios, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = default_alphas())]
    alpha: Vec<f64>,
    /// Active fractions, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = default_eps_grid())]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct BracketArgs {
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Target rank ratios, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.3, 0.5, 0.7])]
    alpha: Vec<f64>,
    /// Lower end of the ε bracket [default: ε*(α) - half-width]
    #[arg(long)]
    eps_lo: Option<f64>,
    /// Upper end of the ε bracket [default: ε*(α) + half-width]
    #[arg(long)]
    eps_hi: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    half_width: f64,
    /// Stop when the bracket is this narrow
    #[arg(long, default_value_t = 0.02)]
    resolution: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

impl BracketArgs {
    fn config(&self, alpha: f64) -> Result<BracketConfig> {
        let mut c = BracketConfig::centred(self.model.resolve()?, self.n, alpha, self.half_width)?;
        if let Some(lo) = self.eps_lo {
            c.eps_lo = lo;
        }
        if let Some(hi) = self.eps_hi {
            c.eps_hi = hi;
        }
        c.resolution = self.resolution;
        c.trials = self.trials;
        c.seed = self.seed;
        c.certifier = self.tol.certifier()?;
        Ok(c)
    }
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct TransitionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    bracket: BracketArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct CompareArgs {
    /// Surrogate spectrum: centred-stack or a2
    #[arg(long, default_value = "centred-stack")]
    surrogate: String,
    #[command(flatten)]
    #[serde(flatten)]
    bracket: BracketArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct RankScanArgs {
    #[arg(long, default_value_t = 1024)]
    n_full: usize,
    /// Column counts, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![300])]
    n: Vec<usize>,
    /// Row counts, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![25])]
    l: Vec<usize>,
    /// Number of seeds per size, starting at --seed
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct SpectrumArgs {
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Rows of S [default: chosen from --alpha]
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Theory(_) => "theory",
            Command::Statdim(_) => "statdim",
            Command::Certify(_) => "certify",
            Command::Phase(_) => "phase",
            Command::Transition(_) => "transition",
            Command::CompareSemirandom(_) => "compare-semirandom",
            Command::RankScan(_) => "rank-scan",
            Command::Spectrum(_) => "spectrum",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Theory(a) => &a.common,
            Command::Statdim(a) => &a.common,
            Command::Certify(a) => &a.common,
            Command::Phase(a) => &a.common,
            Command::Transition(a) => &a.bracket.common,
            Command::CompareSemirandom(a) => &a.bracket.common,
            Command::RankScan(a) => &a.common,
            Command::Spectrum(a) => &a.common,
        }
    }

    /// Resolved arguments without the subcommand wrapper.
    fn config_json(&self) -> Value {
        match serde_json::to_value(self) {
            Ok(Value::Object(m)) => m.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null),
            _ => Value::Null,
        }
    }
}

fn out_dir(common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("IDPHASE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Turns a config object into `--key value` arguments.
fn config_args(value: &Value) -> Result<Vec<OsString>> {
    let obj = match value {
        Value::Object(m) => match m.get("config") {
            // A manifest: its `config` member holds the flags.
            Some(inner @ Value::Object(_)) => return config_args(inner),
            _ => m,
        },
        _ => return Err(invalid("config file must hold a JSON object")),
    };
    let mut out = Vec::new();
    for (key, v) in obj {
        let text = match v {
            Value::Null => continue,
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Array(items) => {
                if items.is_empty() {
                    continue;
                }
                items
                    .iter()
                    .map(|i| match i {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            }
            Value::Object(_) => return Err(invalid(format!("config key {key:?} holds an object"))),
        };
        out.push(OsString::from(format!("--{key}")));
        out.push(OsString::from(text));
    }
    Ok(out)
}

/// Finds `--config PATH` or `--config=PATH` in raw arguments.
fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let value: Value = serde_json::from_reader(File::open(&path)?)?;
    let extra = config_args(&value)?;
    // argv[0], subcommand, config-derived flags, then the user's flags.
    let mut out = Vec::with_capacity(args.len() + extra.len());
    let mut rest = args.into_iter();
    out.extend(rest.next());
    out.extend(rest.next());
    out.extend(extra);
    out.extend(rest);
    Ok(out)
}

fn init_logging() {
    let env = env_logger::Env::default().default_filter_or("info");
    let _ = env_logger::Builder::from_env(env).format_target(false).try_init();
}

fn init_workers(common: &Common) -> Result<()> {
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(invalid("--workers must be at least 1"));
        }
        // A second initialisation (e.g. in-process tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    init_logging();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<()> {
    let common = cmd.common();
    init_workers(common)?;
    let dir = out_dir(common);
    ensure_dir(&dir)?;
    let (mut manifest, clock) = Manifest::start(cmd.name(), cmd.config_json());
    let (outputs, summary) = match cmd {
        Command::Theory(a) => cmd_theory(a, &dir)?,
        Command::Statdim(a) => cmd_statdim(a, &dir)?,
        Command::Certify(a) => cmd_certify(a)?,
        Command::Phase(a) => cmd_phase(a, &dir)?,
        Command::Transition(a) => cmd_transition(&a.bracket, &dir)?,
        Command::CompareSemirandom(a) => cmd_compare(a, &dir)?,
        Command::RankScan(a) => cmd_rank_scan(a, &dir)?,
        Command::Spectrum(a) => cmd_spectrum(a, &dir)?,
    };
    manifest.outputs = outputs;
    manifest.summary = summary;
    manifest.wall_clock_seconds = clock.elapsed().as_secs_f64();
    let path = manifest.write(&dir)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

type Outcome = (Vec<String>, Value);

fn name_of(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_theory(a: &TheoryArgs, dir: &Path) -> Result<Outcome> {
    let curve = theory_curve(a.eps_min, a.eps_max, a.steps)?;
    let path = dir.join("theory_curve.csv");
    write_theory_csv(&path, &curve)?;
    let summary = json!({ "points": curve.points.len(), "root_tol": curve.root_tol });
    Ok((vec![name_of(&path)], summary))
}

fn cmd_statdim(a: &StatdimArgs, dir: &Path) -> Result<Outcome> {
    let ks: Vec<usize> = if a.k.is_empty() {
        a.eps.iter().map(|&e| k_for(e, a.n)).collect::<Result<_>>()?
    } else {
        a.k.clone()
    };
    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        let est = statdim_mc(a.n, k, a.samples, a.seed)?;
        log::info!("N {} K {}: mean {:.6} stderr {:.2e}", est.n, est.k, est.mean, est.stderr);
        rows.push(est);
    }
    let path = dir.join("statdim.csv");
    write_statdim_csv(&path, &rows)?;
    Ok((vec![name_of(&path)], serde_json::to_value(&rows)?))
}

fn cmd_certify(a: &CertifyArgs) -> Result<Outcome> {
    let cfg = a.tol.certifier()?;
    let matrix = match &a.matrix {
        Some(path) => read_matrix_text(File::open(path)?)?,
        None => {
            let model = a.model.resolve()?;
            let chosen = choose_l(a.alpha, a.n)?;
            let spec = CellSpec {
                model,
                system: SystemKind::Lifted,
                surrogate: SurrogateSpectrum::A2,
                n: a.n,
                alpha_target: a.alpha,
                epsilon: 0.0,
                trials: 1,
                base_seed: a.seed,
            };
            trial_constraints(&spec, chosen.l, a.seed)?
        }
    };
    let n = matrix.ncols();
    let k = match (a.k, a.eps) {
        (Some(k), _) => k,
        (None, Some(e)) => k_for(e, n)?,
        (None, None) => return Err(invalid("certify needs --k or --eps")),
    };
    let cone = ConeSpec::canonical(n, k)?;
    let cert = certify(&matrix, &cone, &cfg)?;
    let text = serde_json::to_string(&cert)?;
    println!("{text}");
    Ok((Vec::new(), serde_json::to_value(&cert)?))
}

fn cmd_phase(a: &PhaseArgs, dir: &Path) -> Result<Outcome> {
    let config = PhaseConfig {
        model: a.model.resolve()?,
        n: a.n,
        alphas: a.alpha.clone(),
        epsilons: a.eps.clone(),
        trials: a.trials,
        seed: a.seed,
        certifier: a.tol.certifier()?,
    };
    let phase_path = dir.join("phase_diagram.csv");
    let mut writer = PhaseCsvWriter::create(&phase_path)?;
    let diagram = run_phase_diagram(&config, Some(&mut writer))?;
    let transitions = estimate_transition(&diagram);
    let tr_path = dir.join("transitions.csv");
    write_transitions_csv(&tr_path, &transitions)?;
    Ok((
        vec![name_of(&phase_path), name_of(&tr_path)],
        serde_json::to_value(&transitions)?,
    ))
}

fn cmd_transition(a: &BracketArgs, dir: &Path) -> Result<Outcome> {
    let mut cells = Vec::new();
    let mut estimates = Vec::new();
    for &alpha in &a.alpha {
        let res = bisect_transition(&a.config(alpha)?)?;
        log::info!("alpha {alpha}: eps50 {:?}", res.estimate.epsilon_50);
        cells.extend(res.cells);
        estimates.push(res.estimate);
    }
    let phase_path = dir.join("phase_diagram.csv");
    write_phase_csv(&phase_path, &cells)?;
    let tr_path = dir.join("transitions.csv");
    write_transitions_csv(&tr_path, &estimates)?;
    let summary: Vec<Value> = estimates
        .iter()
        .map(|e| {
            json!({
                "alpha": e.alpha,
                "alpha_achieved": e.alpha_achieved,
                "epsilon_50": e.epsilon_50,
                "epsilon_star_at_alpha_achieved": e.epsilon_star().ok(),
                "censored": e.censored,
            })
        })
        .collect();
    Ok((vec![name_of(&phase_path), name_of(&tr_path)], Value::Array(summary)))
}

fn parse_surrogate(s: &str) -> Result<SurrogateSpectrum> {
    match s {
        "centred-stack" | "centered-stack" => Ok(SurrogateSpectrum::CentredStack),
        "a2" => Ok(SurrogateSpectrum::A2),
        other => Err(invalid(format!("unknown surrogate spectrum {other:?} (centred-stack, a2)"))),
    }
}

fn cmd_compare(a: &CompareArgs, dir: &Path) -> Result<Outcome> {
    let kind = parse_surrogate(&a.surrogate)?;
    let mut cells = Vec::new();
    let mut estimates = Vec::new();
    let mut summary = Vec::new();
    for &alpha in &a.bracket.alpha {
        let mut cfg = a.bracket.config(alpha)?;
        cfg.surrogate = kind;
        let cmp = compare_semirandom(&cfg)?;
        log::info!("alpha {alpha}: difference {:?}", cmp.difference);
        summary.push(json!({
            "alpha": alpha,
            "lifted_epsilon_50": cmp.lifted.estimate.epsilon_50,
            "surrogate_epsilon_50": cmp.surrogate.estimate.epsilon_50,
            "difference": cmp.difference,
        }));
        cells.extend(cmp.lifted.cells);
        cells.extend(cmp.surrogate.cells);
        estimates.push(cmp.lifted.estimate);
        estimates.push(cmp.surrogate.estimate);
    }
    let phase_path = dir.join("phase_diagram.csv");
    write_phase_csv(&phase_path, &cells)?;
    let tr_path = dir.join("transitions.csv");
    write_transitions_csv(&tr_path, &estimates)?;
    let summary = Value::Array(summary);
    println!("{}", serde_json::to_string(&summary)?);
    Ok((vec![name_of(&phase_path), name_of(&tr_path)], summary))
}

fn cmd_rank_scan(a: &RankScanArgs, dir: &Path) -> Result<Outcome> {
    if a.n.len() != a.l.len() {
        return Err(invalid("--n and --l must list the same number of sizes"));
    }
    let sizes: Vec<(usize, usize)> = a.n.iter().copied().zip(a.l.iter().copied()).collect();
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let rows = rank_scan(a.n_full, &sizes, &seeds)?;
    let path = dir.join("rank_scan.csv");
    write_rank_scan_csv(&path, &rows)?;
    let below = rows.iter().filter(|r| r.measured_rank < r.d).count();
    Ok((vec![name_of(&path)], json!({ "rows": rows.len(), "rank_below_d": below })))
}

fn cmd_spectrum(a: &SpectrumArgs, dir: &Path) -> Result<Outcome> {
    let l = match a.l {
        Some(l) => l,
        None => choose_l(a.alpha, a.n)?.l,
    };
    let sigma = spectrum(a.model.resolve()?, l, a.n, a.seed)?;
    let path = dir.join("spectrum.csv");
    write_spectrum_csv(&path, &sigma)?;
    Ok((vec![name_of(&path)], json!({ "l": l, "values": sigma.len() })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_object_becomes_flags() {
        let v = json!({"n": 400, "alpha": [0.3, 0.5], "model": "gaussian", "eps-lo": null});
        let args: Vec<String> = config_args(&v)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(args, ["--alpha", "0.3,0.5", "--model", "gaussian", "--n", "400"]);
    }

    #[test]
    fn manifest_config_is_unwrapped() {
        let v = json!({"command": "theory", "config": {"steps": 5}});
        let args = config_args(&v).unwrap();
        assert_eq!(args, [OsString::from("--steps"), OsString::from("5")]);
    }

    #[test]
    fn finds_config_flag() {
        let a: Vec<OsString> = ["x", "theory", "--config=c.json"].iter().map(OsString::from).collect();
        assert_eq!(find_config(&a), Some(PathBuf::from("c.json")));
        let a: Vec<OsString> = ["x", "theory", "--config", "d.json"].iter().map(OsString::from).collect();
        assert_eq!(find_config(&a), Some(PathBuf::from("d.json")));
    }

    #[test]
    fn later_flags_override_earlier_ones() {
        let cli = Cli::try_parse_from(["idphase", "theory", "--steps", "5", "--steps", "7"]).unwrap();
        match cli.command {
            Command::Theory(t) => assert_eq!(t.steps, 7),
            _ => unreachable!(),
        }
    }

    #[test]
    fn resolved_config_round_trips() {
        let cli = Cli::try_parse_from(["idphase", "phase", "--alpha", "0.3,0.4", "--n", "50"]).unwrap();
        let cfg = cli.command.config_json();
        assert_eq!(cfg["alpha"], json!([0.3, 0.4]));
        assert_eq!(cfg["n"], json!(50));
        assert_eq!(cfg["model"], json!("gaussian"));
        let mut argv: Vec<OsString> = vec!["idphase".into(), "phase".into()];
        argv.extend(config_args(&cfg).unwrap());
        let again = Cli::try_parse_from(argv).unwrap();
        assert_eq!(again.command.config_json(), cfg);
    }
}
