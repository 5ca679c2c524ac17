//! Run configuration: CLI flags, the JSON config file, and the merge of
//! the two into one effective [`RunConfig`] that is also embedded in
//! JSON output for reproducibility.
//!
//! Precedence is flags over file over defaults. The config file is a
//! flat JSON object whose keys mirror the flags (`x` and `t` accept
//! either an array of numbers or the same `lo:hi:n` range string the
//! flags take); unknown keys are errors, like unknown flags.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const SUITE_NAMES: [&str; 8] = [
    "appendix-sums",
    "norm-oracle",
    "formfactor-oracle",
    "insertion-identity",
    "equal-time",
    "infinite-c-limit",
    "finite-N-bridge",
    "osc-primitives",
];

#[derive(Parser)]
#[command(
    name = "mcguire",
    version,
    about = "Impurity Green's function G\u{2193}(x,t) of the one-dimensional \u{3b4}-interacting Fermi gas",
    long_about = "Evaluates the time-dependent impurity Green's function G\u{2193}(x,t) of a \
spin-1/2 Fermi gas with \u{3b4}-interaction of strength c, either in the thermodynamic \
limit (Fredholm-determinant representation, modes finite-c and infinite-c) or on a \
finite ring summed over Bethe-ansatz eigenstates (mode finite-N-oracle).\n\n\
Units: \u{127} = 2m = 1, so energy = k\u{b2}, lengths are inverse momenta and times are \
inverse energies. Defaults: c = 2, k_F = 1, tol = 1e-6.\n\n\
Exit codes: 0 success; 1 invalid configuration; 2 numerical non-convergence (partial \
results are still written, flagged converged=false); 3 validation suite failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate G(x,t) on the (x, t) grid and write CSV or JSON records
    Compute(CommonArgs),
    /// Run the numerical validation suites and print a pass/fail table
    Validate(CommonArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Computation mode
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Positions: comma list "0.5,1,2" or inclusive range "lo:hi:n"
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Times: same syntax as --x
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Coupling strength c > 0 (ignored by mode infinite-c)
    #[arg(long)]
    pub c: Option<f64>,
    /// Fermi momentum k_F > 0
    #[arg(long)]
    pub kf: Option<f64>,
    /// Target accuracy of each G value, in (0, 1)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads (default: all hardware threads)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file (default: stdout)
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Output format for compute records
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Run a single validation suite by name
    #[arg(long, value_name = "SUITE")]
    pub only: Option<String>,
    /// Seed of the randomized validation sweeps
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Mode {
    /// Thermodynamic limit at the given coupling c
    #[value(name = "finite-c")]
    #[serde(rename = "finite-c")]
    FiniteC,
    /// Thermodynamic limit at c = infinity (hard-core kernels)
    #[value(name = "infinite-c")]
    #[serde(rename = "infinite-c")]
    InfiniteC,
    /// Finite ring of N majority fermions, brute-force spectral sum
    #[value(name = "finite-N-oracle", alias = "finite-n-oracle")]
    #[serde(rename = "finite-N-oracle", alias = "finite-n-oracle")]
    FiniteNOracle,
    /// Same as the validate subcommand
    #[value(name = "validate")]
    #[serde(rename = "validate")]
    Validate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Grid values in a config file: either explicit or a range string.
#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    List(Vec<f64>),
    Range(String),
}

/// Raw config file: every field optional, unknown keys rejected.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<Mode>,
    c: Option<f64>,
    #[serde(alias = "kf")]
    k_f: Option<f64>,
    x: Option<GridSpec>,
    t: Option<GridSpec>,
    tol: Option<f64>,
    det_tol: Option<f64>,
    order_cap: Option<usize>,
    #[serde(alias = "n")]
    n_up: Option<usize>,
    #[serde(alias = "l")]
    box_len: Option<f64>,
    cutoff: Option<i64>,
    budget: Option<usize>,
    seed: Option<u64>,
    threshold_scale: Option<f64>,
    only: Option<String>,
    threads: Option<usize>,
    format: Option<Format>,
    output: Option<PathBuf>,
}

/// The effective configuration of one run. Serialized verbatim into
/// JSON output, so identical configurations produce identical bytes.
#[derive(Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub c: f64,
    pub k_f: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub tol: f64,
    /// Order-doubling tolerance of the determinant ladder (default tol/100).
    pub det_tol: Option<f64>,
    /// Cap on the Nystrom order of the determinants (default 512).
    pub order_cap: Option<usize>,
    /// Majority fermion count of the finite-N oracle ring.
    pub n_up: Option<usize>,
    /// Oracle ring circumference (default pi*n_up/k_F, the k_F-matched ring).
    pub box_len: Option<f64>,
    /// Oracle label window: states run over |n_j| <= cutoff.
    pub cutoff: i64,
    /// Oracle refuses to enumerate more states than this.
    pub budget: usize,
    pub seed: u64,
    /// Multiplies every validation threshold (< 1 tightens the suites).
    pub threshold_scale: f64,
    pub only: Option<String>,
    pub threads: Option<usize>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

/// Parse a grid flag: comma-separated values, or `lo:hi:n` for `n`
/// evenly spaced points including both ends.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err("empty grid specification".into());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be lo:hi:n, got {spec:?}"));
        }
        let lo: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| format!("bad range start {:?}", parts[0]))?;
        let hi: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| format!("bad range end {:?}", parts[1]))?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("bad point count {:?}", parts[2]))?;
        if n == 0 {
            return Err("range needs at least one point".into());
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(format!("non-finite range bounds in {spec:?}"));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (n - 1) as f64;
        return Ok((0..n).map(|i| lo + step * i as f64).collect());
    }
    spec.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| format!("bad grid value {tok:?}"))
                .and_then(|v| {
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(format!("non-finite grid value {tok:?}"))
                    }
                })
        })
        .collect()
}

fn grid_from(spec: GridSpec, which: &str) -> Result<Vec<f64>, String> {
    let vals = match spec {
        GridSpec::List(v) => {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("non-finite value in config grid {which:?}"));
            }
            v
        }
        GridSpec::Range(s) => parse_grid(&s).map_err(|e| format!("config grid {which:?}: {e}"))?,
    };
    Ok(vals)
}

impl RunConfig {
    /// Merge config file (if any), flags, and defaults; then validate.
    /// `validate_subcommand` records which subcommand was invoked: the
    /// `validate` subcommand forces mode = validate.
    pub fn assemble(args: &CommonArgs, validate_subcommand: bool) -> Result<RunConfig, String> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("config {}: {e}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let mode = if validate_subcommand {
            Mode::Validate
        } else {
            args.mode.or(file.mode).unwrap_or(Mode::FiniteC)
        };

        let x = match (&args.x, file.x) {
            (Some(s), _) => parse_grid(s).map_err(|e| format!("--x: {e}"))?,
            (None, Some(spec)) => grid_from(spec, "x")?,
            (None, None) => Vec::new(),
        };
        let t = match (&args.t, file.t) {
            (Some(s), _) => parse_grid(s).map_err(|e| format!("--t: {e}"))?,
            (None, Some(spec)) => grid_from(spec, "t")?,
            (None, None) => Vec::new(),
        };

        let cfg = RunConfig {
            mode,
            c: args.c.or(file.c).unwrap_or(2.0),
            k_f: args.kf.or(file.k_f).unwrap_or(1.0),
            x,
            t,
            tol: args.tol.or(file.tol).unwrap_or(1e-6),
            det_tol: file.det_tol,
            order_cap: file.order_cap,
            n_up: file.n_up,
            box_len: file.box_len,
            cutoff: file.cutoff.unwrap_or(8),
            budget: file.budget.unwrap_or(2_000_000),
            seed: args.seed.or(file.seed).unwrap_or(0),
            threshold_scale: file.threshold_scale.unwrap_or(1.0),
            only: args.only.clone().or(file.only),
            threads: args.threads.or(file.threads),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            output: args.output.clone().or(file.output),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(format!("coupling c must be positive and finite, got {}", self.c));
        }
        if !(self.k_f > 0.0) || !self.k_f.is_finite() {
            return Err(format!("k_F must be positive and finite, got {}", self.k_f));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if let Some(dt) = self.det_tol {
            if !(dt > 0.0 && dt < 1.0) {
                return Err(format!("det_tol must lie in (0, 1), got {dt}"));
            }
        }
        if let Some(cap) = self.order_cap {
            if cap < 16 {
                return Err(format!("order_cap must be at least 16, got {cap}"));
            }
        }
        if !(self.threshold_scale > 0.0) || !self.threshold_scale.is_finite() {
            return Err(format!(
                "threshold_scale must be positive and finite, got {}",
                self.threshold_scale
            ));
        }
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        if self.cutoff < 1 {
            return Err(format!("cutoff must be at least 1, got {}", self.cutoff));
        }
        if self.budget < 1 {
            return Err("budget must be at least 1".into());
        }
        match self.mode {
            Mode::Validate => {
                if let Some(name) = &self.only {
                    if !SUITE_NAMES.iter().any(|s| s.eq_ignore_ascii_case(name)) {
                        return Err(format!(
                            "unknown suite {name:?}; available: {}",
                            SUITE_NAMES.join(", ")
                        ));
                    }
                }
            }
            _ => {
                if self.only.is_some() {
                    return Err("--only applies to validation runs only".into());
                }
                if self.x.is_empty() {
                    return Err("no positions: set --x (or \"x\" in the config file)".into());
                }
                if self.t.is_empty() {
                    return Err("no times: set --t (or \"t\" in the config file)".into());
                }
                if self.mode == Mode::FiniteNOracle {
                    match self.n_up {
                        None => {
                            return Err(
                                "mode finite-N-oracle requires \"n_up\" in the config file".into()
                            )
                        }
                        Some(0) => return Err("n_up must be at least 1".into()),
                        Some(_) => {}
                    }
                    if let Some(l) = self.box_len {
                        if !(l > 0.0) || !l.is_finite() {
                            return Err(format!(
                                "box_len must be positive and finite, got {l}"
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical suite name (case-folded) if a filter is set.
    pub fn suite_filter(&self) -> Option<&'static str> {
        let name = self.only.as_ref()?;
        SUITE_NAMES
            .iter()
            .find(|s| s.eq_ignore_ascii_case(name))
            .copied()
    }
}
