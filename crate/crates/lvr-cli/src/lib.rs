//! Command-line front door: subcommand dispatch, config handling,
//! deterministic seeding and JSON/CSV emission.
//!
//! Exit codes: 0 success, 2 validation/usage error, 3 numeric failure.
//! Every numeric record embeds the seed, the sample count and a hash of the
//! resolved configuration, so any output can be reproduced from its own
//! metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use lvr_core::domains::{cardioid_boundary, in_cardioid, in_pacman, in_sokal_domain, PacmanSpec};
use lvr_core::maps::{EnumLimits, LvrGraph, RibbonMap};
use lvr_core::model::{
    mc_cumulant, mc_partition, verify_prop1_n1, verify_source_change_of_variables,
};
use lvr_core::perturbation::{perturbative_series, remainder_estimate, tree_amplitude_mc};
use lvr_core::resummation::{
    borel_sum, borel_transform, pade_continuation, scalar_partition_series, BorelSummation,
    Continuation,
};
use lvr_core::series::{fuss_catalan, tp_eval, tp_eval_cardano, PowerSeries};
use lvr_core::weingarten::{
    haar_moment_exact, haar_moment_mc, weingarten, HaarMomentPattern, IntegerPartition,
};
use lvr_core::ModelParams;

pub const SCHEMA: &str = "lvr/1";

#[derive(Parser, Debug)]
#[command(
    name = "lvr",
    version,
    about = "Cumulants of the stable complex matrix model: enumeration, Monte Carlo and Borel-LeRoy resummation"
)]
pub struct Cli {
    /// Plain-text key=value config file; flags override file entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON record here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for Monte-Carlo paths (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// n-th Fuss-Catalan number of order p.
    FussCatalan(FussCatalanArgs),
    /// Evaluate T_p(z) on the principal branch (optionally the p=3 closed form).
    Tp(TpArgs),
    /// Domain membership and boundary CSV emission.
    Domains(DomainsArgs),
    /// Weingarten function of a cycle type, exact or Monte-Carlo validated.
    Wg(WgArgs),
    /// Verify the BKAR interpolation identity on test integrands.
    BkarVerify(BkarArgs),
    /// Monte-Carlo partition function or cumulant estimate.
    Mc(McArgs),
    /// Exact diagram-weighted expansion of log Z / cumulants.
    Perturb(PerturbArgs),
    /// Monte-Carlo LVR tree amplitude.
    Amplitude(AmplitudeArgs),
    /// Remainder σ-fit of the truncated expansion against the oracle.
    Remainder(RemainderArgs),
    /// Borel-LeRoy transform, continuation and inversion integral.
    Borel(BorelArgs),
    /// Two-route check of the loop-vertex change of variables at N = 1.
    VerifyProp1(VerifyProp1Args),
    /// Two-route check of the sourced change of variables at N = 1.
    VerifySources(VerifySourcesArgs),
}

#[derive(Args, Debug)]
pub struct FussCatalanArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TpArgs {
    #[arg(long)]
    pub p: Option<usize>,
    /// Evaluation point, two floats: re im.
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub z: Vec<f64>,
    /// Use the p = 3 closed form instead of the Newton branch.
    #[arg(long, default_value_t = false)]
    pub cardano: bool,
}

#[derive(Args, Debug)]
pub struct DomainsArgs {
    #[arg(long)]
    pub p: Option<usize>,
    /// Membership query point: re im.
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub lambda: Option<Vec<f64>>,
    /// Emit boundary CSV (θ, re, im) with this many samples.
    #[arg(long)]
    pub boundary_samples: Option<usize>,
    /// CSV output path for the boundary dump.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Pacman parameters η, ε for the pacman membership check.
    #[arg(long, num_args = 2)]
    pub pacman: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct WgArgs {
    /// Cycle type, comma separated, e.g. 2,1.
    #[arg(long)]
    pub cycle_type: Option<String>,
    /// Matrix dimension N.
    #[arg(long = "N", visible_alias = "n")]
    pub n: Option<usize>,
    /// Validate by Haar Monte Carlo instead of printing the exact value.
    #[arg(long, default_value_t = false)]
    pub mc: bool,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct BkarArgs {
    /// Replica count for the identity check (2 or 3).
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long)]
    pub p: Option<usize>,
    /// Matrix dimension N.
    #[arg(long = "N", visible_alias = "n")]
    pub n: Option<usize>,
    /// Coupling: re im.
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub lambda: Vec<f64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cumulant order k (omit for the partition function).
    #[arg(long)]
    pub k: Option<usize>,
    /// Index pattern a,b,c,d (repeat k times).
    #[arg(long)]
    pub pattern: Option<String>,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    #[arg(long)]
    pub max_order: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AmplitudeArgs {
    #[arg(long)]
    pub p: Option<usize>,
    /// Matrix dimension N.
    #[arg(long = "N", visible_alias = "n")]
    pub n: Option<usize>,
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub lambda: Vec<f64>,
    /// Tree vertices (1..=3).
    #[arg(long, default_value_t = 2)]
    pub vertices: usize,
    /// Put one cilium on vertex 0.
    #[arg(long, default_value_t = false)]
    pub cilium: bool,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct RemainderArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    #[arg(long)]
    pub max_order: Option<usize>,
    /// λ panel (comma separated).
    #[arg(long)]
    pub lambdas: Option<String>,
    /// CSV output path for the σ-fit table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BorelArgs {
    #[arg(long)]
    pub p: Option<usize>,
    /// LeRoy order (defaults to p-1).
    #[arg(long)]
    pub q: Option<usize>,
    /// Evaluation point: re im.
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub z: Vec<f64>,
    /// Padé orders L M (defaults to 5 6).
    #[arg(long, num_args = 2)]
    pub pade: Option<Vec<usize>>,
    /// Series coefficients file (JSON array of [num, den] strings); defaults
    /// to the N = 1 partition-function toy for the given p.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Also fit the remainder bound on this λ panel (comma separated);
    /// available for the built-in toy series only.
    #[arg(long)]
    pub fit_lambdas: Option<String>,
    /// CSV output path for the σ-fit table.
    #[arg(long)]
    pub fit_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyProp1Args {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub lambda: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct VerifySourcesArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, num_args = 2, allow_hyphen_values = true)]
    pub lambda: Vec<f64>,
    #[arg(long)]
    pub j_modulus: Option<f64>,
}

/// Plain-text key=value config; flags override file entries.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    pub entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig, String> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Option<T> {
        self.entries.get(key).and_then(|v| v.parse().ok())
    }
}

/// Defaults shared across subcommands (desk-scale ceilings).
fn default_samples() -> u64 {
    200_000
}

fn default_seed() -> u64 {
    1
}

pub struct Outcome {
    pub exit_code: i32,
    pub stdout: String,
}

/// Runs one subcommand; all output is returned (the binary prints it).
pub fn dispatch(cli: Cli) -> Outcome {
    let file_cfg = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match FileConfig::parse(&text) {
                Ok(cfg) => cfg,
                Err(e) => return validation_error(&format!("config parse error: {e}")),
            },
            Err(e) => return validation_error(&format!("cannot read config: {e}")),
        },
        None => FileConfig::default(),
    };
    if cli.workers > 0 {
        // worker knob: all parallelism is delegated to rayon
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    let result = run_command(&cli.command, &file_cfg);
    match result {
        Ok(record) => {
            let text = serde_json::to_string_pretty(&record).expect("serializable record");
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    return numeric_error(&format!("cannot write {}: {e}", path.display()));
                }
            }
            Outcome {
                exit_code: 0,
                stdout: text,
            }
        }
        Err(DispatchError::Validation(msg)) => validation_error(&msg),
        Err(DispatchError::Numeric(msg)) => numeric_error(&msg),
    }
}

fn validation_error(msg: &str) -> Outcome {
    Outcome {
        exit_code: 2,
        stdout: serde_json::to_string_pretty(&json!({
            "schema": SCHEMA,
            "error": {"kind": "validation", "message": msg},
        }))
        .expect("serializable"),
    }
}

fn numeric_error(msg: &str) -> Outcome {
    Outcome {
        exit_code: 3,
        stdout: serde_json::to_string_pretty(&json!({
            "schema": SCHEMA,
            "error": {"kind": "numeric", "message": msg},
        }))
        .expect("serializable"),
    }
}

enum DispatchError {
    Validation(String),
    Numeric(String),
}

impl From<lvr_core::Error> for DispatchError {
    fn from(e: lvr_core::Error) -> Self {
        match e {
            lvr_core::Error::InvalidParameter(_) | lvr_core::Error::ResourceCeiling { .. } => {
                DispatchError::Validation(e.to_string())
            }
            other => DispatchError::Numeric(other.to_string()),
        }
    }
}

fn config_hash(config: &Value) -> String {
    let canonical = serde_json::to_string(config).expect("serializable config");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::new();
    for b in digest.iter().take(8) {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

fn record(command: &str, config: Value, result: Value) -> Value {
    json!({
        "schema": SCHEMA,
        "command": command,
        "config": config,
        "config_hash": config_hash(&config),
        "result": result,
    })
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn parse_lambda(v: &[f64]) -> Result<Complex64, DispatchError> {
    if v.len() != 2 {
        return Err(DispatchError::Validation(
            "lambda needs two values: re im".into(),
        ));
    }
    Ok(Complex64::new(v[0], v[1]))
}

fn run_command(cmd: &Command, cfg: &FileConfig) -> Result<Value, DispatchError> {
    match cmd {
        Command::FussCatalan(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            let n = args.n.or_else(|| cfg.get("n")).unwrap_or(0);
            let value = fuss_catalan(p, n)?;
            let config = json!({"p": p, "n": n});
            Ok(record(
                "fuss-catalan",
                config,
                json!({"value": value.to_string()}),
            ))
        }
        Command::Tp(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            if args.z.len() != 2 {
                return Err(DispatchError::Validation("--z needs: re im".into()));
            }
            let z = Complex64::new(args.z[0], args.z[1]);
            let value = if args.cardano {
                if p != 3 {
                    return Err(DispatchError::Validation(
                        "the closed form is the p = 3 branch".into(),
                    ));
                }
                tp_eval_cardano(z)?
            } else {
                tp_eval(p, z)?
            };
            let residual = (z * value.powu(p as u32) - value + Complex64::new(1.0, 0.0)).norm();
            let config = json!({"p": p, "z": [z.re, z.im], "cardano": args.cardano});
            Ok(record(
                "tp",
                config,
                json!({"value": complex_json(value), "residual": residual}),
            ))
        }
        Command::Domains(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(3);
            let mut result = serde_json::Map::new();
            if let Some(lam) = &args.lambda {
                let z = parse_lambda(lam)?;
                result.insert("in_cardioid".into(), json!(in_cardioid(p, z)));
                let sokal = lvr_core::domains::cardioid_as_sokal(p);
                result.insert(
                    "in_sokal_translated".into(),
                    json!(in_sokal_domain(&sokal, z)),
                );
                if let Some(pm) = &args.pacman {
                    let spec = PacmanSpec {
                        p,
                        eta: pm[0],
                        epsilon: pm[1],
                    };
                    result.insert("in_pacman".into(), json!(in_pacman(&spec, z)));
                }
            }
            if let Some(samples) = args.boundary_samples {
                let rows = cardioid_boundary(p, samples)?;
                let mut csv = String::from("theta,re,im\n");
                for (t, re, im) in &rows {
                    let _ = writeln!(csv, "{t},{re},{im}");
                }
                if let Some(path) = &args.csv {
                    std::fs::write(path, &csv)
                        .map_err(|e| DispatchError::Numeric(format!("csv write: {e}")))?;
                    result.insert("csv".into(), json!(path.display().to_string()));
                } else {
                    result.insert("csv_inline".into(), json!(csv));
                }
                result.insert("boundary_rows".into(), json!(rows.len()));
            }
            let config = json!({
                "p": p,
                "lambda": args.lambda,
                "boundary_samples": args.boundary_samples,
            });
            Ok(record("domains", config, Value::Object(result)))
        }
        Command::Wg(args) => {
            let spec = args
                .cycle_type
                .clone()
                .or_else(|| cfg.get("cycle_type"))
                .unwrap_or_else(|| "1".into());
            let n = args.n.or_else(|| cfg.get("N")).unwrap_or(3);
            let parts: Result<Vec<usize>, _> = spec.split(',').map(|s| s.trim().parse()).collect();
            let parts = parts.map_err(|_| DispatchError::Validation("bad --cycle-type".into()))?;
            let pi = IntegerPartition::new(parts)?;
            let config = json!({"cycle_type": pi.to_string(), "N": n, "mc": args.mc});
            if args.mc {
                let k = pi.total();
                // an index pattern whose Weingarten sum isolates this class:
                // rows/cols 0..k with the permutation of type π on columns
                let perm = lvr_core::weingarten::Permutation::from_cycle_type(&pi);
                let pattern = HaarMomentPattern {
                    a: (0..k).collect(),
                    b: (0..k).collect(),
                    c: (0..k).collect(),
                    d: (0..k).map(|l| perm.apply(l)).collect(),
                };
                let samples = args
                    .samples
                    .or_else(|| cfg.get("samples"))
                    .unwrap_or(default_samples());
                let seed = args
                    .seed
                    .or_else(|| cfg.get("seed"))
                    .unwrap_or(default_seed());
                let est = haar_moment_mc(&pattern, n, samples, seed)?;
                let exact = haar_moment_exact(&pattern, n)?;
                Ok(record(
                    "wg",
                    config,
                    json!({
                        "mc": {"value": complex_json(est.value), "std_error": est.std_error,
                               "samples": est.samples, "seed": est.seed},
                        "weingarten_prediction": exact.to_string(),
                        "note": "Monte-Carlo validation of the Haar moment relation",
                    }),
                ))
            } else {
                let value = weingarten(&pi, n)?;
                let mut result = json!({"value": value.to_string()});
                if pi.parts() == [1, 1] {
                    result["note"] = json!(
                        "Gram-inverse value +1/(N^2-1); the published table lists -1/(N^2-1) \
                         for this entry — the sign there is inconsistent with the defining \
                         Gram relation"
                    );
                }
                Ok(record("wg", config, result))
            }
        }
        Command::BkarVerify(args) => {
            let n = args.n.or_else(|| cfg.get("n")).unwrap_or(2);
            if !(1..=4).contains(&n) {
                return Err(DispatchError::Validation("n must be 1..=4".into()));
            }
            struct Exp {
                n: usize,
                c: f64,
            }
            impl lvr_core::forests::BkarIntegrand for Exp {
                fn n(&self) -> usize {
                    self.n
                }
                fn eval(&self, x: &nalgebra::DMatrix<f64>) -> f64 {
                    let mut s = 0.0;
                    for i in 0..self.n {
                        for j in 0..self.n {
                            if i != j {
                                s += 0.5 * x[(i, j)];
                            }
                        }
                    }
                    (self.c * s).exp()
                }
                fn mixed_partial(
                    &self,
                    x: &nalgebra::DMatrix<f64>,
                    edges: &[(usize, usize)],
                ) -> f64 {
                    (0.5 * self.c).powi(edges.len() as i32) * self.eval(x)
                }
            }
            let integrand = Exp { n, c: 0.7 };
            let expansion = lvr_core::forests::bkar_expand(n, &integrand, 1e-10)?;
            let direct = lvr_core::forests::BkarIntegrand::eval(
                &integrand,
                &nalgebra::DMatrix::from_element(n, n, 1.0),
            );
            let config = json!({"n": n, "integrand": "exp(0.7 Σ sym x)"});
            Ok(record(
                "bkar-verify",
                config,
                json!({"expansion": expansion, "direct": direct, "diff": (expansion - direct).abs()}),
            ))
        }
        Command::Mc(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            let n = args.n.or_else(|| cfg.get("N")).unwrap_or(1);
            let lambda = parse_lambda(&args.lambda)?;
            let samples = args
                .samples
                .or_else(|| cfg.get("samples"))
                .unwrap_or(default_samples());
            let seed = args
                .seed
                .or_else(|| cfg.get("seed"))
                .unwrap_or(default_seed());
            let params = ModelParams::new(p, n, lambda)?;
            match args.k {
                None => {
                    let est = mc_partition(&params, seed, samples)?;
                    let config = json!({
                        "p": p, "N": n, "lambda": [lambda.re, lambda.im],
                        "samples": samples, "seed": seed,
                    });
                    let mut result = json!({
                        "value": complex_json(est.estimate.value),
                        "std_error": est.estimate.std_error,
                        "samples": est.estimate.samples,
                        "seed": est.estimate.seed,
                        "ess": est.ess,
                    });
                    if est.ess < 0.1 * samples as f64 {
                        result["warning"] = json!("effective sample size collapsed");
                    }
                    Ok(record("mc", config, result))
                }
                Some(k) => {
                    let pattern_text = args
                        .pattern
                        .clone()
                        .or_else(|| cfg.get("pattern"))
                        .unwrap_or_else(|| "0,0,0,0".into());
                    let nums: Result<Vec<usize>, _> =
                        pattern_text.split(',').map(|s| s.trim().parse()).collect();
                    let nums =
                        nums.map_err(|_| DispatchError::Validation("bad --pattern".into()))?;
                    if nums.len() != 4 * k {
                        return Err(DispatchError::Validation(format!(
                            "pattern needs {} indices for k = {k}",
                            4 * k
                        )));
                    }
                    let pattern: Vec<(usize, usize, usize, usize)> =
                        nums.chunks(4).map(|c| (c[0], c[1], c[2], c[3])).collect();
                    let est = mc_cumulant(&params, &pattern, seed, samples)?;
                    let config = json!({
                        "p": p, "N": n, "lambda": [lambda.re, lambda.im], "k": k,
                        "pattern": pattern_text, "samples": samples, "seed": seed,
                    });
                    Ok(record(
                        "mc",
                        config,
                        json!({
                            "value": complex_json(est.value),
                            "std_error": est.std_error,
                            "samples": est.samples,
                            "seed": est.seed,
                        }),
                    ))
                }
            }
        }
        Command::Perturb(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            let default_order = if p == 2 { 3 } else { 2 };
            let max_order = args
                .max_order
                .or_else(|| cfg.get("max_order"))
                .unwrap_or(default_order);
            let limits = EnumLimits::default();
            let series = perturbative_series(p, args.k, max_order, &limits)?;
            let orders: Vec<Value> = series
                .orders
                .iter()
                .map(|o| {
                    let by_pi: Vec<Value> = o
                        .by_pi
                        .iter()
                        .map(|(pi, poly)| {
                            json!({
                                "pi": pi.to_string(),
                                "n_polynomial": poly.to_json(),
                            })
                        })
                        .collect();
                    json!({
                        "order": o.order,
                        "graphs_counted": o.patterns,
                        "diagram_classes": o.classes,
                        "coefficients": by_pi,
                    })
                })
                .collect();
            let config = json!({"p": p, "k": args.k, "max_order": max_order});
            Ok(record("perturb", config, json!({"orders": orders})))
        }
        Command::Amplitude(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            let n = args.n.or_else(|| cfg.get("N")).unwrap_or(2);
            let lambda = parse_lambda(&args.lambda)?;
            let samples = args
                .samples
                .or_else(|| cfg.get("samples"))
                .unwrap_or(50_000);
            let seed = args
                .seed
                .or_else(|| cfg.get("seed"))
                .unwrap_or(default_seed());
            let params = ModelParams::new(p, n, lambda)?;
            let tree = chain_tree(args.vertices, args.cilium)
                .map_err(|e| DispatchError::Validation(e.to_string()))?;
            let amp = tree_amplitude_mc(&tree, &params, seed, samples)?;
            let config = json!({
                "p": p, "N": n, "lambda": [lambda.re, lambda.im],
                "vertices": args.vertices, "cilium": args.cilium,
                "samples": samples, "seed": seed,
            });
            Ok(record(
                "amplitude",
                config,
                json!({
                    "value": complex_json(amp.value.value),
                    "std_error": amp.value.std_error,
                    "samples": amp.value.samples,
                    "seed": amp.value.seed,
                    "bound": amp.bound,
                    "edges": amp.edges,
                    "cilia": amp.cilia,
                }),
            ))
        }
        Command::Remainder(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            let default_order = if p == 2 { 3 } else { 2 };
            let max_order = args
                .max_order
                .or_else(|| cfg.get("max_order"))
                .unwrap_or(default_order);
            let lambdas: Vec<f64> = match args.lambdas.clone().or_else(|| cfg.get("lambdas")) {
                Some(text) => text
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| DispatchError::Validation("bad --lambdas".into()))?,
                None => vec![0.01, 0.02, 0.05, 0.1],
            };
            let limits = EnumLimits::default();
            let report = remainder_estimate(p, args.k, max_order, &lambdas, &limits)?;
            let mut csv = String::from("order,lambda,remainder,sigma_n\n");
            for row in &report.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    row.order, row.lambda, row.remainder, row.sigma_n
                );
            }
            if let Some(path) = &args.csv {
                std::fs::write(path, &csv)
                    .map_err(|e| DispatchError::Numeric(format!("csv write: {e}")))?;
            }
            let config = json!({
                "p": p, "k": args.k, "max_order": max_order, "lambdas": lambdas,
            });
            Ok(record(
                "remainder",
                config,
                json!({
                    "sigma": report.sigma,
                    "rows": report.rows.len(),
                    "csv": args.csv.as_ref().map(|p| p.display().to_string()),
                    "csv_inline": if args.csv.is_none() { Some(csv) } else { None },
                }),
            ))
        }
        Command::Borel(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            let q = args.q.unwrap_or(p - 1);
            let order = args.order.unwrap_or(12);
            if args.z.len() != 2 {
                return Err(DispatchError::Validation("--z needs: re im".into()));
            }
            let z = Complex64::new(args.z[0], args.z[1]);
            let series = match &args.series {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| DispatchError::Validation(format!("series file: {e}")))?;
                    parse_series_json(&text)?
                }
                None => scalar_partition_series(p, order),
            };
            let transform = borel_transform(&series, q)?;
            let (l, m) = match &args.pade {
                Some(v) => (v[0], v[1]),
                None => (5, 6),
            };
            let pade = pade_continuation(&transform, l, m)?;
            let poles: Vec<Value> = pade.poles.iter().map(|z| complex_json(*z)).collect();
            let screened = pade.poles_near_positive_axis(1e-3);
            let summation = BorelSummation::new(q, series, Continuation::Pade(&pade))?;
            let value = borel_sum(&summation, z)?;
            let mut fit_json = Value::Null;
            if let Some(text) = &args.fit_lambdas {
                if args.series.is_some() {
                    return Err(DispatchError::Validation(
                        "the σ-fit needs the built-in toy series (no oracle for custom input)"
                            .into(),
                    ));
                }
                let panel: Vec<f64> = text
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| DispatchError::Validation("bad --fit-lambdas".into()))?;
                let oracle = |lam: f64| {
                    lvr_core::model::z_quadrature_n1(p, Complex64::new(lam, 0.0))
                        .unwrap_or(Complex64::new(f64::NAN, 0.0))
                };
                let fit = lvr_core::resummation::remainder_bound_fit(
                    &oracle,
                    &scalar_partition_series(p, order),
                    q,
                    &panel,
                    order.min(8),
                );
                let mut csv = String::from("order,lambda,remainder,sigma_n,slack\n");
                for row in &fit.rows {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        row.order, row.lambda, row.remainder, row.sigma_n, row.slack
                    );
                }
                if let Some(path) = &args.fit_csv {
                    std::fs::write(path, &csv)
                        .map_err(|e| DispatchError::Numeric(format!("csv write: {e}")))?;
                    fit_json = json!({"sigma": fit.sigma, "csv": path.display().to_string()});
                } else {
                    fit_json = json!({"sigma": fit.sigma, "csv_inline": csv});
                }
            }
            let config = json!({
                "p": p, "q": q, "z": [z.re, z.im], "pade": [l, m], "order": order,
                "fit_lambdas": args.fit_lambdas,
            });
            Ok(record(
                "borel",
                config,
                json!({
                    "value": complex_json(value.value),
                    "error_estimate": value.error_estimate,
                    "transform": summation.transform.to_json(),
                    "pade_poles": poles,
                    "poles_near_positive_axis": screened.len(),
                    "sigma_fit": fit_json,
                }),
            ))
        }
        Command::VerifyProp1(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            let lambda = parse_lambda(&args.lambda)?;
            let report = verify_prop1_n1(p, lambda)?;
            let config = json!({"p": p, "lambda": [lambda.re, lambda.im]});
            Ok(record(
                "verify-prop1",
                config,
                json!({
                    "lhs": complex_json(report.lhs),
                    "rhs": complex_json(report.rhs),
                    "diff": report.diff,
                }),
            ))
        }
        Command::VerifySources(args) => {
            let p = args.p.or_else(|| cfg.get("p")).unwrap_or(2);
            let lambda = parse_lambda(&args.lambda)?;
            let j = args
                .j_modulus
                .or_else(|| cfg.get("j_modulus"))
                .unwrap_or(0.1);
            let report = verify_source_change_of_variables(p, lambda, j)?;
            let config = json!({"p": p, "lambda": [lambda.re, lambda.im], "j_modulus": j});
            Ok(record(
                "verify-sources",
                config,
                json!({
                    "lhs": complex_json(report.lhs),
                    "rhs": complex_json(report.rhs),
                    "diff": report.diff,
                }),
            ))
        }
    }
}

/// Labelled chain tree on `vertices` vertices, optional cilium on vertex 0.
pub fn chain_tree(vertices: usize, cilium: bool) -> lvr_core::Result<LvrGraph> {
    if !(1..=3).contains(&vertices) {
        return Err(lvr_core::Error::InvalidParameter(
            "vertices must be 1..=3".into(),
        ));
    }
    let mut vertex_of = Vec::new();
    let mut pairing: Vec<Option<usize>> = Vec::new();
    for e in 0..vertices.saturating_sub(1) {
        // edge e joins vertices e and e+1: half-edges 2e (at e), 2e+1 (at e+1)
        vertex_of.push(e);
        vertex_of.push(e + 1);
        pairing.push(Some(2 * e + 1));
        pairing.push(Some(2 * e));
    }
    if cilium {
        vertex_of.push(0);
        pairing.push(None);
    }
    // rotation: cyclic order of the half-edges at each vertex
    let h = vertex_of.len();
    let mut rot_next = vec![0usize; h];
    for v in 0..vertices {
        let stubs: Vec<usize> = (0..h).filter(|&he| vertex_of[he] == v).collect();
        for (i, &he) in stubs.iter().enumerate() {
            rot_next[he] = stubs[(i + 1) % stubs.len()];
        }
    }
    let map = RibbonMap::new(vertices, vertex_of, rot_next, pairing)?;
    let tree: Vec<usize> = (0..vertices.saturating_sub(1)).collect();
    Ok(LvrGraph {
        map,
        tree,
        loop_edge_labels: vec![],
    })
}

fn parse_series_json(text: &str) -> Result<PowerSeries<num_rational::BigRational>, DispatchError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| DispatchError::Validation(format!("series JSON: {e}")))?;
    PowerSeries::from_json(&v).map_err(DispatchError::from)
}
