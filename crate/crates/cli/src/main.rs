use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use csar_core::bandit::{BanditInstance, InstanceKind, Noise};
use csar_core::csar::{self, CsarConfig, EstimatorKind, Mode};
use csar_core::hadamard;
use csar_core::harness::{self, InstanceSource, Method, PresetOutput};
use csar_core::linalg::DenseMatrix;
use csar_core::rng::stream;
use csar_core::theory::{self, SubsetDistribution};

const GLOBAL_KEYS: [&str; 3] = ["out", "workers", "paper_scale"];

#[derive(Parser, Debug)]
#[command(name = "csar", version, about = "Top-k combinatorial bandits with full-bandit feedback")]
struct Cli {
    /// Master seed; every replication draws from its own stream under it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV and SVG files [default: results]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the large-scale preset defaults instead of the desk-scale ones.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Worker threads for replications [default: available cores]
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON object (inline or a file path) of parameter overrides. Keys mirror
    /// the flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Repeated group estimation on uniform-mean instances.
    #[command(after_help = "Writes estimate.csv: rep,method,mse,max_err,pulls")]
    Estimate(EstimateArgs),
    /// Repeated CSAR runs.
    #[command(after_help = "Writes csar_runs.csv: rep,phase,eps_t,delta_t,n_surviving,n_accepted,pulls,cum_regret\n\
                            Writes csar_summary.csv: rep,success,phases,total_pulls,final_regret\n\n\
                            --instance accepts an instance JSON object {\"n\",\"k\",\"means\",\"noise\"}, a path to one,\n\
                            a generator JSON object {\"kind\": ...}, or a generator spec such as\n\
                            two_gap:plus=1,minus=0.1 | bernoulli_epsilon_k:eps=0.2 | equal_gap:gap=0.1 |\n\
                            planted_subset:subset=0+3,eps=0.5 | uniform_gaussian | uniform_bernoulli | flat_null")]
    Csar(CsarArgs),
    /// Hadamard vs leave-one-out vs random-design MSE at matched pull budgets.
    #[command(after_help = "Writes mse_study.csv: n,k,reps,budget_m,method,m,pulls,mse_mean,mse_sd\n\
                            Writes mse_study_runs.csv: rep,budget_m,method,m,pulls,mse\n\
                            Writes mse_study.svg")]
    MseStudy(MseArgs),
    /// MSE of random sign designs against their condition number.
    #[command(after_help = "Writes condition_study.csv: design,kappa,mse_mean\n\
                            Writes condition_study_summary.csv: n,k,designs,kept,inner_reps,m,spearman\n\
                            Writes condition_study.svg")]
    ConditionStudy(ConditionArgs),
    /// Cumulative regret of horizon-mode CSAR against uniform random subsets.
    #[command(
        after_help = "Writes regret_study.csv: n,k,reps,horizon,csar_mean,csar_sd,uniform_mean,uniform_sd,win_rate,growth\n\
                            Writes regret_study_curves.csv: k,t,method,mean,sd\n\
                            Writes regret_study.svg"
    )]
    RegretStudy(RegretArgs),
    /// Total pulls of exact CSAR against the accuracy parameter.
    #[command(after_help = "Writes sample_scaling.csv: n,k,delta,eps,reps,pulls_mean,pulls_sd,success_rate\n\
                            Writes sample_scaling_runs.csv: eps,rep,total_pulls,phases,success\n\
                            Writes sample_scaling_fit.csv: points,slope")]
    SampleScaling(ScalingArgs),
    /// EST1 against EST2 regret on two-gap instances.
    #[command(
        after_help = "Writes regret_tightness.csv: n,k,plus,minus,estimator,reps,regret_mean,regret_sd,pulls_mean,success_rate\n\
                            Writes regret_tightness_runs.csv: rep,estimator,regret,pulls,phases,success"
    )]
    RegretTightness(TightnessArgs),
    /// Numeric checks on subset-sampling distributions and PD matrices.
    TheoryCheck {
        #[command(subcommand)]
        check: TheoryCommand,
    },
    /// Hadamard matrix constructions.
    Hadamard {
        #[command(subcommand)]
        action: HadamardCommand,
    },
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// gaussian, bernoulli or zero
    #[arg(long)]
    noise: Option<Noise>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CliMode {
    Exact,
    Pac,
    Horizon,
}

#[derive(Args, Debug, Serialize)]
struct CsarArgs {
    #[arg(long, value_enum)]
    mode: Option<CliMode>,
    /// est1 or est2
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<EstimatorKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    cprime: Option<f64>,
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
}

/// Flat CSAR parameters, mirroring the `csar` flags one to one.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CsarParams {
    mode: CliMode,
    estimator: EstimatorKind,
    n: usize,
    k: usize,
    delta: f64,
    eps: Option<f64>,
    horizon: Option<u64>,
    cprime: f64,
    instance: Value,
    reps: usize,
    seed: u64,
}

impl Default for CsarParams {
    fn default() -> Self {
        Self {
            mode: CliMode::Exact,
            estimator: EstimatorKind::Est1,
            n: 12,
            k: 2,
            delta: 0.1,
            eps: None,
            horizon: None,
            cprime: csar::DEFAULT_C_PRIME,
            instance: Value::String("uniform_gaussian".into()),
            reps: 1,
            seed: 0,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct MseArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    noise: Option<Noise>,
    /// Comma-separated per-subset sample counts.
    #[arg(long, value_delimiter = ',')]
    m_grid: Option<Vec<u64>>,
}

#[derive(Args, Debug, Serialize)]
struct ConditionArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Number of random designs.
    #[arg(long)]
    designs: Option<usize>,
    /// Estimation runs per design.
    #[arg(long)]
    inner_reps: Option<usize>,
    #[arg(long)]
    m: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct RegretArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated subset sizes; checks apply to the first.
    #[arg(long, value_delimiter = ',')]
    #[serde(rename = "k_values")]
    k: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    #[serde(rename = "c_prime")]
    cprime: Option<f64>,
    #[arg(long)]
    checkpoints: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct ScalingArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated accuracy values.
    #[arg(long, value_delimiter = ',')]
    #[serde(rename = "eps_values")]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<EstimatorKind>,
}

#[derive(Args, Debug, Serialize)]
struct TightnessArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    plus: Option<f64>,
    #[arg(long)]
    minus: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum TheoryCommand {
    /// ρ(p) = max_S χ_Sᵀ Λ_p⁻¹ χ_S and the bound ρ(p) ≥ n/k.
    #[command(
        after_help = "--dist takes inline JSON or a file: {\"n\":4,\"k\":2,\"support\":[[[0,1],0.5],[[2,3],0.5]]}\n\
                            --dist random draws --count full-rank distributions on --n arms; --dist uniform uses all k-subsets."
    )]
    Rho {
        /// `uniform`, `random`, inline JSON or a JSON file.
        #[arg(long, default_value = "random")]
        dist: String,
        /// Number of distributions drawn for `--dist random`.
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// (xᵀAx)(xᵀA⁻¹x) ≥ ‖x‖⁴ for positive-definite A.
    #[command(after_help = "--matrix takes a JSON array of rows, --x a JSON array.\n\
                            Without them, --random draws that many (A, x) pairs of size --n.")]
    Bilinear {
        #[arg(long, requires = "x")]
        matrix: Option<String>,
        #[arg(long, requires = "matrix")]
        x: Option<String>,
        #[arg(long, conflicts_with = "matrix", default_value_t = 100)]
        random: usize,
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum HadamardCommand {
    /// Prints the matrix of the given order as rows of `+` and `-`.
    Dump {
        #[arg(long)]
        order: usize,
        /// Verify orthogonality; exits 2 when it fails.
        #[arg(long)]
        check: bool,
    },
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    match s {
        "est1" => Ok(EstimatorKind::Est1),
        "est2" => Ok(EstimatorKind::Est2),
        other => Err(format!("unknown estimator `{other}` (expected est1 or est2)")),
    }
}

/// Inline JSON or the contents of a file.
fn read_json(arg: &str) -> Result<Value> {
    let text = if arg.trim_start().starts_with(['{', '[']) {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("parsing JSON from {arg}"))
}

struct Globals {
    seed: Option<u64>,
    out: PathBuf,
    paper_scale: bool,
    workers: usize,
    /// Non-global keys of `--config`.
    overrides: Map<String, Value>,
}

impl Globals {
    fn from_cli(cli: &Cli) -> Result<Self> {
        let mut overrides = match &cli.config {
            Some(c) => match read_json(c)? {
                Value::Object(m) => m,
                _ => bail!("--config must be a JSON object"),
            },
            None => Map::new(),
        };
        let out = overrides.remove("out");
        let workers = overrides.remove("workers");
        let paper = overrides.remove("paper_scale");
        let out = match (&cli.out, out) {
            (Some(p), _) => p.clone(),
            (None, Some(v)) => PathBuf::from(v.as_str().context("config `out` must be a string")?),
            (None, None) => PathBuf::from("results"),
        };
        let workers = match (cli.workers, workers) {
            (Some(w), _) => w,
            (None, Some(v)) => v.as_u64().context("config `workers` must be an integer")? as usize,
            (None, None) => harness::default_workers(),
        };
        let paper_scale = cli.paper_scale
            || match paper {
                Some(v) => v.as_bool().context("config `paper_scale` must be a boolean")?,
                None => false,
            };
        debug_assert!(GLOBAL_KEYS.iter().all(|k| !overrides.contains_key(*k)));
        Ok(Self { seed: cli.seed, out, paper_scale, workers, overrides })
    }

    /// Config overrides, then explicit flags, then `--seed`.
    fn merged<A: Serialize>(&self, flags: &A) -> Result<Value> {
        let mut map = self.overrides.clone();
        if let Value::Object(f) = serde_json::to_value(flags)? {
            map.extend(f.into_iter().filter(|(_, v)| !v.is_null()));
        }
        if let Some(seed) = self.seed {
            map.insert("seed".into(), seed.into());
        }
        Ok(Value::Object(map))
    }

    fn params<T, A>(&self, base: T, flags: &A) -> Result<T>
    where
        T: Serialize + serde::de::DeserializeOwned,
        A: Serialize,
    {
        Ok(harness::apply_overrides(&base, &self.merged(flags)?)?)
    }

    fn reject_overrides(&self, command: &str) -> Result<()> {
        if let Some(key) = self.overrides.keys().find(|k| *k != "seed") {
            bail!("`{command}` takes no config parameter `{key}`");
        }
        Ok(())
    }
}

fn instance_source(v: &Value, n: usize, k: usize) -> Result<InstanceSource> {
    match v {
        Value::String(s) => {
            let t = s.trim_start();
            if t.starts_with('{') || Path::new(s).is_file() {
                instance_source(&read_json(s)?, n, k)
            } else {
                Ok(InstanceSource::Generated(InstanceKind::parse(s, n, k)?))
            }
        }
        Value::Object(m) if m.contains_key("kind") => Ok(InstanceSource::Generated(serde_json::from_value(v.clone())?)),
        Value::Object(_) => Ok(InstanceSource::Fixed(serde_json::from_value::<BanditInstance>(v.clone())?)),
        _ => bail!("instance must be a JSON object or a generator spec"),
    }
}

fn csar_config(p: &CsarParams) -> CsarConfig {
    let mode = match p.mode {
        CliMode::Exact => Mode::ExactPac,
        CliMode::Pac => Mode::EpsPac,
        CliMode::Horizon => Mode::Horizon,
    };
    CsarConfig {
        mode,
        estimator: p.estimator,
        delta: p.delta,
        eps: p.eps,
        horizon: p.horizon,
        c_prime: p.cprime,
        seed: p.seed,
    }
}

fn finish(output: &PresetOutput, dir: &Path) -> Result<ExitCode> {
    for path in output.write(dir)? {
        println!("wrote {}", path.display());
    }
    for c in &output.checks {
        println!("{}  {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if output.passed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn pick<T>(paper_scale: bool, desk: fn() -> T, paper: fn() -> T) -> T {
    if paper_scale {
        paper()
    } else {
        desk()
    }
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn theory_check(cmd: &TheoryCommand, seed: u64) -> Result<ExitCode> {
    match cmd {
        TheoryCommand::Rho { dist, count, n, k } => {
            let dists = match dist.as_str() {
                "uniform" => vec![SubsetDistribution::uniform(*n, *k)?],
                "random" => {
                    let mut rng = stream(seed, &[8]);
                    (0..*count)
                        .map(|_| SubsetDistribution::random_full_rank(*n, *k, &mut rng))
                        .collect::<Result<_, _>>()?
                }
                json => vec![SubsetDistribution::from_json(&read_json(json)?.to_string())?],
            };
            let mut ok = true;
            println!("dist,n,k,rho,bound");
            for (i, d) in dists.iter().enumerate() {
                let r = theory::rho(d)?;
                let bound = d.n as f64 / d.k as f64;
                ok &= r >= bound - 1e-9;
                println!("{i},{},{},{r},{bound}", d.n, d.k);
            }
            println!("{}  rho >= n/k", if ok { "PASS" } else { "FAIL" });
            Ok(verdict(ok))
        }
        TheoryCommand::Bilinear { matrix, x, random, n } => {
            let cases: Vec<(DenseMatrix, Vec<f64>)> = match (matrix, x) {
                (Some(a), Some(x)) => {
                    let rows: Vec<Vec<f64>> = serde_json::from_value(read_json(a)?)?;
                    let x: Vec<f64> = serde_json::from_value(read_json(x)?)?;
                    vec![(DenseMatrix::from_rows(&rows)?, x)]
                }
                _ => {
                    let mut rng = stream(seed, &[9]);
                    (0..*random)
                        .map(|_| {
                            let a = theory::random_pd(*n, &mut rng);
                            let x = (0..*n).map(|_| rand_unit(&mut rng)).collect();
                            (a, x)
                        })
                        .collect()
                }
            };
            let mut ok = true;
            for (a, x) in &cases {
                ok &= theory::bilinear_check(a, x)?;
            }
            println!("{}  bilinear inequality on {} case(s)", if ok { "PASS" } else { "FAIL" }, cases.len());
            Ok(verdict(ok))
        }
    }
}

fn rand_unit(rng: &mut csar_core::rng::SimRng) -> f64 {
    use rand::Rng;
    rng.random_range(-1.0..1.0)
}

fn hadamard_cmd(cmd: &HadamardCommand) -> Result<ExitCode> {
    match cmd {
        HadamardCommand::Dump { order, check } => {
            let h = hadamard::construct(*order)?;
            for row in h.to_sign_rows() {
                println!("{row}");
            }
            if *check {
                let ok = h.is_valid();
                eprintln!("{}  order {order} orthogonal", if ok { "PASS" } else { "FAIL" });
                return Ok(verdict(ok));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = Globals::from_cli(&cli)?;
    let w = g.workers;
    match &cli.command {
        Command::Estimate(a) => {
            let p = g.params(harness::EstimateParams::default(), a)?;
            finish(&harness::estimate_runs(&p, w)?, &g.out)
        }
        Command::Csar(a) => {
            let p: CsarParams = g.params(CsarParams::default(), a)?;
            let params = harness::CsarRunParams {
                config: csar_config(&p),
                instance: instance_source(&p.instance, p.n, p.k)?,
                reps: p.reps,
            };
            let output = harness::csar_runs(&params, w)?;
            if let Some(summary) = output.table("csar_summary.csv") {
                let ok = summary.column("success").unwrap_or_default().iter().filter(|s| **s == "true").count();
                println!("success {ok}/{}", summary.rows.len());
            }
            finish(&output, &g.out)
        }
        Command::MseStudy(a) => {
            let p = g.params(pick(g.paper_scale, harness::MseParams::desk, harness::MseParams::paper), a)?;
            finish(&harness::mse_study(&p, w)?, &g.out)
        }
        Command::ConditionStudy(a) => {
            let p =
                g.params(pick(g.paper_scale, harness::ConditionParams::desk, harness::ConditionParams::paper), a)?;
            finish(&harness::condition_study(&p, w)?, &g.out)
        }
        Command::RegretStudy(a) => {
            let p = g.params(pick(g.paper_scale, harness::RegretParams::desk, harness::RegretParams::paper), a)?;
            finish(&harness::regret_study(&p, w)?, &g.out)
        }
        Command::SampleScaling(a) => {
            let p = g.params(pick(g.paper_scale, harness::ScalingParams::desk, harness::ScalingParams::paper), a)?;
            finish(&harness::sample_scaling(&p, w)?, &g.out)
        }
        Command::RegretTightness(a) => {
            let p =
                g.params(pick(g.paper_scale, harness::TightnessParams::desk, harness::TightnessParams::paper), a)?;
            finish(&harness::regret_tightness(&p, w)?, &g.out)
        }
        Command::TheoryCheck { check } => {
            g.reject_overrides("theory-check")?;
            let seed = g.seed.or_else(|| g.overrides.get("seed").and_then(Value::as_u64)).unwrap_or(0);
            theory_check(check, seed)
        }
        Command::Hadamard { action } => {
            g.reject_overrides("hadamard")?;
            hadamard_cmd(action)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
