use log::{info, warn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::svg::{Chart, Series};
use super::{cell, replicate, Check, PresetOutput, Table};
use crate::bandit::{make_instance, BanditInstance, InstanceKind, Noise, Oracle, RegretLedger};
use crate::csar::{self, CsarConfig, CsarResult, EstimatorKind};
use crate::error::{invalid, Error, Result};
use crate::estimators::{
    est1, est1_with_m, est_loo, est_random_matrix, est_with_design, sample_count, EstimateReport, EstimationRequest,
    SignDesign,
};
use crate::hadamard::smallest_order;
use crate::linalg::{mean_sd, mse, spearman};
use crate::rng::{stream, SimRng};

const MSE_STUDY: u64 = 1;
const CONDITION_STUDY: u64 = 2;
const REGRET_STUDY: u64 = 3;
const SAMPLE_SCALING: u64 = 4;
const REGRET_TIGHTNESS: u64 = 5;
const ESTIMATE: u64 = 6;
const CSAR_RUNS: u64 = 7;

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    Ok(())
}

/// Slope of the least-squares line through `(x, y)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::NoData);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("x values are all equal"));
    }
    Ok(sxy / sxx)
}

/// About `count` log-spaced integers in `[lo, hi]`, plus `hi/2` and `hi`.
pub fn log_checkpoints(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    let (a, b) = ((lo.max(1) as f64).ln(), (hi.max(1) as f64).ln());
    let steps = count.max(2) - 1;
    let mut pts: Vec<u64> = (0..=steps).map(|i| (a + (b - a) * i as f64 / steps as f64).exp().round() as u64).collect();
    pts.push(hi / 2);
    pts.push(hi);
    pts.retain(|&t| t >= 1 && t <= hi);
    pts.sort_unstable();
    pts.dedup();
    pts
}

fn run_estimator<F>(instance: &BanditInstance, rng: &mut SimRng, f: F) -> Result<(EstimateReport, u64)>
where
    F: FnOnce(&mut Oracle<'_, SimRng>) -> Result<EstimateReport>,
{
    let mut ledger = RegretLedger::new(instance);
    let report = {
        let mut oracle = Oracle::new(instance, rng, &mut ledger);
        f(&mut oracle)?
    };
    Ok((report, ledger.pulls()))
}

fn estimate_errors(instance: &BanditInstance, report: &EstimateReport) -> Result<(f64, f64)> {
    let arms: Vec<usize> = (0..instance.n()).collect();
    let est = report.estimate_vec(&arms);
    let max_err = est.iter().zip(instance.means()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((mse(&est, instance.means())?, max_err))
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hadamard,
    Loo,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hadamard => "hadamard",
            Method::Loo => "loo",
            Method::Random => "random",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hadamard" => Ok(Method::Hadamard),
            "loo" => Ok(Method::Loo),
            "random" => Ok(Method::Random),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub noise: Noise,
    pub reps: usize,
    pub seed: u64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self { method: Method::Hadamard, n: 16, k: 2, eps: 0.2, delta: 0.1, noise: Noise::Gaussian, reps: 10, seed: 0 }
    }
}

/// Repeated estimation on uniform-mean instances. Every method uses
/// `m = sample_count(eps, delta, n)` pulls per subset.
pub fn estimate_runs(p: &EstimateParams, workers: usize) -> Result<PresetOutput> {
    check_reps(p.reps)?;
    let m = sample_count(p.eps, p.delta, p.n)?;
    let rows = replicate(workers, p.reps, |r| {
        let mut rng = stream(p.seed, &[ESTIMATE, r as u64]);
        let instance =
            make_instance(&InstanceKind::UniformGaussian { n: p.n, k: p.k }, &mut rng)?.with_noise(p.noise)?;
        let arms: Vec<usize> = (0..p.n).collect();
        let (report, pulls) = run_estimator(&instance, &mut rng, |o| match p.method {
            Method::Hadamard => est1(&EstimationRequest::new(arms.clone(), p.k, p.eps, p.delta), o),
            Method::Loo => est_loo(&arms, p.k, m, &[], o),
            Method::Random => est_random_matrix(&arms, p.k, m, &[], o),
        })?;
        let (err, max_err) = estimate_errors(&instance, &report)?;
        Ok(vec![cell(r), cell(p.method.name()), cell(err), cell(max_err), cell(pulls)])
    })?;
    let mut table = Table::new(&["rep", "method", "mse", "max_err", "pulls"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(PresetOutput { name: "estimate", tables: vec![("estimate.csv".into(), table)], chart: None, checks: vec![] })
}

// -------------------------------------------------------------------- csar

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsarRunParams {
    pub config: CsarConfig,
    pub instance: InstanceSource,
    pub reps: usize,
}

/// Either a fixed instance or a generator drawn afresh per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Fixed(BanditInstance),
    Generated(InstanceKind),
}

impl InstanceSource {
    fn draw(&self, rng: &mut SimRng) -> Result<BanditInstance> {
        match self {
            InstanceSource::Fixed(b) => Ok(b.clone()),
            InstanceSource::Generated(kind) => make_instance(kind, rng),
        }
    }
}

/// Repeated CSAR runs; replication `r` uses seed stream `(seed, r)`.
pub fn csar_runs(p: &CsarRunParams, workers: usize) -> Result<PresetOutput> {
    check_reps(p.reps)?;
    let results = replicate(workers, p.reps, |r| {
        let mut inst_rng = stream(p.config.seed, &[CSAR_RUNS, r as u64, 0]);
        let instance = p.instance.draw(&mut inst_rng)?;
        let mut rng = stream(p.config.seed, &[CSAR_RUNS, r as u64, 1]);
        csar::run_with_rng(&p.config, &instance, &mut rng)
    })?;
    let mut runs =
        Table::new(&["rep", "phase", "eps_t", "delta_t", "n_surviving", "n_accepted", "pulls", "cum_regret"]);
    let mut summary = Table::new(&["rep", "success", "phases", "total_pulls", "final_regret"]);
    for (r, res) in results.iter().enumerate() {
        for rec in &res.records {
            runs.push(vec![
                cell(r),
                cell(rec.phase),
                cell(rec.eps_t),
                cell(rec.delta_t),
                cell(rec.n_surviving),
                cell(rec.n_accepted),
                cell(rec.pulls),
                cell(rec.cum_regret),
            ]);
        }
        summary.push(vec![cell(r), cell(res.success), cell(res.phases), cell(res.total_pulls), cell(res.regret)]);
    }
    Ok(PresetOutput {
        name: "csar",
        tables: vec![("csar_runs.csv".into(), runs), ("csar_summary.csv".into(), summary)],
        chart: None,
        checks: vec![],
    })
}

// --------------------------------------------------------------- mse_study

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseParams {
    pub n: usize,
    pub k: usize,
    pub reps: usize,
    /// Per-subset sample counts of the Hadamard estimator; the baselines get
    /// the same total number of pulls.
    pub m_grid: Vec<u64>,
    pub noise: Noise,
    pub seed: u64,
}

impl MseParams {
    pub fn desk() -> Self {
        Self { n: 48, k: 4, reps: 200, m_grid: vec![16, 32, 64, 128], noise: Noise::Gaussian, seed: 0 }
    }

    pub fn paper() -> Self {
        Self { n: 144, k: 8, reps: 1000, ..Self::desk() }
    }
}

/// Per-subset count giving `blocks · subsets_per_block · m ≈ pulls`.
fn matched_m(pulls: u64, blocks: usize, subsets_per_block: usize) -> u64 {
    ((pulls as f64 / (blocks * subsets_per_block) as f64).round() as u64).max(1)
}

const METHODS: [Method; 3] = [Method::Hadamard, Method::Loo, Method::Random];

pub fn mse_study(p: &MseParams, workers: usize) -> Result<PresetOutput> {
    check_reps(p.reps)?;
    if p.m_grid.is_empty() || p.m_grid.contains(&0) {
        return Err(invalid("m_grid must be non-empty and positive"));
    }
    smallest_order(p.k)?;
    let (n, k) = (p.n, p.k);
    let arms: Vec<usize> = (0..n).collect();
    info!("mse_study: n={n} k={k} reps={} m_grid={:?}", p.reps, p.m_grid);

    // results[r][j][method] = (m, pulls, mse)
    let results = replicate(workers, p.reps, |r| {
        let mut rng = stream(p.seed, &[MSE_STUDY, r as u64]);
        let instance = make_instance(&InstanceKind::UniformGaussian { n, k }, &mut rng)?.with_noise(p.noise)?;
        let mut per_m = Vec::with_capacity(p.m_grid.len());
        for (j, &m) in p.m_grid.iter().enumerate() {
            let key = |method: u64| stream(p.seed, &[MSE_STUDY, r as u64, j as u64, method]);
            let (h_report, h_pulls) = run_estimator(&instance, &mut key(0), |o| est1_with_m(&arms, k, m, &[], o))?;
            let m_loo = matched_m(h_pulls, n.div_ceil(k + 1), k + 1);
            let (l_report, l_pulls) = run_estimator(&instance, &mut key(1), |o| est_loo(&arms, k, m_loo, &[], o))?;
            let m_rand = matched_m(h_pulls, n.div_ceil(2 * k), 4 * k);
            let (x_report, x_pulls) =
                run_estimator(&instance, &mut key(2), |o| est_random_matrix(&arms, k, m_rand, &[], o))?;
            per_m.push([
                (m, h_pulls, estimate_errors(&instance, &h_report)?.0),
                (m_loo, l_pulls, estimate_errors(&instance, &l_report)?.0),
                (m_rand, x_pulls, estimate_errors(&instance, &x_report)?.0),
            ]);
        }
        Ok(per_m)
    })?;

    let mut runs = Table::new(&["rep", "budget_m", "method", "m", "pulls", "mse"]);
    let mut summary = Table::new(&["n", "k", "reps", "budget_m", "method", "m", "pulls", "mse_mean", "mse_sd"]);
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 3];
    let mut checks = Vec::new();
    for (j, &budget) in p.m_grid.iter().enumerate() {
        let mut means = [0.0; 3];
        for (mi, method) in METHODS.iter().enumerate() {
            let vals: Vec<f64> = results.iter().map(|per_m| per_m[j][mi].2).collect();
            let pulls: Vec<f64> = results.iter().map(|per_m| per_m[j][mi].1 as f64).collect();
            for (r, per_m) in results.iter().enumerate() {
                let (m, pl, e) = per_m[j][mi];
                runs.push(vec![cell(r), cell(budget), cell(method.name()), cell(m), cell(pl), cell(e)]);
            }
            let (mean, sd) = mean_sd(&vals);
            let mean_pulls = mean_sd(&pulls).0;
            means[mi] = mean;
            series[mi].push((mean_pulls, mean));
            summary.push(vec![
                cell(n),
                cell(k),
                cell(p.reps),
                cell(budget),
                cell(method.name()),
                cell(results[0][j][mi].0),
                cell(mean_pulls),
                cell(mean),
                cell(sd),
            ]);
        }
        if p.noise == Noise::Zero {
            checks.push(Check::new(
                &format!("zero noise exact at m={budget}"),
                means.iter().all(|&v| v <= 1e-20),
                format!("{means:?}"),
            ));
        } else {
            checks.push(Check::new(
                &format!("hadamard lowest at m={budget}"),
                means[0] < means[1] && means[0] < means[2],
                format!("hadamard={:.4e} loo={:.4e} random={:.4e}", means[0], means[1], means[2]),
            ));
        }
    }
    let mut chart = Chart::new(&format!("MSE vs pulls (n={n}, k={k})"), "total pulls", "mean MSE").log_x().log_y();
    for (method, pts) in METHODS.iter().zip(series) {
        chart = chart.with_series(Series::new(method.name(), pts));
    }
    Ok(PresetOutput {
        name: "mse_study",
        tables: vec![("mse_study.csv".into(), summary), ("mse_study_runs.csv".into(), runs)],
        chart: Some(("mse_study.svg".into(), chart)),
        checks,
    })
}

// --------------------------------------------------------- condition_study

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionParams {
    pub n: usize,
    pub k: usize,
    /// Number of random designs.
    pub designs: usize,
    pub inner_reps: usize,
    pub m: u64,
    pub seed: u64,
}

impl ConditionParams {
    pub fn desk() -> Self {
        Self { n: 48, k: 4, designs: 200, inner_reps: 50, m: 16, seed: 0 }
    }

    pub fn paper() -> Self {
        Self { n: 144, k: 8, designs: 1000, inner_reps: 100, ..Self::desk() }
    }
}

/// Mean MSE of `design` over `reps` estimation runs on `instance`.
fn design_mse(
    instance: &BanditInstance,
    design: &SignDesign,
    m: u64,
    reps: usize,
    key: &[u64],
    seed: u64,
) -> Result<f64> {
    let arms: Vec<usize> = (0..instance.n()).collect();
    let mut total = 0.0;
    for i in 0..reps {
        let mut ids = key.to_vec();
        ids.push(i as u64);
        let mut rng = stream(seed, &ids);
        let (report, _) = run_estimator(instance, &mut rng, |o| est_with_design(&arms, m, &[], design, o))?;
        total += estimate_errors(instance, &report)?.0;
    }
    Ok(total / reps as f64)
}

/// Spearman correlation of `(κ, mse)` pairs, with at least two points.
pub fn condition_spearman(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::NoData);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    spearman(&x, &y)
}

pub fn condition_study(p: &ConditionParams, workers: usize) -> Result<PresetOutput> {
    check_reps(p.designs)?;
    check_reps(p.inner_reps)?;
    let mut rng = stream(p.seed, &[CONDITION_STUDY, 0]);
    let instance = make_instance(&InstanceKind::UniformGaussian { n: p.n, k: p.k }, &mut rng)?;
    info!("condition_study: n={} k={} designs={} inner={}", p.n, p.k, p.designs, p.inner_reps);

    let drawn = replicate(workers, p.designs, |r| {
        let mut rng = stream(p.seed, &[CONDITION_STUDY, 1, r as u64]);
        let design = SignDesign::random(p.k, &mut rng);
        match design.condition_number() {
            Ok(kappa) => {
                let v = design_mse(&instance, &design, p.m, p.inner_reps, &[CONDITION_STUDY, 2, r as u64], p.seed)?;
                Ok(Some((kappa, v)))
            }
            Err(Error::Singular) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let skipped = drawn.iter().filter(|d| d.is_none()).count();
    if skipped > 0 {
        warn!("condition_study: skipped {skipped} singular designs");
    }
    let mut table = Table::new(&["design", "kappa", "mse_mean"]);
    let mut points = Vec::new();
    for (r, d) in drawn.iter().enumerate() {
        if let Some((kappa, v)) = d {
            table.push(vec![cell(r), cell(kappa), cell(v)]);
            points.push((*kappa, *v));
        }
    }
    let rho = condition_spearman(&points)?;
    let mut checks = vec![Check::new("spearman >= 0.8", rho >= 0.8, format!("spearman={rho:.4}"))];

    let h = smallest_order(p.k)?;
    let mut chart = Chart::new("MSE vs condition number", "condition number", "mean MSE")
        .scatter()
        .log_x()
        .with_series(Series::new("random", points.clone()));
    if h.order() == 2 * p.k {
        let design = SignDesign::from_hadamard(&h)?;
        let kappa = design.condition_number()?;
        let v = design_mse(&instance, &design, p.m, p.inner_reps, &[CONDITION_STUDY, 3], p.seed)?;
        table.push(vec![cell("hadamard"), cell(kappa), cell(v)]);
        let min_random = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        checks.push(Check::new(
            "hadamard control",
            (kappa - 1.0).abs() < 1e-9 && v <= min_random,
            format!("kappa={kappa:.6} mse={v:.4e} best random={min_random:.4e}"),
        ));
        chart = chart.with_series(Series::new("hadamard", vec![(kappa, v)]));
    } else {
        info!("condition_study: no Hadamard matrix of order {}; control skipped", 2 * p.k);
    }
    let mut summary = Table::new(&["n", "k", "designs", "kept", "inner_reps", "m", "spearman"]);
    summary.push(vec![
        cell(p.n),
        cell(p.k),
        cell(p.designs),
        cell(points.len()),
        cell(p.inner_reps),
        cell(p.m),
        cell(rho),
    ]);
    Ok(PresetOutput {
        name: "condition_study",
        tables: vec![("condition_study.csv".into(), table), ("condition_study_summary.csv".into(), summary)],
        chart: Some(("condition_study.svg".into(), chart)),
        checks,
    })
}

// ------------------------------------------------------------ regret_study

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretParams {
    pub n: usize,
    /// The first entry is the one the checks apply to.
    pub k_values: Vec<usize>,
    pub reps: usize,
    pub horizon: u64,
    pub c_prime: f64,
    pub checkpoints: usize,
    pub seed: u64,
}

impl RegretParams {
    pub fn desk() -> Self {
        Self {
            n: 24,
            k_values: vec![2, 3, 4],
            reps: 30,
            horizon: 200_000,
            c_prime: csar::DEFAULT_C_PRIME,
            checkpoints: 25,
            seed: 0,
        }
    }

    pub fn paper() -> Self {
        Self { horizon: 5_000_000, ..Self::desk() }
    }
}

/// Cumulative pseudo-regret at `checkpoints` of pulling a uniformly random
/// k-subset every round.
pub fn uniform_baseline<R: Rng + ?Sized>(instance: &BanditInstance, checkpoints: &[u64], rng: &mut R) -> Vec<f64> {
    let (n, k) = (instance.n(), instance.k());
    let best = instance.optimal_mean();
    let horizon = checkpoints.iter().copied().max().unwrap_or(0);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    let mut regret = 0.0;
    for t in 1..=horizon {
        let s = rand::seq::index::sample(rng, n, k);
        regret += (best - s.iter().map(|i| instance.means()[i]).sum::<f64>()).max(0.0);
        while next.peek().is_some_and(|&&c| c == t) {
            out.push(regret);
            next.next();
        }
    }
    out
}

struct RegretRun {
    csar: Vec<f64>,
    uniform: Vec<f64>,
}

pub fn regret_study(p: &RegretParams, workers: usize) -> Result<PresetOutput> {
    check_reps(p.reps)?;
    if p.k_values.is_empty() {
        return Err(invalid("k_values must be non-empty"));
    }
    let checkpoints = log_checkpoints(100.min(p.horizon), p.horizon, p.checkpoints);
    let half_idx = checkpoints.iter().position(|&t| t == p.horizon / 2).expect("half horizon is a checkpoint");
    let mut curves = Table::new(&["k", "t", "method", "mean", "sd"]);
    let mut summary = Table::new(&[
        "n",
        "k",
        "reps",
        "horizon",
        "csar_mean",
        "csar_sd",
        "uniform_mean",
        "uniform_sd",
        "win_rate",
        "growth",
    ]);
    let mut chart = Chart::new(&format!("cumulative regret (n={})", p.n), "t", "pseudo-regret").log_x();
    let mut checks = Vec::new();
    for (ki, &k) in p.k_values.iter().enumerate() {
        info!("regret_study: n={} k={k} T={} reps={}", p.n, p.horizon, p.reps);
        let runs = replicate(workers, p.reps, |r| {
            let ids = |x: u64| [REGRET_STUDY, k as u64, r as u64, x];
            let instance = make_instance(&InstanceKind::UniformBernoulli { n: p.n, k }, &mut stream(p.seed, &ids(0)))?;
            let config = CsarConfig::horizon(EstimatorKind::Est2, p.horizon, p.c_prime, p.seed);
            let res = csar::run_with_rng(&config, &instance, &mut stream(p.seed, &ids(1)))?;
            let csar: Vec<f64> = checkpoints
                .iter()
                .map(|&t| res.regret_at(t).ok_or_else(|| invalid("untraced ledger")))
                .collect::<Result<_>>()?;
            let uniform = uniform_baseline(&instance, &checkpoints, &mut stream(p.seed, &ids(2)));
            Ok(RegretRun { csar, uniform })
        })?;
        let csar_at = |i: usize| -> Vec<f64> { runs.iter().map(|r| r.csar[i]).collect() };
        let uniform_at = |i: usize| -> Vec<f64> { runs.iter().map(|r| r.uniform[i]).collect() };
        let mut csar_curve = Vec::new();
        let mut uniform_curve = Vec::new();
        for (i, &t) in checkpoints.iter().enumerate() {
            let (c, u) = (mean_sd(&csar_at(i)), mean_sd(&uniform_at(i)));
            curves.push(vec![cell(k), cell(t), cell("csar"), cell(c.0), cell(c.1)]);
            curves.push(vec![cell(k), cell(t), cell("uniform"), cell(u.0), cell(u.1)]);
            csar_curve.push((t as f64, c.0));
            uniform_curve.push((t as f64, u.0));
        }
        let last = checkpoints.len() - 1;
        let (c_mean, c_sd) = mean_sd(&csar_at(last));
        let (u_mean, u_sd) = mean_sd(&uniform_at(last));
        let wins = runs.iter().filter(|r| r.csar[last] < r.uniform[last]).count();
        let win_rate = wins as f64 / p.reps as f64;
        let c_half = mean_sd(&csar_at(half_idx)).0;
        let growth = if c_half > 0.0 { (c_mean - c_half) / c_half } else { 0.0 };
        summary.push(vec![
            cell(p.n),
            cell(k),
            cell(p.reps),
            cell(p.horizon),
            cell(c_mean),
            cell(c_sd),
            cell(u_mean),
            cell(u_sd),
            cell(win_rate),
            cell(growth),
        ]);
        if ki == 0 {
            checks.push(Check::new(
                &format!("csar beats uniform (k={k})"),
                win_rate >= 0.95,
                format!("win rate {win_rate:.3}"),
            ));
            checks.push(Check::new(
                &format!("regret flattens (k={k})"),
                growth <= 0.2,
                format!("(R(T)-R(T/2))/R(T/2) = {growth:.4}"),
            ));
            chart = chart.with_series(Series::new(format!("uniform k={k}"), uniform_curve));
        }
        chart = chart.with_series(Series::new(format!("CSAR k={k}"), csar_curve));
    }
    Ok(PresetOutput {
        name: "regret_study",
        tables: vec![("regret_study.csv".into(), summary), ("regret_study_curves.csv".into(), curves)],
        chart: Some(("regret_study.svg".into(), chart)),
        checks,
    })
}

// ---------------------------------------------------------- sample_scaling

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub eps_values: Vec<f64>,
    pub reps: usize,
    pub estimator: EstimatorKind,
    pub seed: u64,
}

impl ScalingParams {
    pub fn desk() -> Self {
        Self {
            n: 12,
            k: 2,
            delta: 0.1,
            eps_values: vec![0.4, 0.2, 0.1],
            reps: 20,
            estimator: EstimatorKind::Est1,
            seed: 0,
        }
    }

    pub fn paper() -> Self {
        Self { eps_values: vec![0.4, 0.2, 0.1, 0.05], reps: 100, ..Self::desk() }
    }
}

pub fn sample_scaling(p: &ScalingParams, workers: usize) -> Result<PresetOutput> {
    check_reps(p.reps)?;
    let mut runs = Table::new(&["eps", "rep", "total_pulls", "phases", "success"]);
    let mut summary = Table::new(&["n", "k", "delta", "eps", "reps", "pulls_mean", "pulls_sd", "success_rate"]);
    let mut points = Vec::new();
    for (j, &eps) in p.eps_values.iter().enumerate() {
        info!("sample_scaling: eps={eps}");
        let instance =
            make_instance(&InstanceKind::BernoulliEpsilonK { n: p.n, k: p.k, eps }, &mut stream(p.seed, &[]))?;
        let config = CsarConfig::exact(p.estimator, p.delta, p.seed);
        let results: Vec<CsarResult> = replicate(workers, p.reps, |r| {
            csar::run_with_rng(&config, &instance, &mut stream(p.seed, &[SAMPLE_SCALING, j as u64, r as u64]))
        })?;
        for (r, res) in results.iter().enumerate() {
            runs.push(vec![cell(eps), cell(r), cell(res.total_pulls), cell(res.phases), cell(res.success)]);
        }
        let pulls: Vec<f64> = results.iter().map(|r| r.total_pulls as f64).collect();
        let (mean, sd) = mean_sd(&pulls);
        let success = results.iter().filter(|r| r.success).count() as f64 / p.reps as f64;
        summary.push(vec![
            cell(p.n),
            cell(p.k),
            cell(p.delta),
            cell(eps),
            cell(p.reps),
            cell(mean),
            cell(sd),
            cell(success),
        ]);
        points.push(((1.0 / eps).ln(), mean.ln()));
    }
    let slope = fit_slope(&points)?;
    let mut fit = Table::new(&["points", "slope"]);
    fit.push(vec![cell(points.len()), cell(slope)]);
    Ok(PresetOutput {
        name: "sample_scaling",
        tables: vec![
            ("sample_scaling.csv".into(), summary),
            ("sample_scaling_runs.csv".into(), runs),
            ("sample_scaling_fit.csv".into(), fit),
        ],
        chart: None,
        checks: vec![Check::new(
            "log-log slope in [1.6, 2.4]",
            (1.6..=2.4).contains(&slope),
            format!("slope={slope:.4}"),
        )],
    })
}

// -------------------------------------------------------- regret_tightness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessParams {
    pub n: usize,
    pub k: usize,
    pub plus: f64,
    pub minus: f64,
    pub delta: f64,
    pub reps: usize,
    pub seed: u64,
}

impl TightnessParams {
    pub fn desk() -> Self {
        Self { n: 16, k: 4, plus: 1.0, minus: 0.1, delta: 0.1, reps: 30, seed: 0 }
    }

    pub fn paper() -> Self {
        Self { reps: 100, ..Self::desk() }
    }
}

pub fn regret_tightness(p: &TightnessParams, workers: usize) -> Result<PresetOutput> {
    check_reps(p.reps)?;
    let kind = InstanceKind::TwoGap { n: p.n, k: p.k, plus: p.plus, minus: p.minus };
    let instance = make_instance(&kind, &mut stream(p.seed, &[]))?;
    let estimators = [EstimatorKind::Est1, EstimatorKind::Est2];
    let results = replicate(workers, p.reps, |r| {
        let mut out = Vec::with_capacity(2);
        for (e, &est) in estimators.iter().enumerate() {
            let config = CsarConfig::exact(est, p.delta, p.seed);
            let mut rng = stream(p.seed, &[REGRET_TIGHTNESS, r as u64, e as u64]);
            out.push(csar::run_with_rng(&config, &instance, &mut rng)?);
        }
        Ok(out)
    })?;
    let mut runs = Table::new(&["rep", "estimator", "regret", "pulls", "phases", "success"]);
    let mut summary = Table::new(&[
        "n",
        "k",
        "plus",
        "minus",
        "estimator",
        "reps",
        "regret_mean",
        "regret_sd",
        "pulls_mean",
        "success_rate",
    ]);
    let mut means = [0.0; 2];
    for (e, est) in ["est1", "est2"].iter().enumerate() {
        for (r, res) in results.iter().enumerate() {
            let x = &res[e];
            runs.push(vec![cell(r), cell(est), cell(x.regret), cell(x.total_pulls), cell(x.phases), cell(x.success)]);
        }
        let regrets: Vec<f64> = results.iter().map(|res| res[e].regret).collect();
        let pulls: Vec<f64> = results.iter().map(|res| res[e].total_pulls as f64).collect();
        let (mean, sd) = mean_sd(&regrets);
        means[e] = mean;
        let success = results.iter().filter(|res| res[e].success).count() as f64 / p.reps as f64;
        summary.push(vec![
            cell(p.n),
            cell(p.k),
            cell(p.plus),
            cell(p.minus),
            cell(est),
            cell(p.reps),
            cell(mean),
            cell(sd),
            cell(mean_sd(&pulls).0),
            cell(success),
        ]);
    }
    Ok(PresetOutput {
        name: "regret_tightness",
        tables: vec![("regret_tightness.csv".into(), summary), ("regret_tightness_runs.csv".into(), runs)],
        chart: None,
        checks: vec![Check::new(
            "est2 mean regret below est1",
            means[1] < means[0],
            format!("est1={:.4e} est2={:.4e}", means[0], means[1]),
        )],
    })
}
