//! Combinatorial successive accepts and rejects.
//!
//! Each phase `t` estimates the surviving arms to accuracy `ε_t = 2^{−t}` with
//! confidence `δ_t = (6/π²)·δ/t²`, then accepts arms that beat the
//! `(k+1)`-th order statistic by more than `2ε_t` and rejects arms that trail
//! the `k`-th by more than `2ε_t`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bandit::{gap_profile, BanditInstance, Oracle, RegretLedger};
use crate::error::{invalid, Error, Result};
use crate::estimators::{est1, est2, EstimateReport, EstimationRequest};
use crate::hadamard::smallest_order;
use crate::rng::SimRng;

/// Exact-PAC runs abort after this many phases (`ε_t < 1e-18`).
pub const MAX_PHASES: usize = 60;

/// Horizon-mode exploration constant. Phase `t` costs at most
/// `4n·4ᵗ·ln(2n/δ_t)` pulls and exploration stops at the first `ε_t ≤ ε`, so
/// it fits in `(64/3)·n·ln(n/δ)/ε²` pulls up to the `ln t²` term.
pub const DEFAULT_C_PRIME: f64 = 64.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Run until exactly k arms remain.
    ExactPac,
    /// Stop once `ε_t ≤ ε/(2k)` and return the current top k.
    EpsPac,
    /// Explore with `δ = 1/(kT)` until `ε_t ≤ ε` for a horizon-derived `ε`,
    /// then commit to the current top k for the rest of the horizon.
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Est1,
    Est2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsarConfig {
    pub mode: Mode,
    pub estimator: EstimatorKind,
    pub delta: f64,
    /// Target accuracy; required for [`Mode::EpsPac`].
    pub eps: Option<f64>,
    /// Horizon `T`; required for [`Mode::Horizon`].
    pub horizon: Option<u64>,
    /// Exploration constant `C′` of the horizon mode.
    pub c_prime: f64,
    pub seed: u64,
}

impl CsarConfig {
    pub fn exact(estimator: EstimatorKind, delta: f64, seed: u64) -> Self {
        Self { mode: Mode::ExactPac, estimator, delta, eps: None, horizon: None, c_prime: DEFAULT_C_PRIME, seed }
    }

    pub fn eps_pac(estimator: EstimatorKind, delta: f64, eps: f64, seed: u64) -> Self {
        Self { mode: Mode::EpsPac, eps: Some(eps), ..Self::exact(estimator, delta, seed) }
    }

    pub fn horizon(estimator: EstimatorKind, horizon: u64, c_prime: f64, seed: u64) -> Self {
        Self {
            mode: Mode::Horizon,
            horizon: Some(horizon),
            c_prime,
            // Overwritten from the horizon in `run`.
            ..Self::exact(estimator, 0.5, seed)
        }
    }

    fn validate(&self, instance: &BanditInstance) -> Result<()> {
        match self.mode {
            Mode::ExactPac | Mode::EpsPac => {
                if !(self.delta > 0.0 && self.delta < 1.0) {
                    return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
                }
                if self.mode == Mode::EpsPac && !self.eps.is_some_and(|e| e > 0.0) {
                    return Err(invalid("eps-PAC mode needs eps > 0"));
                }
            }
            Mode::Horizon => {
                let t = self.horizon.ok_or_else(|| invalid("horizon mode needs a horizon"))?;
                if t <= instance.n() as u64 {
                    return Err(invalid(format!("horizon {t} must exceed n = {}", instance.n())));
                }
                if !(self.c_prime > 0.0) {
                    return Err(invalid("c_prime must be positive"));
                }
            }
        }
        check_feasible(self.estimator, instance.n(), instance.k())
    }
}

/// Every block the estimator may need can be filled with distinct arms:
/// `n ≥ order(k)`, and for EST2 also `n − a ≥ order(k − a)` for every number
/// `a < k` of accepted arms (pinned arms cannot pad).
pub fn check_feasible(estimator: EstimatorKind, n: usize, k: usize) -> Result<()> {
    let need = |kk: usize, avail: usize| -> Result<()> {
        let order = smallest_order(kk)?.order();
        if order > avail {
            return Err(Error::PaddingExhausted { needed: order - avail });
        }
        Ok(())
    };
    need(k, n)?;
    if estimator == EstimatorKind::Est2 {
        for a in 1..k {
            need(k - a, n - a)?;
        }
    }
    Ok(())
}

/// `(ε_t, δ_t)` for phase `t ≥ 1`.
pub fn phase_schedule(t: usize, delta: f64) -> (f64, f64) {
    assert!(t >= 1, "phases start at 1");
    let delta_1 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI) * delta;
    (0.5f64.powi(t as i32), delta_1 / (t * t) as f64)
}

/// Phase by which a zero-noise run must have decided an arm with gap `Δ_i`:
/// `⌈log₂(4/Δ_i)⌉`.
pub fn per_arm_phase_bound(gap: f64) -> Result<usize> {
    if !(gap > 0.0) {
        return Err(Error::Unbounded);
    }
    Ok((4.0 / gap).log2().ceil().max(0.0) as usize)
}

/// `(ε, δ)` used by the horizon mode: `δ = 1/(kT)`,
/// `ε = √(C′·n·ln(n·k·T)/T)`.
pub fn horizon_parameters(n: usize, k: usize, horizon: u64, c_prime: f64) -> (f64, f64) {
    let t = horizon as f64;
    let delta = 1.0 / (k as f64 * t);
    let eps = (c_prime * n as f64 * (n as f64 * k as f64 * t).ln() / t).sqrt();
    (eps, delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderStats {
    /// Value of the k-th statistic (`+∞` if it falls on an accepted arm).
    pub kth: f64,
    /// Value of the (k+1)-th statistic.
    pub next: f64,
    /// Accepted arms (ascending index) followed by surviving arms by estimate.
    pub ranking: Vec<usize>,
}

/// Order statistics over `surviving ∪ accepted`, with accepted arms ranked
/// above every surviving arm.
pub fn order_stats(
    estimates: &impl Fn(usize) -> f64,
    surviving: &[usize],
    accepted: &[usize],
    k: usize,
) -> Result<OrderStats> {
    if surviving.len() + accepted.len() <= k {
        return Err(invalid("order statistics need more than k arms"));
    }
    let mut acc = accepted.to_vec();
    acc.sort_unstable();
    let mut rest = surviving.to_vec();
    rest.sort_by(|&a, &b| estimates(b).total_cmp(&estimates(a)).then(a.cmp(&b)));
    let value = |rank: usize| -> f64 {
        // 1-based rank within the combined ranking.
        if rank <= acc.len() {
            f64::INFINITY
        } else {
            estimates(rest[rank - acc.len() - 1])
        }
    };
    let kth = value(k);
    let next = value(k + 1);
    acc.extend(rest);
    Ok(OrderStats { kth, next, ranking: acc })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRecord {
    pub phase: usize,
    pub eps_t: f64,
    pub delta_t: f64,
    pub n_surviving: usize,
    pub n_accepted: usize,
    pub pulls: u64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsarResult {
    /// Returned k-subset, ascending.
    pub subset: Vec<usize>,
    pub phases: usize,
    pub total_pulls: u64,
    pub regret: f64,
    pub success: bool,
    /// Phase in which each arm was accepted, rejected, or returned.
    pub termination_phase: Vec<Option<usize>>,
    pub records: Vec<PhaseRecord>,
    /// Pulls spent before exploration stopped (horizon mode).
    pub exploration_pulls: u64,
    pub ledger: RegretLedger,
}

impl CsarResult {
    pub fn regret_at(&self, t: u64) -> Option<f64> {
        self.ledger.regret_at(t)
    }
}

/// Arm sets of a run in progress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsarState {
    pub phase: usize,
    pub surviving: Vec<usize>,
    pub accepted: Vec<usize>,
    pub rejected: Vec<usize>,
    pub top: Vec<usize>,
}

impl CsarState {
    fn new(n: usize) -> Self {
        Self { phase: 1, surviving: (0..n).collect(), accepted: Vec::new(), rejected: Vec::new(), top: Vec::new() }
    }

    /// Pairwise disjoint and covering `0..n`.
    pub fn is_partition(&self, n: usize) -> bool {
        let all: BTreeSet<usize> = self.surviving.iter().chain(&self.accepted).chain(&self.rejected).copied().collect();
        all.len() == n
            && self.surviving.len() + self.accepted.len() + self.rejected.len() == n
            && all.iter().all(|&a| a < n)
    }
}

/// Runs CSAR on `instance` with a stream seeded from `config.seed`.
pub fn run(config: &CsarConfig, instance: &BanditInstance) -> Result<CsarResult> {
    let mut rng = crate::rng::stream(config.seed, &[]);
    run_with_rng(config, instance, &mut rng)
}

pub fn run_with_rng(config: &CsarConfig, instance: &BanditInstance, rng: &mut SimRng) -> Result<CsarResult> {
    config.validate(instance)?;
    let n = instance.n();
    let k = instance.k();
    // `stop_at`: exploration ends after the first phase with `ε_t ≤ stop_at`.
    let (delta, stop_at, budget) = match config.mode {
        Mode::ExactPac => (config.delta, None, None),
        Mode::EpsPac => (config.delta, config.eps.map(|e| e / (2.0 * k as f64)), None),
        Mode::Horizon => {
            let t = config.horizon.expect("validated");
            let (eps, delta) = horizon_parameters(n, k, t, config.c_prime);
            (delta, Some(eps), Some(t))
        }
    };
    let mut ledger =
        if config.mode == Mode::Horizon { RegretLedger::traced(instance) } else { RegretLedger::new(instance) };
    let mut state = CsarState::new(n);
    let mut termination = vec![None; n];
    let mut records = Vec::new();
    // Top-k by the latest ranking; used when exploration stops early.
    let mut latest_ranking: Vec<usize> = (0..n).collect();

    loop {
        if state.surviving.len() + state.accepted.len() <= k {
            break;
        }
        if state.phase > MAX_PHASES {
            return Err(Error::NonTermination(MAX_PHASES));
        }
        let t = state.phase;
        let (eps_t, delta_t) = phase_schedule(t, delta);
        let report = {
            let mut oracle = Oracle::new(instance, rng, &mut ledger);
            oracle.budget = budget;
            match estimate_phase(config.estimator, &state, k, eps_t, delta_t, &mut oracle) {
                Ok(r) => r,
                Err(Error::BudgetExhausted(_)) => break,
                Err(e) => return Err(e),
            }
        };
        let est = |a: usize| report.estimates[&a];
        let stats = order_stats(&est, &state.surviving, &state.accepted, k)?;

        let newly_accepted: Vec<usize> =
            state.surviving.iter().copied().filter(|&a| est(a) - stats.next > 2.0 * eps_t).collect();
        let newly_rejected: Vec<usize> =
            state.surviving.iter().copied().filter(|&a| stats.kth - est(a) > 2.0 * eps_t).collect();
        for &a in newly_accepted.iter().chain(&newly_rejected) {
            termination[a] = Some(t);
        }
        state.accepted.extend(&newly_accepted);
        state.accepted.sort_unstable();
        state.rejected.extend(&newly_rejected);
        state.surviving.retain(|a| !newly_accepted.contains(a) && !newly_rejected.contains(a));
        if state.accepted.len() == k {
            // The k-th statistic is now an accepted arm: everything left trails it.
            for &a in &state.surviving {
                termination[a] = Some(t);
            }
            state.rejected.append(&mut state.surviving);
        }
        state.rejected.sort_unstable();
        debug_assert!(state.is_partition(n));
        debug_assert!(state.accepted.len() <= k);

        let ranking: Vec<usize> = state
            .accepted
            .iter()
            .copied()
            .chain(stats.ranking.iter().copied().filter(|a| state.surviving.contains(a)))
            .collect();
        state.top = ranking.iter().copied().take(2 * k).collect();
        latest_ranking = ranking;

        records.push(PhaseRecord {
            phase: t,
            eps_t,
            delta_t,
            n_surviving: state.surviving.len(),
            n_accepted: state.accepted.len(),
            pulls: ledger.pulls(),
            cum_regret: ledger.regret(),
        });

        if let Some(limit) = stop_at {
            if eps_t <= limit && state.surviving.len() + state.accepted.len() > k {
                break;
            }
        }
        state.phase += 1;
    }

    let phases = records.len();
    let mut subset: Vec<usize> = if state.surviving.len() + state.accepted.len() == k {
        state.accepted.iter().chain(&state.surviving).copied().collect()
    } else {
        latest_ranking.iter().copied().take(k).collect()
    };
    subset.sort_unstable();
    for &a in &subset {
        termination[a].get_or_insert(phases.max(1));
    }
    let exploration_pulls = ledger.pulls();
    if let (Some(t), Mode::Horizon) = (budget, config.mode) {
        let left = t.saturating_sub(ledger.pulls());
        if left > 0 {
            ledger.record_pulls(instance, &subset, left)?;
        }
    }
    Ok(CsarResult {
        success: instance.is_optimal(&subset),
        subset,
        phases,
        total_pulls: ledger.pulls(),
        regret: ledger.regret(),
        termination_phase: termination,
        records,
        exploration_pulls,
        ledger,
    })
}

fn estimate_phase(
    kind: EstimatorKind,
    state: &CsarState,
    k: usize,
    eps_t: f64,
    delta_t: f64,
    oracle: &mut Oracle<'_, SimRng>,
) -> Result<EstimateReport> {
    let req = EstimationRequest::new(state.surviving.clone(), k, eps_t, delta_t);
    match kind {
        EstimatorKind::Est1 => {
            let padding = state.rejected.iter().chain(&state.accepted).copied().collect();
            est1(&req.with_padding(padding), oracle)
        }
        EstimatorKind::Est2 => {
            let req = req.with_padding(state.rejected.clone());
            let req = if state.accepted.is_empty() {
                req
            } else {
                let mut top = state.top.clone();
                for &a in &state.accepted {
                    if !top.contains(&a) {
                        top.push(a);
                    }
                }
                req.with_accepted(state.accepted.clone(), top)
            };
            est2(&req, oracle)
        }
    }
}

/// Gap-based check of a zero-noise run: every arm with a positive gap was
/// decided no later than [`per_arm_phase_bound`].
pub fn phases_within_bound(instance: &BanditInstance, result: &CsarResult) -> bool {
    let gaps = gap_profile(instance).gaps;
    gaps.iter().zip(&result.termination_phase).all(|(&g, t)| match (per_arm_phase_bound(g), t) {
        (Ok(bound), Some(t)) => *t <= bound,
        (Ok(_), None) => false,
        (Err(_), _) => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::Noise;

    #[test]
    fn schedule() {
        let d = 0.1;
        let c = 6.0 / std::f64::consts::PI.powi(2);
        assert_eq!(phase_schedule(1, d), (0.5, c * d));
        let (e3, d3) = phase_schedule(3, d);
        assert_eq!(e3, 0.125);
        assert!((d3 - c * d / 9.0).abs() < 1e-18);
        let total: f64 = (1..200_000).map(|t| phase_schedule(t, d).1).sum();
        assert!((total - d).abs() < 1e-6);
    }

    #[test]
    fn phase_bound() {
        assert_eq!(per_arm_phase_bound(1.0).unwrap(), 2);
        assert_eq!(per_arm_phase_bound(0.25).unwrap(), 4);
        assert!(matches!(per_arm_phase_bound(0.0), Err(Error::Unbounded)));
    }

    #[test]
    fn order_stat_examples() {
        let v = [0.9, 0.7, 0.5, 0.2];
        let s = order_stats(&|a| v[a], &[0, 1, 2, 3], &[], 2).unwrap();
        assert_eq!((s.kth, s.next), (0.7, 0.5));
        assert_eq!(s.ranking, vec![0, 1, 2, 3]);

        let v = [f64::NAN, 0.7, 0.5, 0.2];
        let s = order_stats(&|a| v[a], &[1, 2, 3], &[0], 2).unwrap();
        assert_eq!((s.kth, s.next), (0.7, 0.5));
        assert_eq!(s.ranking, vec![0, 1, 2, 3]);

        let v = [0.4; 4];
        let s = order_stats(&|a| v[a], &[0, 1, 2, 3], &[], 2).unwrap();
        assert!(!(v[0] - s.next > 0.0) && !(s.kth - v[0] > 0.0));
        assert_eq!(s.ranking, vec![0, 1, 2, 3]);

        assert!(order_stats(&|_| 0.0, &[0, 1], &[], 2).is_err());
    }

    #[test]
    fn zero_noise_hand_simulation() {
        // Phase 2 (2ε = 0.5): arms 3 and 4 trail 0.9 by 0.6 and 0.8 → rejected.
        // Phase 3 (2ε = 0.25): arm 1 leads 0.5 by 0.4 → accepted; arm 2 rejected.
        let b = BanditInstance::new(1, vec![0.9, 0.5, 0.3, 0.1], Noise::Zero).unwrap();
        let r = run(&CsarConfig::exact(EstimatorKind::Est1, 0.1, 0), &b).unwrap();
        assert_eq!(r.subset, vec![0]);
        assert!(r.success);
        assert_eq!(r.phases, 3);
        assert_eq!(r.termination_phase, vec![Some(3), Some(3), Some(2), Some(2)]);
        assert!(phases_within_bound(&b, &r));
    }

    #[test]
    fn zero_gap_needs_eps_mode() {
        let b = BanditInstance::new(2, vec![0.3; 6], Noise::Zero).unwrap();
        assert!(matches!(
            run(&CsarConfig::exact(EstimatorKind::Est1, 0.1, 0), &b),
            Err(Error::NonTermination(MAX_PHASES))
        ));
        let r = run(&CsarConfig::eps_pac(EstimatorKind::Est1, 0.1, 0.4, 0), &b).unwrap();
        // ε_t ≤ 0.4/4 first at t = 4.
        assert_eq!(r.phases, 4);
        assert_eq!(r.subset.len(), 2);
        assert!(r.success);
        assert_eq!(r.regret, 0.0);
    }

    #[test]
    fn est2_zero_noise_terminates_correctly() {
        let means = vec![0.1, 0.9, 0.35, 0.8, 0.0, 0.5, 0.6, 0.2, 0.05, 0.15, 0.25, 0.3];
        let b = BanditInstance::new(3, means, Noise::Zero).unwrap();
        for est in [EstimatorKind::Est1, EstimatorKind::Est2] {
            let r = run(&CsarConfig::exact(est, 0.1, 3), &b).unwrap();
            assert_eq!(r.subset, vec![1, 3, 6], "{est:?}");
            assert!(phases_within_bound(&b, &r));
            assert_eq!(r.total_pulls, r.records.last().unwrap().pulls);
        }
    }

    #[test]
    fn horizon_mode_fills_horizon() {
        let b = BanditInstance::new(2, vec![0.9, 0.8, 0.1, 0.2, 0.0, 0.3], Noise::Bernoulli).unwrap();
        let r = run(&CsarConfig::horizon(EstimatorKind::Est2, 400_000, 1.0, 1), &b).unwrap();
        assert_eq!(r.total_pulls, 400_000);
        assert!(r.exploration_pulls <= 400_000);
        let mut last = 0.0;
        for t in [1000, 10_000, 100_000, 400_000] {
            let v = r.regret_at(t).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert!((r.regret_at(400_000).unwrap() - r.regret).abs() < 1e-9);
    }

    #[test]
    fn feasibility() {
        assert!(check_feasible(EstimatorKind::Est1, 8, 4).is_ok());
        // One accepted arm leaves k′ = 3, which needs 12 arms; only 7 remain.
        assert!(matches!(check_feasible(EstimatorKind::Est2, 8, 4), Err(Error::PaddingExhausted { needed: 5 })));
        assert!(check_feasible(EstimatorKind::Est2, 16, 4).is_ok());
        assert!(check_feasible(EstimatorKind::Est1, 11, 3).is_err());
        let b = BanditInstance::new(4, vec![0.0; 8], Noise::Zero).unwrap();
        assert!(run(&CsarConfig::exact(EstimatorKind::Est2, 0.1, 0), &b).is_err());
    }

    #[test]
    fn config_validation() {
        let b = BanditInstance::new(1, vec![0.0; 4], Noise::Zero).unwrap();
        assert!(run(&CsarConfig::exact(EstimatorKind::Est1, 1.0, 0), &b).is_err());
        assert!(run(&CsarConfig::horizon(EstimatorKind::Est1, 4, 1.0, 0), &b).is_err());
        let mut c = CsarConfig::eps_pac(EstimatorKind::Est1, 0.1, 0.1, 0);
        c.eps = None;
        assert!(run(&c, &b).is_err());
    }
}
