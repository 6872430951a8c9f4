//! Per-arm mean estimation from summed-reward observations.
//!
//! [`est1`] and [`est2`] recover arm means from sign-partitioned subset pulls
//! laid out by a Hadamard matrix: every row yields a `±` pair of subsets, the
//! side means give `Ẑ ≈ Hθ`, and `θ̂ = HᵀẐ / N`. [`est2`] additionally pins a
//! set of accepted arms into every pulled subset. [`est_loo`] and
//! [`est_random_matrix`] are the leave-one-out and random-sign baselines.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bandit::Oracle;
use crate::error::{invalid, Error, Result};
use crate::hadamard::{row_partitions, smallest_order, split_into_k_groups, HadamardMatrix};
use crate::linalg::DenseMatrix;

/// Random sign designs are redrawn at most this many times.
pub const MAX_DESIGN_DRAWS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationRequest {
    /// Arms to estimate (`𝓝`).
    pub arms: Vec<usize>,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    /// Arms pinned into every subset (`𝓐`); ignored by [`est1`].
    pub accepted: Vec<usize>,
    /// Current top-`2k` arms (`𝓣`); ignored by [`est1`].
    pub top: Vec<usize>,
    /// Ordered arms that may fill the last block. Must be disjoint from `arms`.
    pub padding: Vec<usize>,
}

impl EstimationRequest {
    pub fn new(arms: Vec<usize>, k: usize, eps: f64, delta: f64) -> Self {
        Self { arms, k, eps, delta, accepted: Vec::new(), top: Vec::new(), padding: Vec::new() }
    }

    pub fn with_padding(mut self, padding: Vec<usize>) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_accepted(mut self, accepted: Vec<usize>, top: Vec<usize>) -> Self {
        self.accepted = accepted;
        self.top = top;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimateReport {
    pub estimates: BTreeMap<usize, f64>,
    /// Number of pulls each arm took part in (including padding and pinned arms).
    pub participation: BTreeMap<usize, u64>,
    pub total_pulls: u64,
    /// Per-subset sample count of the main pass.
    pub m: u64,
    pub blocks: usize,
}

impl EstimateReport {
    pub fn estimate_vec(&self, arms: &[usize]) -> Vec<f64> {
        arms.iter().map(|a| self.estimates[a]).collect()
    }

    fn absorb(&mut self, other: EstimateReport) {
        for (arm, v) in other.estimates {
            self.estimates.entry(arm).or_insert(v);
        }
        for (arm, c) in other.participation {
            let e = self.participation.entry(arm).or_default();
            *e = e.saturating_add(c);
        }
        self.total_pulls = self.total_pulls.saturating_add(other.total_pulls);
        self.blocks += other.blocks;
    }
}

fn check_accuracy(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Pulls per subset for the unpinned estimator: `⌈(2/ε²)·ln(2·n_est/δ)⌉`.
pub fn sample_count(eps: f64, delta: f64, n_est: usize) -> Result<u64> {
    check_accuracy(eps, delta)?;
    if n_est == 0 {
        return Err(invalid("n_est must be positive"));
    }
    Ok(raw_count(eps, delta, n_est, 1.0))
}

/// Pulls per subset with `k − k′` pinned arms: the unpinned count inflated by
/// `2k/k′`. With nothing pinned (`k′ = k`) it equals [`sample_count`].
pub fn sample_count_pinned(eps: f64, delta: f64, n_est: usize, k: usize, k_prime: usize) -> Result<u64> {
    if k_prime == 0 || k_prime > k {
        return Err(invalid(format!("need 1 <= k' <= k, got k={k}, k'={k_prime}")));
    }
    if k_prime == k {
        return sample_count(eps, delta, n_est);
    }
    check_accuracy(eps, delta)?;
    if n_est == 0 {
        return Err(invalid("n_est must be positive"));
    }
    Ok(raw_count(eps, delta, n_est, 2.0 * k as f64 / k_prime as f64))
}

fn raw_count(eps: f64, delta: f64, n_est: usize, inflation: f64) -> u64 {
    let m = inflation * (2.0 / (eps * eps)) * (2.0 * n_est as f64 / delta).ln();
    // Guard against 64.0000000001-style rounding before the ceiling.
    let m = (m * (1.0 - 1e-12)).ceil();
    (m as u64).max(1)
}

/// A block of distinct arms; `keep[j]` is false for padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Block {
    pub arms: Vec<usize>,
    pub keep: Vec<bool>,
}

fn sorted_distinct(arms: &[usize]) -> Result<Vec<usize>> {
    let set: BTreeSet<usize> = arms.iter().copied().collect();
    if set.len() != arms.len() {
        return Err(invalid("arm list contains duplicates"));
    }
    Ok(set.into_iter().collect())
}

/// Ascending arms chunked into blocks of `size`; a short last block is filled
/// from the other arms (earlier blocks first), then from `pool`.
pub(crate) fn plan_blocks(arms: &[usize], size: usize, pool: &[usize]) -> Result<Vec<Block>> {
    let sorted = sorted_distinct(arms)?;
    if sorted.is_empty() {
        return Err(invalid("no arms to estimate"));
    }
    let mut blocks: Vec<Block> =
        sorted.chunks(size).map(|c| Block { arms: c.to_vec(), keep: vec![true; c.len()] }).collect();
    let last = blocks.last_mut().expect("at least one block");
    let needed = size - last.arms.len();
    if needed > 0 {
        let in_block: BTreeSet<usize> = last.arms.iter().copied().collect();
        let mut used = in_block.clone();
        let fill: Vec<usize> = sorted.iter().chain(pool).copied().filter(|a| used.insert(*a)).take(needed).collect();
        if fill.len() < needed {
            return Err(Error::PaddingExhausted { needed: needed - fill.len() });
        }
        last.keep.extend(std::iter::repeat_n(false, fill.len()));
        last.arms.extend(fill);
    }
    Ok(blocks)
}

struct Tally {
    participation: BTreeMap<usize, u64>,
    pulls: u64,
}

impl Tally {
    fn new() -> Self {
        Self { participation: BTreeMap::new(), pulls: 0 }
    }

    fn sample<R: Rng + ?Sized>(&mut self, oracle: &mut Oracle<'_, R>, subset: &[usize], m: u64) -> Result<f64> {
        let mean = oracle.sample_mean(subset, m)?;
        for &a in subset {
            let e = self.participation.entry(a).or_default();
            *e = e.saturating_add(m);
        }
        self.pulls = self.pulls.saturating_add(m);
        Ok(mean)
    }
}

/// One Hadamard pass over `blocks`: each side of every row partition is cut
/// into groups of `group` columns, each group is pulled `m` times together
/// with the pinned arms, and the block is recovered as `HᵀẐ / N`.
fn hadamard_pass<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_, R>,
    blocks: &[Block],
    h: &HadamardMatrix,
    group: usize,
    pinned: &[usize],
    pinned_sum: f64,
    m: u64,
) -> Result<EstimateReport> {
    let order = h.order();
    let parts = row_partitions(h);
    let groups_per_side = (order / 2 / group) as f64;
    let mut tally = Tally::new();
    let mut estimates = BTreeMap::new();
    for block in blocks {
        let mut z = vec![0.0; order];
        for part in &parts {
            let (pos, neg) = split_into_k_groups(part, group)?;
            let mut side = |groups: &[Vec<usize>], tally: &mut Tally| -> Result<f64> {
                let mut total = 0.0;
                for g in groups {
                    let subset: Vec<usize> = g.iter().map(|&c| block.arms[c]).chain(pinned.iter().copied()).collect();
                    total += tally.sample(oracle, &subset, m)?;
                }
                Ok(total)
            };
            let neg_mean = side(&neg, &mut tally)?;
            let pos_mean = side(&pos, &mut tally)?;
            z[part.row] = if part.row == 0 {
                pos_mean + neg_mean - 2.0 * groups_per_side * pinned_sum
            } else {
                pos_mean - neg_mean
            };
        }
        for (j, (&arm, &keep)) in block.arms.iter().zip(&block.keep).enumerate() {
            if keep {
                let dot: f64 = (0..order).map(|i| h.get(i, j) as f64 * z[i]).sum();
                estimates.insert(arm, dot / order as f64);
            }
        }
    }
    Ok(EstimateReport {
        estimates,
        participation: tally.participation,
        total_pulls: tally.pulls,
        m,
        blocks: blocks.len(),
    })
}

fn check_request<R: Rng + ?Sized>(req: &EstimationRequest, oracle: &Oracle<'_, R>) -> Result<()> {
    if req.arms.is_empty() {
        return Err(invalid("no arms to estimate"));
    }
    if req.k != oracle.instance.k() {
        return Err(invalid(format!("request k={} but instance k={}", req.k, oracle.instance.k())));
    }
    let n = oracle.instance.n();
    if let Some(&arm) = req.arms.iter().chain(&req.padding).chain(&req.accepted).chain(&req.top).find(|&&a| a >= n) {
        return Err(Error::InvalidArm { arm, n });
    }
    let arms: BTreeSet<usize> = req.arms.iter().copied().collect();
    if req.padding.iter().any(|a| arms.contains(a)) {
        return Err(invalid("padding pool overlaps the estimated arms"));
    }
    Ok(())
}

/// Hadamard group estimator without pinned arms.
pub fn est1<R: Rng + ?Sized>(req: &EstimationRequest, oracle: &mut Oracle<'_, R>) -> Result<EstimateReport> {
    check_request(req, oracle)?;
    let h = smallest_order(req.k)?;
    let m = sample_count(req.eps, req.delta, req.arms.len())?;
    let blocks = plan_blocks(&req.arms, h.order(), &req.padding)?;
    hadamard_pass(oracle, &blocks, &h, req.k, &[], 0.0, m)
}

/// [`est1`] with the per-subset sample count fixed to `m`.
pub fn est1_with_m<R: Rng + ?Sized>(
    arms: &[usize],
    k: usize,
    m: u64,
    padding: &[usize],
    oracle: &mut Oracle<'_, R>,
) -> Result<EstimateReport> {
    check_request(&EstimationRequest::new(arms.to_vec(), k, 1.0, 0.5).with_padding(padding.to_vec()), oracle)?;
    if m == 0 {
        return Err(invalid("m must be positive"));
    }
    let h = smallest_order(k)?;
    let blocks = plan_blocks(arms, h.order(), padding)?;
    hadamard_pass(oracle, &blocks, &h, k, &[], 0.0, m)
}

/// Hadamard group estimator with the accepted arms pinned into every subset.
///
/// The pinned arms' means are first refreshed by [`est1`] over the top set;
/// that estimate is subtracted from the all-ones row. Arms in both `𝓣` and
/// `𝓝` report their estimate from the main pass.
pub fn est2<R: Rng + ?Sized>(req: &EstimationRequest, oracle: &mut Oracle<'_, R>) -> Result<EstimateReport> {
    if req.accepted.is_empty() {
        return est1(req, oracle);
    }
    check_request(req, oracle)?;
    let k_prime = req.k.checked_sub(req.accepted.len()).filter(|&kp| kp > 0);
    let Some(k_prime) = k_prime else {
        return Err(Error::AllAccepted(req.k));
    };
    let accepted = sorted_distinct(&req.accepted)?;
    let top: BTreeSet<usize> = req.top.iter().copied().collect();
    if accepted.iter().any(|a| !top.contains(a)) {
        return Err(invalid("accepted arms must belong to the top set"));
    }
    let arms: BTreeSet<usize> = req.arms.iter().copied().collect();
    if accepted.iter().any(|a| arms.contains(a) || req.padding.contains(a)) {
        return Err(invalid("accepted arms overlap the estimated arms or the padding pool"));
    }

    let top_req = EstimationRequest {
        arms: top.iter().copied().collect(),
        k: req.k,
        eps: req.eps,
        delta: req.delta,
        accepted: Vec::new(),
        top: Vec::new(),
        padding: arms
            .iter()
            .copied()
            .filter(|a| !top.contains(a))
            .chain(req.padding.iter().copied().filter(|a| !top.contains(a)))
            .collect(),
    };
    let top_report = est1(&top_req, oracle)?;
    let pinned_sum: f64 = accepted.iter().map(|a| top_report.estimates[a]).sum();

    let h = smallest_order(k_prime)?;
    let m = sample_count_pinned(req.eps, req.delta, req.arms.len(), req.k, k_prime)?;
    let blocks = plan_blocks(&req.arms, h.order(), &req.padding)?;
    let mut report = hadamard_pass(oracle, &blocks, &h, k_prime, &accepted, pinned_sum, m)?;
    report.absorb(top_report);
    Ok(report)
}

/// Leave-one-out baseline: blocks of `k+1` arms, every `k`-subset of the block
/// pulled `m` times.
pub fn est_loo<R: Rng + ?Sized>(
    arms: &[usize],
    k: usize,
    m: u64,
    padding: &[usize],
    oracle: &mut Oracle<'_, R>,
) -> Result<EstimateReport> {
    check_request(&EstimationRequest::new(arms.to_vec(), k, 1.0, 0.5).with_padding(padding.to_vec()), oracle)?;
    let blocks = plan_blocks(arms, k + 1, padding)?;
    let mut tally = Tally::new();
    let mut estimates = BTreeMap::new();
    for block in &blocks {
        let mut left_out = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let subset: Vec<usize> = block.arms.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &a)| a).collect();
            left_out.push(tally.sample(oracle, &subset, m)?);
        }
        let total = left_out.iter().sum::<f64>() / k as f64;
        for (j, (&arm, &keep)) in block.arms.iter().zip(&block.keep).enumerate() {
            if keep {
                estimates.insert(arm, total - left_out[j]);
            }
        }
    }
    Ok(EstimateReport {
        estimates,
        participation: tally.participation,
        total_pulls: tally.pulls,
        m,
        blocks: blocks.len(),
    })
}

/// A `2k × 2k` sign design: the first row measures the sum of the block (split
/// into first and second halves), every other row has `k` entries of each sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignDesign {
    k: usize,
    rows: Vec<Vec<i8>>,
}

impl SignDesign {
    /// Rows after the first drawn uniformly among balanced sign vectors.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut rows = vec![vec![1i8; 2 * k]];
        for _ in 1..2 * k {
            let mut row: Vec<i8> = (0..2 * k).map(|j| if j < k { 1 } else { -1 }).collect();
            row.shuffle(rng);
            rows.push(row);
        }
        Self { k, rows }
    }

    /// The design given by a normalized Hadamard matrix of order `2k`.
    pub fn from_hadamard(h: &HadamardMatrix) -> Result<Self> {
        if !h.order().is_multiple_of(2) {
            return Err(invalid("Hadamard design needs an even order"));
        }
        Ok(Self { k: h.order() / 2, rows: (0..h.order()).map(|i| h.row(i).to_vec()).collect() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Measurement matrix (first row all ones).
    pub fn matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(2 * self.k, 2 * self.k, |i, j| self.rows[i][j] as f64)
    }

    /// Exact for ±1 matrices: the determinant is an integer.
    pub fn is_invertible(&self) -> bool {
        self.matrix().determinant().is_ok_and(|d| d.abs() >= 0.5)
    }

    /// [`Error::Singular`] for non-invertible designs, else `σ_max / σ_min`.
    pub fn condition_number(&self) -> Result<f64> {
        if !self.is_invertible() {
            return Err(Error::Singular);
        }
        self.matrix().condition_number()
    }
}

/// Draws random designs until one is invertible.
pub fn random_invertible_design<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<SignDesign> {
    for _ in 0..MAX_DESIGN_DRAWS {
        let d = SignDesign::random(k, rng);
        if d.condition_number().is_ok() {
            return Ok(d);
        }
    }
    Err(Error::DegenerateDesign(MAX_DESIGN_DRAWS))
}

/// Estimates every block of `2k` arms with the same `design`, recovering by a
/// pivoted solve.
pub fn est_with_design<R: Rng + ?Sized>(
    arms: &[usize],
    m: u64,
    padding: &[usize],
    design: &SignDesign,
    oracle: &mut Oracle<'_, R>,
) -> Result<EstimateReport> {
    let k = design.k();
    check_request(&EstimationRequest::new(arms.to_vec(), k, 1.0, 0.5).with_padding(padding.to_vec()), oracle)?;
    let blocks = plan_blocks(arms, 2 * k, padding)?;
    design_pass(oracle, &blocks, |_| Ok(design.clone()), m)
}

/// Random-sign baseline: a fresh invertible design per block.
pub fn est_random_matrix<R: Rng + ?Sized>(
    arms: &[usize],
    k: usize,
    m: u64,
    padding: &[usize],
    oracle: &mut Oracle<'_, R>,
) -> Result<EstimateReport> {
    check_request(&EstimationRequest::new(arms.to_vec(), k, 1.0, 0.5).with_padding(padding.to_vec()), oracle)?;
    let blocks = plan_blocks(arms, 2 * k, padding)?;
    design_pass(oracle, &blocks, |o| random_invertible_design(k, o.rng), m)
}

fn design_pass<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_, R>,
    blocks: &[Block],
    mut design_for: impl FnMut(&mut Oracle<'_, R>) -> Result<SignDesign>,
    m: u64,
) -> Result<EstimateReport> {
    let mut tally = Tally::new();
    let mut estimates = BTreeMap::new();
    for block in blocks {
        let design = design_for(oracle)?;
        let k = design.k();
        let mut z = Vec::with_capacity(2 * k);
        for (i, row) in design.rows.iter().enumerate() {
            let (pos, neg): (Vec<usize>, Vec<usize>) = if i == 0 {
                ((k..2 * k).map(|j| block.arms[j]).collect(), (0..k).map(|j| block.arms[j]).collect())
            } else {
                let pos = (0..2 * k).filter(|&j| row[j] == 1).map(|j| block.arms[j]).collect();
                let neg = (0..2 * k).filter(|&j| row[j] == -1).map(|j| block.arms[j]).collect();
                (pos, neg)
            };
            let neg_mean = tally.sample(oracle, &neg, m)?;
            let pos_mean = tally.sample(oracle, &pos, m)?;
            z.push(if i == 0 { pos_mean + neg_mean } else { pos_mean - neg_mean });
        }
        let theta = design.matrix().solve(&z)?;
        for ((&arm, &keep), v) in block.arms.iter().zip(&block.keep).zip(theta) {
            if keep {
                estimates.insert(arm, v);
            }
        }
    }
    Ok(EstimateReport {
        estimates,
        participation: tally.participation,
        total_pulls: tally.pulls,
        m,
        blocks: blocks.len(),
    })
}

/// Closed-form pull count of a Hadamard pass over `n_arms` arms.
pub fn hadamard_pass_pulls(n_arms: usize, order: usize, group: usize, m: u64) -> u64 {
    let blocks = n_arms.div_ceil(order) as u64;
    // rows × 2 sides × groups per side × m
    blocks * order as u64 * 2 * (order / 2 / group) as u64 * m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{BanditInstance, Noise, RegretLedger};
    use crate::rng::stream;

    fn zero(k: usize, means: &[f64]) -> BanditInstance {
        BanditInstance::new(k, means.to_vec(), Noise::Zero).unwrap()
    }

    fn run<T>(
        b: &BanditInstance,
        seed: u64,
        f: impl FnOnce(&mut Oracle<'_, crate::rng::SimRng>) -> T,
    ) -> (T, RegretLedger) {
        let mut rng = stream(seed, &[]);
        let mut ledger = RegretLedger::new(b);
        let out = {
            let mut o = Oracle::new(b, &mut rng, &mut ledger);
            f(&mut o)
        };
        (out, ledger)
    }

    fn assert_exact(report: &EstimateReport, b: &BanditInstance, arms: &[usize]) {
        for &a in arms {
            assert!((report.estimates[&a] - b.means()[a]).abs() < 1e-12, "arm {a}");
        }
    }

    #[test]
    fn sample_count_examples() {
        assert_eq!(sample_count(0.5, 0.1, 144).unwrap(), 64);
        // ε = √2 and ln(2n/δ) = 1.
        let n = 3;
        let delta = 2.0 * n as f64 / std::f64::consts::E;
        assert!(delta >= 1.0);
        assert_eq!(raw_count(2f64.sqrt(), delta, n, 1.0), 1);
        let base = raw_count(0.3, 0.1, 20, 1.0) as f64;
        let pinned = sample_count_pinned(0.3, 0.1, 20, 4, 1).unwrap() as f64;
        let exact = 8.0 * (2.0 / 0.09) * (40.0f64 / 0.1).ln();
        assert_eq!(pinned, exact.ceil());
        assert!(pinned <= 8.0 * base && pinned > 8.0 * (base - 1.0));
        assert_eq!(sample_count_pinned(0.3, 0.1, 20, 4, 4).unwrap(), sample_count(0.3, 0.1, 20).unwrap());
        assert!(sample_count(0.0, 0.1, 4).is_err());
        assert!(sample_count(0.1, 1.0, 4).is_err());
        assert!(sample_count_pinned(0.1, 0.1, 4, 2, 0).is_err());
    }

    #[test]
    fn est1_noiseless_direct_order() {
        let b = zero(2, &[3.0, 1.0, 2.0, 0.0]);
        let req = EstimationRequest::new(vec![0, 1, 2, 3], 2, 0.5, 0.1);
        let (r, ledger) = run(&b, 0, |o| est1(&req, o));
        let r = r.unwrap();
        assert_exact(&r, &b, &[0, 1, 2, 3]);
        assert_eq!(r.total_pulls, ledger.pulls());
        assert_eq!(r.total_pulls, hadamard_pass_pulls(4, 4, 2, r.m));
    }

    #[test]
    fn est1_noiseless_paley_with_padding() {
        let means: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = zero(3, &means);
        let req = EstimationRequest::new(vec![0, 1, 2, 3, 4, 5], 3, 0.5, 0.1).with_padding((6..12).collect());
        let (r, ledger) = run(&b, 0, |o| est1(&req, o));
        let r = r.unwrap();
        assert_eq!(r.estimates.len(), 6);
        assert_exact(&r, &b, &[0, 1, 2, 3, 4, 5]);
        assert_eq!(r.total_pulls, hadamard_pass_pulls(6, 12, 3, r.m));
        assert_eq!(ledger.pulls(), r.total_pulls);
        assert!(r.participation[&11] > 0);
    }

    #[test]
    fn padding_exhaustion() {
        let b = zero(3, &[0.0; 8]);
        let req = EstimationRequest::new(vec![0, 1, 2, 3, 4, 5], 3, 0.5, 0.1).with_padding(vec![6, 7]);
        let (r, _) = run(&b, 0, |o| est1(&req, o));
        assert!(matches!(r, Err(Error::PaddingExhausted { needed: 4 })));
    }

    #[test]
    fn empty_request() {
        let b = zero(1, &[0.0; 2]);
        let req = EstimationRequest::new(vec![], 1, 0.5, 0.1);
        assert!(matches!(run(&b, 0, |o| est1(&req, o)).0, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn padding_prefers_earlier_blocks() {
        let blocks = plan_blocks(&[4, 0, 1, 2, 3], 4, &[9]).unwrap();
        assert_eq!(blocks[1].arms, vec![4, 0, 1, 2]);
        assert_eq!(blocks[1].keep, vec![true, false, false, false]);
        let blocks = plan_blocks(&[0, 1], 4, &[7, 8]).unwrap();
        assert_eq!(blocks[0].arms, vec![0, 1, 7, 8]);
    }

    #[test]
    fn est2_without_accepted_is_est1() {
        let b = BanditInstance::new(2, vec![0.3, 0.1, 0.9, 0.2, 0.5, 0.4, 0.8, 0.0], Noise::Gaussian).unwrap();
        let req = EstimationRequest::new((0..8).collect(), 2, 0.5, 0.1);
        let (a, _) = run(&b, 9, |o| est1(&req, o));
        let (c, _) = run(&b, 9, |o| est2(&req, o));
        assert_eq!(a.unwrap(), c.unwrap());
    }

    #[test]
    fn est2_noiseless_with_pinned_arm() {
        let b = zero(2, &[5.0, 0.4, -0.3, 0.7, 0.1, 0.2]);
        let req = EstimationRequest::new(vec![1, 2, 3, 4], 2, 0.5, 0.1)
            .with_accepted(vec![0], vec![0, 3, 1, 4])
            .with_padding(vec![5]);
        let (r, ledger) = run(&b, 0, |o| est2(&req, o));
        let r = r.unwrap();
        assert_exact(&r, &b, &[0, 1, 2, 3, 4]);
        assert_eq!(ledger.pulls(), r.total_pulls);
    }

    #[test]
    fn est2_noiseless_pinned_with_paley_groups() {
        // k = 4, one pinned arm: k' = 3 needs order 12 with two groups per side.
        let means: Vec<f64> = (0..16).map(|i| (i as f64 * 0.71).cos()).collect();
        let b = zero(4, &means);
        let top = vec![0, 1, 2, 3, 4, 5, 6, 7];
        let req = EstimationRequest::new((1..13).collect(), 4, 0.5, 0.1)
            .with_accepted(vec![0], top)
            .with_padding(vec![13, 14, 15]);
        let (r, _) = run(&b, 0, |o| est2(&req, o));
        let r = r.unwrap();
        assert_exact(&r, &b, &(0..13).collect::<Vec<_>>());
    }

    #[test]
    fn est2_errors() {
        let b = zero(2, &[1.0, 0.0, 0.0, 0.0, 0.0]);
        let all = EstimationRequest::new(vec![2, 3], 2, 0.5, 0.1).with_accepted(vec![0, 1], vec![0, 1, 2, 3]);
        assert!(matches!(run(&b, 0, |o| est2(&all, o)).0, Err(Error::AllAccepted(2))));
        let outside = EstimationRequest::new(vec![2, 3], 2, 0.5, 0.1).with_accepted(vec![0], vec![1, 2]);
        assert!(run(&b, 0, |o| est2(&outside, o)).0.is_err());
    }

    #[test]
    fn loo_noiseless() {
        let b = zero(2, &[3.0, 2.0, 1.0, 0.5, 0.25, 0.0]);
        let (r, _) = run(&b, 0, |o| est_loo(&[0, 1, 2], 2, 5, &[3], o));
        let r = r.unwrap();
        assert_exact(&r, &b, &[0, 1, 2]);
        assert_eq!(r.total_pulls, 15);
        let (r, _) = run(&b, 0, |o| est_loo(&[0, 1, 2, 3, 4], 2, 5, &[5], o));
        assert_exact(&r.unwrap(), &b, &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn random_design_noiseless() {
        let means: Vec<f64> = (0..12).map(|i| i as f64 * 0.1 - 0.3).collect();
        let b = zero(3, &means);
        let (r, _) = run(&b, 4, |o| est_random_matrix(&(0..12).collect::<Vec<_>>(), 3, 7, &[], o));
        assert_exact(&r.unwrap(), &b, &(0..12).collect::<Vec<_>>());
    }

    #[test]
    fn hadamard_design_matches_est1() {
        let b = BanditInstance::new(2, vec![0.3, 0.1, 0.9, 0.2], Noise::Gaussian).unwrap();
        let design = SignDesign::from_hadamard(&smallest_order(2).unwrap()).unwrap();
        let req = EstimationRequest::new(vec![0, 1, 2, 3], 2, 0.5, 0.1);
        let (a, _) = run(&b, 5, |o| est1(&req, o));
        let a = a.unwrap();
        let (d, _) = run(&b, 5, |o| est_with_design(&[0, 1, 2, 3], a.m, &[], &design, o));
        let d = d.unwrap();
        for arm in 0..4 {
            assert!((a.estimates[&arm] - d.estimates[&arm]).abs() < 1e-9);
        }
        assert!((design.condition_number().unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn balanced_rows_need_the_sum_row() {
        // Without the all-ones row, balanced rows always annihilate 𝟙.
        let mut rng = stream(1, &[]);
        let d = SignDesign::random(4, &mut rng);
        for row in &d.rows[1..] {
            assert_eq!(row.iter().map(|&v| v as i32).sum::<i32>(), 0);
        }
        assert!(d.rows[0].iter().all(|&v| v == 1));
    }
}
