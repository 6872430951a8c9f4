//! Problem instances, the full-bandit sampling oracle, gaps and regret.
//!
//! Arm indices are zero-based throughout the crate.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Per-arm reward noise family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    /// `X_i = θ_i + N(0, 1)`.
    Gaussian,
    /// `X_i ~ Bernoulli(θ_i)`; requires `θ_i ∈ [0, 1]`.
    Bernoulli,
    /// `X_i = θ_i` exactly.
    Zero,
}

impl std::str::FromStr for Noise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Noise::Gaussian),
            "bernoulli" => Ok(Noise::Bernoulli),
            "zero" => Ok(Noise::Zero),
            other => Err(invalid(format!("unknown noise family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanditInstance {
    n: usize,
    k: usize,
    means: Vec<f64>,
    noise: Noise,
}

#[derive(Deserialize)]
struct RawInstance {
    n: usize,
    k: usize,
    means: Vec<f64>,
    noise: Noise,
}

impl<'de> Deserialize<'de> for BanditInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawInstance::deserialize(d)?;
        if raw.means.len() != raw.n {
            return Err(serde::de::Error::custom(format!("`n` is {} but {} means were given", raw.n, raw.means.len())));
        }
        BanditInstance::new(raw.k, raw.means, raw.noise).map_err(serde::de::Error::custom)
    }
}

impl BanditInstance {
    pub fn new(k: usize, means: Vec<f64>, noise: Noise) -> Result<Self> {
        let n = means.len();
        if k == 0 || 2 * k > n {
            return Err(invalid(format!("need 1 <= k <= n/2, got n={n}, k={k}")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(invalid("means must be finite"));
        }
        if noise == Noise::Bernoulli && means.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
            return Err(invalid("Bernoulli means must lie in [0, 1]"));
        }
        Ok(Self { n, k, means, noise })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    pub fn with_noise(&self, noise: Noise) -> Result<Self> {
        Self::new(self.k, self.means.clone(), noise)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialises")
    }

    /// Arms ordered by mean descending, ties by lower index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n).collect();
        idx.sort_by(|&a, &b| self.means[b].total_cmp(&self.means[a]).then(a.cmp(&b)));
        idx
    }

    /// Canonical optimal subset (ties broken by lower index), ascending.
    pub fn optimal_subset(&self) -> Vec<usize> {
        let mut top: Vec<usize> = self.ranking().into_iter().take(self.k).collect();
        top.sort_unstable();
        top
    }

    /// `μ*`, the sum of the k largest means.
    pub fn optimal_mean(&self) -> f64 {
        self.ranking().iter().take(self.k).map(|&i| self.means[i]).sum()
    }

    pub fn subset_mean(&self, subset: &[usize]) -> f64 {
        subset.iter().map(|&i| self.means[i]).sum()
    }

    /// True if `subset` has the optimal mean (any tie-break of the top k).
    pub fn is_optimal(&self, subset: &[usize]) -> bool {
        (self.optimal_mean() - self.subset_mean(subset)).abs() <= 1e-12
    }

    pub fn check_subset(&self, subset: &[usize]) -> Result<()> {
        check_subset(self.n, self.k, subset)
    }

    /// One round: the summed reward of one independent draw per arm.
    pub fn pull<R: Rng + ?Sized>(&self, subset: &[usize], rng: &mut R) -> Result<f64> {
        self.check_subset(subset)?;
        Ok(subset.iter().map(|&i| self.draw(i, rng)).sum())
    }

    fn draw<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        let mean = self.means[arm];
        match self.noise {
            Noise::Gaussian => mean + rng.sample::<f64, _>(StandardNormal),
            Noise::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            Noise::Zero => mean,
        }
    }

    /// Average reward of `m` independent pulls of `subset`.
    ///
    /// Draws the sufficient statistic directly: a single normal with variance
    /// `m·k` for Gaussian noise, one binomial count per arm for Bernoulli noise.
    /// The result has exactly the distribution of averaging `m` calls to
    /// [`pull`](Self::pull).
    pub fn sample_mean<R: Rng + ?Sized>(&self, subset: &[usize], m: u64, rng: &mut R) -> Result<f64> {
        self.check_subset(subset)?;
        if m == 0 {
            return Err(invalid("sample count must be positive"));
        }
        let mu = self.subset_mean(subset);
        Ok(match self.noise {
            Noise::Zero => mu,
            Noise::Gaussian => {
                let z: f64 = rng.sample(StandardNormal);
                mu + z * ((subset.len() as f64) / m as f64).sqrt()
            }
            Noise::Bernoulli => {
                let mut total = 0u64;
                for &i in subset {
                    let p = self.means[i];
                    total += Binomial::new(m, p).expect("mean checked in [0,1]").sample(rng);
                }
                total as f64 / m as f64
            }
        })
    }
}

pub(crate) fn check_subset(n: usize, k: usize, subset: &[usize]) -> Result<()> {
    if let Some(&arm) = subset.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArm { arm, n });
    }
    let distinct: BTreeSet<usize> = subset.iter().copied().collect();
    if subset.len() != k || distinct.len() != k {
        return Err(Error::InvalidSubset { expected: k, got: distinct.len() });
    }
    Ok(())
}

/// Per-arm gaps `Δ_i` and the minimal gap.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub gaps: Vec<f64>,
    pub min_gap: f64,
}

pub fn gap_profile(instance: &BanditInstance) -> GapProfile {
    let ranking = instance.ranking();
    let k = instance.k();
    let means = instance.means();
    let kth = means[ranking[k - 1]];
    let next = means[ranking[k]];
    let mut gaps = vec![0.0; instance.n()];
    for (rank, &arm) in ranking.iter().enumerate() {
        gaps[arm] = if rank < k { means[arm] - next } else { kth - means[arm] };
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    GapProfile { gaps, min_gap }
}

/// Cumulative pseudo-regret `Σ_t (μ* − μ(S_t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    optimal_mean: f64,
    regret: f64,
    pulls: u64,
    trace: Option<Vec<(u64, f64)>>,
}

impl RegretLedger {
    pub fn new(instance: &BanditInstance) -> Self {
        Self { optimal_mean: instance.optimal_mean(), regret: 0.0, pulls: 0, trace: None }
    }

    /// Ledger that also keeps `(pulls, regret)` breakpoints after every batch.
    pub fn traced(instance: &BanditInstance) -> Self {
        Self { trace: Some(vec![(0, 0.0)]), ..Self::new(instance) }
    }

    pub fn regret(&self) -> f64 {
        self.regret
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn optimal_mean(&self) -> f64 {
        self.optimal_mean
    }

    pub fn trace(&self) -> Option<&[(u64, f64)]> {
        self.trace.as_deref()
    }

    pub fn record_pull(&mut self, instance: &BanditInstance, subset: &[usize]) -> Result<()> {
        self.record_pulls(instance, subset, 1)
    }

    pub fn record_pulls(&mut self, instance: &BanditInstance, subset: &[usize], count: u64) -> Result<()> {
        instance.check_subset(subset)?;
        // Clamp rounding noise; a valid subset never beats μ*.
        let gap = (self.optimal_mean - instance.subset_mean(subset)).max(0.0);
        self.regret += gap * count as f64;
        self.pulls = self.pulls.saturating_add(count);
        if let Some(trace) = self.trace.as_mut() {
            trace.push((self.pulls, self.regret));
        }
        Ok(())
    }

    /// Regret after `t` pulls, interpolated inside a batch (each batch has a
    /// constant per-pull gap, so interpolation is exact). Needs a traced ledger.
    pub fn regret_at(&self, t: u64) -> Option<f64> {
        let trace = self.trace.as_ref()?;
        let pos = trace.partition_point(|&(p, _)| p < t);
        if pos == 0 {
            return Some(0.0);
        }
        if pos == trace.len() {
            return Some(self.regret);
        }
        let (p0, r0) = trace[pos - 1];
        let (p1, r1) = trace[pos];
        Some(r0 + (r1 - r0) * (t - p0) as f64 / (p1 - p0) as f64)
    }
}

/// Sampling oracle for one run: instance, random stream, regret ledger and an
/// optional cap on the total number of pulls.
pub struct Oracle<'a, R: Rng + ?Sized> {
    pub instance: &'a BanditInstance,
    pub rng: &'a mut R,
    pub ledger: &'a mut RegretLedger,
    pub budget: Option<u64>,
}

impl<'a, R: Rng + ?Sized> Oracle<'a, R> {
    pub fn new(instance: &'a BanditInstance, rng: &'a mut R, ledger: &'a mut RegretLedger) -> Self {
        Self { instance, rng, ledger, budget: None }
    }

    /// Pulls `subset` `m` times, records the pulls and returns the mean reward.
    ///
    /// If a budget is set and would be exceeded, the remaining budget is spent
    /// on `subset` and [`Error::BudgetExhausted`] is returned.
    pub fn sample_mean(&mut self, subset: &[usize], m: u64) -> Result<f64> {
        if let Some(budget) = self.budget {
            let left = budget.saturating_sub(self.ledger.pulls());
            if m > left {
                if left > 0 {
                    self.ledger.record_pulls(self.instance, subset, left)?;
                }
                return Err(Error::BudgetExhausted(budget));
            }
        }
        let mean = self.instance.sample_mean(subset, m, self.rng)?;
        self.ledger.record_pulls(self.instance, subset, m)?;
        Ok(mean)
    }
}

/// Instance families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceKind {
    /// Gaussian arms with means i.i.d. uniform on [0, 1].
    UniformGaussian { n: usize, k: usize },
    /// Bernoulli arms with means i.i.d. uniform on [0, 1].
    UniformBernoulli { n: usize, k: usize },
    /// Bernoulli: `1/2 + ε/k` for the first k arms, `1/2` for the rest.
    BernoulliEpsilonK { n: usize, k: usize, eps: f64 },
    /// Gaussian: `Δ₊` for the first k−1 arms, 0 for arm k, `−Δ₋` for the rest.
    TwoGap { n: usize, k: usize, plus: f64, minus: f64 },
    /// Gaussian: `Δ` for the first k arms, 0 for the rest.
    EqualGap { n: usize, k: usize, gap: f64 },
    /// Gaussian: `ε/k` on the planted subset, 0 elsewhere.
    PlantedSubset { n: usize, k: usize, subset: Vec<usize>, eps: f64 },
    /// Gaussian: all means 0.
    FlatNull { n: usize, k: usize },
}

impl InstanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            InstanceKind::UniformGaussian { .. } => "uniform_gaussian",
            InstanceKind::UniformBernoulli { .. } => "uniform_bernoulli",
            InstanceKind::BernoulliEpsilonK { .. } => "bernoulli_epsilon_k",
            InstanceKind::TwoGap { .. } => "two_gap",
            InstanceKind::EqualGap { .. } => "equal_gap",
            InstanceKind::PlantedSubset { .. } => "planted_subset",
            InstanceKind::FlatNull { .. } => "flat_null",
        }
    }

    /// Parses `name` or `name:key=value,...`; `n` and `k` default to the
    /// supplied values. `subset` is given as `subset=0+1+2`.
    pub fn parse(spec: &str, n: usize, k: usize) -> Result<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut n = n;
        let mut k = k;
        let mut eps = 0.1;
        let mut plus = 1.0;
        let mut minus = 0.1;
        let mut gap = 0.1;
        let mut subset: Option<Vec<usize>> = None;
        for kv in rest.split(',').filter(|s| !s.is_empty()) {
            let (key, value) = kv.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got `{kv}`")))?;
            let num = || value.parse::<f64>().map_err(|_| invalid(format!("bad number `{value}`")));
            let int = || value.parse::<usize>().map_err(|_| invalid(format!("bad integer `{value}`")));
            match key {
                "n" => n = int()?,
                "k" => k = int()?,
                "eps" => eps = num()?,
                "plus" => plus = num()?,
                "minus" => minus = num()?,
                "gap" => gap = num()?,
                "subset" => {
                    subset = Some(
                        value
                            .split('+')
                            .map(|s| s.parse().map_err(|_| invalid(format!("bad arm `{s}`"))))
                            .collect::<Result<_>>()?,
                    )
                }
                other => return Err(invalid(format!("unknown generator parameter `{other}`"))),
            }
        }
        Ok(match name {
            "uniform_gaussian" => InstanceKind::UniformGaussian { n, k },
            "uniform_bernoulli" => InstanceKind::UniformBernoulli { n, k },
            "bernoulli_epsilon_k" => InstanceKind::BernoulliEpsilonK { n, k, eps },
            "two_gap" => InstanceKind::TwoGap { n, k, plus, minus },
            "equal_gap" => InstanceKind::EqualGap { n, k, gap },
            "planted_subset" => {
                InstanceKind::PlantedSubset { n, k, subset: subset.unwrap_or_else(|| (0..k).collect()), eps }
            }
            "flat_null" => InstanceKind::FlatNull { n, k },
            other => return Err(invalid(format!("unknown generator `{other}`"))),
        })
    }
}

pub fn make_instance<R: Rng + ?Sized>(kind: &InstanceKind, rng: &mut R) -> Result<BanditInstance> {
    match kind {
        InstanceKind::UniformGaussian { n, k } => {
            let means = (0..*n).map(|_| rng.random::<f64>()).collect();
            BanditInstance::new(*k, means, Noise::Gaussian)
        }
        InstanceKind::UniformBernoulli { n, k } => {
            let means = (0..*n).map(|_| rng.random::<f64>()).collect();
            BanditInstance::new(*k, means, Noise::Bernoulli)
        }
        &InstanceKind::BernoulliEpsilonK { n, k, eps } => {
            if !(eps > 0.0) || k == 0 || 0.5 + eps / k as f64 > 1.0 {
                return Err(invalid(format!("bernoulli_epsilon_k needs 0 < eps/k <= 1/2, got eps={eps}")));
            }
            let means = (0..n).map(|i| if i < k { 0.5 + eps / k as f64 } else { 0.5 }).collect();
            BanditInstance::new(k, means, Noise::Bernoulli)
        }
        &InstanceKind::TwoGap { n, k, plus, minus } => {
            if !(plus > 0.0 && minus > 0.0) {
                return Err(invalid("two_gap needs positive gaps"));
            }
            let means = (0..n)
                .map(|i| match (i + 1).cmp(&k) {
                    std::cmp::Ordering::Less => plus,
                    std::cmp::Ordering::Equal => 0.0,
                    std::cmp::Ordering::Greater => -minus,
                })
                .collect();
            BanditInstance::new(k, means, Noise::Gaussian)
        }
        &InstanceKind::EqualGap { n, k, gap } => {
            if !(gap > 0.0) {
                return Err(invalid("equal_gap needs a positive gap"));
            }
            let means = (0..n).map(|i| if i < k { gap } else { 0.0 }).collect();
            BanditInstance::new(k, means, Noise::Gaussian)
        }
        InstanceKind::PlantedSubset { n, k, subset, eps } => {
            if !(*eps > 0.0) {
                return Err(invalid("planted_subset needs eps > 0"));
            }
            check_subset(*n, *k, subset)?;
            let mut means = vec![0.0; *n];
            for &i in subset {
                means[i] = eps / *k as f64;
            }
            BanditInstance::new(*k, means, Noise::Gaussian)
        }
        &InstanceKind::FlatNull { n, k } => BanditInstance::new(k, vec![0.0; n], Noise::Gaussian),
    }
}
