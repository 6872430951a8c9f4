use proptest::prelude::*;
use rand::Rng;

use csar_core::bandit::{make_instance, BanditInstance, InstanceKind, Noise, Oracle, RegretLedger};
use csar_core::csar::{self, phases_within_bound, CsarConfig, EstimatorKind};
use csar_core::estimators::{est1, est2, hadamard_pass_pulls, EstimationRequest};
use csar_core::hadamard::smallest_order;
use csar_core::linalg::DenseMatrix;
use csar_core::rng::stream;
use csar_core::theory::{bilinear_check, lambda_matrix, random_pd, rho, SubsetDistribution};

fn distinct_means(n: usize, seed: u64) -> Vec<f64> {
    // A shuffled grid keeps every pairwise gap at least 1/n.
    let mut rng = stream(seed, &[]);
    let mut means: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    for i in (1..n).rev() {
        means.swap(i, rng.random_range(0..=i));
    }
    means
}

fn dense(n: usize, entries: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| entries[i * n + j])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solve_round_trip(n in 1usize..8, entries in prop::collection::vec(-1.0f64..1.0, 64), x in prop::collection::vec(-5.0f64..5.0, 8)) {
        // Diagonal dominance keeps the system well conditioned.
        let mut a = dense(n, &entries);
        for i in 0..n {
            a.set(i, i, a.get(i, i) + n as f64 + 1.0);
        }
        let x = &x[..n];
        let b = a.mul_vec(x).unwrap();
        let got = a.solve(&b).unwrap();
        for (g, w) in got.iter().zip(x) {
            prop_assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
    }

    #[test]
    fn eigenvalues_match_trace_and_determinant(n in 1usize..7, entries in prop::collection::vec(-2.0f64..2.0, 49)) {
        let b = dense(n, &entries);
        let a = DenseMatrix::from_fn(n, n, |i, j| b.get(i, j) + b.get(j, i));
        let eig = a.sym_eigenvalues().unwrap();
        prop_assert!(eig.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = eig.iter().sum();
        prop_assert!((sum - a.trace()).abs() < 1e-8 * (1.0 + a.frobenius()));
        let prod: f64 = eig.iter().product();
        let det = a.determinant().unwrap();
        prop_assert!((prod - det).abs() < 1e-7 * (1.0 + det.abs()), "{prod} vs {det}");
    }

    #[test]
    fn lambda_is_psd_with_trace_k(n in 2usize..8, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let d = SubsetDistribution::random_full_rank(n, k, &mut stream(seed, &[])).unwrap();
        let l = lambda_matrix(&d);
        prop_assert!(l.max_asymmetry() == 0.0);
        prop_assert!(l.sym_eigenvalues().unwrap()[0] > -1e-12);
        prop_assert!((l.trace() - k as f64).abs() < 1e-10);
    }

    #[test]
    fn rho_at_least_n_over_k(n in 2usize..8, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let d = SubsetDistribution::random_full_rank(n, k, &mut stream(seed, &[])).unwrap();
        let r = rho(&d).unwrap();
        prop_assert!(r >= n as f64 / k as f64 - 1e-8, "rho={r} n={n} k={k}");
    }

    #[test]
    fn bilinear_holds_for_pd(n in 1usize..8, seed in any::<u64>()) {
        let mut rng = stream(seed, &[]);
        let a = random_pd(n, &mut rng);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        x[0] += 2.0;
        prop_assert!(bilinear_check(&a, &x).unwrap());
    }

    #[test]
    fn noiseless_est1_is_exact_and_accounted(k in 1usize..6, blocks in 1usize..4, short in 0usize..6, seed in any::<u64>()) {
        let order = smallest_order(k).unwrap().order();
        let short = short.min(order - 1);
        let n_est = blocks * order - short;
        // Padding arms sit after the estimated ones.
        let n = n_est + short;
        let means = distinct_means(n, seed);
        let inst = BanditInstance::new(k, means.clone(), Noise::Zero).unwrap();
        let arms: Vec<usize> = (0..n_est).collect();
        let padding: Vec<usize> = (n_est..n).collect();
        let mut rng = stream(seed, &[1]);
        let mut ledger = RegretLedger::new(&inst);
        let report = {
            let mut oracle = Oracle::new(&inst, &mut rng, &mut ledger);
            est1(&EstimationRequest::new(arms.clone(), k, 0.5, 0.1).with_padding(padding.clone()), &mut oracle).unwrap()
        };
        prop_assert_eq!(report.estimates.keys().copied().collect::<Vec<_>>(), arms.clone());
        for (&arm, &v) in &report.estimates {
            prop_assert!((v - means[arm]).abs() < 1e-9);
        }
        prop_assert!(padding.iter().all(|p| !report.estimates.contains_key(p)));
        prop_assert_eq!(report.total_pulls, ledger.pulls());
        prop_assert_eq!(report.total_pulls, hadamard_pass_pulls(n_est, order, k, report.m));
    }

    #[test]
    fn noiseless_est2_is_exact(seed in any::<u64>()) {
        let (n, k) = (16, 3);
        let means = distinct_means(n, seed);
        let inst = BanditInstance::new(k, means.clone(), Noise::Zero).unwrap();
        let ranking = inst.ranking();
        let accepted = vec![ranking[0]];
        let top: Vec<usize> = ranking[..2 * k].to_vec();
        let arms: Vec<usize> = (0..n).filter(|a| !accepted.contains(a)).collect();
        let mut rng = stream(seed, &[2]);
        let mut ledger = RegretLedger::new(&inst);
        let mut oracle = Oracle::new(&inst, &mut rng, &mut ledger);
        let req = EstimationRequest::new(arms.clone(), k, 0.5, 0.1).with_accepted(accepted.clone(), top);
        let report = est2(&req, &mut oracle).unwrap();
        for a in &arms {
            prop_assert!((report.estimates[a] - means[*a]).abs() < 1e-9);
        }
        prop_assert!(report.estimates.keys().all(|a| arms.contains(a) || accepted.contains(a)));
    }

    #[test]
    fn csar_partition_termination_and_accounting(
        n in 8usize..20,
        k_frac in 0.0f64..1.0,
        est2 in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let k = 1 + ((n / 2 - 1) as f64 * k_frac) as usize;
        let estimator = if est2 { EstimatorKind::Est2 } else { EstimatorKind::Est1 };
        prop_assume!(csar::check_feasible(estimator, n, k).is_ok());
        let inst = BanditInstance::new(k, distinct_means(n, seed), Noise::Zero).unwrap();
        let res = csar::run(&CsarConfig::exact(estimator, 0.1, seed), &inst).unwrap();
        prop_assert!(res.success);
        prop_assert_eq!(res.subset.len(), k);
        prop_assert!(res.subset.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(res.termination_phase.iter().all(|p| p.is_some_and(|t| t <= res.phases)));
        prop_assert!(phases_within_bound(&inst, &res));
        prop_assert_eq!(res.total_pulls, res.ledger.pulls());
        prop_assert_eq!(res.records.len(), res.phases);
        for w in res.records.windows(2) {
            prop_assert!(w[1].n_surviving <= w[0].n_surviving);
            prop_assert!(w[1].n_accepted >= w[0].n_accepted);
            prop_assert!(w[1].pulls >= w[0].pulls);
            prop_assert!(w[1].cum_regret >= w[0].cum_regret);
        }
        for r in &res.records {
            prop_assert!(r.n_accepted <= k);
            prop_assert!(r.n_surviving + r.n_accepted <= n);
        }
    }

    #[test]
    fn ledger_is_monotone(pulls in prop::collection::vec((0usize..6, 1u64..50), 1..40)) {
        let inst = BanditInstance::new(2, vec![0.9, 0.1, 0.5, 0.3, 0.7, 0.0], Noise::Zero).unwrap();
        let mut ledger = RegretLedger::new(&inst);
        let (mut last_regret, mut last_pulls) = (0.0, 0);
        for (first, count) in pulls {
            let second = (first + 1) % 6;
            ledger.record_pulls(&inst, &[first, second], count).unwrap();
            prop_assert!(ledger.regret() >= last_regret);
            prop_assert_eq!(ledger.pulls(), last_pulls + count);
            last_regret = ledger.regret();
            last_pulls = ledger.pulls();
        }
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let kind = InstanceKind::TwoGap { n: 12, k: 3, plus: 1.0, minus: 0.2 };
    let inst = make_instance(&kind, &mut stream(3, &[])).unwrap();
    let cfg = CsarConfig::exact(EstimatorKind::Est2, 0.1, 9);
    let a = csar::run(&cfg, &inst).unwrap();
    let b = csar::run(&cfg, &inst).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.total_pulls, b.total_pulls);
    let c = csar::run(&CsarConfig { seed: 10, ..cfg }, &inst).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn streams_are_independent_of_sibling_use() {
    let mut a = stream(5, &[1, 2]);
    let first: Vec<u64> = (0..4).map(|_| a.random()).collect();
    let mut other = stream(5, &[1, 3]);
    let _: u64 = other.random();
    let mut again = stream(5, &[1, 2]);
    let second: Vec<u64> = (0..4).map(|_| again.random()).collect();
    assert_eq!(first, second);
    let mut sibling = stream(5, &[1, 3]);
    assert_ne!(first[0], sibling.random::<u64>());
}

#[test]
fn subset_means_concentrate() {
    // Gaussian tail: P(|Ȳ − μ| > t) ≤ 2·exp(−m t² / (2s)) for a subset of size s.
    // Bernoulli arms are 1/2-subgaussian, so the same bound holds with s/4.
    for noise in [Noise::Gaussian, Noise::Bernoulli] {
        let inst = BanditInstance::new(3, vec![0.2, 0.5, 0.9, 0.4, 0.1, 0.6], noise).unwrap();
        let subset = [0, 2, 3];
        let mu = inst.subset_mean(&subset);
        let (m, t, trials) = (40u64, 0.4, 20_000);
        let scale = if noise == Noise::Gaussian { 3.0 } else { 0.75 };
        let bound = 2.0 * (-(m as f64) * t * t / (2.0 * scale)).exp();
        let mut rng = stream(17, &[noise as u64]);
        let mut misses = 0;
        let mut sum = 0.0;
        for _ in 0..trials {
            let y = inst.sample_mean(&subset, m, &mut rng).unwrap();
            sum += y;
            if (y - mu).abs() > t {
                misses += 1;
            }
        }
        let rate = misses as f64 / trials as f64;
        assert!(rate <= bound + 0.01, "{noise:?}: rate {rate} bound {bound}");
        assert!((sum / trials as f64 - mu).abs() < 0.01, "{noise:?}: mean drift");
    }
}

#[test]
fn sufficient_statistic_matches_single_pulls() {
    // Averaging m single pulls and the direct draw agree in mean and variance.
    let inst = BanditInstance::new(2, vec![0.3, 0.8, 0.5, 0.1], Noise::Gaussian).unwrap();
    let subset = [0, 1];
    let (m, trials) = (8u64, 20_000);
    let mut rng = stream(21, &[]);
    let stats = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
    };
    let direct: Vec<f64> = (0..trials).map(|_| inst.sample_mean(&subset, m, &mut rng).unwrap()).collect();
    let single: Vec<f64> =
        (0..trials).map(|_| (0..m).map(|_| inst.pull(&subset, &mut rng).unwrap()).sum::<f64>() / m as f64).collect();
    let (md, vd) = stats(&direct);
    let (ms, vs) = stats(&single);
    // Var = s/m = 0.25.
    assert!((md - ms).abs() < 0.02 && (md - 1.1).abs() < 0.02);
    assert!((vd / 0.25 - 1.0).abs() < 0.05 && (vs / 0.25 - 1.0).abs() < 0.05, "{vd} {vs}");
}
