//! Monte-Carlo checks of the tests' size and power, and of the jackknife
//! scale, on the simulation designs.

use dprel::extremal::nonprivate_extremal;
use dprel::hdtest::{finite_dim_test, hoeffding_test, p_hd_u_test, BranchPolicy, HdTestConfig};
use dprel::privacy::PrivacyBudget;
use dprel::rng::streams;
use dprel::simulate::{build_tau, lookup_rate, run_power_experiment, CopulaSampler, Design, ExperimentConfig, Method, TauModel};
use dprel::ustat::{compute_ustat, jackknife_subset, tau_fast, KendallKernel};
use dprel::Seed;
use nalgebra::DMatrix;
use rand::seq::index::sample;

fn rejection_rate(
    sampler: &CopulaSampler,
    n: usize,
    delta: f64,
    cfg: &HdTestConfig,
    reps: u64,
    seed: u64,
    run: impl Fn(&dprel::DataMatrix, &KendallKernel, f64, &HdTestConfig, &mut PrivacyBudget, Seed) -> dprel::Result<dprel::TestOutcome>,
) -> f64 {
    let kernel = KendallKernel::new(sampler.d()).unwrap();
    let mut hits = 0;
    for rep in 0..reps {
        let s = Seed(seed).child(rep);
        let data = sampler.sample(n, &mut s.stream(streams::DATA)).unwrap();
        let (r, d) = cfg.charge();
        let mut budget = PrivacyBudget::new(r, d).unwrap();
        hits += usize::from(run(&data, &kernel, delta, cfg, &mut budget, s).unwrap().reject);
    }
    hits as f64 / reps as f64
}

#[test]
fn nonprivate_extremal_recovers_f2_set() {
    let (n, d) = (1000, 45);
    let sampler = CopulaSampler::new(&build_tau(Design::F2, d).unwrap()).unwrap();
    let kernel = KendallKernel::new(d).unwrap();
    let planted: Vec<usize> = [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| kernel.coord_of(i, j).unwrap()).collect();
    let mut hits = 0;
    for rep in 0..200 {
        let data = sampler.sample(n, &mut Seed(31).child(rep).stream(streams::DATA)).unwrap();
        let u = compute_ustat(&data, &kernel, false).unwrap().u;
        hits += usize::from(nonprivate_extremal(&u, n) == planted);
    }
    assert!(hits >= 190, "{hits}/200");
}

#[test]
fn jackknife_matches_monte_carlo_covariance() {
    let (n, d, mc) = (2000, 10, 1000);
    let sampler = CopulaSampler::new(&build_tau(Design::F2, d).unwrap()).unwrap();
    let kernel = KendallKernel::new(d).unwrap();
    let p = d * (d - 1) / 2;
    let mut coords = sample(&mut Seed(32).stream(0), p, 10).into_vec();
    coords.sort_unstable();

    // Monte-Carlo oracle for n·Cov(U) on the chosen coordinates
    let draws: Vec<Vec<f64>> = (0..mc)
        .map(|rep| {
            let x = sampler.sample(n, &mut Seed(33).child(rep).stream(streams::DATA)).unwrap();
            coords
                .iter()
                .map(|&c| {
                    let (i, j) = kernel.pair(c);
                    tau_fast(x.column(i), x.column(j))
                })
                .collect()
        })
        .collect();
    let k = coords.len();
    let mean: Vec<f64> = (0..k).map(|a| draws.iter().map(|v| v[a]).sum::<f64>() / mc as f64).collect();
    let oracle = DMatrix::from_fn(k, k, |a, b| {
        n as f64 * draws.iter().map(|v| (v[a] - mean[a]) * (v[b] - mean[b])).sum::<f64>() / (mc - 1) as f64
    });

    let x = sampler.sample(n, &mut Seed(34).stream(streams::DATA)).unwrap();
    let u = compute_ustat(&x, &kernel, false).unwrap().u;
    let jk = jackknife_subset(&x, &kernel, &u, &coords).unwrap();
    let err = (&jk.zeta - &oracle).amax();
    assert!(err < 0.15, "max-norm distance {err}");
}

#[test]
fn hoeffding_is_conservative_under_independence() {
    let (n, d) = (500, 32);
    let sampler = CopulaSampler::new(&TauModel::custom(DMatrix::identity(d, d)).unwrap()).unwrap();
    let cfg = HdTestConfig { rho: 1.0, branch: BranchPolicy::Hoeffding, ..HdTestConfig::default() };
    let rate = rejection_rate(&sampler, n, 0.0, &cfg, 200, 35, |x, k, delta, c, b, s| {
        let stat = compute_ustat(x, k, false)?;
        hoeffding_test(&stat, delta, c, b, s)
    });
    assert!(rate <= 0.05, "{rate}");
}

#[test]
fn finite_dimensional_test_cases() {
    let tau = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let sampler = CopulaSampler::new(&TauModel::custom(tau).unwrap()).unwrap();
    let cfg = HdTestConfig { rho: 1.0, branch: BranchPolicy::Finite, ..HdTestConfig::default() };
    let run = |delta: f64, seed: u64| rejection_rate(&sampler, 1000, delta, &cfg, 200, seed, |x, k, d, c, b, s| finite_dim_test(x, k, d, c, b, s));
    let far_null = run(0.9, 36);
    let alternative = run(0.2, 37);
    let boundary = run(0.5, 38);
    assert!(far_null <= 0.02, "{far_null}");
    assert!(alternative >= 0.95, "{alternative}");
    assert!(boundary <= 0.05 + 0.03, "{boundary}");
}

#[test]
fn noiseless_pipeline_finds_planted_singleton() {
    let tau = {
        let mut t = DMatrix::identity(8, 8);
        t[(2, 5)] = 0.7;
        t[(5, 2)] = 0.7;
        t
    };
    let sampler = CopulaSampler::new(&TauModel::custom(tau).unwrap()).unwrap();
    let data = sampler.sample(500, &mut Seed(39).stream(streams::DATA)).unwrap();
    let kernel = KendallKernel::new(8).unwrap();
    let cfg = HdTestConfig { rho: f64::INFINITY, ..HdTestConfig::default() };
    let out = p_hd_u_test(&data, &kernel, 0.3, &cfg, &mut PrivacyBudget::unlimited(), Seed(39)).unwrap();
    assert_eq!(out.branch, dprel::Branch::Bootstrap);
    assert_eq!(out.extremal.unwrap().indices(), &[kernel.coord_of(2, 5).unwrap()]);
    assert!(out.reject);
}

#[test]
fn power_does_not_drop_with_more_data() {
    let grid = vec![0.45, 0.40, 0.35, 0.30];
    let rates = |n: usize| {
        let d = (2.0 * n as f64).sqrt().ceil() as usize;
        let mut c = ExperimentConfig::new(Design::F2, n, d, vec![1.0], grid.clone()).unwrap();
        c.seed = 40;
        let rows = run_power_experiment(&c).unwrap();
        grid.iter().map(|&g| lookup_rate(&rows, Method::Hdtest, 1.0, g).unwrap()).collect::<Vec<_>>()
    };
    let small = rates(250);
    let large = rates(1000);
    for ((s, l), g) in small.iter().zip(&large).zip(&grid) {
        assert!(l >= &(s - 0.05), "Delta {g}: n=1000 {l} vs n=250 {s}");
    }
}
