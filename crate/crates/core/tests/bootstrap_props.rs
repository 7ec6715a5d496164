use proptest::prelude::*;
use trendband::bootstrap::{
    awb_multipliers, bartlett, bootstrap_sample, dwb_multipliers, ell_from_gamma, DwbFactor,
};
use trendband::rng::substream;
use trendband::simulation::{simulate_series, Missingness, SimulationConfig, TrendParams, Volatility};
use trendband::{run_bootstrap, AwbTuning, Bandwidth, BootstrapConfig, EvalGrid, Method, ObservedSeries};

fn autocorr(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let cov = (0..n - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum::<f64>() / n as f64;
    cov / var
}

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

#[test]
fn awb_moment_suite() {
    let n = 100_000;
    let se = 3.0 / (n as f64).sqrt();
    for (k, &gamma) in [0.0, 0.2, 0.4, 0.6].iter().enumerate() {
        let xi = awb_multipliers(n, gamma, &mut substream(101, k as u64)).unwrap();
        let (mean, var) = moments(&xi);
        // AR(1) mean has long-run sd sqrt((1+γ)/(1-γ)/n)
        assert!(mean.abs() < 3.0 * ((1.0 + gamma) / (1.0 - gamma) / n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt() * (1.0 + gamma) / (1.0 - gamma), "var {var}");
        for lag in 1..=3 {
            let r = autocorr(&xi, lag);
            assert!((r - gamma.powi(lag as i32)).abs() < se, "gamma {gamma} lag {lag}: {r}");
        }
    }
}

#[test]
fn dwb_moment_suite() {
    let n = 100_000;
    let se = 3.0 / (n as f64).sqrt();
    for (k, &ell) in [1.0, 2.861, 5.0].iter().enumerate() {
        let xi = dwb_multipliers(n, ell, &mut substream(202, k as u64)).unwrap();
        let (mean, var) = moments(&xi);
        assert!(mean.abs() < 3.0 * (ell / n as f64).sqrt());
        assert!((var - 1.0).abs() < 3.0 * (2.0 * ell / n as f64).sqrt());
        let cutoff = (ell as f64).ceil() as usize;
        for lag in 1..cutoff + 3 {
            let r = autocorr(&xi, lag);
            // Bartlett's formula for the standard error of an ℓ-dependent sample autocorrelation
            let q = (1..cutoff).map(|k| bartlett(k, ell).powi(2)).sum::<f64>();
            let tol = se * (1.0 + 2.0 * q).sqrt();
            assert!((r - bartlett(lag, ell)).abs() < tol, "ell {ell} lag {lag}: {r}");
        }
    }
}

#[test]
fn dwb_constructed_covariance_is_bartlett() {
    for &ell in &[1.0, 1.5, 2.861, 5.0, 7.25] {
        let f = DwbFactor::new(60, ell).unwrap();
        let cutoff = (ell as f64).ceil() as usize;
        for i in 0..60 {
            for j in 0..60 {
                let c = f.covariance(i, j);
                let lag = i.abs_diff(j);
                if lag >= cutoff {
                    assert_eq!(c, 0.0, "ell {ell} lag {lag}");
                } else {
                    assert!((c - bartlett(lag, ell)).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn awb_gamma_zero_is_wild_bootstrap() {
    let cfg = sim_config(Missingness::None, 0.0);
    let s = simulate_series(&cfg, 3).unwrap();
    let grid = EvalGrid::interior(s.len(), 0.1).unwrap();
    let h = Bandwidth::new(0.06).unwrap();
    let awb = BootstrapConfig::new(Method::Awb(AwbTuning::Gamma(0.0)), h).unwrap().with_replications(200).with_seed(8);
    let wb = BootstrapConfig::new(Method::Wb, h).unwrap().with_replications(200).with_seed(8);
    let a = run_bootstrap(&s, &awb, &grid).unwrap();
    let b = run_bootstrap(&s, &wb, &grid).unwrap();
    assert_eq!(a.draws, b.draws);

    // independent seeds: pooled draws at one point agree in location
    let wb2 = wb.clone().with_replications(10_000).with_seed(99);
    let awb2 = awb.clone().with_replications(10_000).with_seed(100);
    let j = grid.len() / 2;
    let x = run_bootstrap(&s, &awb2, &grid).unwrap().draws.column(j);
    let y = run_bootstrap(&s, &wb2, &grid).unwrap().draws.column(j);
    let (mx, vx) = moments(&x);
    let (my, vy) = moments(&y);
    let z = (mx - my) / ((vx + vy) / 10_000.0).sqrt();
    assert!(z.abs() < 2.576, "location test z = {z}");
}

fn sim_config(missing: Missingness, phi: f64) -> SimulationConfig {
    let h = Bandwidth::new(0.06).unwrap();
    SimulationConfig {
        n: if missing == Missingness::None { 200 } else { 666 },
        trend: TrendParams::PAPER,
        phi,
        psi: 0.0,
        vol: Volatility::paper(0.5, 4.0),
        missing,
        mc_reps: 1,
        bootstrap: BootstrapConfig::new(Method::Awb(AwbTuning::Gamma(0.2)), h).unwrap(),
        alpha: 0.05,
        seed: 1,
    }
}

#[test]
fn determinism_across_thread_counts() {
    let s = simulate_series(&sim_config(Missingness::PAPER, 0.2), 17).unwrap();
    let grid = EvalGrid::interior(s.len(), 0.05).unwrap();
    let ell = ell_from_gamma(0.01, 0.4).unwrap();
    for method in [Method::Awb(AwbTuning::Gamma(0.4)), Method::Dwb { ell }, Method::Wb] {
        let cfg = BootstrapConfig::new(method, Bandwidth::new(0.06).unwrap()).unwrap().with_replications(64).with_seed(5);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_bootstrap(&s, &cfg, &grid).unwrap().draws)
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run_bootstrap(&s, &cfg, &grid).unwrap().draws);
        assert_eq!(one.replications, 64);
        assert_eq!(one.width(), grid.len());
    }
}

#[test]
fn draws_are_centered_re_estimates() {
    let s = simulate_series(&sim_config(Missingness::PAPER, 0.0), 4).unwrap();
    let grid = EvalGrid::new(vec![0.25, 0.5, 0.75]).unwrap();
    let cfg = BootstrapConfig::new(Method::Awb(AwbTuning::Gamma(0.3)), Bandwidth::new(0.06).unwrap())
        .unwrap()
        .with_replications(5)
        .with_seed(77);
    let out = run_bootstrap(&s, &cfg, &grid).unwrap();
    let gamma = 0.3;
    for b in 0..5 {
        let xi = awb_multipliers(s.len(), gamma, &mut substream(77, b as u64)).unwrap();
        let ystar = bootstrap_sample(&s, &out.residuals.values, &out.residuals.pilot, &xi).unwrap();
        assert_eq!(ystar.observed(), s.observed());
        for (j, &tau) in grid.points().iter().enumerate() {
            let m = trendband::local_constant(&ystar, cfg.h, tau).unwrap().unwrap();
            let want = m - out.m_tilde.get(j).unwrap();
            assert!((out.draws.get(b, j) - want).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sample_keeps_missing_pattern(
        d in prop::collection::vec(any::<bool>(), 5..80),
        seed in any::<u64>(),
    ) {
        let mut d = d;
        d[0] = true;
        let n = d.len();
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let s = ObservedSeries::new(y, d.clone()).unwrap();
        let xi = awb_multipliers(n, 0.5, &mut substream(seed, 0)).unwrap();
        let z: Vec<f64> = (0..n).map(|i| if d[i] { 1.0 } else { 0.0 }).collect();
        let pilot = vec![2.0; n];
        let out = bootstrap_sample(&s, &z, &pilot, &xi).unwrap();
        prop_assert_eq!(out.observed(), &d[..]);
        for i in 0..n {
            if d[i] {
                prop_assert_eq!(out.values()[i], 2.0 + xi[i]);
            }
        }
        let zero = bootstrap_sample(&s, &vec![0.0; n], &pilot, &xi).unwrap();
        for i in (0..n).filter(|&i| d[i]) {
            prop_assert_eq!(zero.values()[i], 2.0);
        }
    }
}
