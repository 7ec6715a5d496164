use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use trendband::rng::substream;
use trendband::spectral::{argmin_m, fourier_fit, fourier_table, frequency_grid, lomb_scargle};
use trendband::ObservedSeries;

/// Daily time axis over `years` years in fractional-year units.
fn daily(years: usize) -> Vec<f64> {
    (0..years * 365).map(|d| d as f64 / 365.0).collect()
}

fn masked(y: Vec<f64>, keep: f64, seed: u64) -> ObservedSeries {
    let mut rng = substream(seed, 1);
    let mut d: Vec<bool> = (0..y.len()).map(|_| rng.random::<f64>() < keep).collect();
    d[0] = true;
    ObservedSeries::new(y, d).unwrap()
}

#[test]
fn bic_recovers_two_harmonics() {
    let t = daily(4);
    let mut hits = 0;
    for seed in 0..200 {
        let mut rng = substream(seed, 0);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let y: Vec<f64> = t
            .iter()
            .map(|&x| {
                (2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).sin() + noise.sample(&mut rng)
            })
            .collect();
        let s = masked(y, 0.5, seed);
        let table = fourier_table(&s, &t, 7).unwrap();
        if argmin_m(&table, |ic| ic.bic) == Some(2) {
            hits += 1;
        }
        for w in table.windows(2) {
            assert!(w[1].1.mse <= w[0].1.mse + 1e-12);
        }
    }
    assert!(hits >= 190, "bic selected M = 2 in {hits} of 200 runs");
}

#[test]
fn fourier_ignores_missing_values() {
    let t = daily(2);
    let y: Vec<f64> = t.iter().map(|&x| (2.0 * PI * x).sin() + x).collect();
    let s = masked(y.clone(), 0.4, 3);
    let p = s
        .with_values((0..y.len()).map(|i| if s.is_observed(i) { y[i] } else { 1e6 }).collect())
        .unwrap();
    assert_eq!(fourier_fit(&s, &t, 3).unwrap(), fourier_fit(&p, &t, 3).unwrap());
}

#[test]
fn lomb_scargle_finds_annual_cycle() {
    let t = daily(6);
    let freqs = frequency_grid(0.1, 6.0, 0.01).unwrap();
    for seed in 0..20 {
        let mut rng = substream(seed, 0);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let y: Vec<f64> = t.iter().map(|&x| (2.0 * PI * x).sin() + noise.sample(&mut rng)).collect();
        let s = masked(y, 0.3, seed);
        let p = lomb_scargle(&s, &t, &freqs).unwrap();
        assert!(p.power.iter().all(|&v| v >= 0.0));
        let pk = p.peak_frequency().unwrap();
        assert!((pk - 1.0).abs() <= 0.01 + 1e-9, "seed {seed}: peak {pk}");
        let shifted = s.with_values(s.values().iter().map(|v| v + 100.0).collect()).unwrap();
        let q = lomb_scargle(&shifted, &t, &freqs).unwrap();
        for (a, b) in p.power.iter().zip(&q.power) {
            assert!((a - b).abs() < 1e-6 * (1.0 + a));
        }
    }
}

#[test]
fn white_noise_has_no_persistent_peak() {
    let t = daily(4);
    let freqs = frequency_grid(0.1, 6.0, 0.01).unwrap();
    let mut peaks = Vec::new();
    for seed in 0..10 {
        let mut rng = substream(seed, 5);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let y: Vec<f64> = t.iter().map(|_| noise.sample(&mut rng)).collect();
        let s = masked(y, 0.5, seed);
        let p = lomb_scargle(&s, &t, &freqs).unwrap();
        let max = p.power.iter().cloned().fold(0.0, f64::max);
        // exponential(1) maxima over ~600 frequencies stay near ln(600) ≈ 6.4
        assert!(max < 3.0 * (freqs.len() as f64).ln(), "{max}");
        peaks.push(p.peak_frequency().unwrap());
    }
    peaks.sort_by(f64::total_cmp);
    peaks.dedup_by(|a, b| (*a - *b).abs() < 0.02);
    assert!(peaks.len() >= 5, "peaks cluster: {peaks:?}");
}
