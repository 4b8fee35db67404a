use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use sgbd::diagnostics::ks_two_sample;
use sgbd::estimators::NoiseLaw;
use sgbd::gradients::{
    draw_batch, minibatch_gradient, noisy_exact_gradient, NoiseInjector, TauMode, TauTracker,
};
use sgbd::models::{synth_logreg_data, LogisticRegression, SynthOptions};
use sgbd::rng::stream_rng;
use sgbd::TargetModel;

/// Per-datum gradients fixed in advance, independent of θ.
struct Table {
    grads: Array2<f64>,
}

impl TargetModel for Table {
    fn dim(&self) -> usize {
        self.grads.ncols()
    }
    fn n_data(&self) -> usize {
        self.grads.nrows()
    }
    fn per_datum_grad_into(&self, i: usize, _theta: &[f64], out: &mut [f64]) {
        out.iter_mut().zip(self.grads.row(i)).for_each(|(o, g)| *o = *g);
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        let g = self.full_grad(theta);
        g.iter().zip(theta).map(|(a, b)| a * b).sum()
    }
}

fn logreg(n: usize, d: usize, seed: u64) -> LogisticRegression {
    let mut rng = stream_rng(seed, 0);
    let theta = vec![0.7; d];
    let (x, y) = synth_logreg_data(n, d, &theta, &SynthOptions::default(), &mut rng).unwrap();
    LogisticRegression::new(x, y).unwrap()
}

fn subsets(n_data: usize, n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n_data)
        .filter(|m| m.count_ones() as usize == n)
        .map(|m| (0..n_data).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

#[test]
fn unbiased_exhaustively_without_replacement() {
    let model = logreg(10, 3, 1);
    let theta = [0.3, -0.2, 1.1];
    let full = model.full_grad(&theta);
    for n in [1, 2, 4, 7, 10] {
        let all = subsets(10, n);
        let mut mean = [0.0; 3];
        for b in &all {
            let g = minibatch_gradient(&model, &theta, b).unwrap().value;
            for j in 0..3 {
                mean[j] += g[j] / all.len() as f64;
            }
        }
        for j in 0..3 {
            assert!((mean[j] - full[j]).abs() < 1e-12 * full[j].abs().max(1.0), "n {n}");
        }
    }
}

#[test]
fn unbiased_exhaustively_with_replacement() {
    let model = logreg(6, 2, 2);
    let theta = [0.5, 0.5];
    let full = model.full_grad(&theta);
    let mut mean = [0.0; 2];
    let count = 36.0;
    for a in 0..6 {
        for b in 0..6 {
            let g = minibatch_gradient(&model, &theta, &[a, b]).unwrap().value;
            mean[0] += g[0] / count;
            mean[1] += g[1] / count;
        }
    }
    for j in 0..2 {
        assert!((mean[j] - full[j]).abs() < 1e-12 * full[j].abs().max(1.0));
    }
}

#[test]
fn unbiased_by_monte_carlo() {
    let model = logreg(1000, 2, 3);
    let theta = [0.2, 0.9];
    let full = model.full_grad(&theta);
    let mut rng = stream_rng(4, 0);
    let draws = 100_000;
    for replacement in [false, true] {
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for _ in 0..draws {
            let b = draw_batch(1000, 10, replacement, &mut rng).unwrap();
            let g = minibatch_gradient(&model, &theta, &b).unwrap().value;
            for j in 0..2 {
                sum[j] += g[j];
                sq[j] += g[j] * g[j];
            }
        }
        for j in 0..2 {
            let m = sum[j] / draws as f64;
            let se = ((sq[j] / draws as f64 - m * m) / draws as f64).sqrt();
            assert!((m - full[j]).abs() < 3.0 * se, "j {j}: {m} vs {} (se {se})", full[j]);
        }
    }
}

#[test]
fn marginal_inclusion_probability() {
    let (n_data, n, draws) = (20, 5, 100_000);
    let mut rng = stream_rng(5, 0);
    let mut counts = vec![0usize; n_data];
    for _ in 0..draws {
        for i in draw_batch(n_data, n, false, &mut rng).unwrap() {
            counts[i] += 1;
        }
    }
    let p = n as f64 / n_data as f64;
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    for c in counts {
        assert!((c as f64 / draws as f64 - p).abs() < 3.0 * se);
    }
}

#[test]
fn tau_tracker_tracks_estimator_sd() {
    let (n_data, n, sd_i) = (10_000, 50, 2.0);
    let mut rng = stream_rng(6, 0);
    let grads = Array2::from_shape_fn((n_data, 1), |_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        3.0 + sd_i * z
    });
    let col = grads.column(0);
    let mean = col.mean().unwrap();
    let pop_sd = (col.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n_data as f64).sqrt();
    let fpc = ((n_data - n) as f64 / (n_data - 1) as f64).sqrt();
    let target = n_data as f64 / (n as f64).sqrt() * pop_sd * fpc;

    let model = Table { grads };
    let mut tracker = TauTracker::new(0.01, vec![0.0], TauMode::EstimatorScaled).unwrap();
    let mut rows = Array2::zeros((n, 1));
    let (mut acc, mut k) = (0.0, 0);
    for t in 0..20_000 {
        let b = draw_batch(n_data, n, false, &mut rng).unwrap();
        for (r, &i) in b.iter().enumerate() {
            rows[[r, 0]] = model.grads[[i, 0]];
        }
        tracker.update(rows.view(), n_data).unwrap();
        if t >= 10_000 {
            acc += tracker.tau_hat[0];
            k += 1;
        }
    }
    let long_run = acc / k as f64;
    assert!((long_run / target - 1.0).abs() < 0.05, "{long_run} vs {target}");
}

#[test]
fn injected_noise_is_symmetric() {
    let model = Table { grads: Array2::from_elem((1, 1), 0.0) };
    for law in NoiseLaw::ALL {
        let inj = NoiseInjector::new(law, 1.5).unwrap();
        let mut rng = stream_rng(7, law as u64);
        let eta: Vec<f64> =
            (0..100_000).map(|_| noisy_exact_gradient(&model, &[0.0], &inj, &mut rng).value[0]).collect();
        let neg: Vec<f64> = eta.iter().map(|e| -e).collect();
        let p = ks_two_sample(&eta, &neg).unwrap().p_value;
        assert!(p > 0.01, "{law}: p = {p}");
    }
}

#[test]
fn gaussian_injection_variance() {
    let model = Table { grads: Array2::from_elem((1, 1), 4.0) };
    let inj = NoiseInjector::new(NoiseLaw::Gaussian, 0.8).unwrap();
    let mut rng = stream_rng(8, 0);
    let n = 100_000;
    let eta: Vec<f64> = (0..n).map(|_| noisy_exact_gradient(&model, &[0.0], &inj, &mut rng).value[0] - 4.0).collect();
    let m = eta.iter().sum::<f64>() / n as f64;
    let var = eta.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / (n - 1) as f64;
    // sd of the sample variance of gaussian data is σ²·√(2/(n−1))
    let se = 0.64 * (2.0 / (n - 1) as f64).sqrt();
    assert!((var - 0.64).abs() < 3.0 * se, "{var}");
}

#[test]
fn cauchy_injection_median_is_zero() {
    let model = Table { grads: Array2::from_elem((1, 1), 0.0) };
    let inj = NoiseInjector::new(NoiseLaw::Cauchy, 2.0).unwrap();
    let mut rng = stream_rng(9, 0);
    let n = 100_000;
    let mut eta: Vec<f64> = (0..n).map(|_| noisy_exact_gradient(&model, &[0.0], &inj, &mut rng).value[0]).collect();
    eta.sort_by(f64::total_cmp);
    let med = 0.5 * (eta[n / 2 - 1] + eta[n / 2]);
    // asymptotic sd of the sample median: πγ / (2√n)
    let se = std::f64::consts::PI * 2.0 / (2.0 * (n as f64).sqrt());
    assert!(med.abs() < 3.0 * se, "{med}");
}
