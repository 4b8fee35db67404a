use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sgbd::models::{synth_logreg_data, LogisticRegression, SkewNormal, StdNormal, SynthOptions};
use sgbd::rng::stream_rng;
use sgbd::samplers::{run_chain, SamplerConfig, Variant};
use sgbd::TargetModel;

/// Largest `|fd − g| / max(|g|, 1)` over coordinates, central differences with
/// step `1e-5·(1 + |θ_j|)`.
fn fd_error<M: TargetModel>(model: &M, theta: &[f64]) -> f64 {
    let g = model.full_grad(theta);
    let mut worst = 0.0f64;
    for j in 0..theta.len() {
        let h = 1e-5 * (1.0 + theta[j].abs());
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[j] += h;
        dn[j] -= h;
        let fd = (model.log_density(&up) - model.log_density(&dn)) / (up[j] - dn[j]);
        worst = worst.max((fd - g[j]).abs() / g[j].abs().max(1.0));
    }
    worst
}

fn random_points(d: usize, count: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| (0..d).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); spread * z }).collect())
        .collect()
}

fn small_logreg(n: usize, d: usize, seed: u64) -> LogisticRegression {
    let mut rng = stream_rng(seed, 0);
    let theta: Vec<f64> = (0..d).map(|k| 1.0 - 0.3 * k as f64).collect();
    let (x, y) = synth_logreg_data(n, d, &theta, &SynthOptions::default(), &mut rng).unwrap();
    LogisticRegression::new(x, y).unwrap()
}

#[test]
fn std_normal_gradient_is_minus_theta() {
    let model = StdNormal::new(4);
    for theta in random_points(4, 100, 3.0, 1) {
        let g = model.full_grad(&theta);
        assert!(g.iter().zip(&theta).all(|(a, b)| *a == -b));
        assert!(fd_error(&model, &theta) < 1e-5);
    }
}

#[test]
fn skew_normal_finite_differences() {
    for alpha in [0.0, 1.0, 5.0, 20.0] {
        let model = SkewNormal::new(alpha);
        for theta in random_points(1, 100, 2.0, 2) {
            let err = fd_error(&model, &theta);
            assert!(err < 1e-5, "alpha {alpha} theta {theta:?} err {err}");
        }
    }
}

#[test]
fn skew_normal_gradient_deep_in_left_tail() {
    let model = SkewNormal::new(20.0);
    for theta in [-1.6, -2.0, -5.0, -10.0] {
        let err = fd_error(&model, &[theta]);
        assert!(err < 1e-5, "theta {theta} err {err}");
    }
}

#[test]
fn logistic_finite_differences() {
    let model = small_logreg(200, 4, 3);
    for theta in random_points(4, 100, 1.5, 4) {
        let err = fd_error(&model, &theta);
        assert!(err < 1e-5, "err {err}");
    }
}

#[test]
fn logistic_per_datum_sum_identity() {
    let model = small_logreg(500, 5, 5);
    for theta in random_points(5, 20, 1.0, 6) {
        let full = model.full_grad(&theta);
        let mut sum = vec![0.0; 5];
        for i in 0..model.n_data() {
            for (s, g) in sum.iter_mut().zip(model.per_datum_grad(i, &theta)) {
                *s += g;
            }
        }
        // closed form: −θ + Σ xᵢ(yᵢ − sᵢ)
        let mut closed: Vec<f64> = theta.iter().map(|t| -t).collect();
        for i in 0..model.n_data() {
            let eta: f64 = (0..5).map(|j| model.x()[[i, j]] * theta[j]).sum();
            let s = 1.0 / (1.0 + (-eta).exp());
            for j in 0..5 {
                closed[j] += model.x()[[i, j]] * (model.y()[i] - s);
            }
        }
        for j in 0..5 {
            let scale = full[j].abs().max(1.0);
            assert!((sum[j] - full[j]).abs() <= 1e-10 * scale);
            assert!((closed[j] - full[j]).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn logistic_log_density_is_concave_along_lines() {
    let model = small_logreg(300, 3, 7);
    let mut rng = stream_rng(8, 0);
    for _ in 0..50 {
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let lhs = model.log_density(&mid);
        let rhs = 0.5 * (model.log_density(&a) + model.log_density(&b));
        assert!(lhs >= rhs - 1e-9);
    }
}

/// Composite Simpson rule on `[lo, hi]` with `2m` panels.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..n {
        acc += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn skew_normal_moments_match_quadrature() {
    for alpha in [0.0, 0.5, 5.0, 20.0] {
        let model = SkewNormal::new(alpha);
        let (m, sd) = (model.mean(), model.sd());
        let (lo, hi) = (m - 12.0 * sd, m + 12.0 * sd);
        let dens = |t: f64| model.density(t);
        let mass = simpson(dens, lo, hi, 200_000);
        let mean = simpson(|t| t * dens(t), lo, hi, 200_000);
        let second = simpson(|t| t * t * dens(t), lo, hi, 200_000);
        let qsd = (second - mean * mean).sqrt();
        assert!((mass - 1.0).abs() < 1e-6, "alpha {alpha} mass {mass}");
        assert!((mean - m).abs() < 1e-6, "alpha {alpha}: {mean} vs {m}");
        assert!((qsd - sd).abs() < 1e-6, "alpha {alpha}: {qsd} vs {sd}");
    }
}

#[test]
fn skew_normal_log_density_matches_density() {
    let model = SkewNormal::new(5.0);
    for t in [-0.5, 0.0, 0.3, 2.0] {
        assert!((model.log_density(&[t]) - model.density(t).ln()).abs() < 1e-12);
    }
}

#[test]
fn rescaled_column_shrinks_posterior_sd() {
    let mut rng = stream_rng(9, 0);
    let theta_true = [0.01, 0.5, -0.5];
    let options = SynthOptions { column_scale: Some((0, 100.0)) };
    let (x, y) = synth_logreg_data(500, 3, &theta_true, &options, &mut rng).unwrap();
    let model = LogisticRegression::new(x, y).unwrap();
    let config = SamplerConfig::new(Variant::ExactBarker, 0.005, 40_000).with_seed(10);
    let out = run_chain(&model, &config, &theta_true).unwrap();
    let sd = |col: usize| {
        let c = out.samples.column(col);
        let m = c.mean().unwrap();
        (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (c.len() - 1) as f64).sqrt()
    };
    let (s0, s1, s2) = (sd(0), sd(1), sd(2));
    assert!(s0 < 0.1 * s1.min(s2), "{s0} {s1} {s2}");
}

#[test]
fn synthetic_data_shape() {
    let mut rng = stream_rng(11, 0);
    let (x, y): (Array2<f64>, _) =
        synth_logreg_data(100, 7, &[0.0; 7], &SynthOptions::default(), &mut rng).unwrap();
    assert_eq!(x.dim(), (100, 7));
    assert_eq!(y.len(), 100);
}
