use guessgame_core::analysis::aft::{fit, gradient_hessian, log_likelihood, AftData};
use guessgame_core::analysis::{fit_aft, spearman, standardize, summarize, AnalysisError};
use guessgame_core::model::{GameConfig, Outcome, Transcript};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

/// Spearman from the definition: rank_i = #below + (#equal + 1) / 2, then
/// the closed-form Pearson sums.
fn brute_spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64], i: usize| {
        let below = v.iter().filter(|w| **w < v[i]).count() as f64;
        let equal = v.iter().filter(|w| **w == v[i]).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let n = xs.len();
    let rx: Vec<f64> = (0..n).map(|i| rank(xs, i)).collect();
    let ry: Vec<f64> = (0..n).map(|i| rank(ys, i)).collect();
    let nf = n as f64;
    let sum_xy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let sum_xx: f64 = rx.iter().map(|a| a * a).sum();
    let sum_yy: f64 = ry.iter().map(|a| a * a).sum();
    let c = nf * ((nf + 1.0) / 2.0).powi(2);
    (sum_xy - c) / ((sum_xx - c) * (sum_yy - c)).sqrt()
}

#[test]
fn spearman_matches_brute_force_on_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.random_range(4..40);
        let xs: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..6u8)))
            .collect();
        let ys: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..6u8)))
            .collect();
        let Ok(r) = spearman(&xs, &ys) else { continue };
        let b = brute_spearman(&xs, &ys);
        assert!(
            (r.rho - b).abs() <= 1e-12,
            "{xs:?} {ys:?}: {} vs {b}",
            r.rho
        );
        assert!((0.0..=1.0).contains(&r.p_value));
        checked += 1;
    }
}

#[test]
fn spearman_small_tie_example() {
    let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((r.rho - brute_spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0])).abs() <= 1e-12);
}

#[test]
fn independent_samples_are_weakly_correlated() {
    let mut inside = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let ys: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        if spearman(&xs, &ys).unwrap().rho.abs() < 0.1 {
            inside += 1;
        }
    }
    assert!(inside >= 99, "{inside}");
}

proptest! {
    #[test]
    fn spearman_ignores_monotone_transforms(
        pairs in proptest::collection::vec((-50i32..50, -50i32..50), 3..30)
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        if let Ok(r) = spearman(&xs, &ys) {
            let tx: Vec<f64> = xs.iter().map(|x| (x / 10.0).exp()).collect();
            let ty: Vec<f64> = ys.iter().map(|y| -y * 3.0 + 7.0).collect();
            let t = spearman(&tx, &ty).unwrap();
            prop_assert!((t.rho + r.rho).abs() < 1e-12);
        }
    }
}

/// log T = 2.5 - 0.57 x + 0.5 e, right-censored at the 90% quantile of the
/// marginal of log T.
fn synthetic(seed: u64, n: usize, beta1: f64) -> (Vec<f64>, Vec<bool>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = (beta1 * beta1 + 0.25f64).sqrt();
    let cap = 2.5 + 1.281_551_565_544_600_5 * sd;
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut y = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = StandardNormal.sample(&mut rng);
        let yi = 2.5 + beta1 * xi + noise.sample(&mut rng);
        x.push(xi);
        c.push(yi > cap);
        y.push(yi.min(cap));
    }
    (y, c, x)
}

#[test]
fn aft_recovers_effect_size() {
    let mut passing = 0;
    for seed in 0..20 {
        let (y, c, x) = synthetic(seed, 2000, -0.57);
        let z = standardize(&x).unwrap();
        let f = fit_aft(&y, &c, &z).unwrap();
        // standardizing rescales the slope by the sample sd of x
        let sd = {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
        };
        let beta1 = f.beta[1] / sd;
        if (beta1 + 0.57).abs() <= 0.05 {
            passing += 1;
        }
        let censored = c.iter().filter(|v| **v).count() as f64 / c.len() as f64;
        assert!((0.07..0.13).contains(&censored), "{censored}");
        // accepted steps never lose more than rounding noise
        assert!(f
            .trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
    }
    assert!(passing >= 18, "{passing}/20");
}

#[test]
fn aft_null_covariate_is_not_significant() {
    let mut quiet = 0;
    for seed in 100..150 {
        let (y, c, _) = synthetic(seed, 300, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let noise: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let f = fit_aft(&y, &c, &standardize(&noise).unwrap()).unwrap();
        if f.p_values[1] > 0.05 {
            quiet += 1;
        }
    }
    assert!(quiet >= 45, "{quiet}/50");
}

#[test]
fn aft_gradient_matches_finite_differences() {
    let (y, c, x) = synthetic(7, 60, -0.57);
    let data = AftData::with_covariate(&y, &c, &x);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for _ in 0..100 {
        let theta = vec![
            rng.random_range(1.5..3.5),
            rng.random_range(-1.5..1.0),
            rng.random_range(-1.5f64..0.5),
        ];
        let (g, hess) = gradient_hessian(&theta, &data);
        for i in 0..3 {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (log_likelihood(&up, &data) - log_likelihood(&down, &data)) / (2.0 * h);
            let rel = (g[i] - fd).abs() / g[i].abs().max(1.0);
            assert!(rel < 1e-6, "theta {theta:?} dim {i}: {} vs {fd}", g[i]);
            // Hessian column from differenced gradients
            let (gu, _) = gradient_hessian(&up, &data);
            let (gd, _) = gradient_hessian(&down, &data);
            for j in 0..3 {
                let fdh = (gu[j] - gd[j]) / (2.0 * h);
                assert!((hess[j][i] - fdh).abs() / hess[j][i].abs().max(1.0) < 1e-5);
            }
        }
    }
}

#[test]
fn aft_rejects_all_censored() {
    let data = AftData::with_covariate(&[3.9; 20], &[true; 20], &[0.5; 20]);
    assert_eq!(fit(&data).unwrap_err(), AnalysisError::AllCensored);
}

#[test]
fn success_rate_interval_at_full_corpus_scale() {
    let games: Vec<Transcript> = (0..858)
        .map(|i| Transcript {
            game_id: format!("g{i}"),
            secret_object: "knife".into(),
            config: GameConfig::default(),
            turns: Vec::new(),
            outcome: if i < 338 {
                Outcome::Success
            } else {
                Outcome::Failure
            },
            turn_count: 0,
            error: None,
        })
        .collect();
    let s = summarize(&games, 0.6).unwrap();
    assert!((100.0 * s.sr - 39.4).abs() < 0.05);
    assert!(
        (100.0 * s.sr_ci - 3.27).abs() <= 0.01,
        "{}",
        100.0 * s.sr_ci
    );
}
