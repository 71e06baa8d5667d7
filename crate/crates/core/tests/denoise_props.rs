use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use redlab::denoise::{nlmeans_a_priori_threshold, reconstruction_bound};
use redlab::{nlmeans_classic, nlmeans_threshold, psnr, DenoiseConfig, Image, Offset, ThresholdMode};

fn random_image(w: usize, h: usize, seed: u64) -> Image {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(w, h, |_, _| r.random_range(0.0..255.0))
}

fn noise(w: usize, h: usize, sigma: f64, seed: u64) -> Image {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(w, h, |_, _| { let z: f64 = StandardNormal.sample(&mut r); sigma * z })
}

fn add(a: &Image, b: &Image) -> Image {
    Image::new(a.width(), a.height(), a.pixels().iter().zip(b.pixels()).map(|(x, y)| x + y).collect()).unwrap()
}

/// Every candidate patch averaged with equal weight, then averaged per pixel.
fn boxcar(u: &Image, p: usize, c: usize) -> Image {
    let (w, h) = u.dims();
    let (aw, ah) = (w - p + 1, h - p + 1);
    let mut sum = vec![0.0; w * h];
    let mut cover = vec![0.0; w * h];
    for ay in 0..ah {
        for ax in 0..aw {
            let ys = ay.saturating_sub(c)..=(ay + c).min(ah - 1);
            let xs = ax.saturating_sub(c)..=(ax + c).min(aw - 1);
            let n = (ys.clone().count() * xs.clone().count()) as f64;
            for dy in 0..p {
                for dx in 0..p {
                    let mut s = 0.0;
                    for by in ys.clone() {
                        for bx in xs.clone() {
                            s += u.get(bx + dx, by + dy);
                        }
                    }
                    sum[(ay + dy) * w + ax + dx] += s / n;
                    cover[(ay + dy) * w + ax + dx] += 1.0;
                }
            }
        }
    }
    Image::new(w, h, sum.iter().zip(&cover).map(|(s, n)| s / n).collect()).unwrap()
}

fn close(a: &Image, b: &Image, tol: f64) -> bool {
    a.pixels().iter().zip(b.pixels()).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(1.0))
}

#[test]
fn all_accept_limits_equal_boxcar_smoothing() {
    let u = random_image(12, 10, 1);
    let cfg = DenoiseConfig { sigma: 5.0, patch: 3, search_radius: 2, nfa_max: 0.0, mode: ThresholdMode::PerOffset };
    let want = boxcar(&u, 3, 2);
    let report = nlmeans_threshold(&u, &cfg).unwrap();
    assert!(close(&report.denoised, &want, 1e-12));
    assert!(report.selected.iter().zip(&report.candidates).all(|(n, t)| n == t));
    assert!(close(&nlmeans_classic(&u, &cfg, 1e12).unwrap().denoised, &want, 1e-9));
    assert!(close(&nlmeans_classic(&u, &cfg, 1e-6).unwrap().denoised, &u, 1e-12));
}

#[test]
fn constant_image_is_a_fixed_point() {
    let u = Image::constant(20, 20, 77.0);
    for mode in [ThresholdMode::PerOffset, ThresholdMode::ConstantMean] {
        let cfg = DenoiseConfig { sigma: 10.0, patch: 4, search_radius: 3, nfa_max: 0.5, mode };
        let r = nlmeans_threshold(&u, &cfg).unwrap();
        assert!(r.denoised.pixels().iter().all(|&v| (v - 77.0).abs() < 1e-12));
        assert!(r.selected.iter().zip(&r.candidates).all(|(n, t)| n == t));
    }
}

#[test]
fn selection_counts_are_bounded() {
    let u = add(&random_image(24, 24, 2), &noise(24, 24, 20.0, 3));
    let cfg = DenoiseConfig { sigma: 20.0, patch: 5, search_radius: 4, nfa_max: 0.81, mode: ThresholdMode::ConstantMean };
    let r = nlmeans_threshold(&u, &cfg).unwrap();
    assert_eq!(r.selected.len(), 20 * 20);
    for (&n, &t) in r.selected.iter().zip(&r.candidates) {
        assert!(1 <= n && n <= t && t <= 81);
    }
    assert_eq!(r.selected_histogram().iter().sum::<usize>(), 400);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let u = add(&random_image(40, 40, 4), &noise(40, 40, 15.0, 5));
    let cfg = DenoiseConfig { sigma: 15.0, patch: 6, search_radius: 5, nfa_max: 1.21, mode: ThresholdMode::ConstantMean };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            (nlmeans_threshold(&u, &cfg).unwrap().denoised, nlmeans_classic(&u, &cfg, 300.0).unwrap().denoised)
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn thresholds_are_symmetric_and_flatten_beyond_the_patch() {
    let th = nlmeans_a_priori_threshold(8, 10, 4.41).unwrap();
    for y in -10..=10 {
        for x in -10..=10 {
            let t = Offset::new(x, y);
            assert_eq!(th.get(t), th.get(Offset::new(-x, -y)));
        }
    }
    let far = th.get(Offset::new(8, 0));
    for (x, y) in [(9, 3), (-10, 10), (2, -8), (8, 8)] {
        assert!((th.get(Offset::new(x, y)) - far).abs() < 1e-9 * far);
    }
    for axis in [|k| Offset::new(k, 0), |k| Offset::new(0, k)] {
        for k in 1..8 {
            assert!(th.get(axis(k + 1)) <= th.get(axis(k)) + 1e-9, "axis step {k}");
        }
    }
    assert!(nlmeans_a_priori_threshold(8, 10, 441.0).is_err());
}

#[test]
fn rejection_tail_obeys_the_markov_bound() {
    let cfg = DenoiseConfig { sigma: 1.0, patch: 8, search_radius: 10, nfa_max: 4.41, mode: ThresholdMode::PerOffset };
    let mut rejected = Vec::new();
    for seed in 0..4 {
        let r = nlmeans_threshold(&noise(64, 64, 1.0, 40 + seed), &cfg).unwrap();
        rejected.extend(r.selected.iter().zip(&r.candidates).filter(|(_, &t)| t == 441).map(|(&n, &t)| (t - n) as f64));
    }
    let total = rejected.len() as f64;
    for n in [5.0, 10.0, 20.0] {
        let frac = rejected.iter().filter(|&&k| k >= n).count() as f64 / total;
        assert!(frac <= cfg.nfa_max / n, "P[rejected >= {n}] = {frac}");
    }
}

#[test]
fn stripes_gain_at_least_three_decibels() {
    let clean = Image::from_fn(64, 64, |x, _| if (x / 4) % 2 == 0 { 60.0 } else { 190.0 });
    let noisy = add(&clean, &noise(64, 64, 20.0, 6));
    let r = nlmeans_threshold(&noisy, &DenoiseConfig::with_sigma(20.0)).unwrap();
    assert!(psnr(&clean, &r.denoised).unwrap() >= psnr(&clean, &noisy).unwrap() + 3.0);
}

#[test]
fn psnr_reference_values() {
    let u = Image::constant(7, 5, 255.0);
    assert_eq!(psnr(&u, &u).unwrap(), f64::INFINITY);
    let v = Image::constant(7, 5, 254.0);
    assert!((psnr(&u, &v).unwrap() - 20.0 * 255f64.log10()).abs() < 1e-12);
    let mut clean = random_image(256, 256, 7);
    clean.set(0, 0, 255.0);
    let noisy = add(&clean, &noise(256, 256, 10.0, 8));
    assert!((psnr(&clean, &noisy).unwrap() - 20.0 * 25.5f64.log10()).abs() < 0.1);
    assert!(psnr(&Image::zeros(3, 3), &u.map(|_| 1.0)).is_err());
}

#[test]
fn reconstruction_bound_reference_values() {
    let cfg = DenoiseConfig::with_sigma(1.0);
    let a_t = nlmeans_a_priori_threshold(8, 10, cfg.nfa_max).unwrap().max;
    let r = reconstruction_bound(&cfg, 0.05).unwrap();
    // χ²₆₄ quantile at 0.95 is 83.675, √ = 9.1474.
    assert!((r - (a_t.sqrt() + 9.147_418)).abs() < 1e-3, "{r}");
    let doubled = reconstruction_bound(&DenoiseConfig::with_sigma(2.0), 0.05).unwrap();
    assert!((doubled - 2.0 * r).abs() < 1e-9 * r);
    let radii: Vec<f64> = [0.05, 0.5, 0.9, 1.0 - 1e-6].iter().map(|&e| reconstruction_bound(&cfg, e).unwrap()).collect();
    assert!(radii.windows(2).all(|w| w[1] < w[0]));
    assert!(radii.iter().all(|&r| r > a_t.sqrt()));
}
