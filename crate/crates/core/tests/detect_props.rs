use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use redlab::detect::{ap, threshold_a, DetectionLaws};
use redlab::{autosim_detection, Image, MicrotextureModel, Offset, OffsetMask, PatchDomain};

fn textured(seed: u64) -> Image {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let motif = [0.0, 3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0];
    Image::from_fn(32, 32, |x, y| {
        let z: f64 = StandardNormal.sample(&mut r);
        motif[x % 8] + motif[(y * 3) % 8] + 0.3 * z
    })
}

#[test]
fn probability_and_statistic_thresholding_agree() {
    let u = textured(1);
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let exemplar = Image::from_fn(32, 32, |_, _| StandardNormal.sample(&mut r));
    let model = MicrotextureModel::from_exemplar(&exemplar);
    let omega = PatchDomain::square(3, 7, 5).unwrap();
    let nfa = 1.0;
    let q = nfa / u.len() as f64;
    let result = autosim_detection(&u, &omega, &model, nfa, &OffsetMask::All).unwrap();
    let laws = DetectionLaws::compute(&model, &omega, &OffsetMask::All).unwrap();
    let thresholds = laws.thresholds(q).unwrap();
    assert!(result.count() > 0);
    for (i, a) in thresholds.iter().enumerate().skip(1) {
        let a = a.expect("unmasked");
        let s = result.as_map.values()[i];
        if (s - a).abs() <= 1e-6 * a.max(1.0) {
            continue;
        }
        assert_eq!(result.d_map.values()[i] == 1.0, s <= a, "offset index {i}: AS {s}, a {a}");
    }
    assert!(!result.is_detected(Offset::new(0, 0)));
    assert!(result.p_map.values().iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn raising_nfa_only_adds_detections() {
    let u = textured(2);
    let model = MicrotextureModel::from_exemplar(&u);
    let omega = PatchDomain::square(0, 0, 4).unwrap();
    let laws = DetectionLaws::compute(&model, &omega, &OffsetMask::All).unwrap();
    let mut previous: Option<Vec<f64>> = None;
    for nfa in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let d = redlab::detect::detect_with_laws(&u, &omega, &model, &laws, nfa).unwrap().d_map;
        if let Some(prev) = &previous {
            assert!(prev.iter().zip(d.values()).all(|(a, b)| *a <= *b), "nfa {nfa} lost a detection");
        }
        previous = Some(d.values().to_vec());
    }
}

#[test]
fn periodic_image_is_detected_at_every_period() {
    let u = Image::from_fn(32, 32, |x, _| [1.0, 7.0, 2.0, 9.0, 4.0, 0.0, 3.0, 5.0][x % 8]);
    let model = MicrotextureModel::white_noise(32, 32);
    let omega = PatchDomain::square(4, 4, 6).unwrap();
    let r = autosim_detection(&u, &omega, &model, 1.0, &OffsetMask::All).unwrap();
    for ty in 0..32 {
        for k in 0..4 {
            let t = Offset::new(8 * k, ty);
            assert_eq!(r.is_detected(t), !(k == 0 && ty == 0), "{t:?}");
        }
    }
    assert_eq!(r.count(), 4 * 32 - 1);
}

#[test]
fn constant_image_yields_no_detection() {
    let u = Image::constant(16, 16, 12.0);
    let model = MicrotextureModel::from_exemplar(&u);
    let r = autosim_detection(&u, &PatchDomain::square(0, 0, 4).unwrap(), &model, 1.0, &OffsetMask::All).unwrap();
    assert_eq!(r.count(), 0);
    assert!(r.p_map.values().iter().all(|&p| p == 1.0));
}

#[test]
fn probability_helpers() {
    let model = MicrotextureModel::white_noise(32, 32);
    let omega = PatchDomain::square(0, 0, 8).unwrap();
    assert_eq!(ap(&model, Offset::new(0, 0), &omega, 0.0).unwrap(), 1.0);
    assert_eq!(threshold_a(&model, Offset::new(0, 0), &omega, 0.3).unwrap(), 0.0);
    assert!(ap(&model, Offset::new(2, 5), &omega, 0.0).unwrap() < 1e-8);
    let exemplar = MicrotextureModel::from_exemplar(&textured(3));
    let t = Offset::new(5, -2);
    let small = threshold_a(&exemplar, t, &omega, 0.01).unwrap();
    let median = threshold_a(&exemplar, t, &omega, 0.5).unwrap();
    assert!(small < median);
    assert!((ap(&exemplar, t, &omega, median).unwrap() - 0.5).abs() < 1e-6);
    assert!(threshold_a(&model, t, &omega, 1.5).is_err());
}
