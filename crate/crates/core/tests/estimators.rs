use dprtf_core::dprtf::{build_dictionary, DELTA_I_MAX};
use dprtf_core::estimators::{dprtf_errors, estimate_dprtf_cpsd, gcc_phat, vad_mask};
use dprtf_core::hrir::{synth_spherical_head, DoaGrid, HrirSet};
use dprtf_core::roomsim::{render_source, simulate_brir, RoomConfig};
use dprtf_core::signals::{stft_forward, StftConfig};
use dprtf_core::sources::{speech_like, white_noise};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn head() -> HrirSet {
    synth_spherical_head(0.0875, (-90.0, 90.0), &DoaGrid::standard(), 16000, 200).unwrap()
}

fn anechoic_capture(set: &HrirSet, azimuth: f64, seed: u64) -> [Vec<f64>; 2] {
    let room = RoomConfig::new([5.0, 7.0, 3.0], [2.5, 3.5, 1.5], 0.0);
    let brir = simulate_brir(&room, azimuth, 1.0, set, 0).unwrap();
    let src = speech_like(8192, 16000.0, &mut ChaCha8Rng::seed_from_u64(seed));
    render_source(&brir, &src).unwrap()
}

fn shifted(x: &[f64], delay: usize) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    y[delay..].copy_from_slice(&x[..x.len() - delay]);
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimate_ignores_common_scaling(seed in any::<u64>(), gain in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = white_noise(4096, &mut rng);
        let b = white_noise(4096, &mut rng);
        let c = StftConfig::default();
        let base = estimate_dprtf_cpsd(&stft_forward(&[&a, &b], &c).unwrap(), None, 20.0).unwrap();
        let sa: Vec<f64> = a.iter().map(|v| v * gain).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * gain).collect();
        let scaled = estimate_dprtf_cpsd(&stft_forward(&[&sa, &sb], &c).unwrap(), None, 20.0).unwrap();
        for (x, y) in base.vector.values().iter().zip(scaled.vector.values()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn gcc_phat_is_antisymmetric(seed in any::<u64>(), delay in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = white_noise(2048, &mut rng);
        let y = shifted(&x, delay);
        let fwd = gcc_phat(&x, &y, 20, 16000.0).unwrap();
        let rev = gcc_phat(&y, &x, 20, 16000.0).unwrap();
        prop_assert_eq!(fwd.lag, delay as i64);
        prop_assert_eq!(rev.lag, -fwd.lag);
        prop_assert!((fwd.tdoa + rev.tdoa).abs() < 1e-15);
    }

    #[test]
    fn lower_vad_threshold_never_adds_bins(seed in any::<u64>(), lo in 0.0f64..40.0, extra in 0.0f64..40.0) {
        let x = speech_like(4096, 16000.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let spec = stft_forward(&[&x, &x], &StftConfig::default()).unwrap();
        let spec = dprtf_core::signals::select_band(&spec).unwrap();
        let strict = vad_mask(&spec, lo);
        let loose = vad_mask(&spec, lo + extra);
        for n in 0..spec.frames() {
            for f in 0..spec.bins() {
                prop_assert!(!strict.get(n, f) || loose.get(n, f));
            }
        }
    }
}

#[test]
fn swapping_channels_negates_iid_and_ipd_sine() {
    let set = head();
    let [l, r] = anechoic_capture(&set, 40.0, 3);
    let c = StftConfig::default();
    let fwd = estimate_dprtf_cpsd(&stft_forward(&[&l, &r], &c).unwrap(), None, 20.0).unwrap();
    let rev = estimate_dprtf_cpsd(&stft_forward(&[&r, &l], &c).unwrap(), None, 20.0).unwrap();
    for k in 0..fwd.vector.bins() {
        // Only bins where the reversed cross-PSD ratio is not clamped.
        if fwd.vector.iid()[k].abs() < 0.9 {
            assert!(
                (fwd.vector.iid()[k] + rev.vector.iid()[k]).abs() < 0.05,
                "iid {k}"
            );
        }
        assert!(
            (fwd.vector.sin_ipd()[k] + rev.vector.sin_ipd()[k]).abs() < 0.05,
            "sin {k}"
        );
    }
}

#[test]
fn gcc_phat_finds_white_noise_delays() {
    let fs = 16000.0;
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let delay = rng.random_range(0..=10usize);
        let x = white_noise(4096, &mut rng);
        let noise_a = white_noise(4096, &mut rng);
        let noise_b = white_noise(4096, &mut rng);
        // 10 dB SNR on each channel.
        let g = 10f64.powf(-10.0 / 20.0);
        let a: Vec<f64> = x.iter().zip(&noise_a).map(|(s, n)| s + g * n).collect();
        let b: Vec<f64> = shifted(&x, delay)
            .iter()
            .zip(&noise_b)
            .map(|(s, n)| s + g * n)
            .collect();
        let est = gcc_phat(&a, &b, 16, fs).unwrap();
        if (est.lag - delay as i64).abs() <= 1 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits} of 100");
}

#[test]
fn clean_anechoic_estimate_is_close_to_the_dictionary() {
    let set = head();
    let dict = build_dictionary(
        &set,
        &DoaGrid::standard(),
        &StftConfig::default(),
        DELTA_I_MAX,
    )
    .unwrap();
    let [l, r] = anechoic_capture(&set, 30.0, 7);
    let spec = stft_forward(&[&l, &r], &StftConfig::default()).unwrap();
    let est = estimate_dprtf_cpsd(&spec, None, DELTA_I_MAX).unwrap();
    let truth = dict.entry(30.0).unwrap();
    let dist = est.vector.squared_distance(truth).sqrt() / (truth.values().len() as f64).sqrt();
    assert!(dist < 0.05, "normalized L2 {dist}");
    assert!(est.reliable.iter().all(|&r| r));
    let (iid, ipd) = dprtf_errors(&est.vector, truth, &vec![true; truth.bins()]).unwrap();
    assert!(iid < 1e-3 && ipd < 1e-2, "{iid} {ipd}");
}

#[test]
fn silent_bins_are_marked_unreliable() {
    let c = StftConfig::default();
    let spec = stft_forward(&[vec![0.0; 2048], vec![0.0; 2048]], &c).unwrap();
    let est = estimate_dprtf_cpsd(&spec, None, 20.0).unwrap();
    assert!(est.reliable.iter().all(|&r| !r));
    assert_eq!(est.vector, dprtf_core::dprtf::DpRtfVec::neutral(128));
}
