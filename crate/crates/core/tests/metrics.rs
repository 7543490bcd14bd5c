use dprtf_core::metrics::{accuracy, mae, pd_far, sdr};
use proptest::prelude::*;

fn track() -> impl Strategy<Value = (Vec<Option<f64>>, Vec<f64>, Vec<bool>)> {
    (1usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::option::of(-90.0f64..90.0), n),
            prop::collection::vec(-90.0f64..90.0, n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

proptest! {
    #[test]
    fn wider_tolerance_detects_more(
        (est, truth, mut vad) in track(),
        tol in 0.0f64..45.0,
        extra in 0.0f64..45.0,
    ) {
        vad[0] = true;
        let narrow = pd_far(&est, &truth, &vad, tol, 62.5).unwrap();
        let wide = pd_far(&est, &truth, &vad, tol + extra, 62.5).unwrap();
        prop_assert!(wide.pd >= narrow.pd);
        prop_assert!(wide.far_per_s <= narrow.far_per_s);
        prop_assert!((0.0..=1.0).contains(&narrow.pd));
        prop_assert!(narrow.far_per_s >= 0.0 && narrow.far_per_s <= 62.5);
    }

    #[test]
    fn accuracy_and_mae_ranges(pairs in prop::collection::vec((-80i32..=80, -80i32..=80), 1..50)) {
        let est: Vec<f64> = pairs.iter().map(|p| (p.0 * 5) as f64 / 5.0).collect();
        let truth: Vec<f64> = pairs.iter().map(|p| (p.1 * 5) as f64 / 5.0).collect();
        let acc = accuracy(&est, &truth).unwrap();
        let m = mae(&est, &truth).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
        prop_assert!((0.0..=180.0).contains(&m));
        prop_assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        prop_assert_eq!(mae(&truth, &truth).unwrap(), 0.0);
        if acc == 1.0 {
            prop_assert_eq!(m, 0.0);
        }
    }

    #[test]
    fn sdr_is_scale_invariant(x in prop::collection::vec(-1.0f64..1.0, 16..64), noise in prop::collection::vec(-0.1f64..0.1, 64), g in 0.1f64..10.0) {
        let est: Vec<f64> = x.iter().zip(&noise).map(|(a, n)| a + n).collect();
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let scaled: Vec<f64> = est.iter().map(|v| v * g).collect();
        let a = sdr(&est, &x).unwrap();
        let b = sdr(&scaled, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-6 * a.abs().max(1.0));
    }
}

#[test]
fn mae_wraps_around_the_circle() {
    assert_eq!(mae(&[179.0], &[-179.0]).unwrap(), 2.0);
}
