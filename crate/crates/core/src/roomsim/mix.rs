use crate::dsp::mean_power;
use crate::error::{Error, Result};

use super::Binaural;

fn binaural_power(x: &Binaural) -> f64 {
    0.5 * (mean_power(&x[0]) + mean_power(&x[1]))
}

/// Amplitude gain applied to `noise` so that the speech-to-noise power
/// ratio, with powers averaged over both channels and the whole signal,
/// equals `snr_db`. Returns 0 for `snr_db = +inf`.
pub fn snr_noise_gain(speech: &Binaural, noise: &Binaural, snr_db: f64) -> Result<f64> {
    let len = speech[0].len();
    if speech[1].len() != len || noise[0].len() != len || noise[1].len() != len {
        return Err(Error::Shape("speech and noise lengths differ".into()));
    }
    if snr_db.is_nan() {
        return Err(Error::invalid("SNR", "NaN"));
    }
    let ps = binaural_power(speech);
    if ps == 0.0 {
        return Err(Error::invalid("speech", "all-zero signal"));
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    let pn = binaural_power(noise);
    if pn == 0.0 {
        return Err(Error::invalid(
            "noise",
            "all-zero noise cannot reach a finite SNR",
        ));
    }
    Ok((ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// `speech + g * noise` with `g` from [`snr_noise_gain`].
pub fn mix_at_snr(speech: &Binaural, noise: &Binaural, snr_db: f64) -> Result<Binaural> {
    let g = snr_noise_gain(speech, noise, snr_db)?;
    if g == 0.0 {
        return Ok(speech.clone());
    }
    let ch = |s: &[f64], n: &[f64]| s.iter().zip(n).map(|(a, b)| a + g * b).collect();
    Ok([ch(&speech[0], &noise[0]), ch(&speech[1], &noise[1])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::white_noise;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(seed: u64, len: usize) -> Binaural {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        [white_noise(len, &mut rng), white_noise(len, &mut rng)]
    }

    #[test]
    fn equal_power_at_zero_db_is_unit_gain() {
        let s = [vec![1.0, -1.0], vec![1.0, -1.0]];
        let n = [vec![-1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(snr_noise_gain(&s, &n, 0.0).unwrap(), 1.0);
        assert!((snr_noise_gain(&s, &n, 20.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn infinite_snr_leaves_speech_unchanged() {
        let s = pair(1, 64);
        let n = pair(2, 64);
        assert_eq!(mix_at_snr(&s, &n, f64::INFINITY).unwrap(), s);
        let zero = [vec![0.0; 64], vec![0.0; 64]];
        assert_eq!(mix_at_snr(&s, &zero, f64::INFINITY).unwrap(), s);
    }

    #[test]
    fn measured_snr_matches_request() {
        let s = pair(3, 4000);
        let n = pair(4, 4000);
        for snr in [-5.0, 0.0, 7.5, 20.0] {
            let m = mix_at_snr(&s, &n, snr).unwrap();
            let resid: Binaural = [
                m[0].iter().zip(&s[0]).map(|(a, b)| a - b).collect(),
                m[1].iter().zip(&s[1]).map(|(a, b)| a - b).collect(),
            ];
            let measured = 10.0 * (binaural_power(&s) / binaural_power(&resid)).log10();
            assert!((measured - snr).abs() < 0.01, "{measured} vs {snr}");
        }
    }

    #[test]
    fn errors() {
        let s = pair(1, 16);
        let zero = [vec![0.0; 16], vec![0.0; 16]];
        assert!(mix_at_snr(&s, &zero, 10.0).is_err());
        assert!(mix_at_snr(&zero, &s, 10.0).is_err());
        assert!(mix_at_snr(&s, &pair(2, 15), 10.0).is_err());
    }
}
