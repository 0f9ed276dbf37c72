mod common;

use common::*;
use proptest::prelude::*;

use eeg_emotion::features::{
    band_power, extract_features, pearson_correlation, psd_stats, read_feature_matrix, welch_psd,
    FeatureConfig, FeatureExtractor, Standardizer, WelchSpec,
};
use eeg_emotion::synth::SynthConfig;
use eeg_emotion::{ChannelId, EmotionLabel, FeatureVector, Recording, Trial, BANDS, FEATURE_COUNT};

#[test]
fn sinusoid_power_lands_in_alpha() {
    let x = sine(10.0, 1.0, FS, 8.0);
    let spec = welch_psd(&x, FS, &WelchSpec::default()).unwrap();
    let total = spec.integrate(0.0, FS / 2.0).unwrap();
    let variance = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    assert!((total - variance).abs() / variance < 0.02);
    let alpha = band_power(&spec, &BANDS[2]).unwrap();
    assert!((alpha - 0.5).abs() / 0.5 < 0.05, "alpha {alpha}");
    for (b, band) in BANDS.iter().enumerate() {
        if b != 2 {
            assert!(band_power(&spec, band).unwrap() <= 0.02 * total, "{band:?}");
        }
    }
    assert!(band_power(&spec, &BANDS[4]).unwrap() <= 0.01);
}

#[test]
fn white_noise_parseval_and_band_fraction() {
    let x = white(60 * 256, 11);
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let spec = welch_psd(&x, FS, &WelchSpec::default()).unwrap();
    let total = spec.integrate(0.0, FS / 2.0).unwrap();
    assert!((total - var).abs() / var < 0.1, "{total} vs {var}");
    let bands: f64 = BANDS.iter().map(|b| band_power(&spec, b).unwrap()).sum();
    let expected = 50.0 / 128.0 * var;
    assert!((bands - expected).abs() / expected < 0.15, "{bands} vs {expected}");
}

#[test]
fn white_noise_bands_account_for_broadband_power_after_smoothing() {
    let t = trial_from_channels(std::array::from_fn(|c| white(30 * 256, 20 + c as u64)), EmotionLabel::Happy);
    let clean = eeg_emotion::preprocess::preprocess_trial(&t, &Default::default()).unwrap();
    let v = extract_features(&clean).unwrap();
    for ch in ChannelId::ALL {
        let x = clean.recording.channel(ch);
        let spec = welch_psd(&x, FS, &WelchSpec::default()).unwrap();
        let broad = spec.integrate(0.5, 50.0).unwrap();
        let sum: f64 = (0..5).map(|b| v.0[FeatureVector::band_power_index(ch, b)]).sum();
        assert!((sum - broad).abs() / broad < 0.1, "{ch}: {sum} vs {broad}");
        let full = spec.integrate(0.0, FS / 2.0).unwrap();
        assert!(sum <= full * 1.01);
    }
}

#[test]
fn zero_signal_gives_zero_spectrum() {
    let spec = welch_psd(&[0.0; 2048], FS, &WelchSpec::default()).unwrap();
    assert!(spec.power.iter().all(|&p| p == 0.0));
    assert_eq!(psd_stats(&spec, (0.5, 50.0)).unwrap(), (0.0, 0.0));
}

#[test]
fn independent_noise_is_uncorrelated() {
    let a = white(10_000, 1);
    let b = white(10_000, 2);
    assert!(pearson_correlation(&a, &b).unwrap().abs() < 0.05);
}

fn mirrored_trial(seed_value: u64) -> Trial {
    let left_t = white(8 * 256, seed_value);
    let left_f: Vec<f64> = white(8 * 256, seed_value + 1).iter().zip(sine(10.0, 3.0, FS, 8.0)).map(|(a, b)| a + b).collect();
    // channel order TP9, AF7, AF8, TP10: right side copies the left
    trial_from_channels([left_t.clone(), left_f.clone(), left_f, left_t], EmotionLabel::Relaxed)
}

#[test]
fn mirrored_hemispheres_give_neutral_asymmetry() {
    let v = extract_features(&mirrored_trial(3)).unwrap();
    for k in 0..2 {
        assert!((v.0[FeatureVector::CORRELATION.start + k] - 1.0).abs() <= 1e-9);
        assert!(v.0[FeatureVector::DASM.start + k].abs() <= 1e-9);
        assert!((v.0[FeatureVector::RASM.start + k] - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn constant_channel_is_flagged() {
    let t = trial_from_channels([vec![1.0; 2048], white(2048, 1), white(2048, 2), white(2048, 3)], EmotionLabel::Happy);
    let err = extract_features(&t).unwrap_err();
    assert!(matches!(err, eeg_emotion::Error::UndefinedCorrelation(_)), "{err}");
}

#[test]
fn extractor_refuses_unimputed_or_mismatched_input() {
    let mut t = mirrored_trial(4);
    t.recording.missing[3][1] = true;
    assert!(extract_features(&t).is_err());
    let ex = FeatureExtractor::new(FeatureConfig::default(), 512.0).unwrap();
    assert!(ex.extract(&mirrored_trial(4)).is_err());
    assert!(FeatureExtractor::new(FeatureConfig::default(), 90.0).is_err());
}

fn scaled(t: &Trial, k: f64) -> Trial {
    let mut s = t.clone();
    for row in &mut s.recording.samples {
        for v in row.iter_mut() {
            *v *= k;
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn amplitude_scaling_laws(seed_value in 0u64..10_000, k in 0.1f64..10.0) {
        let t = trial_from_channels(std::array::from_fn(|c| white(1024, seed_value * 4 + c as u64)), EmotionLabel::Angry);
        let a = extract_features(&t).unwrap().0;
        let b = extract_features(&scaled(&t, k)).unwrap().0;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-12);
        for i in FeatureVector::BAND_POWER.chain(FeatureVector::DASM).chain(FeatureVector::PSD_STATS) {
            let factor = if FeatureVector::PSD_STATS.contains(&i) && (i - FeatureVector::PSD_STATS.start) % 2 == 1 { k.powi(4) } else { k * k };
            prop_assert!(close(b[i], factor * a[i]), "feature {} {} vs {}", i, b[i], factor * a[i]);
        }
        for i in FeatureVector::CORRELATION.chain(FeatureVector::RASM) {
            prop_assert!(close(b[i], a[i]));
        }
        for k2 in 0..2 {
            let r = a[FeatureVector::CORRELATION.start + k2];
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!(a[FeatureVector::RASM.start + k2] > 0.0);
        }
        prop_assert!(a[FeatureVector::BAND_POWER].iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn standardized_training_rows_have_zero_mean_unit_variance(
        rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 6), 3..30)
    ) {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = Standardizer::fit(&refs).unwrap();
        let z: Vec<Vec<f64>> = refs.iter().map(|r| s.transform(r).unwrap()).collect();
        for d in 0..6 {
            let col: Vec<f64> = z.iter().map(|r| r[d]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
            if !s.passthrough.contains(&d) {
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }
    }
}

fn mean_alpha(cfg: &SynthConfig, label: EmotionLabel) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for s in 0..4 {
        for v in 0..2 {
            let f = extract_features(&clean_synth_trial(cfg, label, s, v)).unwrap();
            for ch in ChannelId::ALL {
                total += f.0[FeatureVector::band_power_index(ch, 2)];
                n += 1;
            }
        }
    }
    total / n as f64
}

#[test]
fn synthetic_class_profiles_are_recoverable() {
    let cfg = SynthConfig { duration_s: 10.0, ..SynthConfig::default() };
    let happy = clean_synth_trial(&cfg, EmotionLabel::Happy, 0, 0);
    let f = extract_features(&happy).unwrap();
    for ch in ChannelId::ALL {
        let alpha = f.0[FeatureVector::band_power_index(ch, 2)];
        for b in [0, 1, 3, 4] {
            assert!(alpha > f.0[FeatureVector::band_power_index(ch, b)], "{ch} band {b}");
        }
    }
    let ratio = mean_alpha(&cfg, EmotionLabel::Happy) / mean_alpha(&cfg, EmotionLabel::Sad);
    let amp = |l: EmotionLabel| cfg.profiles[l.index()].amplitudes[2];
    let configured = (amp(EmotionLabel::Happy) / amp(EmotionLabel::Sad)).powi(2);
    assert!((ratio - configured).abs() / configured < 0.2, "{ratio} vs {configured}");
}

#[test]
fn positive_asymmetry_profile_shows_left_dominance() {
    let cfg = SynthConfig { duration_s: 10.0, ..SynthConfig::default() };
    let f = extract_features(&clean_synth_trial(&cfg, EmotionLabel::Happy, 1, 1)).unwrap();
    assert!(f.0[FeatureVector::DASM.start] > 0.0);
    assert!(f.0[FeatureVector::RASM.start] > 1.0);
    let f = extract_features(&clean_synth_trial(&cfg, EmotionLabel::Angry, 1, 1)).unwrap();
    assert!(f.0[FeatureVector::RASM.start + 1] < 1.0);
}

#[test]
fn feature_matrix_rejects_malformed_text() {
    assert!(read_feature_matrix("not a matrix\n").is_err());
    let names = eeg_emotion::types::feature_names();
    assert_eq!(names.len(), FEATURE_COUNT);
    let text = format!("# eeg-emotion features v1\n# provenance: {{\"kind\":\"recorded\"}}\n{},label,subject_id\n1,2\n", names.join(","));
    let err = read_feature_matrix(&text).unwrap_err();
    assert!(matches!(err, eeg_emotion::Error::Parse { line: 4, .. }), "{err}");
}

#[test]
fn recording_from_rows_keeps_channel_order() {
    let rec = Recording::from_rows("s", FS, vec![[1.0, 2.0, 3.0, 4.0]]);
    assert_eq!(rec.channel(ChannelId::AF8), vec![3.0]);
}
