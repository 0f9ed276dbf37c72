use std::fs;

use proptest::prelude::*;

use eeg_emotion::ingest::{
    build_dataset, parse_recording, stimulus_samples, truncate_to_stimulus, write_recording, ManifestEntry,
    ManifestStage, SessionManifest,
};
use eeg_emotion::synth::{generate_dataset, SynthConfig};
use eeg_emotion::{EmotionLabel, Error, Provenance, Recording};

fn cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        4 => (-1e4f64..1e4).prop_map(Some),
        1 => any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Some),
        1 => Just(None),
    ]
}

proptest! {
    #[test]
    fn recording_text_round_trips(rows in prop::collection::vec(prop::array::uniform4(cell()), 1..50), rate in 1.0f64..2000.0) {
        let rec = Recording {
            subject_id: "s07".into(),
            sample_rate_hz: rate,
            samples: rows.iter().map(|r| r.iter().map(|c| c.unwrap_or(0.0)).collect()).collect(),
            missing: rows.iter().map(|r| r.iter().map(Option::is_none).collect()).collect(),
        };
        let text = write_recording(&rec);
        let back = parse_recording(text.as_bytes(), "s07").unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert_eq!(write_recording(&back), text);
    }

    #[test]
    fn truncation_length_depends_only_on_duration_and_rate(
        n in 600usize..2000, onset in 0usize..100, duration in 0.1f64..2.0, fs in prop::sample::select(vec![128.0, 200.0, 256.0])
    ) {
        let rec = Recording::from_rows("s", fs, (0..n).map(|i| [i as f64; 4]).collect());
        let len = stimulus_samples(duration, fs);
        prop_assert_eq!(len, (duration * fs + 1e-9).floor() as usize);
        match truncate_to_stimulus(&rec, onset, duration) {
            Ok(t) => {
                prop_assert_eq!(t.n_samples(), len);
                prop_assert_eq!(t.samples[0][0], onset as f64);
            }
            Err(_) => prop_assert!(onset + len > n),
        }
    }
}

#[test]
fn parser_rejections_name_the_line() {
    let cases = [
        ("0,1,2,3,4\n", 1),
        ("# muse-eeg v1, rate=0\n0,1,2,3,4\n", 1),
        ("# muse-eeg v1, rate=256\n0,1,2,3,4\n1,1,2,3\n", 3),
        ("# muse-eeg v1, rate=256\n0,1,2,3,4\n0,1,2,3,4\n", 3),
        ("# muse-eeg v1, rate=256\n0,1,2,3,4\r\n", 2),
        ("# muse-eeg v1, rate=256\n", 2),
    ];
    for (text, line) in cases {
        match parse_recording(text.as_bytes(), "s") {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    let rec = parse_recording(b"# muse-eeg v1, rate=256\n0,1,,nan,4\n", "s").unwrap();
    assert_eq!(rec.missing[0], vec![false, true, true, false]);
}

fn entry(subject: &str, video: &str, label: EmotionLabel, file: &str) -> ManifestEntry {
    ManifestEntry {
        subject_id: subject.into(),
        video_id: video.into(),
        session: 0,
        label,
        onset: 2,
        duration_s: 1.0,
        recording: file.into(),
    }
}

fn write_ramp(dir: &std::path::Path, file: &str, start: f64) {
    let rec = Recording::from_rows("x", 16.0, (0..20).map(|i| [start + i as f64, 1.0, 2.0, 3.0]).collect());
    fs::write(dir.join(file), write_recording(&rec)).unwrap();
}

#[test]
fn dataset_follows_manifest_order_and_truncates() {
    let dir = tempfile::tempdir().unwrap();
    let labels = [EmotionLabel::Sad, EmotionLabel::Happy, EmotionLabel::Relaxed];
    let mut entries = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        let file = format!("r{i}.csv");
        write_ramp(dir.path(), &file, 100.0 * i as f64);
        entries.push(entry(&format!("s{i}"), "v", *l, &file));
    }
    let m = SessionManifest::new(ManifestStage::Raw, Provenance::Recorded, entries);
    let back = SessionManifest::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back, m);
    let ds = build_dataset(&m, dir.path()).unwrap();
    assert_eq!(ds.labels(), labels.to_vec());
    for (i, t) in ds.items.iter().enumerate() {
        assert_eq!(t.subject_id(), format!("s{i}"));
        assert_eq!(t.recording.n_samples(), 16);
        assert_eq!(t.recording.samples[0][0], 100.0 * i as f64 + 2.0);
    }
}

#[test]
fn missing_and_broken_files_are_reported_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    write_ramp(dir.path(), "ok.csv", 0.0);
    fs::write(dir.path().join("bad.csv"), "# muse-eeg v1, rate=16\n0,1,2\n").unwrap();
    let m = SessionManifest::new(
        ManifestStage::Raw,
        Provenance::Recorded,
        vec![
            entry("s1", "v1", EmotionLabel::Happy, "ok.csv"),
            entry("s2", "v2", EmotionLabel::Angry, "nope.csv"),
            entry("s3", "v3", EmotionLabel::Sad, "bad.csv"),
        ],
    );
    match build_dataset(&m, dir.path()) {
        Err(Error::Dataset(failures)) => {
            assert_eq!(failures.len(), 2);
            assert_eq!((failures[0].entry, failures[0].subject_id.as_str(), failures[0].video_id.as_str()), (1, "s2", "v2"));
            assert!(failures[0].message.contains("nope.csv"));
            assert_eq!(failures[1].entry, 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn manifest_format_is_checked() {
    let m = SessionManifest::new(ManifestStage::Raw, Provenance::Recorded, vec![]);
    let text = m.to_json().unwrap().replace("eeg-emotion-manifest", "other");
    assert!(matches!(SessionManifest::from_json(&text), Err(Error::Format(_))));
    assert!(build_dataset(&m, std::path::Path::new(".")).is_err());
}

#[test]
fn generated_dataset_ingests_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { n_subjects: 1, videos_per_quadrant: 1, duration_s: 4.0, ..SynthConfig::default() };
    let m = generate_dataset(&cfg, dir.path()).unwrap();
    assert_eq!(m.entries.len(), 4);
    assert_eq!(m.provenance, Provenance::Synthetic { seed: cfg.seed });
    let loaded = SessionManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(loaded, m);
    let ds = build_dataset(&m, dir.path()).unwrap();
    assert_eq!(ds.label_counts(), [1, 1, 1, 1]);
    for t in &ds.items {
        assert_eq!(t.recording.n_samples(), 4 * 256);
        assert!(t.recording.n_samples() < stimulus_samples(cfg.duration_s + cfg.lead_in_s + cfg.tail_s, 256.0));
    }
}
