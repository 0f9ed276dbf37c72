//! Feature matrix text file.
//!
//! ```text
//! # eeg-emotion features v1
//! # provenance: {"kind":"synthetic","seed":42}
//! # config: {...}
//! psd_mean_TP9,psd_var_TP9,...,power_gamma_TP10,label,subject_id
//! 12.5,0.75,...,3.25,happy,s01
//! ```
//!
//! One row per trial: the 34 features in vector order, then the label name
//! and subject id. Numbers use the shortest round-tripping decimal form.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::types::{feature_names, Dataset, FeatureRow, FeatureVector, Provenance, FEATURE_COUNT};

pub const FEATURE_MAGIC: &str = "# eeg-emotion features v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub provenance: Provenance,
    pub config: serde_json::Value,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn into_dataset(self) -> Dataset<FeatureRow> {
        Dataset { items: self.rows, provenance: self.provenance }
    }
}

pub fn write_feature_matrix(m: &FeatureMatrix) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{FEATURE_MAGIC}");
    let _ = writeln!(out, "# provenance: {}", serde_json::to_string(&m.provenance)?);
    let _ = writeln!(out, "# config: {}", serde_json::to_string(&m.config)?);
    let mut header = feature_names();
    header.push("label".into());
    header.push("subject_id".into());
    let _ = writeln!(out, "{}", header.join(","));
    for row in &m.rows {
        if row.subject_id.contains([',', '\n']) {
            return Err(Error::Format(format!("subject id {:?} contains a delimiter", row.subject_id)));
        }
        for v in row.features.as_slice() {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{}", row.label, row.subject_id);
    }
    Ok(out)
}

pub fn read_feature_matrix(text: &str) -> Result<FeatureMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    match lines.next() {
        Some((_, l)) if l == FEATURE_MAGIC => {}
        _ => return Err(parse_err(1, "missing feature matrix header".into())),
    }
    let mut provenance = None;
    let mut config = serde_json::Value::Null;
    let mut header_seen = false;
    let mut rows = Vec::new();
    let expected_header = {
        let mut h = feature_names();
        h.push("label".into());
        h.push("subject_id".into());
        h.join(",")
    };

    for (no, line) in lines {
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some(p) = meta.strip_prefix("provenance: ") {
                provenance = Some(serde_json::from_str(p)?);
            } else if let Some(c) = meta.strip_prefix("config: ") {
                config = serde_json::from_str(c)?;
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != expected_header {
                return Err(parse_err(no, "unexpected column header".into()));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != FEATURE_COUNT + 2 {
            return Err(parse_err(
                no,
                format!("expected {} columns, found {}", FEATURE_COUNT + 2, fields.len()),
            ));
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (slot, f) in values.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| parse_err(no, format!("bad number {f:?}")))?;
        }
        let label = fields[FEATURE_COUNT]
            .parse()
            .map_err(|e: Error| parse_err(no, e.to_string()))?;
        rows.push(FeatureRow {
            features: FeatureVector(values),
            label,
            subject_id: fields[FEATURE_COUNT + 1].to_string(),
        });
    }
    if !header_seen {
        return Err(parse_err(1, "no column header".into()));
    }
    let provenance = provenance.ok_or_else(|| parse_err(2, "missing provenance line".into()))?;
    Ok(FeatureMatrix { provenance, config, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::EmotionLabel;
    use proptest::prelude::*;

    fn sample(values: Vec<f64>) -> FeatureMatrix {
        let mut arr = [0.0; FEATURE_COUNT];
        arr.iter_mut().zip(values).for_each(|(a, v)| *a = v);
        FeatureMatrix {
            provenance: Provenance::Synthetic { seed: 3 },
            config: serde_json::json!({"k": 10}),
            rows: vec![FeatureRow {
                features: FeatureVector(arr),
                label: EmotionLabel::Relaxed,
                subject_id: "s07".into(),
            }],
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), FEATURE_COUNT)) {
            let m = sample(values);
            let text = write_feature_matrix(&m).unwrap();
            let back = read_feature_matrix(&text).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(write_feature_matrix(&back).unwrap(), text);
        }
    }

    #[test]
    fn rejects_wrong_columns() {
        let text = write_feature_matrix(&sample(vec![1.0; 34])).unwrap();
        let broken = text.replace(",relaxed,", ",");
        assert!(matches!(read_feature_matrix(&broken), Err(Error::Parse { line: 5, .. })));
        assert!(read_feature_matrix("features\n").is_err());
    }
}
