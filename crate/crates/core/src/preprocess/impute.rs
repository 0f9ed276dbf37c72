use crate::error::{Error, Result};

pub const DEFAULT_IMPUTE_RADIUS: usize = 4;

/// Replaces each missing sample with the mean of up to `radius` nearest
/// valid samples on each side. Valid samples are returned unchanged.
pub fn impute_missing(values: &[f64], missing: &[bool], radius: usize) -> Result<Vec<f64>> {
    if values.len() != missing.len() {
        return Err(Error::Length(format!(
            "{} values but {} mask cells",
            values.len(),
            missing.len()
        )));
    }
    if radius == 0 {
        return Err(Error::Config("imputation radius must be at least 1".into()));
    }
    let valid: Vec<usize> = (0..values.len()).filter(|&i| !missing[i]).collect();
    if valid.is_empty() {
        return Err(Error::Imputation("channel has no valid samples".into()));
    }

    let mut out = values.to_vec();
    for (i, _) in missing.iter().enumerate().filter(|(_, &m)| m) {
        // valid[split..] are the valid indices to the right of i
        let split = valid.partition_point(|&v| v < i);
        let left = &valid[split.saturating_sub(radius)..split];
        let right = &valid[split..(split + radius).min(valid.len())];
        let n = left.len() + right.len();
        let sum: f64 = left.iter().chain(right).map(|&j| values[j]).sum();
        out[i] = sum / n as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gap_takes_neighbour_mean() {
        let out = impute_missing(&[1.0, 0.0, 3.0], &[false, true, false], 1).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn leading_gap_uses_right_side_only() {
        let out = impute_missing(&[0.0, 5.0, 5.0, 5.0], &[true, false, false, false], 2).unwrap();
        assert_eq!(out, vec![5.0; 4]);
    }

    #[test]
    fn adjacent_gaps_in_ramp() {
        // radius 2: left side holds only {0}, right side only {3}
        let out = impute_missing(&[0.0, 9.0, 9.0, 3.0], &[false, true, true, false], 2).unwrap();
        assert_eq!(out, vec![0.0, 1.5, 1.5, 3.0]);
    }

    #[test]
    fn radius_limits_the_window() {
        let v = [10.0, 20.0, 30.0, 0.0, 40.0, 50.0, 60.0];
        let m = [false, false, false, true, false, false, false];
        assert_eq!(impute_missing(&v, &m, 1).unwrap()[3], 35.0);
        assert_eq!(impute_missing(&v, &m, 2).unwrap()[3], 35.0);
        assert_eq!(impute_missing(&v, &m, 3).unwrap()[3], 35.0);
        let m = [false, false, false, true, false, false, true];
        assert_eq!(impute_missing(&v, &m, 3).unwrap()[3], (10.0 + 20.0 + 30.0 + 40.0 + 50.0) / 5.0);
    }

    #[test]
    fn all_missing_is_an_error() {
        assert!(matches!(
            impute_missing(&[0.0; 3], &[true; 3], 4),
            Err(Error::Imputation(_))
        ));
    }

    #[test]
    fn idempotent() {
        let v = [1.0, 0.0, 4.0, 0.0, 0.0, 2.0];
        let m = [false, true, false, true, true, false];
        let once = impute_missing(&v, &m, 4).unwrap();
        let twice = impute_missing(&once, &[false; 6], 4).unwrap();
        assert_eq!(once, twice);
    }
}
