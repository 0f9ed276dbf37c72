//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use eeg_emotion::ingest::truncate_to_stimulus;
use eeg_emotion::preprocess::{preprocess_trial, PreprocessConfig};
use eeg_emotion::synth::{generate_trial, SynthConfig};
use eeg_emotion::{seed, EmotionLabel, Recording, Trial};

pub const FS: f64 = 256.0;

pub fn sine(freq_hz: f64, amp: f64, fs: f64, seconds: f64) -> Vec<f64> {
    let n = (seconds * fs) as usize;
    (0..n).map(|i| amp * (2.0 * PI * freq_hz * i as f64 / fs).sin()).collect()
}

pub fn white(n: usize, seed_value: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed_value);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn uniform_points(rng: &mut impl Rng, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect()).collect()
}

pub fn trial_from_channels(channels: [Vec<f64>; 4], label: EmotionLabel) -> Trial {
    let duration_s = channels[0].len() as f64 / FS;
    Trial {
        recording: Recording::from_channels("t", FS, &channels),
        label,
        video_id: "v".into(),
        duration_s,
    }
}

/// A synthetic trial cut to its stimulus window, before preprocessing.
pub fn raw_synth_trial(cfg: &SynthConfig, label: EmotionLabel, subject: usize, video: usize) -> Trial {
    let (rec, entry) = generate_trial(label, subject, video, cfg).unwrap();
    Trial {
        recording: truncate_to_stimulus(&rec, entry.onset, entry.duration_s).unwrap(),
        label,
        video_id: entry.video_id,
        duration_s: entry.duration_s,
    }
}

pub fn clean_synth_trial(cfg: &SynthConfig, label: EmotionLabel, subject: usize, video: usize) -> Trial {
    preprocess_trial(&raw_synth_trial(cfg, label, subject, video), &PreprocessConfig::default()).unwrap()
}

/// SG weights by solving the normal equations of the windowed polynomial
/// fit directly: `w = v(t)^T (A^T A)^{-1} A^T` with `A` the Vandermonde
/// matrix over positions `-m..=m`.
pub fn sg_normal_equation_weights(window: usize, order: usize, t: f64) -> Vec<f64> {
    let m = (window / 2) as f64;
    let a = DMatrix::from_fn(window, order + 1, |i, k| (i as f64 - m).powi(k as i32));
    let ata = a.transpose() * &a;
    let v = DVector::from_fn(order + 1, |k, _| t.powi(k as i32));
    let z = ata.lu().solve(&v).expect("normal matrix invertible");
    (a * z).iter().copied().collect()
}

/// Brute-force maximiser of the SVM dual
/// `W(a) = sum a - 1/2 sum a_i a_j y_i y_j K_ij`, `0 <= a <= C`,
/// `sum a_i y_i = 0`, by enumerating every assignment of variables to
/// {lower bound, upper bound, free} and solving the equality-constrained
/// stationarity system on the free set. The problem is concave, so the best
/// feasible stationary face point is the global maximum.
pub fn dual_oracle(gram: &[f64], y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * gram[i * n + j]);
    let mut best = (vec![0.0; n], 0.0);
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        let mut state = vec![0u8; n];
        let mut c_ = code;
        for s in state.iter_mut() {
            *s = (c_ % 3) as u8;
            c_ /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let f = free.len();
            // [Q_FF  y_F] [a_F]   [1 - Q_FB a_B]
            // [y_F^T  0 ] [nu ] = [ -y_B . a_B ]
            let mut lhs = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    lhs[(r, s)] = q[(i, j)];
                }
                lhs[(r, f)] = y[i];
                lhs[(f, r)] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|j| state[*j] != 2).map(|j| q[(i, j)] * alpha[j]).sum::<f64>();
            }
            rhs[f] = -(0..n).filter(|j| state[*j] != 2).map(|j| y[j] * alpha[j]).sum::<f64>();
            let sol = match lhs.clone().lu().solve(&rhs) {
                Some(s) => s,
                None => match lhs.svd(true, true).solve(&rhs, 1e-12) {
                    Ok(s) => s,
                    Err(_) => continue,
                },
            };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible_box = alpha.iter().all(|&a| a >= -1e-12 && a <= c + 1e-12);
        let eq: f64 = alpha.iter().zip(y).map(|(a, y)| a * y).sum();
        if !feasible_box || eq.abs() > 1e-9 {
            continue;
        }
        let a = DVector::from_column_slice(&alpha);
        let obj = a.sum() - 0.5 * (a.transpose() * &q * &a)[(0, 0)];
        if obj > best.1 {
            best = (alpha, obj);
        }
    }
    best
}

/// Eigenvalues of a symmetric matrix given as rows.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    mat.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Random binary problem of `n` points in `dim` dimensions and labels with
/// both classes present.
pub fn binary_problem(rng: &mut impl Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x = uniform_points(rng, n, dim, 1.0);
    let mut y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    y[0] = 1.0;
    y[1] = -1.0;
    (x, y)
}
