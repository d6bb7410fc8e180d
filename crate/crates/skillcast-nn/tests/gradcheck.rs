//! Finite-difference gradient checks for every layer kind, across many
//! random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillcast_nn::gradcheck::{check_dense, check_sequence_layer};
use skillcast_nn::{Conv1d, Dense, Gru, Lstm, SequenceLayer, Tensor};

const SEEDS: u64 = 24;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(vec![rows, cols], data).unwrap()
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> Tensor {
    Tensor::vector((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

#[test]
fn dense_gradients_match_finite_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = Dense::new("head", 3, 4, &mut rng);
        let input = random_vector(&mut rng, 3);
        let target = random_vector(&mut rng, 4);
        let report = check_dense(&mut dense, &input, &target).unwrap();
        worst = worst.max(report.max_rel_err);
    }
    // An affine map under MSE is exactly quadratic, so central differences
    // are nearly exact; hold the head to a tighter bar than the rest.
    assert!(worst < 1e-6, "worst dense relative error {worst:e}");
}

#[test]
fn lstm_gradients_match_finite_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut lstm = Lstm::new("l", 2, 2, 1.0, &mut rng);
        let input = random_matrix(&mut rng, 3, 2);
        let target = random_matrix(&mut rng, 3, 2);
        let report = check_sequence_layer(&mut lstm, &input, &target).unwrap();
        worst = worst.max(report.max_rel_err);
    }
    assert!(worst < 1e-4, "worst lstm relative error {worst:e}");
}

#[test]
fn gru_gradients_match_finite_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let mut gru = Gru::new("g", 2, 3, &mut rng);
        let input = random_matrix(&mut rng, 4, 2);
        let target = random_matrix(&mut rng, 4, 3);
        let report = check_sequence_layer(&mut gru, &input, &target).unwrap();
        worst = worst.max(report.max_rel_err);
    }
    assert!(worst < 1e-4, "worst gru relative error {worst:e}");
}

/// Pre-activation margin check so no finite-difference step straddles the
/// ReLU kink. Mirrors the layer's padding arithmetic (total `k − 1`, left
/// side first).
fn conv_pre_activations(conv: &Conv1d, input: &Tensor) -> Vec<f64> {
    let params = conv.params();
    let w = &params[0].value; // [filters, channels, kernel]
    let b = &params[1].value;
    let (filters, channels, kernel) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    let steps = input.shape()[0];
    let pad_left = kernel / 2;
    let mut pre = Vec::with_capacity(steps * filters);
    for t in 0..steps {
        for f in 0..filters {
            let mut acc = b.data()[f];
            for k in 0..kernel {
                let s = (t + k) as isize - pad_left as isize;
                if s < 0 || s >= steps as isize {
                    continue;
                }
                for c in 0..channels {
                    acc += w.data()[(f * channels + c) * kernel + k] * input.at(s as usize, c);
                }
            }
            pre.push(acc);
        }
    }
    pre
}

#[test]
fn conv1d_gradients_match_finite_differences() {
    let mut worst: f64 = 0.0;
    let mut checked = 0u64;
    let mut seed = 300u64;
    while checked < SEEDS {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Alternate between an even and an odd kernel to cover both padding
        // splits.
        let kernel = if seed % 2 == 0 { 4 } else { 3 };
        let mut conv = Conv1d::new("c", 2, 2, kernel, &mut rng).unwrap();
        let input = random_matrix(&mut rng, 5, 2);
        let target = random_matrix(&mut rng, 5, 2);
        let margin_ok = conv_pre_activations(&conv, &input)
            .iter()
            .all(|p| p.abs() > 1e-3);
        if !margin_ok {
            continue; // too close to the ReLU kink for finite differences
        }
        let report = check_sequence_layer(&mut conv, &input, &target).unwrap();
        worst = worst.max(report.max_rel_err);
        checked += 1;
    }
    assert!(worst < 1e-4, "worst conv1d relative error {worst:e}");
}
