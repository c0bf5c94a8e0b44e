//! Gumbel-softmax relaxation for categorical output heads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::nn::matrix::Matrix;
use crate::nn::params::seeded_rng;

/// One standard Gumbel draw: -ln(-ln U), U ~ (0,1).
#[inline]
pub fn gumbel_noise(rng: &mut ChaCha8Rng) -> f64 {
    // Open interval away from 0 and 1 so both logs are finite.
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    -(-u.ln()).ln()
}

/// softmax((logits + Gumbel noise) / tau). Sums to 1; tau → 0 approaches a
/// one-hot at the argmax of the perturbed logits.
pub fn gumbel_softmax(logits: &[f64], tau: f64, seed: u64) -> Vec<f64> {
    assert!(tau > 0.0, "tau must be positive");
    let mut rng = seeded_rng(seed);
    gumbel_softmax_with(logits, tau, &mut rng)
}

/// Same as [`gumbel_softmax`] but drawing noise from a caller-owned stream.
pub fn gumbel_softmax_with(logits: &[f64], tau: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut perturbed: Vec<f64> = logits.iter().map(|&l| (l + gumbel_noise(rng)) / tau).collect();
    crate::nn::mlp::softmax_in_place(&mut perturbed);
    perturbed
}

/// Batched Gumbel-softmax over consecutive column groups. Returns the
/// relaxed probabilities and the noise that was added (needed to replay the
/// pass in finite-difference checks).
pub fn gumbel_softmax_groups(
    logits: &Matrix,
    groups: &[usize],
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> (Matrix, Matrix) {
    let noise = Matrix::from_fn(logits.rows, logits.cols, |_, _| gumbel_noise(rng));
    let probs = gumbel_softmax_groups_fixed(logits, groups, tau, &noise);
    (probs, noise)
}

/// Gumbel-softmax with externally supplied noise.
pub fn gumbel_softmax_groups_fixed(
    logits: &Matrix,
    groups: &[usize],
    tau: f64,
    noise: &Matrix,
) -> Matrix {
    let mut z = Matrix::from_fn(logits.rows, logits.cols, |r, c| {
        (logits.at(r, c) + noise.at(r, c)) / tau
    });
    for r in 0..z.rows {
        let row = z.row_mut(r);
        let mut start = 0;
        for &g in groups {
            crate::nn::mlp::softmax_in_place(&mut row[start..start + g]);
            start += g;
        }
    }
    z
}

/// Backward through the batched Gumbel-softmax: given dL/dprobs and the
/// probabilities, returns dL/dlogits. Per group: p_j (d_j − Σ_k p_k d_k) / τ.
pub fn gumbel_softmax_backward(
    probs: &Matrix,
    dprobs: &Matrix,
    groups: &[usize],
    tau: f64,
) -> Matrix {
    let mut out = Matrix::zeros(probs.rows, probs.cols);
    for r in 0..probs.rows {
        let mut start = 0;
        for &g in groups {
            let range = start..start + g;
            let p = &probs.row(r)[range.clone()];
            let d = &dprobs.row(r)[range.clone()];
            let dot: f64 = p.iter().zip(d).map(|(a, b)| a * b).sum();
            for (i, o) in out.row_mut(r)[range].iter_mut().enumerate() {
                *o = p[i] * (d[i] - dot) / tau;
            }
            start += g;
        }
    }
    out
}

/// Gumbel-max categorical draw: argmax(logits + noise) is an exact sample
/// from softmax(logits), independent of temperature.
pub fn gumbel_argmax(logits: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &l) in logits.iter().enumerate() {
        let v = l + gumbel_noise(rng);
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_sums_to_one() {
        for seed in 0..20 {
            let probs = gumbel_softmax(&[0.3, -1.0, 2.5, 0.0], 1.0, seed);
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn near_zero_tau_is_one_hot_at_perturbed_argmax() {
        let logits = [0.5, 1.5, -0.3];
        let mut rng = seeded_rng(9);
        let noise: Vec<f64> = (0..3).map(|_| gumbel_noise(&mut rng)).collect();
        let perturbed: Vec<f64> = logits.iter().zip(&noise).map(|(l, n)| l + n).collect();
        let argmax = perturbed
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;

        let m = Matrix::from_vec(1, 3, logits.to_vec());
        let n = Matrix::from_vec(1, 3, noise);
        let probs = gumbel_softmax_groups_fixed(&m, &[3], 1e-4, &n);
        assert!((probs.data[argmax] - 1.0).abs() < 1e-9, "{:?}", probs.data);
    }

    #[test]
    fn uniform_logits_give_uniform_argmax_frequencies() {
        let logits = vec![0.0; 5];
        let mut rng = seeded_rng(1234);
        let mut counts = [0usize; 5];
        let draws = 10_000;
        for _ in 0..draws {
            counts[gumbel_argmax(&logits, &mut rng)] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.2).abs() < 0.03, "frequency {freq}");
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let logits = Matrix::from_vec(2, 5, vec![0.2, -0.4, 0.9, 1.3, -1.0, 0.0, 0.5, -0.5, 0.25, 2.0]);
        let groups = [3, 2];
        let tau = 0.7;
        let noise = Matrix::from_fn(2, 5, |r, c| ((r * 5 + c) as f64 * 0.37).sin());
        // Loss = weighted sum of probabilities with fixed weights.
        let w = Matrix::from_fn(2, 5, |r, c| ((r + 2 * c) as f64 * 0.11).cos());
        let loss = |l: &Matrix| -> f64 {
            let p = gumbel_softmax_groups_fixed(l, &groups, tau, &noise);
            p.data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
        };
        let probs = gumbel_softmax_groups_fixed(&logits, &groups, tau, &noise);
        let analytic = gumbel_softmax_backward(&probs, &w, &groups, tau);
        let h = 1e-6;
        for i in 0..logits.data.len() {
            let mut plus = logits.clone();
            plus.data[i] += h;
            let mut minus = logits.clone();
            minus.data[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!(
                (fd - analytic.data[i]).abs() < 1e-6,
                "element {i}: fd {fd} vs analytic {}",
                analytic.data[i]
            );
        }
    }
}
