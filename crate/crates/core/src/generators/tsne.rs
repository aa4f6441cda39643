use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::affinity::calibrate_row;
use crate::error::{Error, Result};

const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 250;
const MIN_GAIN: f64 = 0.01;
const KL_WINDOW: usize = 50;
const KL_TOLERANCE: f64 = 1e-6;

/// Result of an exact t-SNE run.
#[derive(Debug, Clone)]
pub struct TsneRun {
    pub coords: Vec<[f64; 2]>,
    /// KL(P || Q) after each iteration, against the unexaggerated P.
    pub kl_trace: Vec<f64>,
    /// Whether the objective was non-increasing (within tolerance) over the
    /// final iterations.
    pub settled: bool,
}

/// Exact t-SNE: symmetrized perplexity-calibrated affinities, Student-t
/// kernel, gradient descent with momentum, per-parameter gains and early
/// exaggeration.
pub fn tsne(x: &DMatrix<f64>, perplexity: f64, iterations: usize, learning_rate: f64, seed: u64) -> Result<TsneRun> {
    let n = x.nrows();
    if !(perplexity > 0.0 && perplexity < n as f64) {
        return Err(Error::Parameter(format!("t-SNE perplexity {perplexity} must lie in (0, n={n})")));
    }
    if iterations == 0 || !(learning_rate > 0.0) {
        return Err(Error::Parameter("t-SNE needs iterations >= 1 and learning_rate > 0".into()));
    }

    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let sq: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (x.row(i) - x.row(j)).norm_squared())
            .collect();
        let row = calibrate_row(&sq, perplexity, i)?;
        let mut it = row.probs.into_iter();
        for j in (0..n).filter(|&j| j != i) {
            p[i * n + j] = it.next().unwrap_or(0.0);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let s = ((p[i * n + j] + p[j * n + i]) / (2.0 * n as f64)).max(1e-12);
            p[i * n + j] = s;
            p[j * n + i] = s;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [init.sample(&mut rng), init.sample(&mut rng)]).collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];
    let mut kl_trace = Vec::with_capacity(iterations);

    for iter in 0..iterations {
        let exaggeration = if iter < EXAGGERATION_ITERS { EXAGGERATION } else { 1.0 };
        let momentum = if iter < EXAGGERATION_ITERS { 0.5 } else { 0.8 };

        let mut z = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2);
                let v = 1.0 / (1.0 + d);
                num[i * n + j] = v;
                num[j * n + i] = v;
                z += 2.0 * v;
            }
        }

        let mut kl = 0.0;
        for i in 0..n {
            let mut grad = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let pij = p[i * n + j];
                let qij = (num[i * n + j] / z).max(1e-12);
                kl += pij * (pij / qij).ln();
                let mult = (exaggeration * pij - qij) * num[i * n + j];
                grad[0] += 4.0 * mult * (y[i][0] - y[j][0]);
                grad[1] += 4.0 * mult * (y[i][1] - y[j][1]);
            }
            for a in 0..2 {
                gains[i][a] = if (grad[a] > 0.0) != (velocity[i][a] > 0.0) {
                    gains[i][a] + 0.2
                } else {
                    (gains[i][a] * 0.8).max(MIN_GAIN)
                };
                velocity[i][a] = momentum * velocity[i][a] - learning_rate * gains[i][a] * grad[a];
            }
        }
        kl_trace.push(kl);

        for i in 0..n {
            y[i][0] += velocity[i][0];
            y[i][1] += velocity[i][1];
        }
        let mean = [
            y.iter().map(|c| c[0]).sum::<f64>() / n as f64,
            y.iter().map(|c| c[1]).sum::<f64>() / n as f64,
        ];
        for c in &mut y {
            c[0] -= mean[0];
            c[1] -= mean[1];
        }
        if y.iter().any(|c| !(c[0].is_finite() && c[1].is_finite())) {
            return Err(Error::Numerical(format!("t-SNE diverged at iteration {iter}")));
        }
    }

    let tail = &kl_trace[kl_trace.len().saturating_sub(KL_WINDOW)..];
    let settled = tail.windows(2).all(|w| w[1] <= w[0] + KL_TOLERANCE);
    if !settled {
        log::warn!("t-SNE objective was not monotone over the last {KL_WINDOW} iterations");
    }
    Ok(TsneRun {
        coords: y,
        kl_trace,
        settled,
    })
}
