//! Gaussian neighbor distributions calibrated to a target perplexity.

use crate::error::{Error, Result};

pub const ENTROPY_TOLERANCE: f64 = 1e-5;
pub const MAX_BISECTION_STEPS: usize = 64;

/// Neighbor probabilities of one point and the precision that produced them.
#[derive(Debug, Clone)]
pub struct CalibratedRow {
    /// `beta = 1 / (2 sigma^2)`.
    pub beta: f64,
    pub probs: Vec<f64>,
    pub entropy: f64,
}

/// `p_j ∝ exp(-beta * sq_dists[j])`, normalized, with its Shannon entropy in nats.
pub fn gaussian_row(sq_dists: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let min = sq_dists.iter().copied().fold(f64::INFINITY, f64::min);
    let mut probs: Vec<f64> = sq_dists.iter().map(|&d| (-beta * (d - min)).exp()).collect();
    let sum: f64 = probs.iter().sum();
    let mut weighted = 0.0;
    for (p, &d) in probs.iter_mut().zip(sq_dists) {
        *p /= sum;
        weighted += *p * (d - min);
    }
    (probs, sum.ln() + beta * weighted)
}

/// Finds `beta` such that the entropy of [`gaussian_row`] equals `ln(perplexity)`
/// within [`ENTROPY_TOLERANCE`], by bracketing then bisection.
///
/// `sq_dists` holds the squared distances to every other point.
pub fn calibrate_row(sq_dists: &[f64], perplexity: f64, point: usize) -> Result<CalibratedRow> {
    let target = perplexity.ln();
    let mut scale: Vec<f64> = sq_dists.iter().copied().filter(|&d| d > 0.0).collect();
    scale.sort_by(f64::total_cmp);
    let mut beta = match scale.get(scale.len() / 2) {
        Some(&m) => 1.0 / m,
        None => 1.0,
    };
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..MAX_BISECTION_STEPS {
        let (probs, entropy) = gaussian_row(sq_dists, beta);
        let diff = entropy - target;
        if diff.abs() < ENTROPY_TOLERANCE {
            return Ok(CalibratedRow {
                beta,
                probs,
                entropy,
            });
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    Err(Error::Numerical(format!(
        "perplexity calibration did not converge for point {point} (perplexity {perplexity})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_target_entropy() {
        let d: Vec<f64> = (1..30).map(|i| (i as f64).powi(2) * 0.37).collect();
        let row = calibrate_row(&d, 5.0, 0).unwrap();
        assert!((row.entropy - 5f64.ln()).abs() < ENTROPY_TOLERANCE);
        assert!((row.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unreachable_perplexity_fails_with_point_index() {
        let d = vec![1.0, 4.0, 9.0];
        let err = calibrate_row(&d, 3.5, 17).unwrap_err();
        assert!(err.to_string().contains("point 17"));
    }
}
