use crate::error::{Error, Result};

/// Picks `m` mutually distant items by farthest-point sampling in min-max
/// normalized feature space, seeded at the medoid. Ties go to the lower
/// index. Returns the chosen indices in ascending order.
pub fn sample_diverse(features: &[Vec<f64>], m: usize) -> Result<Vec<usize>> {
    let n = features.len();
    if n == 0 {
        return Err(Error::Parameter("sample_diverse needs at least one item".into()));
    }
    if m > n {
        return Err(Error::Parameter(format!("cannot sample {m} of {n} items")));
    }
    let d = features[0].len();
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::Structural("feature vectors differ in length".into()));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut norm = features.to_vec();
    for c in 0..d {
        let lo = features.iter().map(|f| f[c]).fold(f64::INFINITY, f64::min);
        let hi = features.iter().map(|f| f[c]).fold(f64::NEG_INFINITY, f64::max);
        for f in &mut norm {
            f[c] = if hi > lo { (f[c] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    let dist = |a: usize, b: usize| -> f64 {
        norm[a].iter().zip(&norm[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };

    let mut medoid = 0;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let s: f64 = (0..n).map(|j| dist(i, j)).sum();
        if s < best {
            best = s;
            medoid = i;
        }
    }

    let mut chosen = vec![medoid];
    let mut gap: Vec<f64> = (0..n).map(|j| dist(medoid, j)).collect();
    while chosen.len() < m {
        let mut next = usize::MAX;
        for j in 0..n {
            if chosen.contains(&j) {
                continue;
            }
            if next == usize::MAX || gap[j] > gap[next] {
                next = j;
            }
        }
        chosen.push(next);
        for j in 0..n {
            gap[j] = gap[j].min(dist(next, j));
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}
