//! Lays a batch of projections out by their metric vectors and interpolates
//! a quality score over the layout as an ASCII heat map.

use drjudge::evaluation::{measure_all, normalize, MetricConfig};
use drjudge::generators::{generate_all, GeneratorSpec};
use drjudge::metamap::build_metamap;
use drjudge::synthetic::blobs;
use drjudge::Metric;

fn main() -> drjudge::Result<()> {
    let ds = blobs("blobs", 100, 8, 4, 0.7, 5)?;
    let mut specs = vec![
        GeneratorSpec::Pca,
        GeneratorSpec::ClassicalMds,
        GeneratorSpec::Isomap { n_neighbors: 6 },
        GeneratorSpec::Isomap { n_neighbors: 15 },
    ];
    specs.extend((1..=8).map(|seed| GeneratorSpec::Grp { seed }));
    let embs: Vec<_> = generate_all(&ds, &specs).into_iter().collect::<drjudge::Result<_>>()?;
    let vectors = normalize(&measure_all(&ds, &embs, &MetricConfig::default())?)?;
    let scores: Vec<f64> = vectors.iter().map(|v| v.get(Metric::Trustworthiness).unwrap_or(0.0)).collect();
    let map = build_metamap(&vectors, &scores, &GeneratorSpec::ClassicalMds, 24, None)?;

    let (lo, hi) = scores.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    for row in map.grid.iter().rev() {
        let line: String = row
            .iter()
            .map(|&v| shades[(((v - lo) / (hi - lo).max(1e-12)) * 9.0).round().clamp(0.0, 9.0) as usize])
            .collect();
        println!("|{line}|");
    }
    for (id, (p, s)) in map.embedding_ids.iter().zip(map.points.iter().zip(&map.scores)) {
        println!("{id:<22} ({:>7.3}, {:>7.3}) score {s:.3}", p[0], p[1]);
    }
    Ok(())
}
