//! Drops metrics that are nearly collinear with a higher-priority metric
//! across a batch of measured projections.

use drjudge::evaluation::{default_priority, measure_all, normalize, prune_correlated, MetricConfig};
use drjudge::generators::{generate_all, GeneratorSpec};
use drjudge::synthetic::{blobs, swiss_roll};

fn main() -> drjudge::Result<()> {
    let mut vectors = Vec::new();
    for ds in [blobs("blobs", 120, 5, 3, 0.8, 2)?, swiss_roll("roll", 150, 0.05, 2)?] {
        let mut specs = vec![GeneratorSpec::Pca, GeneratorSpec::ClassicalMds, GeneratorSpec::Isomap { n_neighbors: 8 }];
        specs.extend((1..=5).map(|seed| GeneratorSpec::Grp { seed }));
        let embs: Vec<_> = generate_all(&ds, &specs).into_iter().collect::<drjudge::Result<_>>()?;
        vectors.extend(normalize(&measure_all(&ds, &embs, &MetricConfig::default())?)?);
    }
    let report = prune_correlated(&vectors, 0.9, &default_priority());
    println!("kept {} metrics:", report.active.len());
    for m in &report.active {
        println!("  {m}");
    }
    println!("dropped:");
    for (m, why) in &report.dropped {
        println!("  {m}: {why:?}");
    }
    Ok(())
}
