//! Projects a labelled blob dataset with every generator, measures each
//! projection and writes the normalized metric table as CSV to stdout.

use drjudge::evaluation::{measure_all, normalize, write_metrics_csv, MetricConfig};
use drjudge::generators::{generate_all, GeneratorSpec};
use drjudge::synthetic::blobs;
use drjudge::Metric;

fn main() -> drjudge::Result<()> {
    let ds = blobs("blobs", 150, 6, 3, 0.6, 11)?;
    let specs = [
        GeneratorSpec::Pca,
        GeneratorSpec::ClassicalMds,
        GeneratorSpec::Isomap { n_neighbors: 10 },
        GeneratorSpec::Tsne {
            perplexity: 20.0,
            iterations: 400,
            learning_rate: 200.0,
            seed: 1,
        },
        GeneratorSpec::Grp { seed: 1 },
        GeneratorSpec::Grp { seed: 2 },
    ];
    let mut embs = Vec::new();
    for (spec, res) in specs.iter().zip(generate_all(&ds, &specs)) {
        match res {
            Ok(e) => embs.push(e),
            Err(e) => eprintln!("{}: {e}", spec.slug()),
        }
    }
    let raw = measure_all(&ds, &embs, &MetricConfig::default())?;
    for v in &raw {
        eprintln!(
            "{:<32} T={:.3} C={:.3} DSC={:.3}",
            v.embedding_id,
            v.get(Metric::Trustworthiness).unwrap_or(f64::NAN),
            v.get(Metric::Continuity).unwrap_or(f64::NAN),
            v.get(Metric::Dsc).unwrap_or(f64::NAN),
        );
    }
    write_metrics_csv(&normalize(&raw)?, std::io::stdout().lock())
}
