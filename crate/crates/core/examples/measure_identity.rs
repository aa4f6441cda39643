//! A 2D dataset used as its own projection scores perfectly on every
//! neighborhood metric and zero on the stress metrics.

use drjudge::data::DataSource;
use drjudge::evaluation::{measure, MetricConfig};
use drjudge::{Dataset, Embedding, Metric};

fn main() -> drjudge::Result<()> {
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|i| {
            let t = i as f64 * 0.21;
            vec![t.cos() * (1.0 + 0.1 * t), t.sin() * (1.0 + 0.1 * t)]
        })
        .collect();
    let labels = (0..60).map(|i| i / 20).collect();
    let ds = Dataset::from_rows("spiral", &rows, Some(labels), DataSource::Synthetic)?;
    let emb = Embedding::identity(&ds)?;
    let mv = measure(&ds, &emb, &MetricConfig::default())?;

    for m in Metric::ALL {
        match mv.get(m) {
            Some(v) => println!("{:<18} {v:>10.6}   {}", m.name(), mv.provenance[&m]),
            None => println!("{:<18} {:>10}   {}", m.name(), "-", mv.provenance[&m]),
        }
    }
    Ok(())
}
