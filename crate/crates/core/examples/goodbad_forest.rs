//! Trains the good/bad random forest on binary labels and explains one
//! prediction feature by feature.

use drjudge::models::{fit_forest, ForestConfig};
use drjudge::preferences::binary_labels;
use drjudge::synthetic::{preference_corpus, CorpusConfig};

fn main() -> drjudge::Result<()> {
    let corpus = preference_corpus(&CorpusConfig {
        datasets: 4,
        trials_per_dataset: 40,
        ..CorpusConfig::default()
    })?;
    let features = corpus.features();
    let labels = binary_labels(&corpus.trials);
    let x: Vec<Vec<f64>> = labels.iter().map(|l| features[&l.embedding_id].clone()).collect();
    let y: Vec<bool> = labels.iter().map(|l| l.good).collect();
    let forest = fit_forest(&x, &y, corpus.feature_names(), &ForestConfig { n_trees: 100, seed: 1, ..ForestConfig::default() })?;

    let correct = x.iter().zip(&y).filter(|(r, &g)| (forest.predict_proba(r).unwrap_or(0.5) >= 0.5) == g).count();
    println!("training accuracy {:.3} on {} labels", correct as f64 / y.len() as f64, y.len());

    let best = corpus
        .vectors
        .keys()
        .max_by(|a, b| corpus.utility(a).unwrap_or(0.0).total_cmp(&corpus.utility(b).unwrap_or(0.0)))
        .expect("corpus is not empty");
    let att = forest.attribute(&features[best])?;
    println!("{best}: P(good) = {:.3}, baseline {:.3}", att.prediction, att.baseline);
    let names = corpus.feature_names();
    let mut contrib: Vec<(&String, f64)> = names.iter().zip(att.contributions).collect();
    contrib.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    for (name, c) in contrib.iter().take(6) {
        println!("  {name:<18} {c:+.4}");
    }
    Ok(())
}
