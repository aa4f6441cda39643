//! Leave-one-dataset-out and leave-one-technique-out accuracy for the three
//! model kinds.

use drjudge::evaluation::{cross_validate, CvConfig, CvScheme, ModelKind};
use drjudge::models::ForestConfig;
use drjudge::synthetic::{preference_corpus, CorpusConfig};

fn main() -> drjudge::Result<()> {
    let corpus = preference_corpus(&CorpusConfig {
        datasets: 5,
        embeddings_per_dataset: 20,
        trials_per_dataset: 40,
        noise_scale: 0.1,
        ..CorpusConfig::default()
    })?;
    let data = corpus.cv_data();
    let cfg = CvConfig {
        forest: ForestConfig { n_trees: 60, ..ForestConfig::default() },
        ..CvConfig::default()
    };
    for scheme in [CvScheme::Lodo, CvScheme::Lodro] {
        for kind in [ModelKind::Forest, ModelKind::Btm, ModelKind::Ranker] {
            let r = cross_validate(kind, &data, scheme, &cfg)?;
            println!(
                "{scheme:?} {kind:<8?} mean {:.3} [{:.3}, {:.3}] over {} folds{}",
                r.mean,
                r.ci95_low,
                r.ci95_high,
                r.fold_scores.len(),
                if r.skipped.is_empty() { String::new() } else { format!(", {} skipped", r.skipped.len()) }
            );
        }
    }
    Ok(())
}
