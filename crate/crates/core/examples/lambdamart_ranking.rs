//! Fits the boosted ranker on trial groups and ranks the embeddings of a
//! dataset it has not seen.

use drjudge::models::{fit_ranker, rank_groups, RankerConfig};
use drjudge::synthetic::{preference_corpus, CorpusConfig};

fn main() -> drjudge::Result<()> {
    let corpus = preference_corpus(&CorpusConfig {
        datasets: 5,
        trials_per_dataset: 60,
        ..CorpusConfig::default()
    })?;
    let features = corpus.features();
    let (train, test): (Vec<_>, Vec<_>) = corpus.trials.iter().cloned().partition(|t| t.dataset_id != "ds04");
    let lookup = |id: &str| features.get(id).map(Vec::as_slice);
    let ranker = fit_ranker(&rank_groups(&train, lookup), corpus.feature_names(), &RankerConfig::default())?;
    println!("{} trees, learning rate {}", ranker.trees.len(), ranker.config.learning_rate);

    let held_out = rank_groups(&test, lookup);
    if let Some(acc) = ranker.pairwise_accuracy(&held_out)? {
        println!("pairwise accuracy on ds04: {acc:.3}");
    }

    let items: Vec<(String, Vec<f64>)> = features
        .iter()
        .filter(|(id, _)| id.starts_with("ds04."))
        .map(|(id, f)| (id.clone(), f.clone()))
        .collect();
    println!("{:>4} {:<10} {:>8} {:>8}", "rank", "embedding", "score", "utility");
    for r in ranker.rank(&items)?.iter().take(10) {
        println!(
            "{:>4} {:<10} {:>8.3} {:>8.3}",
            r.rank,
            r.embedding_id,
            r.score,
            corpus.utility(&r.embedding_id).unwrap_or(f64::NAN)
        );
    }
    let restored = drjudge::models::BoostedRanker::from_json(&ranker.to_json()?)?;
    assert_eq!(restored, ranker);
    Ok(())
}
