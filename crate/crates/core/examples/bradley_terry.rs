//! Fits the regularized Bradley-Terry model on pairwise preferences and
//! reports win probabilities between projections.

use drjudge::models::{btm_accuracy, fit_btm, BtmConfig, BtmModel};
use drjudge::preferences::aggregate_pairwise;
use drjudge::synthetic::{preference_corpus, CorpusConfig};

fn main() -> drjudge::Result<()> {
    let corpus = preference_corpus(&CorpusConfig {
        datasets: 4,
        trials_per_dataset: 60,
        noise_scale: 0.2,
        ..CorpusConfig::default()
    })?;
    let prefs = aggregate_pairwise(&corpus.trials);
    let features = corpus.features();
    for lambda in [0.0, 0.021, 0.2] {
        let m = fit_btm(&prefs, &features, corpus.feature_names(), &BtmConfig { lambda })?;
        let acc = btm_accuracy(&m, &prefs, &features, None)?.unwrap_or(f64::NAN);
        let strong = btm_accuracy(&m, &prefs, &features, Some(0.8))?.unwrap_or(f64::NAN);
        println!(
            "lambda {lambda:<6} active features {:>2}, accuracy {acc:.3}, on pairs with 80% agreement {strong:.3}",
            m.active_features()
        );
    }

    let m = fit_btm(&prefs, &features, corpus.feature_names(), &BtmConfig::default())?;
    for p in prefs.iter().take(5) {
        let prob = m.probability(&features[&p.emb_a], &features[&p.emb_b])?;
        println!(
            "P({} > {}) = {prob:.3}, observed {:.3} over {}",
            p.emb_a, p.emb_b, p.pct_a_over_b, p.n_comparisons
        );
    }
    let json = m.to_json()?;
    assert_eq!(BtmModel::from_json(&json)?, m);
    println!("model json is {} bytes", json.len());
    Ok(())
}
