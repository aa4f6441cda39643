use drjudge::evaluation::MetricConfig;
use drjudge::generators::GeneratorSpec;
use drjudge::metrics::NervConfig;
use drjudge::models::{BtmConfig, ForestConfig, RankerConfig};
use drjudge::preferences::{HEART_BUDGET, MAX_HEARTS_PER_PROJECTION, PROJECTIONS_PER_TRIAL};

#[test]
fn trial_budget() {
    assert_eq!(PROJECTIONS_PER_TRIAL, 8);
    assert_eq!(HEART_BUDGET, 15);
    assert_eq!(MAX_HEARTS_PER_PROJECTION, 4);
}

#[test]
fn forest_defaults() {
    let f = ForestConfig::default();
    assert_eq!((f.n_trees, f.max_depth), (200, 10));
    let back: ForestConfig = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(back, f);
}

#[test]
fn btm_lambda() {
    assert_eq!(BtmConfig::default().lambda, 0.021);
    let back: BtmConfig = serde_json::from_str(r#"{"lambda":0.021}"#).unwrap();
    assert_eq!(back, BtmConfig::default());
}

#[test]
fn ranker_defaults() {
    let r = RankerConfig::default();
    assert_eq!((r.n_trees, r.learning_rate, r.max_depth), (15, 0.3, 5));
    let back: RankerConfig = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn nerv_perplexity() {
    assert_eq!(NervConfig::default().perplexity, 5.0);
    assert_eq!(MetricConfig::default().nerv_perplexity, 5.0);
}

#[test]
fn tsne_helper_defaults() {
    let GeneratorSpec::Tsne { perplexity, iterations, learning_rate, .. } = GeneratorSpec::tsne(3) else {
        panic!("not a t-SNE spec");
    };
    assert_eq!((perplexity, iterations, learning_rate), (30.0, 1000, 200.0));
}
