//! Fits the pairwise model and the ranker on a synthetic rating corpus whose
//! true utility is known, then compares recovered signs and held-out accuracy.

use drjudge::evaluation::{cross_validate, CvConfig, CvScheme, ModelKind};
use drjudge::models::{fit_btm, BtmConfig};
use drjudge::preferences::aggregate_pairwise;
use drjudge::synthetic::{preference_corpus, CorpusConfig};

fn main() -> drjudge::Result<()> {
    let corpus = preference_corpus(&CorpusConfig::default())?;
    let prefs = aggregate_pairwise(&corpus.trials);
    let btm = fit_btm(&prefs, &corpus.features(), corpus.feature_names(), &BtmConfig { lambda: 1e-3 })?;

    println!("{:<18} {:>8} {:>10}", "feature", "true", "recovered");
    for ((name, w_true), w) in corpus.feature_names().iter().zip(&corpus.true_weights).zip(btm.raw_weights()) {
        println!("{name:<18} {w_true:>8.2} {w:>10.3}");
    }

    let (mut right, mut total) = (0, 0);
    for t in &corpus.trials {
        for i in 0..t.shown.len() {
            for j in 0..t.shown.len() {
                if t.beats(i, j) {
                    total += 1;
                    right += (corpus.utility(&t.shown[i]) > corpus.utility(&t.shown[j])) as usize;
                }
            }
        }
    }
    println!("true utility orders {:.3} of observed pairs", right as f64 / total as f64);

    let report = cross_validate(ModelKind::Ranker, &corpus.cv_data(), CvScheme::Lodo, &CvConfig::default())?;
    for (group, acc) in &report.fold_scores {
        println!("held out {group}: pairwise accuracy {acc:.3}");
    }
    println!(
        "LODO mean {:.3}, 95% CI [{:.3}, {:.3}]",
        report.mean, report.ci95_low, report.ci95_high
    );
    Ok(())
}
