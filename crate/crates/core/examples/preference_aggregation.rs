//! Turns raw ratings into pairwise preferences, good/bad labels and a
//! technique-level win matrix.

use std::collections::BTreeMap;

use drjudge::preferences::{aggregate_pairwise, binary_labels, disagreement, technique_matrix, write_pairwise_csv};
use drjudge::synthetic::{preference_corpus, CorpusConfig};

fn main() -> drjudge::Result<()> {
    let corpus = preference_corpus(&CorpusConfig {
        datasets: 3,
        embeddings_per_dataset: 10,
        trials_per_dataset: 30,
        noise_scale: 0.3,
        ..CorpusConfig::default()
    })?;
    for t in &corpus.trials {
        t.validate()?;
    }
    let prefs = aggregate_pairwise(&corpus.trials);
    println!("{} trials, {} compared pairs, disagreement {:.3}", corpus.trials.len(), prefs.len(), disagreement(&prefs));

    let labels = binary_labels(&corpus.trials);
    let good = labels.iter().filter(|l| l.good).count();
    println!("{} binary labels, {good} good, {} bad", labels.len(), labels.len() - good);

    let technique_of: BTreeMap<_, _> = corpus.meta.iter().map(|(id, m)| (id.clone(), m.technique)).collect();
    let tm = technique_matrix(&prefs, &technique_of);
    print!("{:>8}", "");
    for t in &tm.techniques {
        print!("{:>8}", t.as_str());
    }
    println!();
    for (i, row) in tm.cells.iter().enumerate() {
        print!("{:>8}", tm.techniques[i].as_str());
        for c in row {
            match c {
                Some(v) => print!("{v:>8.2}"),
                None => print!("{:>8}", "-"),
            }
        }
        println!();
    }

    println!("\nfirst pairs:");
    write_pairwise_csv(&prefs[..5], std::io::stdout().lock())
}
