//! Scagnostics of a few characteristic scatterplot shapes.

use drjudge::scagnostics::{scagnostics_of, ScagConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> drjudge::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut plots: Vec<(&str, Vec<[f64; 2]>)> = Vec::new();
    plots.push(("diagonal", (0..80).map(|i| [i as f64, i as f64 * 0.5 + 1.0]).collect()));
    plots.push(("grid", (0..100).map(|i| [(i % 10) as f64, (i / 10) as f64]).collect()));
    plots.push(("disc", (0..300).map(|_| disc(&mut rng)).collect()));
    let mut clumps: Vec<[f64; 2]> = Vec::new();
    for c in 0..3 {
        for _ in 0..60 {
            let p = disc(&mut rng);
            clumps.push([p[0] * 0.3 + 4.0 * c as f64, p[1] * 0.3]);
        }
    }
    plots.push(("three clumps", clumps));
    let mut outlier: Vec<[f64; 2]> = (0..99).map(|_| disc(&mut rng)).collect();
    outlier.push([25.0, 25.0]);
    plots.push(("one outlier", outlier));

    let cfg = ScagConfig::default();
    print!("{:<14}", "");
    let names: Vec<&str> = scagnostics_of(&plots[0].1, &cfg)?.to_pairs().iter().map(|(m, _)| m.name()).collect();
    for n in &names {
        print!("{n:>10}");
    }
    println!();
    for (name, pts) in &plots {
        print!("{name:<14}");
        for (_, v) in scagnostics_of(pts, &cfg)?.to_pairs() {
            print!("{v:>10.3}");
        }
        println!();
    }
    Ok(())
}

fn disc(rng: &mut impl Rng) -> [f64; 2] {
    loop {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if p[0] * p[0] + p[1] * p[1] <= 1.0 {
            return p;
        }
    }
}
