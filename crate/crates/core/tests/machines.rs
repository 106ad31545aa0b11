use std::collections::BTreeMap;

use qaut::corpus;
use qaut::run::RunStatus;

#[test]
fn coin_loses_a_third_of_the_time() {
    let m = corpus::coin();
    let d = m.enumerate("fresh", 200, 0.0).unwrap();
    let lost: f64 = d.terminal.iter().filter(|((n, _), _)| n == "lost").map(|(_, p)| p).sum();
    // Half the runs become tired; a tired player eventually quits with odds ½ : ¼.
    assert!((lost - 1.0 / 3.0).abs() < 1e-9, "{lost}");
    assert!(d.residual < 1e-9);
}

#[test]
fn sampled_coin_matches_enumeration() {
    let m = corpus::coin();
    let d = m.enumerate("fresh", 64, 0.0).unwrap();
    let runs = 10_000;
    let mut seen: BTreeMap<(String, String), u64> = BTreeMap::new();
    for seed in 0..runs {
        let t = m.sample_run("fresh", seed, 64).unwrap();
        if t.status == RunStatus::Converged {
            let last = t.last();
            *seen.entry((last.node.clone(), last.snapshot.clone())).or_default() += 1;
        }
    }
    for (key, p) in &d.terminal {
        let f = seen.get(key).copied().unwrap_or(0) as f64 / runs as f64;
        let bound = 3.0 * (p * (1.0 - p) / runs as f64).sqrt() + 0.01;
        assert!((f - p).abs() <= bound, "{key:?}: {f} vs {p}");
    }
}
