use walklis::greedy::{chain_length_tail, chain_lengths, fit_survival, greedy_chain, orthant_exit_samples};
use walklis::rng::derive_seed;
use walklis::stats::ks_statistic;
use walklis::{generate_walk, StepKind, StepLaw};

#[test]
fn first_and_fifth_increments_share_a_law() {
    let (horizon, cut) = (1usize << 15, 200usize);
    let mut first = Vec::new();
    let mut fifth = Vec::new();
    for t in 0..3000 {
        let w = generate_walk(StepLaw::simple(2), horizon - 1, derive_seed(60, &[t]));
        let r = greedy_chain(&w, horizon).unwrap();
        let a = r.chain.indices();
        first.push(r.increments.first().map_or(cut, |&x| x.min(cut)) as u64);
        // The fifth increment is independent of a_4, so conditioning on room after a_4 is harmless.
        if a.len() >= 5 && a[4] + cut <= horizon {
            fifth.push(r.increments.get(4).map_or(cut, |&x| x.min(cut)) as u64);
        }
    }
    let (n, m) = (first.len() as f64, fifth.len() as f64);
    let critical = 1.949 * ((n + m) / (n * m)).sqrt();
    let d = ks_statistic(&first, &fifth);
    assert!(fifth.len() > 500);
    assert!(d < critical, "KS {d} ≥ {critical}");
}

#[test]
fn one_dimensional_calibration() {
    let cap = 100_000;
    let s = orthant_exit_samples(StepLaw::simple(1), 200_000, cap, 61).unwrap();
    let f = fit_survival(&s, cap, (100, 10_000), 25).unwrap();
    assert!((f.fit.slope + 0.5).abs() <= 0.05, "{:?}", f.fit);
}

#[test]
fn lazy_one_step_entrance() {
    let trials = 40_000;
    let s = orthant_exit_samples(StepLaw::new(StepKind::Lazy, 2).unwrap(), trials, 5, 62).unwrap();
    let hat = s.iter().filter(|x| x.tau == 1 && !x.censored).count() as f64 / trials as f64;
    let p = 9.0 / 16.0;
    assert!((hat - p).abs() < 4.0 * (p * (1.0 - p) / trials as f64).sqrt(), "{hat}");
}

#[test]
fn tail_table_is_monotone_and_bounded() {
    let t = chain_length_tail(StepLaw::simple(2), 10_000, &[0.1, 0.2, 0.4], 10_000, 63, false).unwrap();
    assert!(t.rows.windows(2).all(|w| w[0].estimate <= w[1].estimate));
    assert!(t.rows.iter().all(|r| r.estimate <= t.c_hat * r.epsilon + 1e-12));
}

#[test]
fn greedy_never_beats_exact_lis() {
    for dim in [2usize, 3] {
        let pairs = chain_lengths(StepLaw::simple(dim), 2000, 40, 64, true).unwrap();
        assert!(pairs.iter().all(|&(g, l)| g <= l.unwrap()));
    }
}
