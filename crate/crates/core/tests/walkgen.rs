use statrs::distribution::{ChiSquared, ContinuousCDF};
use walklis::harness::max_concentration_probe;
use walklis::dyadic::hitting_tail_probe;
use walklis::rng::derive_seed;
use walklis::{generate_walk, StepKind, StepLaw};

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn plus_one_counts_are_binomial() {
    let (steps, trials) = (16u64, 100_000u64);
    let mut counts = vec![0u64; steps as usize + 1];
    for t in 0..trials {
        let w = generate_walk(StepLaw::simple(1), steps as usize, derive_seed(8, &[t]));
        let end = w.lattice().unwrap()[steps as usize];
        counts[((end + steps as i64) / 2) as usize] += 1;
    }
    // Pool the sparse tails {0,1,2} and {14,15,16}.
    let bins: Vec<(u64, f64)> = {
        let p = |k: u64| binomial(steps, k) / 2f64.powi(steps as i32);
        let mut bins = vec![((0..=2).map(|k| counts[k]).sum(), (0..=2).map(p).sum::<f64>())];
        bins.extend((3..=13).map(|k| (counts[k as usize], p(k))));
        bins.push(((14..=16).map(|k| counts[k]).sum(), (14..=16).map(p).sum::<f64>()));
        bins
    };
    let chi2: f64 = bins
        .iter()
        .map(|&(obs, p)| {
            let e = p * trials as f64;
            (obs as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new((bins.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(chi2 < critical, "chi2 {chi2} ≥ {critical}");
}

#[test]
fn steps_are_centred_with_unit_variance() {
    let n = 200_000;
    for kind in [StepKind::Lazy, StepKind::Uniform(1), StepKind::Uniform(5), StepKind::Normal] {
        let w = generate_walk(StepLaw::new(kind, 1).unwrap(), n, 12);
        let x = w.coordinate(0);
        let steps: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
        let mean = steps.iter().sum::<f64>() / n as f64;
        let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let fourth = steps.iter().map(|s| s.powi(4)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{kind}: mean {mean}");
        assert!((var - 1.0).abs() < 4.0 * ((fourth - 1.0) / n as f64).sqrt(), "{kind}: var {var}");
    }
}

#[test]
fn maximal_inequality() {
    let probe = max_concentration_probe(StepLaw::simple(1), 10_000, &[2.0, 3.0, 4.0], 100_000, 3).unwrap();
    for r in &probe.rows {
        assert!(r.estimate <= r.chebyshev + 3.0 * r.stderr, "λ={}: {}", r.lambda, r.estimate);
    }
}

#[test]
fn maximal_tail_is_gaussian_in_shape() {
    let probe = max_concentration_probe(StepLaw::simple(1), 10_000, &[1.5, 2.0, 2.5, 3.0], 100_000, 4).unwrap();
    let fit = probe.gaussian_fit.expect("all estimates positive");
    assert!(fit.slope > 0.0 && fit.r2 >= 0.9, "{fit:?}");
}

#[test]
fn hitting_tail_bound() {
    for (m, n) in [(2u32, 10_000u64), (3, 4_000), (4, 50_000)] {
        let h = hitting_tail_probe(m, n, 4000, 6).unwrap();
        assert!(h.estimate <= h.bound + 3.0 * h.stderr, "{h:?}");
    }
}

#[test]
fn generation_ignores_thread_count() {
    use rayon::prelude::*;
    let laws = [StepLaw::simple(3), StepLaw::new(StepKind::Normal, 2).unwrap()];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (0..64u64)
                .into_par_iter()
                .map(|t| generate_walk(laws[(t % 2) as usize], 500, derive_seed(1, &[t])))
                .collect::<Vec<_>>()
        })
    };
    assert_eq!(run(1), run(4));
}
