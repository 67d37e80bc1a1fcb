use walklis::multiscale::{
    certified_upper_bound, default_gamma_grid, local_time_moments, scaled_local_time, submultiplicativity_probe,
    GridQuery, LocalTimeGrid,
};
use walklis::rng::derive_seed;
use walklis::{generate_walk, StepKind, StepLaw};

#[test]
fn local_time_mean_scales_with_block_size() {
    let stats = local_time_moments(StepLaw::simple(1), 6, &[1, 2, 3], 10_000, 30).unwrap();
    // The ratio climbs towards its limit from below, so the check is a
    // common bound with shrinking increments rather than monotonicity.
    let c = stats.iter().map(|s| s.ratio + 3.0 * s.ratio_stderr).fold(0.0, f64::max);
    assert!(stats.iter().all(|s| s.ratio >= c / 2.0), "{c}");
    let r: Vec<f64> = stats.iter().map(|s| s.ratio).collect();
    let se = stats.iter().map(|s| s.ratio_stderr).fold(0.0, f64::max);
    assert!(r[2] - r[1] <= r[1] - r[0] + 3.0 * se, "{r:?}");
}

#[test]
fn local_time_tail_decays_geometrically() {
    let stats = local_time_moments(StepLaw::simple(1), 6, &[1, 2, 3], 10_000, 31).unwrap();
    for s in &stats {
        let scale = 2f64.powi(s.k as i32);
        assert!(s.samples.iter().all(|&x| x as f64 <= 4f64.powi(s.k as i32)));
        // C fitted on ℓ = 1: the smallest grid value with survival ≤ 1/2.
        let c = (1..=400)
            .map(|i| f64::from(i) * 0.05)
            .find(|&c| s.survival(c * scale).0 <= 0.5)
            .expect("a median exists");
        for ell in 2..=5 {
            let (p, se) = s.survival(c * f64::from(ell) * scale);
            assert!(p <= 0.5f64.powi(ell) + 3.0 * se, "k={} ℓ={ell}: {p}", s.k);
        }
    }
}

#[test]
fn counting_cap_and_definition() {
    for t in 0..20 {
        let law = if t % 2 == 0 { StepLaw::simple(1) } else { StepLaw::new(StepKind::Lazy, 1).unwrap() };
        let w = generate_walk(law, 255, derive_seed(32, &[t]));
        let grid = LocalTimeGrid::build(&w, 4).unwrap();
        for m in 1..=4 {
            for k in 0..=m {
                for p in 0..4u64.pow(4 - m) {
                    for q in -3..3 {
                        let query = GridQuery { m, k, p, q };
                        let count = grid.count(query).unwrap();
                        assert!(count <= 4u64.pow(k));
                        assert_eq!(count, scaled_local_time(&w, query).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn certificates_are_sound_across_laws() {
    let grid = default_gamma_grid();
    for kind in [StepKind::Simple, StepKind::Lazy, StepKind::Uniform(2), StepKind::Normal] {
        let law = StepLaw::new(kind, 1).unwrap();
        for t in 0..60 {
            let w = generate_walk(law, 256, derive_seed(33, &[t]));
            for &(m, k) in &[(1u32, 1u32), (1, 2), (2, 1), (2, 2)] {
                let gamma = grid[(t as usize * 7) % 12];
                let r = certified_upper_bound(&w, m, k, gamma, true).unwrap();
                assert!(r.is_sound(), "{kind} t={t}: {r:?}");
            }
        }
    }
}

#[test]
fn submultiplicativity_on_short_walks() {
    for threshold in [10u64, 14, 18] {
        let p = submultiplicativity_probe(StepLaw::simple(1), 3, threshold, 2, 20_000, 34).unwrap();
        assert!(p.holds_within(3.0), "{p:?}");
    }
}
