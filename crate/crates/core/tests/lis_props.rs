use walklis::harness::{erdos_szekeres_audit, run_scaling, ExperimentSpec, Statistic};
use walklis::lis::{
    lnds_chain_1d, lnds_chain_dd, lnds_length_1d, lnds_length_2d, lnds_length_dd, longest_level_set, record_times,
};
use walklis::rng::derive_seed;
use walklis::stats::fit_exponent;
use walklis::walk::Positions;
use walklis::{generate_walk, StepKind, StepLaw};

fn laws(dim: usize) -> Vec<StepLaw> {
    [StepKind::Simple, StepKind::Lazy, StepKind::Uniform(2), StepKind::Normal]
        .into_iter()
        .map(|k| StepLaw::new(k, dim).unwrap())
        .collect()
}

#[test]
fn witnesses_revalidate() {
    for dim in 1..4 {
        for law in laws(dim) {
            for t in 0..10 {
                let w = generate_walk(law, 300, derive_seed(20, &[t]));
                match w.positions() {
                    Positions::Lattice(v) => {
                        let c = lnds_chain_dd(v, dim).unwrap();
                        c.validate(v).unwrap();
                        assert_eq!(c.len(), lnds_length_dd(v, dim).unwrap());
                        if dim == 1 {
                            let c1 = lnds_chain_1d(v);
                            c1.validate(v).unwrap();
                            assert_eq!(c1.len(), c.len());
                        }
                        if dim == 2 {
                            assert_eq!(lnds_length_2d(v).unwrap(), c.len());
                        }
                    }
                    Positions::Real(v) => {
                        let c = lnds_chain_dd(v, dim).unwrap();
                        c.validate(v).unwrap();
                        if dim == 1 {
                            assert_eq!(lnds_length_1d(v), c.len());
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn baselines_are_dominated() {
    for law in laws(1).into_iter().filter(|l| l.is_lattice()) {
        for t in 0..50 {
            let w = generate_walk(law, 2000, derive_seed(21, &[t]));
            let v = w.lattice().unwrap();
            let lis = lnds_length_1d(v);
            let records = record_times(v);
            let level = longest_level_set(v);
            records.validate(v).unwrap();
            level.validate(v).unwrap();
            assert!(records.len() <= lis && level.len() <= lis);
        }
    }
}

#[test]
fn record_count_grows_like_square_root() {
    let sizes: Vec<u64> = [100u64, 300, 1000, 3000, 10_000].to_vec();
    let spec = ExperimentSpec::new(StepLaw::simple(1), sizes, 1000, Statistic::RecordCount, 22);
    let fit = fit_exponent(&run_scaling(&spec).unwrap().points(), None).unwrap();
    assert!((fit.slope - 0.5).abs() <= 0.05, "{fit:?}");
}

#[test]
fn level_set_grows_like_square_root() {
    let sizes: Vec<u64> = [100u64, 300, 1000, 3000, 10_000].to_vec();
    let spec = ExperimentSpec::new(StepLaw::simple(1), sizes, 1000, Statistic::LevelSet, 23);
    let fit = fit_exponent(&run_scaling(&spec).unwrap().points(), None).unwrap();
    assert!((fit.slope - 0.5).abs() <= 0.08, "{fit:?}");
}

#[test]
fn erdos_szekeres_on_mixed_laws() {
    let audit = erdos_szekeres_audit(5000, 3000, 24).unwrap();
    assert!(audit.violations.is_empty(), "{:?}", audit.violations.first());
}
