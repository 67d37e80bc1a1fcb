use walklis::harness::{run_scaling, trial_values, ExperimentSpec, Statistic};
use walklis::report::{load_report, persist_report, render_svg, Report};
use walklis::StepLaw;

#[test]
fn baselines_never_exceed_exact_lis() {
    let law = StepLaw::simple(1);
    for n in [64u64, 1024, 8192] {
        let value = |statistic| {
            trial_values(&ExperimentSpec::new(law, vec![n], 100, statistic, 70), n)
                .unwrap()
                .into_iter()
                .map(Option::unwrap)
                .collect::<Vec<u64>>()
        };
        let lis = value(Statistic::ExactLis);
        for statistic in [Statistic::RecordCount, Statistic::LevelSet, Statistic::GreedyChain] {
            let other = value(statistic);
            assert!(other.iter().zip(&lis).all(|(o, l)| o <= l), "{statistic} at n={n}");
        }
    }
    let law = StepLaw::simple(2);
    let spec = |statistic| ExperimentSpec::new(law, vec![3000], 50, statistic, 71);
    let lis = trial_values(&spec(Statistic::ExactLis), 3000).unwrap();
    let greedy = trial_values(&spec(Statistic::GreedyChain), 3000).unwrap();
    assert!(greedy.iter().zip(&lis).all(|(g, l)| g <= l));
}

#[test]
fn means_increase_with_size() {
    let spec = ExperimentSpec::new(StepLaw::simple(1), (10..=16).map(|j| 1u64 << j).collect(), 100, Statistic::ExactLis, 72);
    let points = run_scaling(&spec).unwrap().points();
    assert!(points.windows(2).all(|w| w[0].1 < w[1].1));
}

#[test]
fn persisted_reports_are_byte_identical_across_threads() {
    let specs = [
        ExperimentSpec::new(StepLaw::simple(1), vec![256, 512, 1024], 40, Statistic::LevelSet, 73),
        ExperimentSpec::new(StepLaw::simple(1), vec![8, 16, 32], 40, Statistic::DyadicA, 73),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let report = pool.install(|| {
            let tables: Vec<_> = specs.iter().map(|s| run_scaling(s).unwrap()).collect();
            Report::from_tables(&tables, None)
        });
        let path = dir.path().join(format!("{threads}.json"));
        persist_report(&report, &path).unwrap();
        assert_eq!(load_report(&path).unwrap(), report);
        assert_eq!(render_svg(&report).matches("class=\"series\"").count(), 2);
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}
