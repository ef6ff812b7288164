mod common;

use common::{line, random_space};
use fair_kcenter::eval::{
    community_preservation, evaluate_deterministic, exceed_frequency, pairwise_fairness,
    radius_stats, run_trial_range, run_trials,
};
use fair_kcenter::fair::{fair_assign, trial_rng};
use fair_kcenter::unfair::assign_to_nearest;
use fair_kcenter::{
    EvalParams, EvalTargets, FairConfig, MetricSpace, OrderPolicy, Solver, TrialEnsemble,
};

fn config(seed: u64) -> FairConfig {
    FairConfig::new(1.0, OrderPolicy::UniformRandom, seed).unwrap()
}

#[test]
fn same_seed_same_ensemble() {
    let s = random_space(40, 3);
    let base = Solver::Scr.solve(&s, 5).unwrap();
    let targets = EvalTargets::new(&s, base.max_radius(), EvalParams::default()).unwrap();
    let a = run_trials(&s, &base, &config(9), &targets, 500).unwrap();
    let b = run_trials(&s, &base, &config(9), &targets, 500).unwrap();
    assert_eq!(a, b);
    let c = run_trials(&s, &base, &config(10), &targets, 500).unwrap();
    assert_ne!(a.trial_radii(), c.trial_radii());
}

#[test]
fn split_runs_merge_to_single_run() {
    let s = random_space(30, 5);
    let base = Solver::Gonz1.solve(&s, 4).unwrap();
    let targets = EvalTargets::new(&s, base.max_radius(), EvalParams::default()).unwrap();
    let cfg = config(123);
    let whole = run_trials(&s, &base, &cfg, &targets, 300).unwrap();
    let mut head = run_trial_range(&s, &base, &cfg, &targets, 0, 170).unwrap();
    let tail = run_trial_range(&s, &base, &cfg, &targets, 170, 130).unwrap();
    head.merge(tail).unwrap();
    assert_eq!(head, whole);

    // Gaps and foreign targets are rejected.
    let gap = run_trial_range(&s, &base, &cfg, &targets, 1000, 5).unwrap();
    assert!(head.clone().merge(gap).is_err());
    let other = EvalTargets::new(&s, base.max_radius() / 2.0, EvalParams::default()).unwrap();
    let foreign = run_trial_range(&s, &base, &cfg, &other, 300, 5).unwrap();
    assert!(head.merge(foreign).is_err());
}

#[test]
fn single_trial_matches_deterministic_scoring_of_that_realization() {
    let s = random_space(35, 8);
    let base = Solver::Scr.solve(&s, 4).unwrap();
    let targets = EvalTargets::new(&s, base.max_radius(), EvalParams::default()).unwrap();
    let cfg = config(31);
    let ens = run_trials(&s, &base, &cfg, &targets, 1).unwrap();
    let realization = fair_assign(&s, &base, &cfg, &mut trial_rng(31, 0)).unwrap();
    let (pw, cm, rd) = evaluate_deterministic(&s, &realization, &targets, None).unwrap();
    assert_eq!(pairwise_fairness(&ens), pw);
    assert_eq!(community_preservation(&ens), cm);
    assert_eq!(radius_stats(&ens, None).unwrap(), rd);
    assert_eq!(ens.trial_radii(), &[realization.max_radius()]);
}

#[test]
fn fragment_counts_bounded_and_duplicates_never_split() {
    let mut pts: Vec<Vec<f64>> = (0..25)
        .map(|i| vec![(i * 7 % 11) as f64, (i * 3 % 5) as f64])
        .collect();
    pts.push(pts[3].clone());
    pts.push(pts[17].clone());
    let s = MetricSpace::from_points(&pts).unwrap();
    let base = Solver::Scr.solve(&s, 4).unwrap();
    let targets = EvalTargets::new(&s, base.max_radius(), EvalParams::default()).unwrap();
    assert!(targets.pairs().iter().any(|p| p.dist == 0.0));
    let ens = run_trials(&s, &base, &config(2), &targets, 2000).unwrap();

    let pw = pairwise_fairness(&ens);
    assert_eq!(pw.zero_distance_separations, 0);
    for i in 0..s.len() {
        let hist = ens.fragment_histogram(i);
        assert_eq!(hist.iter().sum::<u64>(), 2000);
        assert_eq!(hist[0], 0);
        assert!(hist.len() <= targets.communities()[i].len().min(4) + 1);
        assert_eq!(exceed_frequency(hist, 0), 1.0);
    }
}

#[test]
fn line_instance_pair_and_community_statistics() {
    let s = line(&[0.0, 5.0, 6.0, 11.0]);
    let base = assign_to_nearest(&s, &[0, 3]).unwrap();
    let targets = EvalTargets::new(&s, 5.0, EvalParams::default()).unwrap();
    let ens = run_trials(&s, &base, &config(17), &targets, 100_000).unwrap();

    let p = 1.0 - (-0.2f64).exp();
    let pw = pairwise_fairness(&ens);
    let bc = pw.pairs.iter().find(|q| (q.u, q.v) == (1, 2)).unwrap();
    assert!((bc.ratio.unwrap() - p / 0.2).abs() < 0.03, "{bc:?}");

    let cm = community_preservation(&ens);
    let b = &cm.communities[1];
    assert_eq!(b.size, 2);
    assert!((b.mean - (1.0 + p)).abs() < 0.006, "{b:?}");
    assert!((b.exceed[0] - p).abs() < 0.006);
    assert_eq!(b.exceed[1], 0.0);

    let rd = radius_stats(&ens, Some(5.0)).unwrap();
    assert!((5.0..=15.0).contains(&rd.mean_max_radius), "{rd:?}");
    assert_eq!(rd.ratio_to_optimum, Some(rd.mean_max_radius / 5.0));
}

/// Two centers with a tight group of four points in between, two nearer
/// each side. The deterministic assignment splits the group 2-2.
#[test]
fn nearest_center_splits_the_middle_group() {
    let s = MetricSpace::from_points(&[
        vec![0.0, 0.0],
        vec![0.5, 1.5],
        vec![3.0, 0.0],
        vec![5.7, 0.2],
        vec![5.8, -0.3],
        vec![6.3, 0.5],
        vec![6.4, -0.3],
        vec![9.0, 1.0],
        vec![8.9, 2.2],
        vec![9.7, 0.2],
        vec![12.0, 1.0],
    ])
    .unwrap();
    let base = assign_to_nearest(&s, &[2, 7]).unwrap();
    assert_eq!(&base.assignment()[3..7], &[0, 0, 1, 1]);
    let params = EvalParams {
        community_divisor: 3.0,
        ..EvalParams::default()
    };
    let targets = EvalTargets::new(&s, base.max_radius(), params).unwrap();
    assert_eq!(targets.communities()[3].members(), &[3, 4, 5, 6]);
    let (_, cm, _) = evaluate_deterministic(&s, &base, &targets, None).unwrap();
    assert_eq!(cm.communities[3].mean, 2.0);
}

#[test]
fn well_separated_deterministic_partition_is_perfectly_fair() {
    let s = line(&[0.0, 1.0, 10.0, 11.0]);
    let base = assign_to_nearest(&s, &[0, 2]).unwrap();
    let targets = EvalTargets::new(&s, 5.0, EvalParams::default()).unwrap();
    let (pw, cm, rd) = evaluate_deterministic(&s, &base, &targets, Some(1.0)).unwrap();
    assert_eq!(pw.max_ratio, 0.0);
    assert_eq!(cm.max_mean, 1.0);
    assert_eq!(rd.mean_max_radius, 1.0);
    assert_eq!(rd.ratio_to_reference, Some(0.2));
}

#[test]
fn empty_ensemble_has_no_trials() {
    let s = random_space(5, 1);
    let targets = EvalTargets::new(&s, 0.3, EvalParams::default()).unwrap();
    let e = TrialEnsemble::empty(&targets, 2, 0, None);
    assert_eq!(e.trials(), 0);
    let base = Solver::Gonz1.solve(&s, 2).unwrap();
    assert!(run_trials(&s, &base, &config(0), &targets, 0).is_err());
}
