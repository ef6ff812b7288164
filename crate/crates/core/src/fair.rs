//! Randomized fair re-assignment of a base k-center clustering.
//!
//! Each base cluster `i` gets an independent exponential expansion `X_i`.
//! Clusters are processed one at a time; cluster `i` captures every still
//! unclustered point within `R_i + X_i` of its original center. A cluster
//! keeps its original center when that center was still free, otherwise it
//! is re-centered on the captured point that minimizes its radius. Any two
//! points `u, v` end up separated with probability at most `d(u,v) / (psi R)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::unfair::{Clustering, Solver};

/// Processing order of the base clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    /// Base cluster order.
    Given,
    /// Fresh uniform permutation per realization.
    #[default]
    UniformRandom,
}

/// Parameters of the randomized expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairConfig {
    psi: f64,
    pub order_policy: OrderPolicy,
    pub rng_seed: u64,
}

impl FairConfig {
    pub fn new(psi: f64, order_policy: OrderPolicy, rng_seed: u64) -> Result<Self> {
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "psi must be a positive finite number, got {psi}"
            )));
        }
        Ok(FairConfig {
            psi,
            order_policy,
            rng_seed,
        })
    }

    /// Configuration for `lambda = scale / R`, i.e. `psi = 1 / scale`.
    pub fn from_lambda_scale(scale: f64, order_policy: OrderPolicy, rng_seed: u64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda scale must be a positive finite number, got {scale}"
            )));
        }
        FairConfig::new(1.0 / scale, order_policy, rng_seed)
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Exponential rate for a base clustering of maximum radius `radius`.
    /// Infinite when the radius is zero, which makes every draw zero.
    pub fn lambda(&self, radius: f64) -> f64 {
        1.0 / (self.psi * radius)
    }
}

/// Inverse exponential CDF: `-ln(u) / lambda` for `u` in (0, 1].
pub fn exponential_from_uniform(lambda: f64, u: f64) -> f64 {
    debug_assert!(u > 0.0 && u <= 1.0);
    let x = -u.ln() / lambda;
    // -ln(1) is -0.0; keep draws non-negative in sign as well.
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// One exponential draw with rate `lambda` by inverse transform.
pub fn sample_expansion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<f64> {
    if !(lambda > 0.0) || lambda.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "exponential rate must be positive, got {lambda}"
        )));
    }
    Ok(exponential_from_uniform(lambda, open_closed_unit(rng)))
}

/// Uniform on (0, 1] with 53 bits of precision.
fn open_closed_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random stream for trial `trial` under `master_seed`. Streams of distinct
/// trials are independent, so results do not depend on execution order.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// A final cluster produced from base cluster `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalCluster {
    /// Center, or `None` for an empty cluster.
    pub center: Option<usize>,
    /// Captured points in increasing order.
    pub members: Vec<usize>,
    /// `max d(center, member)`; 0 for an empty cluster.
    pub radius: f64,
}

impl FinalCluster {
    pub fn is_empty(&self) -> bool {
        self.center.is_none()
    }
}

/// One realization of the randomized expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedClustering {
    order: Vec<usize>,
    draws: Vec<f64>,
    clusters: Vec<FinalCluster>,
    assignment: Vec<usize>,
    max_radius: f64,
}

impl ExpandedClustering {
    /// Base cluster indices in processing order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Expansion `X_i`, indexed by base cluster.
    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    /// Final clusters, indexed by base cluster (possibly empty).
    pub fn clusters(&self) -> &[FinalCluster] {
        &self.clusters
    }

    /// Base cluster index of the final cluster holding every point.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Largest final radius over non-empty clusters.
    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    pub fn non_empty_count(&self) -> usize {
        self.clusters.iter().filter(|c| !c.is_empty()).count()
    }

    /// Checks every structural guarantee of a realization against its base
    /// clustering. Returns a description of the first violation.
    pub fn check_invariants(&self, space: &MetricSpace, base: &Clustering) -> Result<(), String> {
        let n = space.len();
        let k = base.k();
        if self.assignment.len() != n {
            return Err(format!("assignment has {} entries", self.assignment.len()));
        }
        let mut sorted_order = self.order.clone();
        sorted_order.sort_unstable();
        if sorted_order != (0..k).collect::<Vec<_>>() {
            return Err(format!("order {:?} is not a permutation", self.order));
        }
        if self.draws.iter().any(|x| !(*x >= 0.0)) {
            return Err("negative expansion".into());
        }

        let mut seen = vec![false; n];
        for (i, c) in self.clusters.iter().enumerate() {
            match c.center {
                None if !c.members.is_empty() => {
                    return Err(format!("cluster {i} has members but no center"))
                }
                Some(ctr) if !c.members.contains(&ctr) => {
                    return Err(format!("center {ctr} is not a member of cluster {i}"))
                }
                _ => {}
            }
            for &p in &c.members {
                if std::mem::replace(&mut seen[p], true) {
                    return Err(format!("point {p} is in two clusters"));
                }
                if self.assignment[p] != i {
                    return Err(format!("point {p} assignment disagrees with cluster {i}"));
                }
            }
            if let Some(ctr) = c.center {
                let r = c
                    .members
                    .iter()
                    .map(|&p| space.dist(ctr, p))
                    .fold(0.0, f64::max);
                if r != c.radius {
                    return Err(format!("cluster {i} radius {} != recomputed {r}", c.radius));
                }
                let reach = base.radii()[i] + self.draws[i];
                if c.radius > 2.0 * reach {
                    return Err(format!(
                        "cluster {i} radius {} exceeds 2 x {reach}",
                        c.radius
                    ));
                }
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(format!("point {p} is unclustered"));
        }

        let centers = base.centers();
        for (step, &i) in self.order.iter().enumerate() {
            let reach = base.radii()[i] + self.draws[i];
            for &p in &self.clusters[i].members {
                if space.dist(centers[i], p) > reach {
                    return Err(format!("point {p} lies outside the reach of cluster {i}"));
                }
                for &j in &self.order[..step] {
                    if space.dist(centers[j], p) <= base.radii()[j] + self.draws[j] {
                        return Err(format!(
                            "point {p} in cluster {i} was reachable by earlier cluster {j}"
                        ));
                    }
                }
            }
        }
        let max = self
            .clusters
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| c.radius)
            .fold(0.0, f64::max);
        if max != self.max_radius {
            return Err("max radius disagrees with clusters".into());
        }
        Ok(())
    }
}

/// Runs the randomized expansion over `base`.
///
/// The processing order is drawn first (when random), then one expansion per
/// cluster in processing order.
pub fn fair_assign<R: Rng + ?Sized>(
    space: &MetricSpace,
    base: &Clustering,
    config: &FairConfig,
    rng: &mut R,
) -> Result<ExpandedClustering> {
    base.validate(space)?;
    Ok(expand(space, base, config, rng))
}

/// [`fair_assign`] without re-validating `base`; for hot trial loops that
/// validated once up front.
pub(crate) fn expand<R: Rng + ?Sized>(
    space: &MetricSpace,
    base: &Clustering,
    config: &FairConfig,
    rng: &mut R,
) -> ExpandedClustering {
    let n = space.len();
    let k = base.k();
    let mut order: Vec<usize> = (0..k).collect();
    if config.order_policy == OrderPolicy::UniformRandom {
        order.shuffle(rng);
    }

    let lambda = config.lambda(base.max_radius());
    let mut draws = vec![0.0; k];
    for &i in &order {
        let u = open_closed_unit(rng);
        draws[i] = if lambda.is_finite() {
            exponential_from_uniform(lambda, u)
        } else {
            0.0
        };
    }

    const UNCLUSTERED: usize = usize::MAX;
    let mut assignment = vec![UNCLUSTERED; n];
    let mut clusters = vec![
        FinalCluster {
            center: None,
            members: Vec::new(),
            radius: 0.0,
        };
        k
    ];

    for &i in &order {
        let original = base.centers()[i];
        let reach = base.radii()[i] + draws[i];
        let center_free = assignment[original] == UNCLUSTERED;
        let members: Vec<usize> = space
            .row(original)
            .iter()
            .enumerate()
            .filter(|&(p, &d)| d <= reach && assignment[p] == UNCLUSTERED)
            .map(|(p, _)| p)
            .collect();
        for &p in &members {
            assignment[p] = i;
        }

        let cluster = &mut clusters[i];
        if center_free {
            cluster.radius = radius_from(space, original, &members);
            cluster.center = Some(original);
        } else if !members.is_empty() {
            let (c, r) = best_center(space, &members);
            cluster.center = Some(c);
            cluster.radius = r;
        }
        cluster.members = members;
    }

    let max_radius = clusters
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| c.radius)
        .fold(0.0, f64::max);
    ExpandedClustering {
        order,
        draws,
        clusters,
        assignment,
        max_radius,
    }
}

fn radius_from(space: &MetricSpace, center: usize, members: &[usize]) -> f64 {
    let row = space.row(center);
    members.iter().map(|&p| row[p]).fold(0.0, f64::max)
}

/// Member minimizing the cluster radius; lowest index on ties.
fn best_center(space: &MetricSpace, members: &[usize]) -> (usize, f64) {
    let mut best = (members[0], f64::INFINITY);
    for &c in members {
        let row = space.row(c);
        let mut r = 0.0f64;
        for &p in members {
            r = r.max(row[p]);
            if r >= best.1 {
                break;
            }
        }
        if r < best.1 {
            best = (c, r);
        }
    }
    best
}

/// Solves with `solver`, then runs [`fair_assign`] on its output.
pub fn fair_solve<R: Rng + ?Sized>(
    space: &MetricSpace,
    k: usize,
    solver: Solver,
    config: &FairConfig,
    rng: &mut R,
) -> Result<(Clustering, ExpandedClustering)> {
    let base = solver.solve(space, k)?;
    let fair = expand(space, &base, config, rng);
    Ok((base, fair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unfair::assign_to_nearest;

    fn line(xs: &[f64]) -> MetricSpace {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_points(&pts).unwrap()
    }

    #[test]
    fn inverse_transform_examples() {
        assert_eq!(exponential_from_uniform(3.0, 1.0), 0.0);
        let x = exponential_from_uniform(2.0, (-1.0f64).exp());
        assert!((x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sample_rejects_bad_rate() {
        let mut rng = trial_rng(1, 0);
        assert!(sample_expansion(0.0, &mut rng).is_err());
        assert!(sample_expansion(-1.0, &mut rng).is_err());
        assert!(sample_expansion(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn exponential_mean() {
        let mut rng = trial_rng(7, 0);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_expansion(4.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.002, "mean {mean}");
    }

    /// Two-sample Kolmogorov–Smirnov statistic.
    fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn memoryless_shifted_tail_matches() {
        let lambda = 1.5;
        let a = 0.8;
        let mut rng = trial_rng(11, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_expansion(lambda, &mut rng).unwrap())
            .collect();
        let tail: Vec<f64> = draws.iter().filter(|&&x| x > a).map(|x| x - a).collect();
        let mut rng = trial_rng(11, 1);
        let fresh: Vec<f64> = (0..100_000)
            .map(|_| sample_expansion(lambda, &mut rng).unwrap())
            .collect();
        let (n, m) = (tail.len() as f64, fresh.len() as f64);
        let critical = (-(0.001f64 / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt();
        let d = ks_statistic(tail, fresh);
        assert!(d < critical, "KS {d} >= {critical}");
    }

    #[test]
    fn config_validation() {
        assert!(FairConfig::new(0.0, OrderPolicy::Given, 0).is_err());
        assert!(FairConfig::new(-2.0, OrderPolicy::Given, 0).is_err());
        assert!(FairConfig::from_lambda_scale(0.0, OrderPolicy::Given, 0).is_err());
        let c = FairConfig::from_lambda_scale(4.0, OrderPolicy::Given, 0).unwrap();
        assert_eq!(c.psi(), 0.25);
        assert_eq!(c.lambda(2.0), 2.0);
    }

    #[test]
    fn single_cluster_is_unchanged() {
        let s = line(&[0.0, 2.0, 3.0, 9.0]);
        let base = assign_to_nearest(&s, &[1]).unwrap();
        let cfg = FairConfig::new(1.0, OrderPolicy::UniformRandom, 0).unwrap();
        for t in 0..50 {
            let e = fair_assign(&s, &base, &cfg, &mut trial_rng(3, t)).unwrap();
            assert_eq!(e.assignment(), base.assignment());
            assert_eq!(e.clusters()[0].center, Some(1));
            e.check_invariants(&s, &base).unwrap();
        }
    }

    #[test]
    fn points_within_base_radius_of_first_cluster_stay_together() {
        let s = line(&[0.0, 1.0, 2.0, 10.0, 11.0]);
        let base = assign_to_nearest(&s, &[1, 4]).unwrap();
        let cfg = FairConfig::new(1.0, OrderPolicy::Given, 0).unwrap();
        for t in 0..200 {
            let e = fair_assign(&s, &base, &cfg, &mut trial_rng(5, t)).unwrap();
            assert_eq!(e.assignment()[0], e.assignment()[2]);
            e.check_invariants(&s, &base).unwrap();
        }
    }

    #[test]
    fn recentering_minimizes_radius() {
        // Cluster 0 goes first and captures cluster 1's original center (1.2).
        let s = line(&[0.0, 1.0, 1.2, 2.0, 2.3, 2.6, -1.3]);
        let base = Clustering::from_assignment(&s, vec![0, 2], vec![0, 0, 1, 1, 1, 1, 0]).unwrap();
        let cfg = FairConfig::new(1e-12, OrderPolicy::Given, 0).unwrap();
        let e = fair_assign(&s, &base, &cfg, &mut trial_rng(1, 0)).unwrap();
        e.check_invariants(&s, &base).unwrap();
        assert_eq!(e.clusters()[0].members, vec![0, 1, 2, 6]);
        assert_eq!(e.clusters()[1].members, vec![3, 4, 5]);
        assert_eq!(e.clusters()[1].center, Some(4));
        assert_eq!(e.clusters()[1].radius, s.dist(4, 3).max(s.dist(4, 5)));
        assert_eq!(best_center(&s, &[0, 4]).0, 0);
    }

    #[test]
    fn empty_cluster_is_marked() {
        // Cluster 1 goes first with a huge draw and absorbs everything.
        let s = line(&[0.0, 1.0, 10.0]);
        let base = assign_to_nearest(&s, &[0, 2]).unwrap();
        let cfg = FairConfig::new(1000.0, OrderPolicy::Given, 0).unwrap();
        let mut saw_empty = false;
        for t in 0..200 {
            let e = fair_assign(&s, &base, &cfg, &mut trial_rng(9, t)).unwrap();
            e.check_invariants(&s, &base).unwrap();
            if e.clusters()[1].is_empty() {
                saw_empty = true;
                assert!(e.clusters()[1].members.is_empty());
                assert_eq!(e.non_empty_count(), 1);
            }
        }
        assert!(saw_empty);
    }

    #[test]
    fn zero_radius_base_never_expands() {
        let s = line(&[0.0, 1.0, 2.0]);
        let base = assign_to_nearest(&s, &[0, 1, 2]).unwrap();
        let cfg = FairConfig::new(1.0, OrderPolicy::UniformRandom, 0).unwrap();
        let e = fair_assign(&s, &base, &cfg, &mut trial_rng(1, 0)).unwrap();
        assert!(e.draws().iter().all(|&x| x == 0.0));
        assert_eq!(e.max_radius(), 0.0);
    }

    #[test]
    fn rejects_inconsistent_base() {
        let s = line(&[0.0, 1.0, 10.0]);
        let other = line(&[0.0, 1.0]);
        let base = assign_to_nearest(&other, &[0]).unwrap();
        let cfg = FairConfig::new(1.0, OrderPolicy::Given, 0).unwrap();
        assert!(matches!(
            fair_assign(&s, &base, &cfg, &mut trial_rng(1, 0)),
            Err(Error::InconsistentClustering(_))
        ));
    }

    #[test]
    fn fair_solve_is_seed_deterministic() {
        let s = line(&[0.0, 1.0, 4.0, 9.0, 10.0, 15.0]);
        let cfg = FairConfig::new(0.5, OrderPolicy::UniformRandom, 0).unwrap();
        let a = fair_solve(&s, 3, Solver::Scr, &cfg, &mut trial_rng(42, 0)).unwrap();
        let b = fair_solve(&s, 3, Solver::Scr, &cfg, &mut trial_rng(42, 0)).unwrap();
        assert_eq!(a, b);
    }
}
