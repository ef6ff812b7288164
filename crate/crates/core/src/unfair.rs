//! Classical k-center solvers: farthest-first traversal (single start and
//! best-of-all-starts), the bottleneck-graph dominating-set heuristic, and an
//! exhaustive oracle for small instances.
//!
//! Every tie (farthest point, dominating score, nearest center, best start)
//! resolves to the lowest index, so all solvers are deterministic.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

/// Largest number of center subsets [`optimal_bruteforce`] will enumerate.
pub const BRUTEFORCE_LIMIT: u64 = 10_000_000;

/// A deterministic k-center solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    centers: Vec<usize>,
    assignment: Vec<usize>,
    radii: Vec<f64>,
    max_radius: f64,
}

impl Clustering {
    /// Centers, indexed by cluster.
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// Cluster index of every point.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Per-cluster radius `max d(center, member)`.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Members of every cluster, in increasing point order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.centers.len()];
        for (p, &c) in self.assignment.iter().enumerate() {
            out[c].push(p);
        }
        out
    }

    /// Assembles a clustering from an explicit assignment, recomputing radii.
    /// Fails unless every center sits in its own cluster.
    pub fn from_assignment(
        space: &MetricSpace,
        centers: Vec<usize>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Empty("center list"));
        }
        if assignment.len() != space.len() {
            return Err(Error::InconsistentClustering(format!(
                "assignment covers {} points, space has {}",
                assignment.len(),
                space.len()
            )));
        }
        space.check_indices(&centers)?;
        check_distinct(space.len(), &centers)?;
        if let Some((p, &c)) = assignment
            .iter()
            .enumerate()
            .find(|(_, &c)| c >= centers.len())
        {
            return Err(Error::InconsistentClustering(format!(
                "point {p} assigned to cluster {c} of {}",
                centers.len()
            )));
        }
        for (i, &c) in centers.iter().enumerate() {
            if assignment[c] != i {
                return Err(Error::InconsistentClustering(format!(
                    "center {c} of cluster {i} is assigned to cluster {}",
                    assignment[c]
                )));
            }
        }
        let radii = compute_radii(space, &centers, &assignment);
        let max_radius = radii.iter().copied().fold(0.0, f64::max);
        Ok(Clustering {
            centers,
            assignment,
            radii,
            max_radius,
        })
    }

    /// Checks that this clustering is a valid solution over `space`, including
    /// that stored radii match a recomputation exactly.
    pub fn validate(&self, space: &MetricSpace) -> Result<()> {
        let fresh =
            Clustering::from_assignment(space, self.centers.clone(), self.assignment.clone())?;
        if fresh.radii != self.radii || fresh.max_radius != self.max_radius {
            return Err(Error::InconsistentClustering(
                "stored radii disagree with the assignment".into(),
            ));
        }
        Ok(())
    }
}

fn compute_radii(space: &MetricSpace, centers: &[usize], assignment: &[usize]) -> Vec<f64> {
    let mut radii = vec![0.0f64; centers.len()];
    for (p, &c) in assignment.iter().enumerate() {
        radii[c] = radii[c].max(space.dist(centers[c], p));
    }
    radii
}

fn check_distinct(n: usize, centers: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &c in centers {
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::DuplicateCenter(c));
        }
    }
    Ok(())
}

fn check_k(space: &MetricSpace, k: usize) -> Result<()> {
    if k == 0 || k > space.len() {
        return Err(Error::KOutOfRange { k, n: space.len() });
    }
    Ok(())
}

/// Assigns every point to its nearest center (lowest cluster index on ties).
/// A center always belongs to its own cluster, even when co-located with an
/// earlier center.
pub fn assign_to_nearest(space: &MetricSpace, centers: &[usize]) -> Result<Clustering> {
    if centers.is_empty() {
        return Err(Error::Empty("center list"));
    }
    space.check_indices(centers)?;
    check_distinct(space.len(), centers)?;

    let mut assignment = vec![0usize; space.len()];
    for (p, slot) in assignment.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = space.dist(centers[0], p);
        for (i, &c) in centers.iter().enumerate().skip(1) {
            let d = space.dist(c, p);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        *slot = best;
    }
    for (i, &c) in centers.iter().enumerate() {
        assignment[c] = i;
    }
    let radii = compute_radii(space, centers, &assignment);
    let max_radius = radii.iter().copied().fold(0.0, f64::max);
    Ok(Clustering {
        centers: centers.to_vec(),
        assignment,
        radii,
        max_radius,
    })
}

/// Farthest-first traversal started from `start`.
pub fn gonzalez(space: &MetricSpace, k: usize, start: usize) -> Result<Clustering> {
    check_k(space, k)?;
    space.check_indices(&[start])?;
    let centers = farthest_first(space, k, start);
    assign_to_nearest(space, &centers)
}

fn farthest_first(space: &MetricSpace, k: usize, start: usize) -> Vec<usize> {
    let n = space.len();
    let mut centers = Vec::with_capacity(k);
    let mut is_center = vec![false; n];
    let mut nearest = space.row(start).to_vec();
    centers.push(start);
    is_center[start] = true;

    while centers.len() < k {
        // Only non-centers are eligible, so duplicates never yield a repeated center.
        let mut next = usize::MAX;
        let mut next_d = f64::NEG_INFINITY;
        for p in 0..n {
            if !is_center[p] && nearest[p] > next_d {
                next = p;
                next_d = nearest[p];
            }
        }
        centers.push(next);
        is_center[next] = true;
        for (d, &e) in nearest.iter_mut().zip(space.row(next)) {
            if e < *d {
                *d = e;
            }
        }
    }
    centers
}

/// Runs [`gonzalez`] from every start point and keeps the smallest radius
/// (lowest start index on ties). Independent of the rayon schedule.
pub fn gonzalez_best_start(space: &MetricSpace, k: usize) -> Result<Clustering> {
    check_k(space, k)?;
    let (_, _, best) = (0..space.len())
        .into_par_iter()
        .map(|start| {
            let c = gonzalez(space, k, start).expect("k and start validated");
            (c.max_radius, start, c)
        })
        .reduce_with(|a, b| match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
            std::cmp::Ordering::Greater => b,
            _ => a,
        })
        .expect("space is non-empty");
    Ok(best)
}

/// Dominating-set heuristic on bottleneck graphs.
///
/// Candidate radii are scanned in increasing order. For each radius `r` the
/// greedy picks, until everything is covered, the vertex whose closed
/// neighbourhood in `G_r` holds the most uncovered vertices. The first `r`
/// whose greedy set has at most `k` vertices wins.
///
/// Radii below half the farthest-first radius are skipped: no dominating set
/// of size `k` exists there, so the greedy cannot succeed either. If the
/// winning set has fewer than `k` vertices it is topped up by farthest-first
/// picks, which can only shrink the radius.
pub fn scr(space: &MetricSpace, k: usize) -> Result<Clustering> {
    check_k(space, k)?;
    let n = space.len();
    let lower = gonzalez(space, k, 0)?.max_radius / 2.0;

    // Neighbours of every vertex sorted by distance, so `G_r` is a prefix.
    let sorted: Vec<Vec<(f64, u32)>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut row: Vec<(f64, u32)> = space
                .row(u)
                .iter()
                .enumerate()
                .map(|(v, &d)| (d, v as u32))
                .collect();
            row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            row
        })
        .collect();

    let candidates = space.distinct_distances();
    let first = candidates.partition_point(|&r| r < lower);
    let mut greedy = GreedyCover::new(n);
    for &r in &candidates[first..] {
        if let Some(set) = greedy.run(&sorted, r, k) {
            let centers = top_up(space, set, k);
            return assign_to_nearest(space, &centers);
        }
    }
    // The largest candidate is the diameter, where one vertex dominates all.
    Err(Error::Internal("scr found no feasible radius".into()))
}

struct GreedyCover {
    degree: Vec<usize>,
    score: Vec<usize>,
    covered: Vec<bool>,
}

impl GreedyCover {
    fn new(n: usize) -> Self {
        GreedyCover {
            degree: vec![0; n],
            score: vec![0; n],
            covered: vec![false; n],
        }
    }

    /// Greedy dominating set of `G_r`; `None` once it needs more than `k` vertices.
    fn run(&mut self, sorted: &[Vec<(f64, u32)>], r: f64, k: usize) -> Option<Vec<usize>> {
        let n = sorted.len();
        for (u, row) in sorted.iter().enumerate() {
            // Degrees only grow with r, so resume from the previous prefix.
            let mut deg = self.degree[u];
            while deg < n && row[deg].0 <= r {
                deg += 1;
            }
            self.degree[u] = deg;
            self.score[u] = deg;
        }
        self.covered.fill(false);

        let mut chosen = Vec::new();
        let mut uncovered = n;
        while uncovered > 0 {
            if chosen.len() == k {
                return None;
            }
            let mut best = 0;
            for u in 1..n {
                if self.score[u] > self.score[best] {
                    best = u;
                }
            }
            chosen.push(best);
            for &(_, w) in &sorted[best][..self.degree[best]] {
                let w = w as usize;
                if self.covered[w] {
                    continue;
                }
                self.covered[w] = true;
                uncovered -= 1;
                for &(_, x) in &sorted[w][..self.degree[w]] {
                    self.score[x as usize] -= 1;
                }
            }
        }
        Some(chosen)
    }
}

fn top_up(space: &MetricSpace, mut centers: Vec<usize>, k: usize) -> Vec<usize> {
    let n = space.len();
    if centers.len() >= k {
        return centers;
    }
    let mut is_center = vec![false; n];
    let mut nearest = vec![f64::INFINITY; n];
    for &c in &centers {
        is_center[c] = true;
        for (d, &e) in nearest.iter_mut().zip(space.row(c)) {
            *d = d.min(e);
        }
    }
    while centers.len() < k {
        let next = (0..n)
            .filter(|&p| !is_center[p])
            .fold(None, |acc: Option<usize>, p| match acc {
                Some(b) if nearest[b] >= nearest[p] => Some(b),
                _ => Some(p),
            })
            .expect("k <= n leaves a non-center");
        centers.push(next);
        is_center[next] = true;
        for (d, &e) in nearest.iter_mut().zip(space.row(next)) {
            *d = d.min(e);
        }
    }
    centers
}

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Exact k-center optimum by enumerating every k-subset of points as centers.
/// The lexicographically first optimal subset is returned.
pub fn optimal_bruteforce(space: &MetricSpace, k: usize) -> Result<Clustering> {
    check_k(space, k)?;
    let n = space.len();
    if binomial(n, k) > BRUTEFORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            k,
            limit: BRUTEFORCE_LIMIT,
        });
    }

    let mut subset: Vec<usize> = (0..k).collect();
    let mut best_subset = subset.clone();
    let mut best = f64::INFINITY;
    loop {
        // Radius of this subset, abandoning once it cannot beat the incumbent.
        let mut radius = 0.0f64;
        for p in 0..n {
            let d = subset
                .iter()
                .map(|&c| space.dist(c, p))
                .fold(f64::INFINITY, f64::min);
            radius = radius.max(d);
            if radius >= best {
                break;
            }
        }
        if radius < best {
            best = radius;
            best_subset.copy_from_slice(&subset);
        }

        // Next k-subset in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| subset[i] != i + n - k) else {
            break;
        };
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    assign_to_nearest(space, &best_subset)
}

/// The deterministic solvers selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Farthest-first traversal from point 0.
    Gonz1,
    /// Farthest-first traversal, best over all start points.
    GonzPlus,
    /// Dominating-set heuristic.
    Scr,
    /// Exhaustive optimum.
    BruteForce,
}

impl Solver {
    pub const ALL: [Solver; 4] = [
        Solver::Gonz1,
        Solver::GonzPlus,
        Solver::Scr,
        Solver::BruteForce,
    ];

    pub fn solve(self, space: &MetricSpace, k: usize) -> Result<Clustering> {
        match self {
            Solver::Gonz1 => gonzalez(space, k, 0),
            Solver::GonzPlus => gonzalez_best_start(space, k),
            Solver::Scr => scr(space, k),
            Solver::BruteForce => optimal_bruteforce(space, k),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Solver::Gonz1 => "gonz1",
            Solver::GonzPlus => "gonzplus",
            Solver::Scr => "scr",
            Solver::BruteForce => "bruteforce",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Solver::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> MetricSpace {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        MetricSpace::from_points(&pts).unwrap()
    }

    #[test]
    fn nearest_assignment() {
        let s = line(&[0.0, 1.0, 10.0, 11.0]);
        let c = assign_to_nearest(&s, &[0, 3]).unwrap();
        assert_eq!(c.assignment(), &[0, 0, 1, 1]);
        assert_eq!(c.max_radius(), 1.0);

        let all = assign_to_nearest(&s, &[0, 1, 2, 3]).unwrap();
        assert!(all.radii().iter().all(|&r| r == 0.0));

        let tie = line(&[0.0, 1.0, 2.0]);
        let c = assign_to_nearest(&tie, &[0, 2]).unwrap();
        assert_eq!(c.assignment()[1], 0);
        let c = assign_to_nearest(&tie, &[2, 0]).unwrap();
        assert_eq!(c.assignment()[1], 0);
    }

    #[test]
    fn nearest_assignment_errors() {
        let s = line(&[0.0, 1.0]);
        assert!(matches!(assign_to_nearest(&s, &[]), Err(Error::Empty(_))));
        assert!(matches!(
            assign_to_nearest(&s, &[1, 1]),
            Err(Error::DuplicateCenter(1))
        ));
        assert!(matches!(
            assign_to_nearest(&s, &[2]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn colocated_centers_keep_their_own_cluster() {
        let s = line(&[0.0, 0.0, 5.0]);
        let c = assign_to_nearest(&s, &[0, 1]).unwrap();
        assert_eq!(c.assignment(), &[0, 1, 0]);
        c.validate(&s).unwrap();
    }

    #[test]
    fn gonzalez_examples() {
        let s = line(&[0.0, 1.0, 10.0, 11.0]);
        let c = gonzalez(&s, 2, 0).unwrap();
        assert_eq!(c.centers(), &[0, 3]);
        assert_eq!(c.max_radius(), 1.0);

        assert_eq!(gonzalez(&s, 4, 0).unwrap().max_radius(), 0.0);

        let c = gonzalez(&s, 1, 0).unwrap();
        assert_eq!(c.centers(), &[0]);
        assert_eq!(c.max_radius(), 11.0);

        assert!(matches!(gonzalez(&s, 0, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(gonzalez(&s, 5, 0), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn gonzalez_with_duplicates_picks_distinct_centers() {
        let s = line(&[3.0, 3.0, 3.0]);
        let c = gonzalez(&s, 3, 1).unwrap();
        assert_eq!(c.centers(), &[1, 0, 2]);
    }

    #[test]
    fn best_start_examples() {
        let s = line(&[0.0, 1.0, 10.0, 11.0]);
        assert_eq!(gonzalez_best_start(&s, 2).unwrap().max_radius(), 1.0);
        assert_eq!(gonzalez_best_start(&s, 4).unwrap().max_radius(), 0.0);
        // Start 0 walks to 6 and leaves radius 2; starting at 3 reaches 1.
        let s = line(&[0.0, 2.0, 3.0, 4.0, 6.0]);
        let plus = gonzalez_best_start(&s, 2).unwrap();
        assert!(plus.max_radius() <= gonzalez(&s, 2, 0).unwrap().max_radius());
    }

    #[test]
    fn scr_examples() {
        let s = line(&[0.0, 1.0, 10.0, 11.0]);
        assert_eq!(scr(&s, 2).unwrap().max_radius(), 1.0);
        assert_eq!(scr(&s, 4).unwrap().max_radius(), 0.0);
        assert_eq!(scr(&s, 1).unwrap().max_radius(), 10.0);
    }

    #[test]
    fn scr_tops_up_to_k_centers() {
        // At r = 0 the two duplicate groups are dominated by two vertices.
        let s = line(&[0.0, 0.0, 5.0, 5.0]);
        let c = scr(&s, 3).unwrap();
        assert_eq!(c.k(), 3);
        assert_eq!(c.max_radius(), 0.0);
    }

    #[test]
    fn bruteforce_examples() {
        let s = line(&[0.0, 1.0, 10.0, 11.0]);
        let c = optimal_bruteforce(&s, 2).unwrap();
        assert_eq!(c.max_radius(), 1.0);
        assert_eq!(c.centers(), &[0, 2]);
        assert_eq!(optimal_bruteforce(&s, 4).unwrap().max_radius(), 0.0);
        assert_eq!(
            optimal_bruteforce(&line(&[0.0, 10.0]), 1)
                .unwrap()
                .max_radius(),
            10.0
        );
    }

    #[test]
    fn bruteforce_refuses_large_instances() {
        let pts: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64]).collect();
        let s = MetricSpace::from_points(&pts).unwrap();
        assert!(matches!(
            optimal_bruteforce(&s, 10),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(12, 3), 220);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 5), 1);
        assert_eq!(binomial(200, 100), u64::MAX);
    }

    #[test]
    fn solver_names_round_trip() {
        for s in Solver::ALL {
            assert_eq!(s.name().parse::<Solver>().unwrap(), s);
        }
        assert!("kmeans".parse::<Solver>().is_err());
    }

    #[test]
    fn validate_detects_tampering() {
        let s = line(&[0.0, 1.0, 10.0, 11.0]);
        let mut c = scr(&s, 2).unwrap();
        c.validate(&s).unwrap();
        c.radii[0] = 7.0;
        assert!(c.validate(&s).is_err());
    }
}
