//! Monte-Carlo trial harness and the three comparison criteria: radius,
//! pairwise separation and community fragmentation.
//!
//! All algorithms of one instance are scored against the same
//! [`EvalTargets`], built once from a reference radius (normally the
//! dominating-set heuristic's radius). Tracked pairs are those with
//! `d(u,v) <= cap * R_ref`; communities are closed balls of radius
//! `R_ref / divisor` around every point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fair::{self, ExpandedClustering, FairConfig};
use crate::metric::{Community, MetricSpace};
use crate::unfair::Clustering;

/// Trials per parallel work item. Fixed so that chunking never depends on the
/// thread count.
const CHUNK: u64 = 64;

/// Anything that assigns every point to a cluster label.
pub trait Partition {
    /// Cluster label of every point.
    fn labels(&self) -> &[usize];
    /// Largest cluster radius.
    fn max_radius(&self) -> f64;
    /// Upper bound on the label values plus one.
    fn label_bound(&self) -> usize;
}

impl Partition for Clustering {
    fn labels(&self) -> &[usize] {
        self.assignment()
    }
    fn max_radius(&self) -> f64 {
        Clustering::max_radius(self)
    }
    fn label_bound(&self) -> usize {
        self.k()
    }
}

impl Partition for ExpandedClustering {
    fn labels(&self) -> &[usize] {
        self.assignment()
    }
    fn max_radius(&self) -> f64 {
        ExpandedClustering::max_radius(self)
    }
    fn label_bound(&self) -> usize {
        self.clusters().len()
    }
}

/// Tunables of the evaluation targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    /// Pairs with `d <= pair_cap * R_ref` are tracked.
    pub pair_cap: f64,
    /// Communities are balls of radius `R_ref / community_divisor`.
    pub community_divisor: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            pair_cap: 1.0,
            community_divisor: 4.0,
        }
    }
}

/// A tracked pair of points `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedPair {
    pub u: usize,
    pub v: usize,
    pub dist: f64,
}

/// Pairs and communities every algorithm on an instance is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTargets {
    reference_radius: f64,
    params: EvalParams,
    pairs: Vec<TrackedPair>,
    communities: Vec<Community>,
}

impl EvalTargets {
    pub fn new(space: &MetricSpace, reference_radius: f64, params: EvalParams) -> Result<Self> {
        if !(reference_radius >= 0.0) || !reference_radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "reference radius must be finite and non-negative, got {reference_radius}"
            )));
        }
        if !(params.pair_cap > 0.0) || !(params.community_divisor > 0.0) {
            return Err(Error::InvalidParameter(
                "pair cap and community divisor must be positive".into(),
            ));
        }
        let cap = params.pair_cap * reference_radius;
        let n = space.len();
        let mut pairs = Vec::new();
        for u in 0..n {
            let row = space.row(u);
            for (v, &dist) in row.iter().enumerate().skip(u + 1) {
                if dist <= cap {
                    pairs.push(TrackedPair { u, v, dist });
                }
            }
        }
        let ball = reference_radius / params.community_divisor;
        let communities = (0..n)
            .map(|c| Community::ball(space, c, ball))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalTargets {
            reference_radius,
            params,
            pairs,
            communities,
        })
    }

    pub fn reference_radius(&self) -> f64 {
        self.reference_radius
    }

    pub fn params(&self) -> EvalParams {
        self.params
    }

    /// Tracked pairs, including co-located ones.
    pub fn pairs(&self) -> &[TrackedPair] {
        &self.pairs
    }

    /// Community `i` is the ball around point `i`.
    pub fn communities(&self) -> &[Community] {
        &self.communities
    }
}

/// Aggregated statistics over a run of trials.
///
/// Community fragment counts are kept as per-community histograms: entry
/// `c` counts the trials in which the community met exactly `c` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialEnsemble {
    targets: EvalTargets,
    first_trial: u64,
    seed: Option<u64>,
    separations: Vec<u64>,
    hist_offsets: Vec<usize>,
    histograms: Vec<u64>,
    trial_radii: Vec<f64>,
}

impl TrialEnsemble {
    /// An ensemble with no trials whose histograms fit partitions with at
    /// most `max_clusters` labels.
    pub fn empty(
        targets: &EvalTargets,
        max_clusters: usize,
        first_trial: u64,
        seed: Option<u64>,
    ) -> Self {
        let mut hist_offsets = Vec::with_capacity(targets.communities.len() + 1);
        let mut total = 0;
        for c in &targets.communities {
            hist_offsets.push(total);
            total += c.len().min(max_clusters) + 1;
        }
        hist_offsets.push(total);
        TrialEnsemble {
            targets: targets.clone(),
            first_trial,
            seed,
            separations: vec![0; targets.pairs.len()],
            hist_offsets,
            histograms: vec![0; total],
            trial_radii: Vec::new(),
        }
    }

    /// Single-trial ensemble of a fixed partition.
    pub fn from_partition<P: Partition>(targets: &EvalTargets, partition: &P) -> Self {
        let mut e = TrialEnsemble::empty(targets, partition.label_bound(), 0, None);
        e.record(partition, &mut Vec::new());
        e
    }

    fn record<P: Partition>(&mut self, partition: &P, stamp: &mut Vec<usize>) {
        let labels = partition.labels();
        for (count, pair) in self.separations.iter_mut().zip(&self.targets.pairs) {
            if labels[pair.u] != labels[pair.v] {
                *count += 1;
            }
        }

        stamp.clear();
        stamp.resize(partition.label_bound(), usize::MAX);
        for (ci, community) in self.targets.communities.iter().enumerate() {
            let mut distinct = 0;
            for &p in community.members() {
                let l = labels[p];
                if stamp[l] != ci {
                    stamp[l] = ci;
                    distinct += 1;
                }
            }
            let (lo, hi) = (self.hist_offsets[ci], self.hist_offsets[ci + 1]);
            assert!(
                lo + distinct < hi,
                "partition has more labels than the histogram allows"
            );
            self.histograms[lo + distinct] += 1;
        }
        self.trial_radii.push(partition.max_radius());
    }

    /// Appends `other`, which must cover the trials immediately after this
    /// ensemble's and be scored against the same targets.
    pub fn merge(&mut self, other: TrialEnsemble) -> Result<()> {
        if self.targets != other.targets || self.hist_offsets != other.hist_offsets {
            return Err(Error::InvalidParameter(
                "ensembles use different targets".into(),
            ));
        }
        if other.first_trial != self.first_trial + self.trials() {
            return Err(Error::InvalidParameter(format!(
                "ensemble starting at trial {} does not follow trials {}..{}",
                other.first_trial,
                self.first_trial,
                self.first_trial + self.trials()
            )));
        }
        for (a, b) in self.separations.iter_mut().zip(other.separations) {
            *a += b;
        }
        for (a, b) in self.histograms.iter_mut().zip(other.histograms) {
            *a += b;
        }
        self.trial_radii.extend(other.trial_radii);
        Ok(())
    }

    pub fn targets(&self) -> &EvalTargets {
        &self.targets
    }

    pub fn trials(&self) -> u64 {
        self.trial_radii.len() as u64
    }

    pub fn first_trial(&self) -> u64 {
        self.first_trial
    }

    /// Master seed of the trial streams; `None` for deterministic partitions.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn reference_radius(&self) -> f64 {
        self.targets.reference_radius
    }

    /// Separation count of each tracked pair, aligned with [`EvalTargets::pairs`].
    pub fn separations(&self) -> &[u64] {
        &self.separations
    }

    /// Histogram of distinct-cluster counts for community `i`.
    pub fn fragment_histogram(&self, i: usize) -> &[u64] {
        &self.histograms[self.hist_offsets[i]..self.hist_offsets[i + 1]]
    }

    /// Max radius of every trial, in trial order.
    pub fn trial_radii(&self) -> &[f64] {
        &self.trial_radii
    }
}

/// Runs `trials` realizations with streams derived from `config.rng_seed`.
pub fn run_trials(
    space: &MetricSpace,
    base: &Clustering,
    config: &FairConfig,
    targets: &EvalTargets,
    trials: u64,
) -> Result<TrialEnsemble> {
    run_trial_range(space, base, config, targets, 0, trials)
}

/// Runs trials `first..first + count`. Output is independent of the rayon
/// schedule: chunks are fixed-size and merged in trial order.
pub fn run_trial_range(
    space: &MetricSpace,
    base: &Clustering,
    config: &FairConfig,
    targets: &EvalTargets,
    first: u64,
    count: u64,
) -> Result<TrialEnsemble> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "trial count must be at least 1".into(),
        ));
    }
    base.validate(space)?;
    if targets.communities.len() != space.len() {
        return Err(Error::InvalidParameter(
            "targets were built for another space".into(),
        ));
    }
    let k = base.k();
    let seed = config.rng_seed;
    let chunks: Vec<(u64, u64)> = (first..first + count)
        .step_by(CHUNK as usize)
        .map(|start| (start, CHUNK.min(first + count - start)))
        .collect();

    let partials: Vec<TrialEnsemble> = chunks
        .into_par_iter()
        .map(|(start, len)| {
            let mut part = TrialEnsemble::empty(targets, k, start, Some(seed));
            let mut stamp = Vec::with_capacity(k);
            for t in start..start + len {
                let mut rng = fair::trial_rng(seed, t);
                let realization = fair::expand(space, base, config, &mut rng);
                part.record(&realization, &mut stamp);
            }
            part
        })
        .collect();

    let mut parts = partials.into_iter();
    let mut ensemble = parts.next().expect("count >= 1");
    for part in parts {
        ensemble.merge(part)?;
    }
    Ok(ensemble)
}

/// Per-pair separation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStat {
    pub u: usize,
    pub v: usize,
    pub dist: f64,
    pub probability: f64,
    /// `probability / (dist / R_ref)`; absent for co-located pairs.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub pairs: Vec<PairStat>,
    pub max_ratio: f64,
    pub argmax: Option<(usize, usize)>,
    /// Trials summed over co-located pairs that ended up separated.
    pub zero_distance_separations: u64,
}

/// Separation probabilities and ratios of every tracked pair.
pub fn pairwise_fairness(ensemble: &TrialEnsemble) -> PairwiseReport {
    let t = ensemble.trials().max(1) as f64;
    let r_ref = ensemble.reference_radius();
    let mut max_ratio = 0.0;
    let mut argmax = None;
    let mut zero = 0;
    let pairs = ensemble
        .targets
        .pairs
        .iter()
        .zip(&ensemble.separations)
        .map(|(pair, &count)| {
            let probability = count as f64 / t;
            let ratio = if pair.dist > 0.0 {
                let r = probability * r_ref / pair.dist;
                if r > max_ratio {
                    max_ratio = r;
                    argmax = Some((pair.u, pair.v));
                }
                Some(r)
            } else {
                zero += count;
                None
            };
            PairStat {
                u: pair.u,
                v: pair.v,
                dist: pair.dist,
                probability,
                ratio,
            }
        })
        .collect();
    PairwiseReport {
        pairs,
        max_ratio,
        argmax,
        zero_distance_separations: zero,
    }
}

/// Fragmentation statistics of one point-centered community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityStat {
    pub center: usize,
    pub size: usize,
    pub diameter: f64,
    /// Mean number of distinct clusters the community meets.
    pub mean: f64,
    /// Frequency of meeting more than `t` clusters, for `t = 1, 2, 3`.
    pub exceed: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    pub communities: Vec<CommunityStat>,
    pub max_mean: f64,
    pub argmax: Option<usize>,
}

/// Frequency with which a histogram exceeds `t` fragments.
pub fn exceed_frequency(histogram: &[u64], t: usize) -> f64 {
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let over: u64 = histogram.iter().skip(t + 1).sum();
    over as f64 / total as f64
}

pub fn community_preservation(ensemble: &TrialEnsemble) -> CommunityReport {
    let mut max_mean = 0.0;
    let mut argmax = None;
    let communities = ensemble
        .targets
        .communities
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let hist = ensemble.fragment_histogram(i);
            let total: u64 = hist.iter().sum();
            let weighted: u64 = hist.iter().enumerate().map(|(c, &n)| c as u64 * n).sum();
            let mean = if total == 0 {
                0.0
            } else {
                weighted as f64 / total as f64
            };
            if argmax.is_none() || mean > max_mean {
                max_mean = mean;
                argmax = Some(i);
            }
            CommunityStat {
                center: i,
                size: c.len(),
                diameter: c.diameter(),
                mean,
                exceed: [1, 2, 3].map(|t| exceed_frequency(hist, t)),
            }
        })
        .collect();
    CommunityReport {
        communities,
        max_mean,
        argmax,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    /// Mean over trials of the per-trial max radius.
    pub mean_max_radius: f64,
    pub ratio_to_optimum: Option<f64>,
    /// Absent when the reference radius is zero.
    pub ratio_to_reference: Option<f64>,
}

pub fn radius_stats(ensemble: &TrialEnsemble, known_optimum: Option<f64>) -> Result<RadiusReport> {
    if ensemble.trials() == 0 {
        return Err(Error::Empty("trial ensemble"));
    }
    let mean = ensemble.trial_radii.iter().sum::<f64>() / ensemble.trials() as f64;
    let ratio_to_optimum = match known_optimum {
        Some(opt) if !(opt > 0.0) => {
            return Err(Error::InvalidParameter(format!(
                "known optimum must be positive, got {opt}"
            )))
        }
        Some(opt) => Some(mean / opt),
        None => None,
    };
    let r_ref = ensemble.reference_radius();
    Ok(RadiusReport {
        mean_max_radius: mean,
        ratio_to_optimum,
        ratio_to_reference: (r_ref > 0.0).then(|| mean / r_ref),
    })
}

/// Scores a single fixed partition: probabilities become 0/1 indicators.
pub fn evaluate_deterministic<P: Partition>(
    space: &MetricSpace,
    partition: &P,
    targets: &EvalTargets,
    known_optimum: Option<f64>,
) -> Result<(PairwiseReport, CommunityReport, RadiusReport)> {
    if partition.labels().len() != space.len() {
        return Err(Error::InconsistentClustering(format!(
            "partition covers {} points, space has {}",
            partition.labels().len(),
            space.len()
        )));
    }
    let ensemble = TrialEnsemble::from_partition(targets, partition);
    Ok((
        pairwise_fairness(&ensemble),
        community_preservation(&ensemble),
        radius_stats(&ensemble, known_optimum)?,
    ))
}

/// Binomial standard error of an empirical frequency over `trials` trials.
pub fn binomial_stderr(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}
