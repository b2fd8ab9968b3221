//! p-profiles, approximate homogeneity, the subset coloring, and tower
//! arithmetic for the Ramsey-size bounds.
//!
//! A learner is homogeneous when `Pr_{h~Q_S}[h(x)=+1]` depends only on the
//! equivalence-type of `S` and on `pos(x, S)`. Every check here quantifies
//! over permutation types and out-of-sample query points only.

mod coloring;
pub mod tower;

pub use coloring::{
    color_of_subset, distinct_colors, find_homogeneous_subset, greedy_largest_subset, ln_color_count_cap,
    round_to_grid, ColorKey, GreedySubset, SubsetSearch, SubsetSearchOptions,
};
pub use tower::{iterated_log, phi, phi_threshold, ramsey_homogeneous_size, TowerInt};

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binomial, Combinations};
use crate::domain::{pos, Domain, EquivalenceType, GibbsClassifier, Predictor, Sample};
use crate::error::{LabError, Result};
use crate::learners::Learner;
use crate::seeding::derive_seed;

/// Default cap on learner-probability evaluations before the checker
/// switches from exhaustive enumeration to sampling.
pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 10_000_000;

/// An ordered set of points inside `{1..n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PointSet {
    n: usize,
    points: Vec<usize>,
}

impl PointSet {
    pub fn new(n: usize, mut points: Vec<usize>) -> Result<Self> {
        let domain = Domain::new(n)?;
        for &x in &points {
            domain.check(x)?;
        }
        points.sort_unstable();
        points.dedup();
        Ok(Self { n, points })
    }

    /// The whole domain `{1..n}`.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, (1..=n).collect())
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The points at the given (sorted) indices.
    pub fn select(&self, idx: &[usize]) -> Vec<usize> {
        idx.iter().map(|&i| self.points[i]).collect()
    }
}

/// Per-position +1 probabilities of one equivalence-type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PProfile {
    #[serde(rename = "type")]
    pub ty: EquivalenceType,
    /// `p[i]` for `i` in `0..=m`; `None` when no admissible query point exists.
    pub p: Vec<Option<f64>>,
    /// Largest spread of the observed probabilities at a single position.
    pub max_deviation: f64,
    pub representatives: usize,
}

impl PProfile {
    pub fn is_complete(&self) -> bool {
        self.p.iter().all(Option::is_some)
    }

    pub fn values(&self) -> Option<Vec<f64>> {
        self.p.iter().copied().collect()
    }
}

/// Running min / max / mean of the probabilities seen at one position.
#[derive(Debug, Clone, Copy)]
struct Spread {
    count: usize,
    min: f64,
    max: f64,
    // sum of (v - first) keeps the mean exact when all values agree
    first: f64,
    excess: f64,
}

impl Spread {
    fn new() -> Self {
        Self {
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            first: 0.0,
            excess: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        if self.count == 0 {
            self.first = v;
        }
        self.count += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.excess += v - self.first;
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.first + self.excess / self.count as f64)
    }

    fn width(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.max - self.min
        }
    }
}

fn check_type(ty: &EquivalenceType, x: &PointSet) -> Result<()> {
    if !ty.is_permutation() {
        return Err(LabError::Domain(format!("order-type {ty} is not a permutation")));
    }
    if x.len() < ty.m() + 1 {
        return Err(LabError::Domain(format!(
            "point set of size {} is too small for m = {}",
            x.len(),
            ty.m()
        )));
    }
    Ok(())
}

/// The posterior, or `None` on samples outside the learner's domain of
/// definition (ERM on non-realizable input).
pub(crate) fn posterior_if_defined(learner: &dyn Learner, sample: &Sample) -> Result<Option<GibbsClassifier>> {
    match learner.posterior(sample) {
        Ok(q) => Ok(Some(q)),
        Err(LabError::NotRealizable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `Pr[h(x)=+1]` at every out-of-sample point of `x`, tagged with `pos(x, S)`.
fn out_of_sample_probs(
    learner: &dyn Learner,
    sample: &Sample,
    x: &PointSet,
) -> Result<Vec<(usize, usize, f64)>> {
    let Some(q) = posterior_if_defined(learner, sample)? else {
        return Ok(Vec::new());
    };
    Ok(x.points()
        .iter()
        .filter(|&&p| !sample.contains_point(p))
        .map(|&p| (pos(p, sample), p, q.prob_positive(p)))
        .collect())
}

fn profile_from_samples(
    learner: &dyn Learner,
    ty: &EquivalenceType,
    samples: &[Sample],
    x: &PointSet,
) -> Result<PProfile> {
    let per_sample: Vec<Vec<(usize, usize, f64)>> = samples
        .par_iter()
        .map(|s| out_of_sample_probs(learner, s, x))
        .collect::<Result<_>>()?;
    let mut spreads = vec![Spread::new(); ty.m() + 1];
    for obs in &per_sample {
        for &(i, _, v) in obs {
            spreads[i].push(v);
        }
    }
    Ok(PProfile {
        ty: ty.clone(),
        p: spreads.iter().map(Spread::mean).collect(),
        max_deviation: spreads.iter().map(Spread::width).fold(0.0, f64::max),
        representatives: samples.len(),
    })
}

/// The p-profile of one concrete sample.
pub fn p_profile_of_sample(learner: &dyn Learner, sample: &Sample, x: &PointSet) -> Result<PProfile> {
    let ty = crate::domain::order_type(sample);
    check_type(&ty, x)?;
    profile_from_samples(learner, &ty, std::slice::from_ref(sample), x)
}

/// Representative `m`-subsets of `x`: all of them when there are at most
/// `reps`, otherwise `reps` pseudo-random ones from a fixed stream.
fn representative_subsets(x: &PointSet, m: usize, reps: usize, seed: u64) -> Vec<Vec<usize>> {
    if binomial(x.len(), m) <= reps as u128 {
        return Combinations::new(x.len(), m).map(|c| x.select(&c)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..reps)
        .map(|_| {
            let mut idx = sample_indices(&mut rng, x.len(), m).into_vec();
            idx.sort_unstable();
            x.select(&idx)
        })
        .collect()
}

/// The p-profile of an equivalence-type averaged over up to `reps`
/// representative samples drawn from `x`.
pub fn p_profile(
    learner: &dyn Learner,
    ty: &EquivalenceType,
    x: &PointSet,
    reps: usize,
) -> Result<PProfile> {
    check_type(ty, x)?;
    if reps == 0 {
        return Err(LabError::Domain("reps must be >= 1".into()));
    }
    let samples = representative_subsets(x, ty.m(), reps, 0x5EED_0F_7E57)
        .iter()
        .map(|pts| ty.sample_on(x.domain_size(), pts))
        .collect::<Result<Vec<_>>>()?;
    profile_from_samples(learner, ty, &samples, x)
}

/// One side of a homogeneity violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessPoint {
    pub sample: String,
    pub x: usize,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityWitness {
    #[serde(rename = "type")]
    pub ty: EquivalenceType,
    pub position: usize,
    pub low: WitnessPoint,
    pub high: WitnessPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityVerdict {
    pub passed: bool,
    pub worst_violation: f64,
    /// `gamma / (5 m)`.
    pub tolerance: f64,
    pub exhaustive: bool,
    /// Fraction of `(S, x)` evaluations actually performed.
    pub coverage: f64,
    pub evaluations: u128,
    pub witness: Option<HomogeneityWitness>,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    /// Evaluation budget before switching to sampling.
    pub exhaustive_cap: u128,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Extreme {
    low: Option<(f64, Sample, usize)>,
    high: Option<(f64, Sample, usize)>,
}

impl Extreme {
    fn width(&self) -> f64 {
        match (&self.low, &self.high) {
            (Some(l), Some(h)) => h.0 - l.0,
            _ => 0.0,
        }
    }
}

/// Checks `gamma`-approximate `m`-homogeneity of `learner` on `x`.
///
/// Over all pairs of equivalent permutation-type samples from `x` and
/// out-of-sample points with equal `pos`, the largest difference of +1
/// probabilities equals the per-(type, position) range, so each `(S, x)` is
/// evaluated once. Beyond `exhaustive_cap` evaluations, subsets are sampled
/// and the verdict can only falsify.
pub fn check_approx_homogeneity(
    learner: &dyn Learner,
    x: &PointSet,
    m: usize,
    gamma: f64,
    opts: CheckOptions,
) -> Result<HomogeneityVerdict> {
    if m == 0 || x.len() < m + 1 {
        return Err(LabError::Domain(format!(
            "need |X| >= m + 1 with m >= 1 (|X| = {}, m = {m})",
            x.len()
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LabError::Domain(format!("gamma must lie in (0,1), got {gamma}")));
    }
    let types = EquivalenceType::enumerate_permutation_types(m)?;
    let subsets = binomial(x.len(), m);
    let queries = (x.len() - m) as u128;
    let total = (types.len() as u128).saturating_mul(subsets).saturating_mul(queries);
    let exhaustive = total <= opts.exhaustive_cap;
    let per_type_budget = if exhaustive {
        subsets
    } else {
        (opts.exhaustive_cap / (types.len() as u128 * queries)).max(1)
    };

    let per_type: Vec<Vec<Extreme>> = types
        .par_iter()
        .enumerate()
        .map(|(ti, ty)| -> Result<Vec<Extreme>> {
            let chosen: Vec<Vec<usize>> = if exhaustive {
                Combinations::new(x.len(), m).map(|c| x.select(&c)).collect()
            } else {
                let mut rng = crate::seeding::trial_rng(derive_seed(opts.seed, 0x40_40), ti as u64);
                (0..per_type_budget)
                    .map(|_| {
                        let mut idx = sample_indices(&mut rng, x.len(), m).into_vec();
                        idx.sort_unstable();
                        x.select(&idx)
                    })
                    .collect()
            };
            let mut ext = vec![Extreme { low: None, high: None }; m + 1];
            for pts in chosen {
                let s = ty.sample_on(x.domain_size(), &pts)?;
                for (i, p, v) in out_of_sample_probs(learner, &s, x)? {
                    let e = &mut ext[i];
                    if e.low.as_ref().map_or(true, |l| v < l.0) {
                        e.low = Some((v, s.clone(), p));
                    }
                    if e.high.as_ref().map_or(true, |h| v > h.0) {
                        e.high = Some((v, s.clone(), p));
                    }
                }
            }
            Ok(ext)
        })
        .collect::<Result<_>>()?;

    let mut worst = 0.0;
    let mut witness = None;
    for (ty, exts) in types.iter().zip(&per_type) {
        for (i, e) in exts.iter().enumerate() {
            let w = e.width();
            if w > worst {
                worst = w;
                let (l, h) = (e.low.as_ref().unwrap(), e.high.as_ref().unwrap());
                witness = Some(HomogeneityWitness {
                    ty: ty.clone(),
                    position: i,
                    low: WitnessPoint {
                        sample: l.1.to_string(),
                        x: l.2,
                        prob: l.0,
                    },
                    high: WitnessPoint {
                        sample: h.1.to_string(),
                        x: h.2,
                        prob: h.0,
                    },
                });
            }
        }
    }
    let tolerance = gamma / (5.0 * m as f64);
    let evaluations = if exhaustive {
        total
    } else {
        types.len() as u128 * per_type_budget * queries
    };
    let passed = worst <= tolerance;
    Ok(HomogeneityVerdict {
        passed,
        worst_violation: worst,
        tolerance,
        exhaustive,
        coverage: (evaluations as f64 / total as f64).min(1.0),
        evaluations,
        witness: if passed { None } else { witness },
    })
}
