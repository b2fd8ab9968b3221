//! Hard distributions and the Monte-Carlo experiments: the KL/loss
//! trade-off, the spacing event, and KL growth against the optimal prior.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    empirical_loss, order_type, population_loss, EquivalenceType, GibbsClassifier, Hypothesis, LabeledExample,
    RealizableDistribution, Sample, MAX_ENUMERATED_TYPE_LENGTH,
};
use crate::error::{LabError, Result};
use crate::homogeneity::{check_approx_homogeneity, greedy_largest_subset, p_profile, CheckOptions, PointSet};
use crate::learners::{cover_prior, Learner, LearnerSpec};
use crate::pacbayes::{estimate_optimal_prior, kl_divergence, mcallester_bound, ExtendedReal};
use crate::seeding::{derive_seed, trial_rng};
use crate::sensitivity::{sample_interval, sensitive_index, SensitiveIndexReport};

const PURPOSE_PRIOR: u64 = 1;
const PURPOSE_TRIALS: u64 = 2;
const PURPOSE_SPACING: u64 = 3;

/// Most points offered to the homogeneous-subset search.
pub const SUBSET_POOL: usize = 64;

/// Uniform over `{1..k}`, labelled `-1` exactly on `x <= k/2`.
pub fn hard_distribution(k: usize) -> Result<RealizableDistribution> {
    if k < 2 || k % 2 == 1 {
        return Err(LabError::Domain(format!("k must be a positive even integer, got {k}")));
    }
    RealizableDistribution::uniform(k, k / 2)
}

/// Uniform over the points of `x` (an even number of them), labelled by the
/// threshold at the middle point.
pub fn hard_distribution_on(x: &PointSet) -> Result<RealizableDistribution> {
    let k = x.len();
    if k < 2 || k % 2 == 1 {
        return Err(LabError::Domain(format!("need an even number of points, got {k}")));
    }
    let mut marginal = vec![0.0; x.domain_size()];
    for &p in x.points() {
        marginal[p - 1] = 1.0 / k as f64;
    }
    RealizableDistribution::new(marginal, x.points()[k / 2 - 1])
}

/// Prior selector: `optimal`, `uniform`, `point:<k>` or `cover:<eps>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    /// `E_S[Q_S]`, estimated before the trials.
    Optimal,
    Uniform,
    Point(usize),
    Cover(f64),
}

impl FromStr for PriorSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |e: &dyn fmt::Display| LabError::Parse(format!("bad prior spec {s:?}: {e}"));
        match s.split_once(':') {
            None if s == "optimal" => Ok(PriorSpec::Optimal),
            None if s == "uniform" => Ok(PriorSpec::Uniform),
            Some(("point", k)) => Ok(PriorSpec::Point(k.parse().map_err(|e| bad(&e))?)),
            Some(("cover", eps)) => Ok(PriorSpec::Cover(eps.parse().map_err(|e| bad(&e))?)),
            _ => Err(LabError::Parse(format!("unknown prior spec {s:?}"))),
        }
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Optimal => write!(f, "optimal"),
            PriorSpec::Uniform => write!(f, "uniform"),
            PriorSpec::Point(k) => write!(f, "point:{k}"),
            PriorSpec::Cover(eps) => write!(f, "cover:{eps}"),
        }
    }
}

impl Serialize for PriorSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PriorSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl PriorSpec {
    /// Builds the prior over `{1..n}`; `optimal` runs the estimator with
    /// `trials` samples of size `m` from `dist`.
    pub fn build(
        &self,
        learner: &dyn Learner,
        dist: &RealizableDistribution,
        m: usize,
        trials: usize,
        seed: u64,
    ) -> Result<GibbsClassifier> {
        let n = dist.domain_size();
        match *self {
            PriorSpec::Optimal => estimate_optimal_prior(learner, dist, m, trials, derive_seed(seed, PURPOSE_PRIOR)),
            PriorSpec::Uniform => GibbsClassifier::uniform_thresholds(n),
            PriorSpec::Point(k) => Ok(GibbsClassifier::point_mass(Hypothesis::threshold(n, k)?)),
            PriorSpec::Cover(eps) => cover_prior(n, eps),
        }
    }
}

fn default_prior_trials() -> usize {
    100_000
}

fn default_profile_reps() -> usize {
    16
}

fn default_kl_constant() -> f64 {
    1.0 / 64.0
}

fn default_subset_budget() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub learner: LearnerSpec,
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub prior: PriorSpec,
    /// Samples used to estimate the optimal prior.
    #[serde(default = "default_prior_trials")]
    pub prior_trials: usize,
    /// Representatives per equivalence-type profile.
    #[serde(default = "default_profile_reps")]
    pub profile_reps: usize,
    /// Constant `c` of the KL threshold `c (gamma/m)^2 ln|I| / ln ln|I|`.
    #[serde(default = "default_kl_constant")]
    pub kl_constant: f64,
    /// Color evaluations allowed when searching for a homogeneous subset.
    #[serde(default = "default_subset_budget")]
    pub subset_budget: u64,
}

impl ExperimentConfig {
    pub fn new(learner: LearnerSpec, n: usize, m: usize, trials: usize, seed: u64) -> Self {
        Self {
            learner,
            n,
            m,
            gamma: 0.25,
            delta: 0.05,
            trials,
            seed,
            prior: PriorSpec::Optimal,
            prior_trials: default_prior_trials(),
            profile_reps: default_profile_reps(),
            kl_constant: default_kl_constant(),
            subset_budget: default_subset_budget(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 == 1 {
            return Err(LabError::Domain(format!("n must be a positive even integer, got {}", self.n)));
        }
        if self.m == 0 || self.m >= self.n {
            return Err(LabError::Domain(format!("m must lie in 1..n, got {}", self.m)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(LabError::Domain(format!("gamma must lie in (0,1), got {}", self.gamma)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(LabError::Domain(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.trials == 0 || self.prior_trials == 0 || self.profile_reps == 0 {
            return Err(LabError::Domain("trials, prior_trials and profile_reps must be >= 1".into()));
        }
        Ok(())
    }
}

/// `c (gamma/m)^2 ln|I| / ln ln|I|`, or `None` (minus infinity) when `|I| <= 2`.
pub fn kl_threshold(c: f64, gamma: f64, m: usize, interval_size: usize) -> Option<f64> {
    if interval_size <= 2 {
        return None;
    }
    let s = interval_size as f64;
    Some(c * (gamma / m as f64).powi(2) * s.ln() / s.ln().ln())
}

/// The loss side of the dichotomy, `1/2 - gamma - m/k`.
pub fn loss_threshold(gamma: f64, m: usize, k: usize) -> f64 {
    0.5 - gamma - m as f64 / k as f64
}

/// Whether every two distinct points of `points` and `k/2` are at least
/// `k / (8 (m+1)^2)` apart.
pub fn spacing_event(points: &[usize], k: usize) -> bool {
    let m = points.len();
    let d = k as f64 / (8.0 * ((m + 1) * (m + 1)) as f64);
    let mut all: Vec<usize> = points.to_vec();
    all.push(k / 2);
    all.sort_unstable();
    all.windows(2).all(|w| (w[1] - w[0]) as f64 >= d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRecord {
    pub trial: usize,
    pub sample: String,
    pub empirical_loss: f64,
    pub population_loss: f64,
    pub kl: ExtendedReal,
    pub interval_size: usize,
    pub sensitive_index: Option<usize>,
    pub kl_threshold: Option<f64>,
    pub kl_event: bool,
    pub loss_event: bool,
    pub dichotomy: bool,
    pub spacing: bool,
    pub bound: ExtendedReal,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffReport {
    pub config: ExperimentConfig,
    /// Points the hard distribution lives on (all of `{1..n}` for exactly
    /// homogeneous learners).
    pub support: Vec<usize>,
    /// Whether the support came from the homogeneous-subset search.
    pub restricted: bool,
    pub kl_frequency: f64,
    pub loss_frequency: f64,
    pub dichotomy_frequency: f64,
    pub spacing_frequency: f64,
    pub bound_violation_rate: f64,
    /// Trials where the spacing event and a sensitive index held but `I(S)`
    /// came out shorter than `k / (8 (m+1)^2) - 1`; always 0.
    pub spacing_interval_violations: usize,
    pub records: Vec<TradeoffRecord>,
}

/// Evenly spaced points of `{1..n}`, at most `count` of them.
fn even_pool(n: usize, count: usize) -> Vec<usize> {
    if n <= count {
        return (1..=n).collect();
    }
    (0..count).map(|i| 1 + i * (n - 1) / (count - 1)).collect()
}

/// The point set the experiment runs on: everything for exactly homogeneous
/// learners, else a validated homogeneous subset of an evenly spaced pool
/// when one with at least `m + 2` points is found.
fn experiment_support(learner: &dyn Learner, cfg: &ExperimentConfig) -> Result<(PointSet, bool)> {
    let full = PointSet::full(cfg.n)?;
    if learner.is_exactly_homogeneous() || cfg.m > MAX_ENUMERATED_TYPE_LENGTH {
        return Ok((full, false));
    }
    let pool = PointSet::new(cfg.n, even_pool(cfg.n, SUBSET_POOL))?;
    if pool.len() < cfg.m + 2 {
        return Ok((full, false));
    }
    let found = greedy_largest_subset(learner, &pool, cfg.m, cfg.gamma, cfg.subset_budget)?;
    let mut points = found.points;
    if points.len() % 2 == 1 {
        points.pop();
    }
    if points.len() < cfg.m + 2 {
        return Ok((full, false));
    }
    let sub = PointSet::new(cfg.n, points)?;
    let check = CheckOptions {
        exhaustive_cap: 1_000_000,
        seed: cfg.seed,
    };
    if !check_approx_homogeneity(learner, &sub, cfg.m, cfg.gamma, check)?.passed {
        return Ok((full, false));
    }
    Ok((sub, true))
}

fn rank_of(support: &PointSet, x: usize) -> usize {
    support.points().partition_point(|&p| p < x) + 1
}

/// Draws `trials` samples from the hard distribution and records, for each,
/// KL against the prior, losses, `|I(S)|` and the dichotomy events.
pub fn run_tradeoff_experiment(cfg: &ExperimentConfig) -> Result<TradeoffReport> {
    cfg.validate()?;
    let learner = cfg.learner.build()?;
    run_tradeoff_with(learner, cfg)
}

/// [`run_tradeoff_experiment`] with an already-built learner.
pub fn run_tradeoff_with(learner: Arc<dyn Learner>, cfg: &ExperimentConfig) -> Result<TradeoffReport> {
    cfg.validate()?;
    let (support, restricted) = experiment_support(&*learner, cfg)?;
    let dist = hard_distribution_on(&support)?;
    let k = support.len();
    let prior = cfg.prior.build(&*learner, &dist, cfg.m, cfg.prior_trials, cfg.seed)?;
    let trial_seed = derive_seed(cfg.seed, PURPOSE_TRIALS);
    let samples: Vec<Sample> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| dist.sample(&mut trial_rng(trial_seed, t as u64), cfg.m))
        .collect::<Result<_>>()?;

    let types: BTreeSet<EquivalenceType> = samples
        .iter()
        .map(order_type)
        .filter(EquivalenceType::is_permutation)
        .collect();
    let threshold = cfg.gamma / (2.0 * cfg.m as f64);
    let sensitivity: BTreeMap<EquivalenceType, Option<SensitiveIndexReport>> = types
        .into_par_iter()
        .map(|ty| {
            let profile = p_profile(&*learner, &ty, &support, cfg.profile_reps)?;
            let report = match profile.is_complete() {
                true => Some(sensitive_index(&profile, threshold)?),
                false => None,
            };
            Ok((ty, report))
        })
        .collect::<Result<_>>()?;

    let floor = loss_threshold(cfg.gamma, cfg.m, k);
    let records: Vec<TradeoffRecord> = samples
        .par_iter()
        .enumerate()
        .map(|(t, s)| {
            let q = learner.posterior(s)?;
            let emp = empirical_loss(&q, s)?;
            let pop = population_loss(&q, &dist)?;
            let kl = kl_divergence(&q, &prior)?;
            let ranked = Sample::new(
                k,
                s.examples().iter().map(|e| LabeledExample::new(rank_of(&support, e.x), e.y)).collect(),
            )?;
            let index = sensitivity
                .get(&order_type(s))
                .and_then(|r| r.as_ref())
                .and_then(|r| r.index);
            let interval = sample_interval(&ranked, k, index)?;
            let kl_thr = kl_threshold(cfg.kl_constant, cfg.gamma, cfg.m, interval.len());
            let kl_event = match kl_thr {
                None => true,
                Some(thr) => kl.is_infinite() || kl.value() >= thr,
            };
            let loss_event = pop >= floor;
            let ranks: Vec<usize> = ranked.points().collect();
            let bound = mcallester_bound(emp, kl, cfg.m.max(2), cfg.delta)?.bound;
            Ok(TradeoffRecord {
                trial: t,
                sample: s.to_string(),
                empirical_loss: emp,
                population_loss: pop,
                kl,
                interval_size: interval.len(),
                sensitive_index: index,
                kl_threshold: kl_thr,
                kl_event,
                loss_event,
                dichotomy: kl_event || loss_event,
                spacing: spacing_event(&ranks, k),
                bound,
                bound_holds: bound.is_infinite() || pop <= bound.value(),
            })
        })
        .collect::<Result<_>>()?;

    let min_interval = k as f64 / (8.0 * ((cfg.m + 1) * (cfg.m + 1)) as f64) - 1.0;
    let spacing_interval_violations = records
        .iter()
        .filter(|r| r.spacing && r.sensitive_index.is_some() && (r.interval_size as f64) < min_interval)
        .count();
    let freq = |f: fn(&TradeoffRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64;
    Ok(TradeoffReport {
        config: cfg.clone(),
        support: support.points().to_vec(),
        restricted,
        kl_frequency: freq(|r| r.kl_event),
        loss_frequency: freq(|r| r.loss_event),
        dichotomy_frequency: freq(|r| r.dichotomy),
        spacing_frequency: freq(|r| r.spacing),
        bound_violation_rate: freq(|r| !r.bound_holds),
        spacing_interval_violations,
        records,
    })
}

/// Monte-Carlo frequency of the spacing event for `m` uniform points of
/// `{1..k}`.
pub fn spacing_event_probability(k: usize, m: usize, trials: usize, seed: u64) -> Result<f64> {
    if k % 2 == 1 || m == 0 || k < 8 * (m + 1) * (m + 1) {
        return Err(LabError::Domain(format!("need even k >= 8 (m+1)^2, got k={k}, m={m}")));
    }
    if trials == 0 {
        return Err(LabError::Domain("trials must be >= 1".into()));
    }
    let seed = derive_seed(seed, PURPOSE_SPACING);
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let pts: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=k)).collect();
            usize::from(spacing_event(&pts, k))
        })
        .sum();
    Ok(hits as f64 / trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlGrowthRow {
    pub n: usize,
    pub median_kl: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub infinite: usize,
}

/// Linear-interpolation quantile of sorted values (`+inf` allowed).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    if lo == hi || sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlGrowthConfig {
    pub learner: LearnerSpec,
    pub m: usize,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub prior: PriorSpec,
    pub prior_trials: usize,
    pub seed: u64,
}

/// For every `n` of the grid: the median and IQR over trials of
/// `KL(Q_S || P_n)` with `S` drawn from the hard distribution on `{1..n}`.
pub fn kl_growth_experiment(cfg: &KlGrowthConfig) -> Result<Vec<KlGrowthRow>> {
    let learner = cfg.learner.build()?;
    kl_growth_with(&*learner, cfg)
}

pub fn kl_growth_with(learner: &dyn Learner, cfg: &KlGrowthConfig) -> Result<Vec<KlGrowthRow>> {
    if cfg.n_grid.is_empty() || cfg.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Domain("n grid must be nonempty and strictly increasing".into()));
    }
    if cfg.trials == 0 || cfg.m == 0 {
        return Err(LabError::Domain("trials and m must be >= 1".into()));
    }
    cfg.n_grid
        .iter()
        .map(|&n| {
            let dist = hard_distribution(n)?;
            let grid_seed = derive_seed(cfg.seed, n as u64);
            let prior = cfg.prior.build(learner, &dist, cfg.m, cfg.prior_trials, grid_seed)?;
            let trial_seed = derive_seed(grid_seed, PURPOSE_TRIALS);
            let mut kls: Vec<f64> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let s = dist.sample(&mut trial_rng(trial_seed, t as u64), cfg.m)?;
                    Ok(kl_divergence(&learner.posterior(&s)?, &prior)?.value())
                })
                .collect::<Result<_>>()?;
            kls.sort_by(f64::total_cmp);
            let (q1, q3) = (quantile(&kls, 0.25), quantile(&kls, 0.75));
            Ok(KlGrowthRow {
                n,
                median_kl: quantile(&kls, 0.5),
                q1,
                q3,
                iqr: q3 - q1,
                infinite: kls.iter().filter(|v| v.is_infinite()).count(),
            })
        })
        .collect()
}

/// Writes `rows` as CSV to `path`, and `config` as JSON to
/// `<path>.config.json`.
pub fn write_csv_with_sidecar<T: Serialize, C: Serialize>(path: &Path, rows: &[T], config: &C) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".config.json");
    std::fs::write(sidecar, serde_json::to_string_pretty(config)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Label;

    #[test]
    fn hard_distribution_examples() {
        let d = hard_distribution(4).unwrap();
        assert_eq!(d.marginal(), &[0.25; 4]);
        let labels: Vec<Label> = (1..=4).map(|x| d.label(x)).collect();
        assert_eq!(labels, vec![Label::Neg, Label::Neg, Label::Pos, Label::Pos]);
        assert!(hard_distribution(5).is_err());
        let d = hard_distribution(10).unwrap();
        let target = GibbsClassifier::point_mass(Hypothesis::threshold(10, 5).unwrap());
        assert_eq!(population_loss(&target, &d).unwrap(), 0.0);
        let pos: f64 = (1..=10).filter(|&x| d.label(x) == Label::Pos).map(|x| d.marginal()[x - 1]).sum();
        assert!((pos - 0.5).abs() < 1e-15);
    }

    #[test]
    fn restricted_distribution() {
        let x = PointSet::new(20, vec![2, 5, 11, 17]).unwrap();
        let d = hard_distribution_on(&x).unwrap();
        assert_eq!(d.true_threshold(), 5);
        assert_eq!(d.support(), vec![2, 5, 11, 17]);
        assert!(hard_distribution_on(&PointSet::new(20, vec![1, 2, 3]).unwrap()).is_err());
    }

    #[test]
    fn prior_specs_round_trip() {
        for text in ["optimal", "uniform", "point:3", "cover:0.125"] {
            let p: PriorSpec = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert!("bogus".parse::<PriorSpec>().is_err());
        assert!("point:x".parse::<PriorSpec>().is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(kl_threshold(1.0, 0.5, 1, 2), None);
        let v = kl_threshold(1.0, 0.5, 1, 100).unwrap();
        assert!((v - 0.25 * 100f64.ln() / 100f64.ln().ln()).abs() < 1e-15);
        assert!((loss_threshold(0.25, 2, 16) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn spacing_event_examples() {
        // k = 128, m = 1: distance >= 4 from 64
        assert!(spacing_event(&[10], 128));
        assert!(!spacing_event(&[62], 128));
        assert!(!spacing_event(&[10, 11], 128));
        // one point misses a window of width 2k/32 around k/2
        let p1 = spacing_event_probability(1_000_000, 1, 20_000, 3).unwrap();
        let sd = (0.9375f64 * 0.0625 / 20_000.0).sqrt();
        assert!((p1 - 0.9375).abs() < 4.0 * sd, "{p1}");
        let ps: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&m| spacing_event_probability(100_000, m, 4000, 9).unwrap())
            .collect();
        assert!(ps[0] >= ps[1] && ps[1] >= ps[2], "{ps:?}");
        assert!(spacing_event_probability(100, 5, 10, 0).is_err());
    }

    #[test]
    fn constant_learner_against_its_own_prior() {
        let mut cfg = ExperimentConfig::new(LearnerSpec::Constant { k: 0 }, 32, 3, 50, 1);
        cfg.prior = PriorSpec::Point(0);
        let rep = run_tradeoff_experiment(&cfg).unwrap();
        assert!(rep.records.iter().all(|r| r.kl == ExtendedReal::Finite(0.0)));
        // h_0 errs on half the points; no interval since no sensitive index
        assert!(rep.records.iter().all(|r| r.interval_size == 0));
        assert_eq!(rep.dichotomy_frequency, 1.0);
        assert!((rep.loss_frequency - 1.0).abs() < 1e-12);
        assert_eq!(rep.records.len(), 50);
    }

    #[test]
    fn tradeoff_is_deterministic() {
        let mut cfg = ExperimentConfig::new(LearnerSpec::Exp { beta: 8.0 }, 64, 3, 1, 42);
        cfg.prior_trials = 2000;
        let a = run_tradeoff_experiment(&cfg).unwrap();
        let b = run_tradeoff_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        cfg.trials = 40;
        let rep = run_tradeoff_experiment(&cfg).unwrap();
        assert!(!rep.restricted);
        assert_eq!(rep.support.len(), 64);
        assert_eq!(rep.spacing_interval_violations, 0);
        for r in &rep.records {
            assert!(r.kl.value().is_finite());
            if r.sensitive_index.is_some() {
                assert!(r.interval_size > 0);
            }
        }
        assert!(rep.dichotomy_frequency >= 1.0 / 16.0);
    }

    #[test]
    fn non_homogeneous_learner_is_restricted() {
        let mut cfg = ExperimentConfig::new(LearnerSpec::Erm, 64, 2, 20, 7);
        cfg.gamma = 0.5;
        cfg.prior = PriorSpec::Uniform;
        let rep = run_tradeoff_experiment(&cfg).unwrap();
        if rep.restricted {
            assert!(rep.support.len() >= 4 && rep.support.len() % 2 == 0);
            let sub = PointSet::new(64, rep.support.clone()).unwrap();
            let l = LearnerSpec::Erm.build().unwrap();
            assert!(check_approx_homogeneity(&*l, &sub, 2, 0.5, CheckOptions::default()).unwrap().passed);
        }
        for r in &rep.records {
            let s = Sample::parse(&r.sample, 64).unwrap();
            assert!(s.points().all(|x| rep.support.contains(&x)));
        }
    }

    #[test]
    fn kl_growth_examples() {
        let cfg = KlGrowthConfig {
            learner: LearnerSpec::Constant { k: 3 },
            m: 3,
            n_grid: vec![16, 32],
            trials: 20,
            prior: PriorSpec::Optimal,
            prior_trials: 100,
            seed: 1,
        };
        let rows = kl_growth_experiment(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.median_kl == 0.0 && r.iqr == 0.0));
        let cfg = KlGrowthConfig {
            learner: LearnerSpec::CoverErm { eps: 0.125 },
            prior: PriorSpec::Cover(0.125),
            n_grid: vec![64, 256],
            ..cfg
        };
        for r in kl_growth_experiment(&cfg).unwrap() {
            assert!((r.median_kl - 8f64.ln()).abs() < 1e-12);
        }
        let bad = KlGrowthConfig {
            n_grid: vec![64, 64],
            ..cfg
        };
        assert!(kl_growth_experiment(&bad).is_err());
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&[1.0, f64::INFINITY, f64::INFINITY], 0.5), f64::INFINITY);
    }

    #[test]
    fn csv_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![KlGrowthRow {
            n: 4,
            median_kl: 1.0,
            q1: 0.5,
            q3: 1.5,
            iqr: 1.0,
            infinite: 0,
        }];
        write_csv_with_sidecar(&path, &rows, &serde_json::json!({"seed": 1})).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,median_kl,q1,q3,iqr,infinite\n4,1.0,0.5,1.5,1.0,0"));
        let side = std::fs::read_to_string(dir.path().join("rows.csv.config.json")).unwrap();
        assert!(side.contains("\"seed\": 1"));
    }
}
