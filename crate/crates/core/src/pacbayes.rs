//! KL divergences, the McAllester bound and best-response priors.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::domain::{GibbsClassifier, Hypothesis, RealizableDistribution, Sample, LabeledExample};
use crate::error::{LabError, Result};
use crate::learners::Learner;
use crate::seeding::trial_rng;

/// Largest number of sample sequences enumerated by the exact prior path.
pub const EXACT_PRIOR_LIMIT: u128 = 1_000_000;

/// A nonnegative real or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn value(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }

    pub fn from_f64(v: f64) -> Self {
        if v.is_infinite() {
            ExtendedReal::Infinite
        } else {
            ExtendedReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtendedReal::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(ExtendedReal::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {t:?}"))),
        }
    }
}

/// `KL(Q || P)`, matching atoms by predictor equality on the full domain.
pub fn kl_divergence(q: &GibbsClassifier, p: &GibbsClassifier) -> Result<ExtendedReal> {
    if q.domain_size() != p.domain_size() {
        return Err(LabError::Domain(format!(
            "KL between mixtures on {{1..{}}} and {{1..{}}}",
            q.domain_size(),
            p.domain_size()
        )));
    }
    let mut total = 0.0;
    for (h, wq) in q.atoms() {
        let wp = p.weight_of(h);
        if wp == 0.0 {
            return Ok(ExtendedReal::Infinite);
        }
        total += wq * (wq / wp).ln();
    }
    Ok(ExtendedReal::Finite(total.max(0.0)))
}

/// Mass this small facing a zero is summation residue, not support.
const ROUNDING_RESIDUE: f64 = 1e-14;

/// Binary KL divergence `kl(q || p)` with `0 ln 0 = 0`.
pub fn kl_bernoulli(q: f64, p: f64) -> ExtendedReal {
    debug_assert!((0.0..=1.0).contains(&q) && (0.0..=1.0).contains(&p));
    let q = q.clamp(0.0, 1.0);
    let p = p.clamp(0.0, 1.0);
    let term = |a: f64, b: f64| -> Option<f64> {
        if a == 0.0 || (b == 0.0 && a <= ROUNDING_RESIDUE) {
            Some(0.0)
        } else if b == 0.0 {
            None
        } else {
            Some(a * (a / b).ln())
        }
    };
    match (term(q, p), term(1.0 - q, 1.0 - p)) {
        (Some(a), Some(b)) => ExtendedReal::Finite((a + b).max(0.0)),
        _ => ExtendedReal::Infinite,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub empirical_loss: f64,
    pub kl: ExtendedReal,
    pub m: usize,
    pub delta: f64,
    pub bound: ExtendedReal,
}

/// `L_S(Q) + sqrt((KL + ln(2 sqrt(m) / delta)) / (2 (m - 1)))`.
pub fn mcallester_bound(
    empirical_loss: f64,
    kl: ExtendedReal,
    m: usize,
    delta: f64,
) -> Result<BoundReport> {
    if m < 2 {
        return Err(LabError::Domain(format!("McAllester bound needs m >= 2, got {m}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LabError::Domain(format!("delta must lie in (0,1), got {delta}")));
    }
    let bound = match kl {
        ExtendedReal::Infinite => ExtendedReal::Infinite,
        ExtendedReal::Finite(k) => {
            let complexity = k + (2.0 * (m as f64).sqrt() / delta).ln();
            ExtendedReal::Finite(empirical_loss + (complexity / (2.0 * (m as f64 - 1.0))).sqrt())
        }
    };
    Ok(BoundReport {
        empirical_loss,
        kl,
        m,
        delta,
        bound,
    })
}

fn accumulate(acc: &mut BTreeMap<Hypothesis, f64>, q: &GibbsClassifier, scale: f64) {
    for (h, w) in q.atoms() {
        *acc.entry(h.clone()).or_insert(0.0) += scale * w;
    }
}

/// Number of length-`m` sequences over `support` points, saturating.
fn sequence_count(support: usize, m: usize) -> u128 {
    (0..m).try_fold(1u128, |acc, _| acc.checked_mul(support as u128)).unwrap_or(u128::MAX)
}

/// The mixture `E_S[Q_S]` over `S ~ D^m`, which minimizes `E_S[KL(Q_S || P)]`.
///
/// Enumerates every sequence exactly when there are at most
/// [`EXACT_PRIOR_LIMIT`] of them; otherwise averages `trials` Monte-Carlo
/// samples drawn from per-trial streams of `seed`.
pub fn estimate_optimal_prior(
    learner: &dyn Learner,
    dist: &RealizableDistribution,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<GibbsClassifier> {
    if trials == 0 {
        return Err(LabError::Domain("trials must be >= 1".into()));
    }
    if m == 0 {
        return Err(LabError::EmptySample);
    }
    let support = dist.support();
    if sequence_count(support.len(), m) <= EXACT_PRIOR_LIMIT {
        exact_optimal_prior(learner, dist, m, &support)
    } else {
        monte_carlo_optimal_prior(learner, dist, m, trials, seed)
    }
}

fn exact_optimal_prior(
    learner: &dyn Learner,
    dist: &RealizableDistribution,
    m: usize,
    support: &[usize],
) -> Result<GibbsClassifier> {
    let n = dist.domain_size();
    let marginal = dist.marginal();
    let partials: Vec<BTreeMap<Hypothesis, f64>> = support
        .par_iter()
        .map(|&first| -> Result<BTreeMap<Hypothesis, f64>> {
            let mut acc = BTreeMap::new();
            let mut idx = vec![0usize; m - 1];
            loop {
                let mut points = Vec::with_capacity(m);
                points.push(first);
                points.extend(idx.iter().map(|&i| support[i]));
                let prob: f64 = points.iter().map(|&x| marginal[x - 1]).product();
                let sample = Sample::new(
                    n,
                    points.iter().map(|&x| LabeledExample::new(x, dist.label(x))).collect(),
                )?;
                accumulate(&mut acc, &learner.posterior(&sample)?, prob);
                // odometer over the remaining coordinates
                let mut pos = idx.len();
                loop {
                    if pos == 0 {
                        return Ok(acc);
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < support.len() {
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut total = BTreeMap::new();
    for part in partials {
        for (h, w) in part {
            *total.entry(h).or_insert(0.0) += w;
        }
    }
    GibbsClassifier::from_unnormalized(total)
}

fn monte_carlo_optimal_prior(
    learner: &dyn Learner,
    dist: &RealizableDistribution,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<GibbsClassifier> {
    let posteriors: Vec<GibbsClassifier> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            learner.posterior(&dist.sample(&mut rng, m)?)
        })
        .collect::<Result<_>>()?;
    let mut acc = BTreeMap::new();
    for q in &posteriors {
        accumulate(&mut acc, q, 1.0 / trials as f64);
    }
    GibbsClassifier::from_unnormalized(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ConstantLearner, ExpGibbsLearner};

    fn h(n: usize, k: usize) -> Hypothesis {
        Hypothesis::threshold(n, k).unwrap()
    }

    #[test]
    fn kl_examples() {
        let p = GibbsClassifier::uniform(vec![h(10, 3), h(10, 7)]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), ExtendedReal::Finite(0.0));
        let q = GibbsClassifier::point_mass(h(10, 3));
        let kl = kl_divergence(&q, &p).unwrap().value();
        assert!((kl - 2f64.ln()).abs() < 1e-15);
        let r = GibbsClassifier::point_mass(h(10, 7));
        assert!(kl_divergence(&q, &r).unwrap().is_infinite());
        let other = GibbsClassifier::point_mass(h(11, 3));
        assert!(kl_divergence(&q, &other).is_err());
    }

    #[test]
    fn kl_bernoulli_examples() {
        assert_eq!(kl_bernoulli(0.3, 0.3), ExtendedReal::Finite(0.0));
        let v = kl_bernoulli(0.5, 0.25).value();
        let closed = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((v - closed).abs() < 1e-15);
        assert!((v - 0.143841).abs() < 1e-6);
        let p = 2f64.powi(-10);
        let v = kl_bernoulli(0.5, p).value();
        let closed = 0.5 * (0.5 / p).ln() + 0.5 * (0.5 / (1.0 - p)).ln();
        assert!((v - closed).abs() < 1e-13);
        // 0.5 ln(2^9) + 0.5 ln(1 / (2 (1 - 2^-10))) = 4 ln 2 - 0.5 ln(1 - 2^-10)
        assert!((v - (4.0 * 2f64.ln() - 0.5 * (1.0 - p).ln())).abs() < 1e-13);
        assert!(kl_bernoulli(0.5, 0.0).is_infinite());
        assert!(kl_bernoulli(0.5, 1.0).is_infinite());
        assert_eq!(kl_bernoulli(0.0, 0.0), ExtendedReal::Finite(0.0));
        assert!((kl_bernoulli(1.0, 0.5).value() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mcallester_examples() {
        let r = mcallester_bound(0.0, ExtendedReal::Finite(0.0), 101, 0.05).unwrap();
        let expected = ((2.0 * 101f64.sqrt() / 0.05).ln() / 200.0).sqrt();
        assert!((r.bound.value() - expected).abs() < 1e-15);
        assert!((r.bound.value() - 0.17315).abs() < 1e-4);
        let inf = mcallester_bound(0.1, ExtendedReal::Infinite, 10, 0.05).unwrap();
        assert!(inf.bound.is_infinite());
        for m in [2usize, 5, 50, 1000] {
            let a = mcallester_bound(0.1, ExtendedReal::Finite(1.0), m, 0.05).unwrap();
            let b = mcallester_bound(0.1, ExtendedReal::Finite(1.0), 2 * m, 0.05).unwrap();
            assert!(b.bound.value() < a.bound.value());
            assert!(a.bound.value() >= a.empirical_loss);
        }
        assert!(mcallester_bound(0.0, ExtendedReal::Finite(0.0), 1, 0.05).is_err());
        assert!(mcallester_bound(0.0, ExtendedReal::Finite(0.0), 5, 1.0).is_err());
    }

    #[test]
    fn bound_report_json_fields() {
        let r = mcallester_bound(0.25, ExtendedReal::Infinite, 10, 0.1).unwrap();
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 5);
        for k in ["empirical_loss", "kl", "m", "delta", "bound"] {
            assert!(keys.contains(&k));
        }
        assert_eq!(v["kl"], "inf");
        assert_eq!(v["bound"], "inf");
        let back: BoundReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn optimal_prior_of_constant_learner() {
        let d = RealizableDistribution::uniform(6, 3).unwrap();
        let l = ConstantLearner::new(2);
        for trials in [1, 7] {
            let p = estimate_optimal_prior(&l, &d, 2, trials, 1).unwrap();
            assert_eq!(p, GibbsClassifier::point_mass(h(6, 2)));
        }
    }

    #[test]
    fn optimal_prior_exact_single_point() {
        let d = RealizableDistribution::uniform(4, 2).unwrap();
        let l = ExpGibbsLearner::new(0.0).unwrap();
        let p = estimate_optimal_prior(&l, &d, 1, 1, 0).unwrap();
        assert_eq!(p.support_size(), 4);
        for k in 1..=4 {
            assert!((p.weight_of(&h(4, k)) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn monte_carlo_prior_is_reproducible() {
        let d = RealizableDistribution::uniform(200, 100).unwrap();
        let l = ExpGibbsLearner::new(1.0).unwrap();
        let a = estimate_optimal_prior(&l, &d, 3, 500, 9).unwrap();
        let b = estimate_optimal_prior(&l, &d, 3, 500, 9).unwrap();
        assert_eq!(a, b);
        let total: f64 = a.atoms().iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
