//! Learning rules mapping samples to Gibbs classifiers.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{empirical_loss, label_extremes, GibbsClassifier, Hypothesis, Label, Sample};
use crate::error::{LabError, Result};

/// A deterministic map from samples to posteriors.
pub trait Learner: Send + Sync {
    fn name(&self) -> String;

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier>;

    /// True when `Pr[h(x)=+1]` provably depends only on the equivalence-type
    /// of the sample and `pos(x, S)`, for out-of-sample `x`.
    fn is_exactly_homogeneous(&self) -> bool {
        false
    }
}

impl<L: Learner + ?Sized> Learner for Arc<L> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        (**self).posterior(sample)
    }

    fn is_exactly_homogeneous(&self) -> bool {
        (**self).is_exactly_homogeneous()
    }
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        (**self).posterior(sample)
    }

    fn is_exactly_homogeneous(&self) -> bool {
        (**self).is_exactly_homogeneous()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperedExpParams {
    beta: f64,
}

impl TemperedExpParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(LabError::Domain(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Posterior on the sample thresholds `h_{x_i}` with weight
/// `exp(-beta * L_S(h_{x_i}))`. `beta = 1` is the illustrative rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpGibbsLearner {
    params: TemperedExpParams,
}

impl ExpGibbsLearner {
    pub fn new(beta: f64) -> Result<Self> {
        Ok(Self {
            params: TemperedExpParams::new(beta)?,
        })
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }
}

pub fn exp_gibbs_learner(sample: &Sample, params: TemperedExpParams) -> Result<GibbsClassifier> {
    let n = sample.domain_size();
    let mut atoms = Vec::with_capacity(sample.len());
    for x in sample.points() {
        let h = Hypothesis::threshold(n, x)?;
        let loss = empirical_loss(&h, sample)?;
        atoms.push((h, (-params.beta * loss).exp()));
    }
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    for atom in &mut atoms {
        atom.1 /= total;
    }
    GibbsClassifier::new(atoms)
}

impl Learner for ExpGibbsLearner {
    fn name(&self) -> String {
        format!("exp:beta={}", self.params.beta)
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        exp_gibbs_learner(sample, self.params)
    }

    fn is_exactly_homogeneous(&self) -> bool {
        true
    }
}

/// Max-margin consistent threshold `floor((a + b) / 2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErmLearner;

pub fn erm_learner(sample: &Sample) -> Result<GibbsClassifier> {
    let n = sample.domain_size();
    let (neg, pos) = label_extremes(sample);
    let a = neg.unwrap_or(0);
    let b = pos.unwrap_or(n + 1);
    if a >= b {
        return Err(LabError::NotRealizable(sample.to_string()));
    }
    let k = ((a + b) / 2).min(n);
    Ok(GibbsClassifier::point_mass(Hypothesis::threshold(n, k)?))
}

impl Learner for ErmLearner {
    fn name(&self) -> String {
        "erm".into()
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        erm_learner(sample)
    }
}

/// Thresholds at the centers of `ceil(1/eps)` equal cells of `{0..n}`:
/// under the uniform marginal every threshold is within `eps/2` of one.
pub fn threshold_cover(n: usize, eps: f64) -> Result<Vec<usize>> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(LabError::Domain(format!("cover radius must lie in (0,1], got {eps}")));
    }
    let cells = (1.0 / eps).ceil() as usize;
    let mut centers: Vec<usize> = (1..=cells)
        .map(|j| ((2 * j - 1) * n) / (2 * cells))
        .collect();
    centers.dedup();
    Ok(centers)
}

pub fn cover_prior(n: usize, eps: f64) -> Result<GibbsClassifier> {
    GibbsClassifier::uniform(
        threshold_cover(n, eps)?
            .into_iter()
            .map(|k| Hypothesis::threshold(n, k))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Empirical risk minimizer restricted to a fixed threshold cover.
///
/// Ties go to the cover element nearest the max-margin midpoint, then to the
/// smaller threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverErmLearner {
    eps: f64,
}

impl CoverErmLearner {
    pub fn new(eps: f64) -> Result<Self> {
        threshold_cover(1, eps)?;
        Ok(Self { eps })
    }
}

impl Learner for CoverErmLearner {
    fn name(&self) -> String {
        format!("cover-erm:eps={}", self.eps)
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        let n = sample.domain_size();
        let (neg, pos) = label_extremes(sample);
        let mid2 = neg.unwrap_or(0) + pos.unwrap_or(n + 1);
        let mut best: Option<(usize, usize, usize)> = None;
        for k in threshold_cover(n, self.eps)? {
            let h = Hypothesis::threshold(n, k)?;
            let errors = sample
                .examples()
                .iter()
                .filter(|e| h.predict_unchecked(e.x) != e.y)
                .count();
            let key = (errors, (2 * k).abs_diff(mid2), k);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
        let (_, _, k) = best.expect("cover is nonempty");
        Ok(GibbsClassifier::point_mass(Hypothesis::threshold(n, k)?))
    }
}

/// Ignores the sample and returns the point mass on `h_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantLearner {
    k: usize,
}

impl ConstantLearner {
    pub fn new(k: usize) -> Self {
        Self { k }
    }
}

impl Learner for ConstantLearner {
    fn name(&self) -> String {
        format!("const:k={}", self.k)
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        Ok(GibbsClassifier::point_mass(Hypothesis::threshold(
            sample.domain_size(),
            self.k,
        )?))
    }

    fn is_exactly_homogeneous(&self) -> bool {
        true
    }
}

/// Returns one fixed posterior for every sample on its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLearner {
    posterior: GibbsClassifier,
}

impl FixedLearner {
    pub fn new(posterior: GibbsClassifier) -> Self {
        Self { posterior }
    }
}

impl Learner for FixedLearner {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        if sample.domain_size() != self.posterior.domain_size() {
            return Err(LabError::Domain("fixed posterior lives on another domain".into()));
        }
        Ok(self.posterior.clone())
    }

    fn is_exactly_homogeneous(&self) -> bool {
        true
    }
}

/// A user-supplied learning rule.
pub struct FnLearner<F> {
    name: String,
    f: F,
}

impl<F> FnLearner<F>
where
    F: Fn(&Sample) -> Result<GibbsClassifier> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F> Learner for FnLearner<F>
where
    F: Fn(&Sample) -> Result<GibbsClassifier> + Send + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        (self.f)(sample)
    }
}

/// Parses `h_<k>` or `table:<+/- string>`.
pub fn parse_hypothesis(text: &str, n: usize) -> Result<Hypothesis> {
    let text = text.trim();
    if let Some(k) = text.strip_prefix("h_") {
        let k = k
            .parse::<usize>()
            .map_err(|e| LabError::Parse(format!("bad threshold {text:?}: {e}")))?;
        return Hypothesis::threshold(n, k);
    }
    if let Some(bits) = text.strip_prefix("table:") {
        let bits = bits.chars().map(Label::from_symbol).collect::<Result<Vec<_>>>()?;
        if bits.len() != n {
            return Err(LabError::LengthMismatch {
                left: bits.len(),
                right: n,
            });
        }
        return Hypothesis::table(bits);
    }
    Err(LabError::Parse(format!("unknown hypothesis {text:?}")))
}

#[derive(Debug, Deserialize)]
struct TableFile {
    n: usize,
    entries: Vec<TableEntry>,
}

#[derive(Debug, Deserialize)]
struct TableEntry {
    sample: String,
    posterior: Vec<TableAtom>,
}

#[derive(Debug, Deserialize)]
struct TableAtom {
    hypothesis: String,
    weight: f64,
}

/// A learner given by an explicit sample → posterior table (tiny domains).
///
/// JSON layout:
/// `{"n": 4, "entries": [{"sample": "(1,-);(3,+)",
///   "posterior": [{"hypothesis": "h_2", "weight": 1.0}]}]}`
#[derive(Debug, Clone)]
pub struct TableLearner {
    n: usize,
    source: String,
    entries: HashMap<String, GibbsClassifier>,
}

impl TableLearner {
    pub fn from_json(text: &str, source: impl Into<String>) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text)?;
        let mut entries = HashMap::new();
        for entry in file.entries {
            let sample = Sample::parse(&entry.sample, file.n)?;
            let atoms = entry
                .posterior
                .iter()
                .map(|a| Ok((parse_hypothesis(&a.hypothesis, file.n)?, a.weight)))
                .collect::<Result<Vec<_>>>()?;
            entries.insert(sample.to_string(), GibbsClassifier::new(atoms)?);
        }
        Ok(Self {
            n: file.n,
            source: source.into(),
            entries,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Learner for TableLearner {
    fn name(&self) -> String {
        format!("table:{}", self.source)
    }

    fn posterior(&self, sample: &Sample) -> Result<GibbsClassifier> {
        if sample.domain_size() != self.n {
            return Err(LabError::Domain(format!(
                "table learner is defined on {{1..{}}}",
                self.n
            )));
        }
        let key = sample.to_string();
        self.entries
            .get(&key)
            .cloned()
            .ok_or(LabError::UnknownSample(key))
    }
}

/// CLI learner selector: `exp:beta=<f>`, `erm`, `table:<path>`,
/// `cover-erm:eps=<f>`, `const:k=<int>`.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnerSpec {
    Exp { beta: f64 },
    Erm,
    Table { path: PathBuf },
    CoverErm { eps: f64 },
    Constant { k: usize },
}

fn keyed_value<'a>(text: &'a str, key: &str) -> Result<&'a str> {
    text.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| LabError::Parse(format!("expected {key}=<value>, got {text:?}")))
}

impl FromStr for LearnerSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| LabError::Parse(format!("bad number {v:?}: {e}")))
        };
        match kind {
            "exp" => Ok(LearnerSpec::Exp {
                beta: num(keyed_value(rest, "beta")?)?,
            }),
            "erm" if rest.is_empty() => Ok(LearnerSpec::Erm),
            "table" if !rest.is_empty() => Ok(LearnerSpec::Table { path: rest.into() }),
            "cover-erm" => Ok(LearnerSpec::CoverErm {
                eps: num(keyed_value(rest, "eps")?)?,
            }),
            "const" => Ok(LearnerSpec::Constant {
                k: keyed_value(rest, "k")?
                    .parse()
                    .map_err(|e| LabError::Parse(format!("bad threshold: {e}")))?,
            }),
            _ => Err(LabError::Parse(format!("unknown learner spec {s:?}"))),
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::Exp { beta } => write!(f, "exp:beta={beta}"),
            LearnerSpec::Erm => write!(f, "erm"),
            LearnerSpec::Table { path } => write!(f, "table:{}", path.display()),
            LearnerSpec::CoverErm { eps } => write!(f, "cover-erm:eps={eps}"),
            LearnerSpec::Constant { k } => write!(f, "const:k={k}"),
        }
    }
}

impl Serialize for LearnerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LearnerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl LearnerSpec {
    pub fn build(&self) -> Result<Arc<dyn Learner>> {
        Ok(match self {
            LearnerSpec::Exp { beta } => Arc::new(ExpGibbsLearner::new(*beta)?),
            LearnerSpec::Erm => Arc::new(ErmLearner),
            LearnerSpec::Table { path } => Arc::new(TableLearner::from_path(path)?),
            LearnerSpec::CoverErm { eps } => Arc::new(CoverErmLearner::new(*eps)?),
            LearnerSpec::Constant { k } => Arc::new(ConstantLearner::new(*k)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::empirical_loss_exact;

    fn s(text: &str, n: usize) -> Sample {
        Sample::parse(text, n).unwrap()
    }

    fn h(n: usize, k: usize) -> Hypothesis {
        Hypothesis::threshold(n, k).unwrap()
    }

    #[test]
    fn exp_learner_weights_follow_losses() {
        let sample = s("(1,-);(5,+);(8,+)", 10);
        let q = ExpGibbsLearner::new(1.0).unwrap().posterior(&sample).unwrap();
        // losses 0, 1/3, 2/3 from the exact oracle
        let losses: Vec<f64> = [1, 5, 8]
            .iter()
            .map(|&k| {
                let r = empirical_loss_exact(&h(10, k), &sample).unwrap();
                *r.numer() as f64 / *r.denom() as f64
            })
            .collect();
        assert_eq!(losses, vec![0.0, 1.0 / 3.0, 2.0 / 3.0]);
        let z: f64 = losses.iter().map(|l| (-l).exp()).sum();
        for (k, l) in [1, 5, 8].iter().zip(&losses) {
            assert!((q.weight_of(&h(10, *k)) - (-l).exp() / z).abs() < 1e-15);
        }
    }

    #[test]
    fn exp_learner_beta_zero_is_uniform() {
        let sample = s("(2,-);(4,-);(7,+);(9,+)", 10);
        let q = ExpGibbsLearner::new(0.0).unwrap().posterior(&sample).unwrap();
        assert_eq!(q.support_size(), 4);
        assert!(q.atoms().iter().all(|(_, w)| *w == 0.25));
    }

    #[test]
    fn exp_learner_merges_duplicate_points() {
        let sample = s("(3,-);(3,-);(6,+)", 10);
        let q = ExpGibbsLearner::new(1.0).unwrap().posterior(&sample).unwrap();
        assert_eq!(q.support_size(), 2);
        // h_3 has loss 0 twice, h_6 has loss 1/3
        let e = (-1.0f64 / 3.0).exp();
        assert!((q.weight_of(&h(10, 3)) - 2.0 / (2.0 + e)).abs() < 1e-15);
        assert!((q.weight_of(&h(10, 6)) - e / (2.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn exp_learner_rejects_negative_beta() {
        assert!(ExpGibbsLearner::new(-1.0).is_err());
        assert!(ExpGibbsLearner::new(f64::NAN).is_err());
    }

    #[test]
    fn erm_examples() {
        let point = |text: &str| {
            erm_learner(&s(text, 10)).unwrap().atoms()[0].0.as_threshold().unwrap()
        };
        assert_eq!(point("(1,-);(5,+);(8,+)"), 3);
        // a = 7, b = 11: floor(18 / 2) = 9
        assert_eq!(point("(7,-);(2,-);(5,-)"), 9);
        assert_eq!(point("(4,+)"), 2);
        assert!(matches!(
            erm_learner(&s("(5,-);(1,+)", 10)),
            Err(LabError::NotRealizable(_))
        ));
    }

    #[test]
    fn cover_has_expected_centers() {
        assert_eq!(threshold_cover(64, 0.125).unwrap(), vec![4, 12, 20, 28, 36, 44, 52, 60]);
        assert_eq!(threshold_cover(1024, 0.125).unwrap().len(), 8);
        assert!(threshold_cover(10, 0.0).is_err());
    }

    #[test]
    fn cover_erm_picks_consistent_center() {
        let l = CoverErmLearner::new(0.125).unwrap();
        let q = l.posterior(&s("(10,-);(40,+)", 64)).unwrap();
        let k = q.atoms()[0].0.as_threshold().unwrap();
        assert!(k == 12 || k == 20 || k == 28 || k == 36);
        assert_eq!(empirical_loss(&q, &s("(10,-);(40,+)", 64)).unwrap(), 0.0);
        assert_eq!(k, 28, "closest center to the midpoint 25");
    }

    #[test]
    fn learner_spec_round_trip() {
        for text in ["exp:beta=1", "erm", "table:/tmp/x.json", "cover-erm:eps=0.125", "const:k=0"] {
            let spec: LearnerSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert!("exp:gamma=1".parse::<LearnerSpec>().is_err());
        assert!("nope".parse::<LearnerSpec>().is_err());
    }

    #[test]
    fn table_learner_looks_up_samples() {
        let json = r#"{"n": 4, "entries": [
            {"sample": "(1,-);(3,+)", "posterior": [
                {"hypothesis": "h_2", "weight": 0.5},
                {"hypothesis": "table:+-+-", "weight": 0.5}]}]}"#;
        let l = TableLearner::from_json(json, "inline").unwrap();
        assert_eq!(l.len(), 1);
        let q = l.posterior(&s("(1,-);(3,+)", 4)).unwrap();
        assert_eq!(q.support_size(), 2);
        assert!(matches!(
            l.posterior(&s("(1,-);(4,+)", 4)),
            Err(LabError::UnknownSample(_))
        ));
    }

    #[test]
    fn fn_learner_wraps_closures() {
        let l = FnLearner::new("noisy", |s: &Sample| {
            GibbsClassifier::uniform(vec![
                Hypothesis::threshold(s.domain_size(), 0)?,
                Hypothesis::threshold(s.domain_size(), s.examples()[0].x)?,
            ])
        });
        assert_eq!(l.name(), "noisy");
        assert_eq!(l.posterior(&s("(2,+)", 5)).unwrap().support_size(), 2);
    }
}
