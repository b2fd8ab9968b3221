//! Finite threshold domains, samples, hypotheses and Gibbs classifiers.
//!
//! The domain is the ordered set `{1, ..., n}`. A threshold `h_k` labels
//! `x <= k` negative and everything above `k` positive, so `h_0` is the
//! constant `+1` predictor and `h_n` the constant `-1` predictor.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Tolerance on the total mass of a probability vector.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// The ordered domain `{1, ..., n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    n: usize,
}

impl Domain {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::Domain("domain size must be at least 1".into()));
        }
        Ok(Self { n })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, x: usize) -> bool {
        (1..=self.n).contains(&x)
    }

    pub fn check(&self, x: usize) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(LabError::PointOutOfRange { x, n: self.n })
        }
    }

    pub fn points(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }
}

/// A binary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "-")]
    Neg,
    #[serde(rename = "+")]
    Pos,
}

impl Label {
    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Pos
    }

    pub fn value(self) -> i8 {
        match self {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Label::Neg => '-',
            Label::Pos => '+',
        }
    }

    pub fn from_symbol(c: char) -> Result<Self> {
        match c {
            '+' => Ok(Label::Pos),
            '-' => Ok(Label::Neg),
            other => Err(LabError::Parse(format!("invalid label {other:?}"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// The representation of a predictor on `{1..n}`.
///
/// Tables that coincide with a threshold are always stored as the threshold,
/// so structural equality is predictor equality on the whole domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HypothesisForm {
    Threshold { k: usize },
    Table { bits: Vec<Label> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypothesis {
    n: usize,
    form: HypothesisForm,
}

impl Ord for Hypothesis {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, &self.form).cmp(&(other.n, &other.form))
    }
}

impl PartialOrd for Hypothesis {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hypothesis {
    /// The threshold `h_k` on `{1..n}`.
    pub fn threshold(n: usize, k: usize) -> Result<Self> {
        Domain::new(n)?;
        if k > n {
            return Err(LabError::Domain(format!("threshold {k} outside 0..={n}")));
        }
        Ok(Self {
            n,
            form: HypothesisForm::Threshold { k },
        })
    }

    /// A full truth table; normalized to a threshold when it is one.
    pub fn table(bits: Vec<Label>) -> Result<Self> {
        let n = bits.len();
        Domain::new(n)?;
        let k = bits.iter().take_while(|b| **b == Label::Neg).count();
        if bits[k..].iter().all(|b| *b == Label::Pos) {
            return Ok(Self {
                n,
                form: HypothesisForm::Threshold { k },
            });
        }
        Ok(Self {
            n,
            form: HypothesisForm::Table { bits },
        })
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    pub fn form(&self) -> &HypothesisForm {
        &self.form
    }

    /// The threshold index when the hypothesis is a threshold.
    pub fn as_threshold(&self) -> Option<usize> {
        match self.form {
            HypothesisForm::Threshold { k } => Some(k),
            HypothesisForm::Table { .. } => None,
        }
    }

    pub fn predict(&self, x: usize) -> Result<Label> {
        if x == 0 || x > self.n {
            return Err(LabError::PointOutOfRange { x, n: self.n });
        }
        Ok(self.predict_unchecked(x))
    }

    /// Prediction without the range check; `x` must lie in `1..=n`.
    pub fn predict_unchecked(&self, x: usize) -> Label {
        match &self.form {
            HypothesisForm::Threshold { k } => Label::from_sign(x > *k),
            HypothesisForm::Table { bits } => bits[x - 1],
        }
    }

    pub fn bits(&self) -> Vec<Label> {
        (1..=self.n).map(|x| self.predict_unchecked(x)).collect()
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            HypothesisForm::Threshold { k } => write!(f, "h_{k}"),
            HypothesisForm::Table { bits } => {
                write!(f, "table:")?;
                bits.iter().try_for_each(|b| write!(f, "{b}"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: usize,
    pub y: Label,
}

impl LabeledExample {
    pub fn new(x: usize, y: Label) -> Self {
        Self { x, y }
    }
}

/// An ordered list of labeled examples over `{1..n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sample {
    n: usize,
    examples: Vec<LabeledExample>,
}

impl Sample {
    pub fn new(n: usize, examples: Vec<LabeledExample>) -> Result<Self> {
        let domain = Domain::new(n)?;
        if examples.is_empty() {
            return Err(LabError::EmptySample);
        }
        for e in &examples {
            domain.check(e.x)?;
        }
        Ok(Self { n, examples })
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, Label)]) -> Result<Self> {
        Self::new(
            n,
            pairs.iter().map(|&(x, y)| LabeledExample::new(x, y)).collect(),
        )
    }

    /// Parses the literal format `(x,y);(x,y);...` with `y` in `{+,-}`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut examples = Vec::new();
        for chunk in text.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let inner = chunk
                .strip_prefix('(')
                .and_then(|c| c.strip_suffix(')'))
                .ok_or_else(|| LabError::Parse(format!("expected (x,y), got {chunk:?}")))?;
            let (xs, ys) = inner
                .split_once(',')
                .ok_or_else(|| LabError::Parse(format!("expected (x,y), got {chunk:?}")))?;
            let x = xs
                .trim()
                .parse::<usize>()
                .map_err(|e| LabError::Parse(format!("bad point {xs:?}: {e}")))?;
            let ys = ys.trim();
            let mut chars = ys.chars();
            let y = match (chars.next(), chars.next()) {
                (Some(c), None) => Label::from_symbol(c)?,
                _ => return Err(LabError::Parse(format!("bad label {ys:?}"))),
            };
            examples.push(LabeledExample::new(x, y));
        }
        Self::new(n, examples)
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.examples.iter().map(|e| e.x)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.examples.iter().map(|e| e.y).collect()
    }

    /// The underlying set of points, sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut pts: Vec<usize> = self.points().collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    pub fn contains_point(&self, x: usize) -> bool {
        self.examples.iter().any(|e| e.x == x)
    }

    /// The same labels at new points, in the same order.
    pub fn with_points(&self, n: usize, points: &[usize]) -> Result<Self> {
        if points.len() != self.len() {
            return Err(LabError::LengthMismatch {
                left: points.len(),
                right: self.len(),
            });
        }
        Self::new(
            n,
            points
                .iter()
                .zip(&self.examples)
                .map(|(&x, e)| LabeledExample::new(x, e.y))
                .collect(),
        )
    }

    /// Replaces the point of example `j`, keeping its label.
    pub fn replace_point(&self, j: usize, x: usize) -> Result<Self> {
        let mut examples = self.examples.clone();
        examples[j].x = x;
        Self::new(self.n, examples)
    }
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.examples.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "({},{})", e.x, e.y)?;
        }
        Ok(())
    }
}

/// Order-type plus label vector of a sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EquivalenceType {
    pub pi: Vec<usize>,
    pub ybar: Vec<Label>,
}

/// Longest type length whose permutation types are enumerated.
pub const MAX_ENUMERATED_TYPE_LENGTH: usize = 7;

impl EquivalenceType {
    pub fn new(pi: Vec<usize>, ybar: Vec<Label>) -> Result<Self> {
        if pi.len() != ybar.len() {
            return Err(LabError::LengthMismatch {
                left: pi.len(),
                right: ybar.len(),
            });
        }
        if pi.is_empty() {
            return Err(LabError::EmptySample);
        }
        let m = pi.len();
        if pi.iter().any(|&p| p == 0 || p > m) {
            return Err(LabError::Domain(format!("order-type entries must lie in 1..={m}")));
        }
        Ok(Self { pi, ybar })
    }

    pub fn m(&self) -> usize {
        self.pi.len()
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.m() + 1];
        self.pi.iter().all(|&p| !std::mem::replace(&mut seen[p], true))
    }

    /// For a permutation type: whether every negative example precedes
    /// every positive one in sorted order.
    pub fn is_realizable(&self) -> bool {
        let mut by_rank = vec![Label::Neg; self.m()];
        for (&p, &y) in self.pi.iter().zip(&self.ybar) {
            by_rank[p - 1] = y;
        }
        by_rank.windows(2).all(|w| w[0] <= w[1])
    }

    /// Every permutation equivalence-type of length `m` (`m! * 2^m` of them).
    pub fn all_permutation_types(m: usize) -> Vec<EquivalenceType> {
        let mut out = Vec::new();
        for pi in crate::combinatorics::permutations(m) {
            for mask in 0..(1usize << m) {
                let ybar = (0..m).map(|i| Label::from_sign(mask >> i & 1 == 1)).collect();
                out.push(EquivalenceType {
                    pi: pi.iter().map(|p| p + 1).collect(),
                    ybar,
                });
            }
        }
        out
    }

    /// [`Self::all_permutation_types`], refusing lengths above
    /// [`MAX_ENUMERATED_TYPE_LENGTH`].
    pub fn enumerate_permutation_types(m: usize) -> Result<Vec<EquivalenceType>> {
        if m > MAX_ENUMERATED_TYPE_LENGTH {
            return Err(LabError::Domain(format!(
                "enumerating the m!*2^m types needs m <= {MAX_ENUMERATED_TYPE_LENGTH}, got m={m}"
            )));
        }
        Ok(Self::all_permutation_types(m))
    }

    /// Orders and labels a sorted set of `m` distinct points so the result
    /// has this type: example `j` sits at the `pi[j]`-th smallest point.
    pub fn sample_on(&self, n: usize, sorted_points: &[usize]) -> Result<Sample> {
        if !self.is_permutation() {
            return Err(LabError::Domain("order-type is not a permutation".into()));
        }
        if sorted_points.len() != self.m() {
            return Err(LabError::LengthMismatch {
                left: sorted_points.len(),
                right: self.m(),
            });
        }
        Sample::new(
            n,
            self.pi
                .iter()
                .zip(&self.ybar)
                .map(|(&p, &y)| LabeledExample::new(sorted_points[p - 1], y))
                .collect(),
        )
    }
}

impl fmt::Display for EquivalenceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pi: Vec<String> = self.pi.iter().map(|p| p.to_string()).collect();
        let y: Vec<String> = self.ybar.iter().map(|l| l.to_string()).collect();
        write!(f, "(({}),({}))", pi.join(","), y.join(","))
    }
}

/// A finite mixture of hypotheses; also used for priors.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsClassifier {
    n: usize,
    atoms: Vec<(Hypothesis, f64)>,
}

impl GibbsClassifier {
    /// Builds a mixture from weights that already sum to one.
    pub fn new(atoms: impl IntoIterator<Item = (Hypothesis, f64)>) -> Result<Self> {
        let merged = Self::merge(atoms)?;
        let total: f64 = merged.atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(LabError::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(merged)
    }

    /// Builds a mixture from nonnegative weights with positive total.
    pub fn from_unnormalized(atoms: impl IntoIterator<Item = (Hypothesis, f64)>) -> Result<Self> {
        let atoms: Vec<(Hypothesis, f64)> = atoms.into_iter().collect();
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(LabError::InvalidWeights(format!("total mass {total}")));
        }
        Self::merge(atoms.into_iter().map(|(h, w)| (h, w / total)))
    }

    pub fn point_mass(h: Hypothesis) -> Self {
        Self {
            n: h.domain_size(),
            atoms: vec![(h, 1.0)],
        }
    }

    pub fn uniform(hs: impl IntoIterator<Item = Hypothesis>) -> Result<Self> {
        Self::from_unnormalized(hs.into_iter().map(|h| (h, 1.0)))
    }

    /// Uniform mixture over all `n + 1` thresholds.
    pub fn uniform_thresholds(n: usize) -> Result<Self> {
        Self::uniform((0..=n).map(|k| Hypothesis::threshold(n, k)).collect::<Result<Vec<_>>>()?)
    }

    fn merge(atoms: impl IntoIterator<Item = (Hypothesis, f64)>) -> Result<Self> {
        let mut map: BTreeMap<Hypothesis, f64> = BTreeMap::new();
        let mut n = None;
        for (h, w) in atoms {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(LabError::InvalidWeights(format!("weight {w} for {h}")));
            }
            match n {
                None => n = Some(h.domain_size()),
                Some(n0) if n0 != h.domain_size() => {
                    return Err(LabError::Domain(format!(
                        "mixed domain sizes {n0} and {}",
                        h.domain_size()
                    )))
                }
                _ => {}
            }
            *map.entry(h).or_insert(0.0) += w;
        }
        let n = n.ok_or_else(|| LabError::InvalidWeights("no atoms".into()))?;
        let atoms: Vec<(Hypothesis, f64)> = map.into_iter().filter(|(_, w)| *w > 0.0).collect();
        if atoms.is_empty() {
            return Err(LabError::InvalidWeights("all weights are zero".into()));
        }
        Ok(Self { n, atoms })
    }

    pub fn domain_size(&self) -> usize {
        self.n
    }

    /// Atoms sorted by hypothesis, thresholds first in increasing `k`.
    pub fn atoms(&self) -> &[(Hypothesis, f64)] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn weight_of(&self, h: &Hypothesis) -> f64 {
        self.atoms
            .binary_search_by(|(a, _)| a.cmp(h))
            .map(|i| self.atoms[i].1)
            .unwrap_or(0.0)
    }

    /// Draws one hypothesis.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Hypothesis {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (h, w) in &self.atoms {
            acc += w;
            if u < acc {
                return h;
            }
        }
        &self.atoms[self.atoms.len() - 1].0
    }
}

/// Anything that predicts `+1` at a point with some probability.
pub trait Predictor {
    fn domain_size(&self) -> usize;

    /// `Pr[h(x) = +1]`; `x` must lie in the domain.
    fn prob_positive(&self, x: usize) -> f64;

    fn prob_error(&self, x: usize, y: Label) -> f64 {
        let p = self.prob_positive(x);
        match y {
            Label::Pos => 1.0 - p,
            Label::Neg => p,
        }
    }
}

impl Predictor for Hypothesis {
    fn domain_size(&self) -> usize {
        self.n
    }

    fn prob_positive(&self, x: usize) -> f64 {
        if self.predict_unchecked(x).is_positive() {
            1.0
        } else {
            0.0
        }
    }
}

impl Predictor for GibbsClassifier {
    fn domain_size(&self) -> usize {
        self.n
    }

    fn prob_positive(&self, x: usize) -> f64 {
        self.atoms
            .iter()
            .filter(|(h, _)| h.predict_unchecked(x).is_positive())
            .map(|(_, w)| w)
            .sum::<f64>()
            .min(1.0)
    }
}

pub fn predict(h: &Hypothesis, x: usize) -> Result<Label> {
    h.predict(x)
}

fn check_sample_domain<P: Predictor + ?Sized>(c: &P, s: &Sample) -> Result<()> {
    if s.is_empty() {
        return Err(LabError::EmptySample);
    }
    if let Some(e) = s.examples().iter().find(|e| e.x > c.domain_size()) {
        return Err(LabError::PointOutOfRange {
            x: e.x,
            n: c.domain_size(),
        });
    }
    Ok(())
}

/// Average probability of misclassifying the sample's examples.
pub fn empirical_loss<P: Predictor + ?Sized>(c: &P, s: &Sample) -> Result<f64> {
    check_sample_domain(c, s)?;
    let errors: f64 = s.examples().iter().map(|e| c.prob_error(e.x, e.y)).sum();
    Ok(errors / s.len() as f64)
}

/// Exact empirical loss of a single hypothesis.
pub fn empirical_loss_exact(h: &Hypothesis, s: &Sample) -> Result<Ratio<usize>> {
    check_sample_domain(h, s)?;
    let errors = s
        .examples()
        .iter()
        .filter(|e| h.predict_unchecked(e.x) != e.y)
        .count();
    Ok(Ratio::new(errors, s.len()))
}

/// Number of distinct sample points `<= x`.
pub fn pos(x: usize, s: &Sample) -> usize {
    s.support().partition_point(|&p| p <= x)
}

pub fn order_type(s: &Sample) -> EquivalenceType {
    let support = s.support();
    EquivalenceType {
        pi: s
            .points()
            .map(|x| support.partition_point(|&p| p <= x))
            .collect(),
        ybar: s.labels(),
    }
}

/// Equivalence of samples, checked pairwise from the definition.
pub fn equivalent(s: &Sample, t: &Sample) -> Result<bool> {
    if s.len() != t.len() {
        return Err(LabError::LengthMismatch {
            left: s.len(),
            right: t.len(),
        });
    }
    let (a, b) = (s.examples(), t.examples());
    for i in 0..a.len() {
        if a[i].y != b[i].y {
            return Ok(false);
        }
        for j in 0..a.len() {
            if (a[i].x <= a[j].x) != (b[i].x <= b[j].x) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Largest negatively labeled point and smallest positively labeled point.
pub(crate) fn label_extremes(s: &Sample) -> (Option<usize>, Option<usize>) {
    let neg = s.examples().iter().filter(|e| e.y == Label::Neg).map(|e| e.x).max();
    let pos = s.examples().iter().filter(|e| e.y == Label::Pos).map(|e| e.x).min();
    (neg, pos)
}

pub fn is_realizable(s: &Sample) -> bool {
    match label_extremes(s) {
        (None, _) => true,
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
    }
}

/// A distribution over labeled examples whose labels follow one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizableDistribution {
    marginal: Vec<f64>,
    cumulative: Vec<f64>,
    true_threshold: usize,
}

impl RealizableDistribution {
    pub fn new(marginal: Vec<f64>, true_threshold: usize) -> Result<Self> {
        let n = marginal.len();
        Domain::new(n)?;
        if true_threshold > n {
            return Err(LabError::Domain(format!(
                "threshold {true_threshold} outside 0..={n}"
            )));
        }
        if marginal.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(LabError::InvalidWeights("negative marginal mass".into()));
        }
        let total: f64 = marginal.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(LabError::InvalidWeights(format!("marginal sums to {total}")));
        }
        let cumulative = marginal
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            marginal,
            cumulative,
            true_threshold,
        })
    }

    pub fn uniform(n: usize, true_threshold: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n], true_threshold)
    }

    pub fn domain_size(&self) -> usize {
        self.marginal.len()
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn true_threshold(&self) -> usize {
        self.true_threshold
    }

    pub fn target(&self) -> Hypothesis {
        Hypothesis {
            n: self.domain_size(),
            form: HypothesisForm::Threshold {
                k: self.true_threshold,
            },
        }
    }

    pub fn label(&self, x: usize) -> Label {
        Label::from_sign(x > self.true_threshold)
    }

    pub fn support(&self) -> Vec<usize> {
        (1..=self.domain_size())
            .filter(|&x| self.marginal[x - 1] > 0.0)
            .collect()
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // skip zero-mass points that rounding might land on
        let mut x = idx.min(self.marginal.len() - 1);
        while self.marginal[x] == 0.0 && x + 1 < self.marginal.len() {
            x += 1;
        }
        x + 1
    }

    /// Draws `m` i.i.d. labeled examples.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Result<Sample> {
        let examples = (0..m)
            .map(|_| {
                let x = self.sample_point(rng);
                LabeledExample::new(x, self.label(x))
            })
            .collect();
        Sample::new(self.domain_size(), examples)
    }
}

/// Expected 0/1 loss under the distribution.
pub fn population_loss<P: Predictor + ?Sized>(c: &P, d: &RealizableDistribution) -> Result<f64> {
    if c.domain_size() != d.domain_size() {
        return Err(LabError::Domain(format!(
            "classifier on {{1..{}}} vs distribution on {{1..{}}}",
            c.domain_size(),
            d.domain_size()
        )));
    }
    Ok(d
        .marginal()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, w)| w * c.prob_error(i + 1, d.label(i + 1)))
        .sum())
}

impl FromStr for Label {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Label::from_symbol(c),
            _ => Err(LabError::Parse(format!("bad label {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Neg, Pos};

    fn s(text: &str, n: usize) -> Sample {
        Sample::parse(text, n).unwrap()
    }

    #[test]
    fn predict_thresholds() {
        let h5 = Hypothesis::threshold(10, 5).unwrap();
        assert_eq!(h5.predict(5).unwrap(), Neg);
        assert_eq!(Hypothesis::threshold(10, 0).unwrap().predict(1).unwrap(), Pos);
        assert_eq!(Hypothesis::threshold(10, 3).unwrap().predict(4).unwrap(), Pos);
        assert!(matches!(
            h5.predict(11),
            Err(LabError::PointOutOfRange { x: 11, n: 10 })
        ));
        assert!(h5.predict(0).is_err());
    }

    #[test]
    fn constant_thresholds() {
        let n = 6;
        let h0 = Hypothesis::threshold(n, 0).unwrap();
        let hn = Hypothesis::threshold(n, n).unwrap();
        assert!((1..=n).all(|x| h0.predict(x).unwrap() == Pos));
        assert!((1..=n).all(|x| hn.predict(x).unwrap() == Neg));
    }

    #[test]
    fn tables_canonicalize_to_thresholds() {
        let t = Hypothesis::table(vec![Neg, Neg, Pos, Pos]).unwrap();
        assert_eq!(t, Hypothesis::threshold(4, 2).unwrap());
        let all_pos = Hypothesis::table(vec![Pos; 3]).unwrap();
        assert_eq!(all_pos.as_threshold(), Some(0));
        let odd = Hypothesis::table(vec![Pos, Neg, Pos]).unwrap();
        assert!(odd.as_threshold().is_none());
        assert_eq!(odd.predict(2).unwrap(), Neg);
    }

    #[test]
    fn empirical_loss_examples() {
        let sample = s("(1,-);(5,+);(8,+)", 10);
        let h1 = Hypothesis::threshold(10, 1).unwrap();
        let h5 = Hypothesis::threshold(10, 5).unwrap();
        assert_eq!(empirical_loss_exact(&h1, &sample).unwrap(), Ratio::new(0, 3));
        assert_eq!(empirical_loss_exact(&h5, &sample).unwrap(), Ratio::new(1, 3));
        assert_eq!(empirical_loss(&h5, &sample).unwrap(), 1.0 / 3.0);
        // labels equal to the hypothesis' own predictions
        let odd = Hypothesis::table(vec![Pos, Neg, Pos, Neg]).unwrap();
        let own = Sample::new(
            4,
            (1..=4).map(|x| LabeledExample::new(x, odd.predict(x).unwrap())).collect(),
        )
        .unwrap();
        assert_eq!(empirical_loss(&odd, &own).unwrap(), 0.0);
    }

    #[test]
    fn empty_sample_is_rejected() {
        assert!(matches!(Sample::new(5, vec![]), Err(LabError::EmptySample)));
        assert!(Sample::parse("", 5).is_err());
    }

    #[test]
    fn population_loss_examples() {
        let d = RealizableDistribution::uniform(4, 2).unwrap();
        let point = |k| GibbsClassifier::point_mass(Hypothesis::threshold(4, k).unwrap());
        assert_eq!(population_loss(&point(2), &d).unwrap(), 0.0);
        assert_eq!(population_loss(&point(0), &d).unwrap(), 0.5);
        let mix = GibbsClassifier::uniform(vec![
            Hypothesis::threshold(4, 0).unwrap(),
            Hypothesis::threshold(4, 4).unwrap(),
        ])
        .unwrap();
        assert_eq!(population_loss(&mix, &d).unwrap(), 0.5);
        let other = RealizableDistribution::uniform(5, 2).unwrap();
        assert!(population_loss(&point(2), &other).is_err());
    }

    #[test]
    fn pos_examples() {
        assert_eq!(pos(5, &s("(1,-);(5,+);(8,+)", 10)), 2);
        assert_eq!(pos(2, &s("(3,-);(6,+);(4,+)", 10)), 0);
        assert_eq!(pos(6, &s("(3,-);(6,+);(4,+)", 10)), 3);
        // duplicates count once
        assert_eq!(pos(9, &s("(3,-);(3,-);(4,+)", 10)), 2);
    }

    #[test]
    fn order_type_examples() {
        assert_eq!(order_type(&s("(1,-);(5,+);(8,+)", 10)).pi, vec![1, 2, 3]);
        assert_eq!(order_type(&s("(3,-);(6,+);(4,+)", 10)).pi, vec![1, 3, 2]);
        assert_eq!(order_type(&s("(7,+)", 10)).pi, vec![1]);
        let dup = order_type(&s("(3,-);(3,-);(4,+)", 10));
        assert_eq!(dup.pi, vec![1, 1, 2]);
        assert!(!dup.is_permutation());
    }

    #[test]
    fn equivalence_examples() {
        let a = s("(1,-);(5,+);(8,+)", 100);
        let b = s("(10,-);(70,+);(100,+)", 100);
        let c = s("(3,-);(6,+);(4,+)", 100);
        assert!(equivalent(&a, &b).unwrap());
        assert!(!equivalent(&a, &c).unwrap());
        assert!(equivalent(&c, &c).unwrap());
        assert!(equivalent(&a, &s("(1,-)", 100)).is_err());
    }

    #[test]
    fn realizability_examples() {
        assert!(is_realizable(&s("(1,-);(5,+);(8,+)", 10)));
        assert!(is_realizable(&s("(4,+);(2,+)", 10)));
        assert!(!is_realizable(&s("(5,-);(1,+)", 10)));
        assert!(!is_realizable(&s("(5,-);(5,+)", 10)));
    }

    #[test]
    fn sample_literal_round_trip() {
        let text = "(1,-);(5,+);(8,+)";
        assert_eq!(s(text, 10).to_string(), text);
        assert!(Sample::parse("(1,x)", 10).is_err());
        assert!(Sample::parse("(11,+)", 10).is_err());
        assert_eq!(s(" (1, -) ; (2,+) ", 3).to_string(), "(1,-);(2,+)");
    }

    #[test]
    fn gibbs_merges_duplicates_and_checks_mass() {
        let h = |k| Hypothesis::threshold(5, k).unwrap();
        let q = GibbsClassifier::new(vec![(h(1), 0.25), (h(1), 0.25), (h(3), 0.5)]).unwrap();
        assert_eq!(q.support_size(), 2);
        assert_eq!(q.weight_of(&h(1)), 0.5);
        assert!(GibbsClassifier::new(vec![(h(1), 0.5)]).is_err());
        assert!(GibbsClassifier::new(vec![(h(1), 1.5), (h(2), -0.5)]).is_err());
        // a table equal to h_2 merges with h_2
        let t = Hypothesis::table(vec![Neg, Neg, Pos, Pos, Pos]).unwrap();
        let q = GibbsClassifier::new(vec![(t, 0.5), (h(2), 0.5)]).unwrap();
        assert_eq!(q.support_size(), 1);
    }

    #[test]
    fn permutation_types_are_counted() {
        assert_eq!(EquivalenceType::all_permutation_types(3).len(), 6 * 8);
        let t = EquivalenceType::new(vec![1, 3, 2], vec![Neg, Pos, Pos]).unwrap();
        let sample = t.sample_on(10, &[2, 5, 9]).unwrap();
        assert_eq!(sample.to_string(), "(2,-);(9,+);(5,+)");
        assert_eq!(order_type(&sample), t);
        assert!(t.is_realizable());
        let bad = EquivalenceType::new(vec![1, 2], vec![Pos, Neg]).unwrap();
        assert!(!bad.is_realizable());
    }
}
