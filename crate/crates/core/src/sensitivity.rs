//! Sensitive indices, the interval `I(S)`, rounded hypotheses, the
//! even-coordinate binary search, and KL lower-bound certificates built from
//! the search events.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::Combinations;
use crate::domain::{
    population_loss, EquivalenceType, GibbsClassifier, Hypothesis, Label, Predictor, RealizableDistribution, Sample,
};
use crate::error::{LabError, Result};
use crate::homogeneity::{p_profile, PProfile, PointSet};
use crate::learners::Learner;
use crate::pacbayes::{kl_bernoulli, kl_divergence, ExtendedReal};
use crate::seeding::{derive_seed, trial_rng};

/// Largest number of count vectors enumerated for an exact event mass.
pub const EXACT_EVENT_LIMIT: u128 = 1_000_000;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitiveIndexReport {
    /// Minimal `i` in `1..=m` with `|p[i] - p[i-1]| >= threshold`.
    pub index: Option<usize>,
    /// The gap at `index`, or the largest gap when there is none.
    pub gap: f64,
    pub threshold: f64,
    pub profile: PProfile,
}

/// The minimal sensitive index of a complete profile.
pub fn sensitive_index(profile: &PProfile, threshold: f64) -> Result<SensitiveIndexReport> {
    let p = profile
        .values()
        .ok_or_else(|| LabError::Domain(format!("profile of {} has absent entries", profile.ty)))?;
    let gaps: Vec<f64> = p.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let index = gaps.iter().position(|&g| g >= threshold).map(|i| i + 1);
    let gap = match index {
        Some(i) => gaps[i - 1],
        None => gaps.iter().copied().fold(0.0, f64::max),
    };
    Ok(SensitiveIndexReport {
        index,
        gap,
        threshold,
        profile: profile.clone(),
    })
}

/// A run of consecutive domain points `lo..=hi`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointInterval {
    pub lo: usize,
    pub hi: usize,
}

impl PointInterval {
    pub fn empty() -> Self {
        Self { lo: 1, hi: 0 }
    }

    /// The points strictly between `a` and `b`.
    pub fn open(a: usize, b: usize) -> Self {
        Self { lo: a + 1, hi: b.saturating_sub(1) }
    }

    pub fn len(&self) -> usize {
        (self.hi + 1).saturating_sub(self.lo)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: usize) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// `I(S)` on `{1..k}` given the minimal sensitive index of the sample's type
/// (`None` when there is none).
///
/// The sensitive point is the `i`-th smallest sample point; its neighbours
/// `x-` and `x+` default to `0` and `k+1`. When `k/2` falls strictly between
/// them, the half on the side of the sensitive point's label is kept.
pub fn sample_interval(s: &Sample, k: usize, sensitive: Option<usize>) -> Result<PointInterval> {
    if k < 2 || k % 2 == 1 {
        return Err(LabError::Domain(format!("k must be a positive even integer, got {k}")));
    }
    if let Some(x) = s.points().find(|&x| x > k) {
        return Err(LabError::PointOutOfRange { x, n: k });
    }
    let support = s.support();
    let Some(i) = sensitive else {
        return Ok(PointInterval::empty());
    };
    if support.len() != s.len() {
        return Ok(PointInterval::empty());
    }
    if i == 0 || i > support.len() {
        return Err(LabError::Domain(format!("sensitive index {i} out of range 1..={}", support.len())));
    }
    let xj = support[i - 1];
    let yj = s.examples().iter().find(|e| e.x == xj).map(|e| e.y).unwrap();
    let lower = if i >= 2 { support[i - 2] } else { 0 };
    let upper = support.get(i).copied().unwrap_or(k + 1);
    let half = k / 2;
    Ok(if !(lower < half && half < upper) {
        PointInterval::open(lower, upper)
    } else if yj == Label::Neg {
        PointInterval { lo: lower + 1, hi: half }
    } else {
        PointInterval::open(half, upper)
    })
}

/// `I(S)` for a learner: the type's profile over `{1..k}` from up to `reps`
/// representatives, its minimal sensitive index at `gamma / (2m)`, then
/// [`sample_interval`]. Profiles with absent entries have no sensitive index.
pub fn learner_interval(
    learner: &dyn Learner,
    s: &Sample,
    k: usize,
    gamma: f64,
    reps: usize,
) -> Result<(PointInterval, Option<SensitiveIndexReport>)> {
    let ty = crate::domain::order_type(s);
    if !ty.is_permutation() {
        return Ok((PointInterval::empty(), None));
    }
    let profile = p_profile(learner, &ty, &PointSet::full(k)?, reps)?;
    if !profile.is_complete() {
        return Ok((PointInterval::empty(), None));
    }
    let report = sensitive_index(&profile, gamma / (2.0 * ty.m() as f64))?;
    Ok((sample_interval(s, k, report.index)?, Some(report)))
}

/// Whether an empirical frequency `count / r` lies strictly above `(q1+q2)/2`.
fn above_midpoint(freq: f64, q1: f64, q2: f64) -> bool {
    freq > (q1 + q2) / 2.0
}

fn check_levels(q1: f64, q2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q1) || !(0.0..=1.0).contains(&q2) || q1 >= q2 {
        return Err(LabError::Domain(format!("need 0 <= q1 < q2 <= 1, got q1={q1}, q2={q2}")));
    }
    Ok(())
}

/// `x -> +1` iff `Pr_{h~Q}[h(x)=+1] > (q1+q2)/2`.
pub fn rounded_hypothesis(q: &GibbsClassifier, q1: f64, q2: f64) -> Result<Hypothesis> {
    check_levels(q1, q2)?;
    Hypothesis::table(
        (1..=q.domain_size())
            .map(|x| Label::from_sign(above_midpoint(q.prob_positive(x), q1, q2)))
            .collect(),
    )
}

/// `x -> +1` iff the fraction of `hs` predicting +1 at `x` exceeds `(q1+q2)/2`.
pub fn empirical_rounded_hypothesis(hs: &[Hypothesis], q1: f64, q2: f64) -> Result<Hypothesis> {
    check_levels(q1, q2)?;
    let n = common_domain(hs)?;
    Hypothesis::table(
        (1..=n)
            .map(|x| Label::from_sign(above_midpoint(positive_fraction(hs, x), q1, q2)))
            .collect(),
    )
}

fn common_domain(hs: &[Hypothesis]) -> Result<usize> {
    let n = hs.first().ok_or(LabError::EmptySample)?.domain_size();
    if let Some(h) = hs.iter().find(|h| h.domain_size() != n) {
        return Err(LabError::LengthMismatch {
            left: n,
            right: h.domain_size(),
        });
    }
    Ok(n)
}

fn positive_fraction(hs: &[Hypothesis], x: usize) -> f64 {
    hs.iter().filter(|h| h.predict_unchecked(x).is_positive()).count() as f64 / hs.len() as f64
}

/// The output `{lo, lo+1}` of the search, with `lo` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchInterval {
    pub lo: usize,
    pub hi: usize,
}

impl SearchInterval {
    pub fn contains(&self, x: usize) -> bool {
        x == self.lo || x == self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchTrace {
    pub interval: SearchInterval,
    /// Queried coordinates, in order.
    pub queries: Vec<usize>,
}

fn log2_length(len: usize) -> Result<u32> {
    if len < 2 || !len.is_power_of_two() {
        return Err(LabError::Domain(format!("length must be a power of two >= 2, got {len}")));
    }
    Ok(len.trailing_zeros())
}

/// Bisection over the even coordinates of `{1..2^b}` for the leftmost even
/// coordinate answering `+1`. Position `2^b` is never queried and counts as
/// `+1`, so exactly `b - 1` queries are made.
pub fn binary_search_with_oracle(b: u32, mut oracle: impl FnMut(usize) -> bool) -> Result<SearchTrace> {
    if b == 0 || b >= usize::BITS {
        return Err(LabError::Domain(format!("b must lie in 1..{}, got {b}", usize::BITS)));
    }
    let (mut lo, mut hi) = (1usize, 1usize << (b - 1));
    let mut queries = Vec::with_capacity(b as usize - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        queries.push(2 * mid);
        if oracle(2 * mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(SearchTrace {
        interval: SearchInterval { lo: 2 * lo - 1, hi: 2 * lo },
        queries,
    })
}

/// The search applied to a `+-1` vector of length `2^b` (index 0 is point 1).
pub fn binary_search_signchange(bits: &[Label]) -> Result<SearchTrace> {
    let b = log2_length(bits.len())?;
    binary_search_with_oracle(b, |x| bits[x - 1].is_positive())
}

fn check_odd(xhat: usize, n: usize) -> Result<()> {
    if xhat % 2 == 0 || xhat == 0 || xhat > n {
        return Err(LabError::Domain(format!("xhat must be an odd point of 1..={n}, got {xhat}")));
    }
    Ok(())
}

/// Whether `xhat` lies in the search output on the empirical rounded
/// hypothesis of `hs`. Only the queried coordinates are evaluated.
pub fn event_membership(xhat: usize, hs: &[Hypothesis], q1: f64, q2: f64) -> Result<bool> {
    check_levels(q1, q2)?;
    let n = common_domain(hs)?;
    let b = log2_length(n)?;
    check_odd(xhat, n)?;
    let trace = binary_search_with_oracle(b, |x| above_midpoint(positive_fraction(hs, x), q1, q2))?;
    Ok(trace.interval.contains(xhat))
}

/// The queries and answers that lead the search to `{xhat, xhat+1}`. Since
/// the search is deterministic, the event `xhat in I_out` is exactly the
/// event that every listed coordinate receives the listed answer.
pub fn event_path(b: u32, xhat: usize) -> Result<Vec<(usize, bool)>> {
    if b == 0 || b >= usize::BITS {
        return Err(LabError::Domain(format!("b must lie in 1..{}, got {b}", usize::BITS)));
    }
    check_odd(xhat, 1 << b)?;
    let mut path = Vec::new();
    let trace = binary_search_with_oracle(b, |x| {
        let ans = x > xhat;
        path.push((x, ans));
        ans
    })?;
    debug_assert_eq!(trace.interval.lo, xhat);
    Ok(path)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Probability of an event, exact or with a confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventMass {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

impl EventMass {
    fn exact(v: f64) -> Self {
        let v = v.clamp(0.0, 1.0);
        Self {
            value: v,
            lower: v,
            upper: v,
            exact: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MonteCarloOptions {
    pub trials: u64,
    pub seed: u64,
    /// Normal quantile for the Wilson interval.
    pub z: f64,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            z: Z_99,
        }
    }
}

fn ln_factorials(r: usize) -> Vec<f64> {
    let mut out = vec![0.0; r + 1];
    for i in 1..=r {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

fn binomial_pmf(lnf: &[f64], n: usize, k: usize, p: f64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (lnf[n] - lnf[k] - lnf[n - k] + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

/// Patterns of the atoms of `q` on the sorted path coordinates, with masses.
fn path_patterns(q: &GibbsClassifier, path: &[(usize, bool)]) -> BTreeMap<Vec<bool>, f64> {
    let mut out = BTreeMap::new();
    for (h, w) in q.atoms() {
        let pat: Vec<bool> = path.iter().map(|&(x, _)| h.predict_unchecked(x).is_positive()).collect();
        *out.entry(pat).or_insert(0.0) += w;
    }
    out
}

/// Number of leading `false` entries when the pattern is monotone.
fn monotone_cell(pat: &[bool]) -> Option<usize> {
    let c = pat.iter().take_while(|&&b| !b).count();
    pat[c..].iter().all(|&b| b).then_some(c)
}

/// Exact mass when every pattern is `-...-+...+` on the sorted path: the
/// count at the `j`-th coordinate is the number of draws in cells `< j`.
fn monotone_event_mass(cells: &[f64], answers: &[bool], r: usize, q1: f64, q2: f64) -> f64 {
    let lnf = ln_factorials(r);
    let mut dist = vec![0.0; r + 1];
    dist[0] = 1.0;
    let mut remaining: f64 = cells.iter().sum();
    for (j, &ans) in answers.iter().enumerate() {
        let pc = if remaining > 0.0 { (cells[j] / remaining).min(1.0) } else { 0.0 };
        let mut next = vec![0.0; r + 1];
        for (c, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for add in 0..=(r - c) {
                next[c + add] += mass * binomial_pmf(&lnf, r - c, add, pc);
            }
        }
        for (c, v) in next.iter_mut().enumerate() {
            if above_midpoint(c as f64 / r as f64, q1, q2) != ans {
                *v = 0.0;
            }
        }
        remaining -= cells[j];
        dist = next;
    }
    dist.iter().sum()
}

/// Exact mass by enumerating how many of the `r` draws fall on each pattern.
fn enumerated_event_mass(pats: &[(Vec<bool>, f64)], answers: &[bool], r: usize, q1: f64, q2: f64) -> f64 {
    let lnf = ln_factorials(r);
    let d = pats.len();
    let mut total = 0.0;
    // stars and bars: bar positions among r + d - 1 slots
    for bars in Combinations::new(r + d - 1, d - 1) {
        let mut counts = Vec::with_capacity(d);
        let mut prev = 0usize;
        for (i, &b) in bars.iter().enumerate() {
            counts.push(b - prev - if i == 0 { 0 } else { 1 });
            prev = b;
        }
        let last_start = if d == 1 { 0 } else { prev + 1 };
        counts.push(r + d - 1 - last_start);
        let ok = answers.iter().enumerate().all(|(j, &ans)| {
            let c: usize = pats.iter().zip(&counts).filter(|(p, _)| p.0[j]).map(|(_, &n)| n).sum();
            above_midpoint(c as f64 / r as f64, q1, q2) == ans
        });
        if ok {
            let mut ln = lnf[r];
            let mut zero = false;
            for ((_, w), &n) in pats.iter().zip(&counts) {
                if n > 0 {
                    if *w <= 0.0 {
                        zero = true;
                        break;
                    }
                    ln += n as f64 * w.ln() - lnf[n];
                }
            }
            if !zero {
                total += ln.exp();
            }
        }
    }
    total
}

/// `Q^r(E_xhat)` estimated from `trials` independent lists of `r` draws.
pub fn monte_carlo_event_mass(
    q: &GibbsClassifier,
    xhat: usize,
    q1: f64,
    q2: f64,
    r: usize,
    opts: MonteCarloOptions,
) -> Result<EventMass> {
    check_levels(q1, q2)?;
    let b = log2_length(q.domain_size())?;
    check_odd(xhat, q.domain_size())?;
    if r == 0 || opts.trials == 0 {
        return Err(LabError::Domain("r and trials must be >= 1".into()));
    }
    let seed = derive_seed(opts.seed, xhat as u64);
    let hits: u64 = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let hs: Vec<Hypothesis> = (0..r).map(|_| q.sample(&mut rng).clone()).collect();
            let trace = binary_search_with_oracle(b, |x| above_midpoint(positive_fraction(&hs, x), q1, q2))
                .expect("valid b");
            u64::from(trace.interval.contains(xhat))
        })
        .sum();
    let (lower, upper) = wilson_interval(hits, opts.trials, opts.z);
    Ok(EventMass {
        value: hits as f64 / opts.trials as f64,
        lower,
        upper,
        exact: false,
    })
}

/// `Q^r(E_xhat)`: exact by dynamic programming when every atom is monotone on
/// the search path (all thresholds are), exact by enumeration when the number
/// of count vectors is at most [`EXACT_EVENT_LIMIT`], otherwise Monte Carlo.
pub fn event_mass(
    q: &GibbsClassifier,
    xhat: usize,
    q1: f64,
    q2: f64,
    r: usize,
    mc: MonteCarloOptions,
) -> Result<EventMass> {
    check_levels(q1, q2)?;
    if r == 0 {
        return Err(LabError::Domain("r must be >= 1".into()));
    }
    let b = log2_length(q.domain_size())?;
    let mut path = event_path(b, xhat)?;
    path.sort_unstable();
    let answers: Vec<bool> = path.iter().map(|&(_, a)| a).collect();
    let pats = path_patterns(q, &path);
    let cells: Option<Vec<(usize, f64)>> = pats.iter().map(|(p, &w)| monotone_cell(p).map(|c| (c, w))).collect();
    if let Some(cells) = cells {
        let mut mass = vec![0.0; path.len() + 1];
        for (c, w) in cells {
            mass[c] += w;
        }
        return Ok(EventMass::exact(monotone_event_mass(&mass, &answers, r, q1, q2)));
    }
    let d = pats.len();
    if crate::combinatorics::binomial(r + d - 1, d - 1) <= EXACT_EVENT_LIMIT {
        let pats: Vec<(Vec<bool>, f64)> = pats.into_iter().collect();
        return Ok(EventMass::exact(enumerated_event_mass(&pats, &answers, r, q1, q2)));
    }
    monte_carlo_event_mass(q, xhat, q1, q2, r, mc)
}

/// `ceil(2 (ln b + 2) / (q2 - q1)^2)`, the number of draws that makes the
/// search fail with probability at most 1/2.
pub fn default_r(b: u32, q1: f64, q2: f64) -> Result<usize> {
    check_levels(q1, q2)?;
    if b == 0 {
        return Err(LabError::Domain("b must be >= 1".into()));
    }
    Ok((2.0 * ((b as f64).ln() + 2.0) / (q2 - q1).powi(2)).ceil() as usize)
}

/// `Q_xhat = (q2-q1) h_xhat + q1 h_0 + (1-q2) h_N` on `N = 2^b` points, for
/// every `xhat` in `1..=N`. `Pr[h(x)=+1]` is `q1` up to `xhat` and `q2` after.
pub fn step_family(b: u32, q1: f64, q2: f64) -> Result<Vec<(usize, GibbsClassifier)>> {
    check_levels(q1, q2)?;
    let n = 1usize << b;
    (1..=n)
        .map(|xhat| {
            let q = GibbsClassifier::new([
                (Hypothesis::threshold(n, xhat)?, q2 - q1),
                (Hypothesis::threshold(n, 0)?, q1),
                (Hypothesis::threshold(n, n)?, 1.0 - q2),
            ])?;
            Ok((xhat, q))
        })
        .collect()
}

/// The uniform average of the family members.
pub fn average_prior(family: &[(usize, GibbsClassifier)]) -> Result<GibbsClassifier> {
    let k = family.len() as f64;
    GibbsClassifier::from_unnormalized(
        family
            .iter()
            .flat_map(|(_, q)| q.atoms().iter().map(move |(h, w)| (h.clone(), w / k))),
    )
}

/// A point where a family member leaves its band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PremiseViolation {
    pub xhat: usize,
    pub x: usize,
    pub prob: f64,
}

/// Checks `x < xhat => Pr <= q1 + (q2-q1)/4` and
/// `x > xhat => Pr >= q2 - (q2-q1)/4` on every grid point.
pub fn check_premise(family: &[(usize, GibbsClassifier)], q1: f64, q2: f64) -> Result<Option<PremiseViolation>> {
    check_levels(q1, q2)?;
    let slack = (q2 - q1) / 4.0;
    for (xhat, q) in family {
        for x in 1..=q.domain_size() {
            let p = q.prob_positive(x);
            let bad = (x < *xhat && p > q1 + slack) || (x > *xhat && p < q2 - slack);
            if bad {
                return Ok(Some(PremiseViolation { xhat: *xhat, x, prob: p }));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateRow {
    pub xhat: usize,
    pub q_mass: EventMass,
    pub p_mass: EventMass,
    /// `kl(a_lower || p_upper) / r` when `a_lower > p_upper`, else 0.
    pub certificate: f64,
    pub direct_kl: ExtendedReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub r: usize,
    pub premise_violation: Option<PremiseViolation>,
    pub rows: Vec<CertificateRow>,
}

impl CertificateReport {
    pub fn premise_holds(&self) -> bool {
        self.premise_violation.is_none()
    }
}

/// Lower-bounds `KL(Q_xhat || P)` for every odd `xhat` of the family through
/// `KL(Q || P) >= kl(Q^r(E) || P^r(E)) / r`.
pub fn kl_certificate(
    family: &[(usize, GibbsClassifier)],
    prior: &GibbsClassifier,
    q1: f64,
    q2: f64,
    r: usize,
    mc: MonteCarloOptions,
) -> Result<CertificateReport> {
    let premise_violation = check_premise(family, q1, q2)?;
    let rows = family
        .par_iter()
        .filter(|(xhat, _)| xhat % 2 == 1)
        .map(|(xhat, q)| {
            let q_mass = event_mass(q, *xhat, q1, q2, r, mc)?;
            let p_mass = event_mass(prior, *xhat, q1, q2, r, MonteCarloOptions {
                seed: derive_seed(mc.seed, 0xB0B),
                ..mc
            })?;
            let certificate = if q_mass.lower > p_mass.upper {
                kl_bernoulli(q_mass.lower, p_mass.upper).value() / r as f64
            } else {
                0.0
            };
            Ok(CertificateRow {
                xhat: *xhat,
                q_mass,
                p_mass,
                certificate,
                direct_kl: kl_divergence(q, prior)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificateReport {
        r,
        premise_violation,
        rows,
    })
}

/// Reference failure probability `b exp(-2 r ((q2-q1)/4)^2)` of the search
/// under i.i.d. draws from a member of a family meeting the premise.
pub fn hoeffding_failure_bound(b: u32, q1: f64, q2: f64, r: usize) -> f64 {
    let t = (q2 - q1) / 4.0;
    (b as f64 * (-2.0 * r as f64 * t * t).exp()).min(1.0)
}

/// One equivalence-type's side of the sensitivity/loss dichotomy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyRow {
    #[serde(rename = "type")]
    pub ty: EquivalenceType,
    pub sensitive_index: Option<usize>,
    pub gap: f64,
    /// Smallest population loss over all samples of the type; only computed
    /// when there is no sensitive index.
    pub min_loss: Option<f64>,
    pub holds: bool,
}

/// For every permutation type of length `m` on `{1..k}`: either a
/// `gamma/(2m)`-sensitive index exists or every sample of the type has
/// population loss above `1/2 - gamma - m/k` under the uniform distribution
/// labelled by `h_{k/2}`. Profiles and losses use every sample of the type.
pub fn sensitivity_dichotomy(learner: &dyn Learner, k: usize, m: usize, gamma: f64) -> Result<Vec<DichotomyRow>> {
    if k < 2 || k % 2 == 1 || m == 0 || m >= k {
        return Err(LabError::Domain(format!("need even k > m >= 1, got k={k}, m={m}")));
    }
    let x = PointSet::full(k)?;
    let dist = RealizableDistribution::uniform(k, k / 2)?;
    let floor = 0.5 - gamma - m as f64 / k as f64;
    EquivalenceType::enumerate_permutation_types(m)?
        .into_par_iter()
        .map(|ty| {
            let profile = p_profile(learner, &ty, &x, usize::MAX)?;
            let report = sensitive_index(&profile, gamma / (2.0 * m as f64))?;
            if report.index.is_some() {
                return Ok(DichotomyRow {
                    ty,
                    sensitive_index: report.index,
                    gap: report.gap,
                    min_loss: None,
                    holds: true,
                });
            }
            let mut min_loss = f64::INFINITY;
            for c in Combinations::new(k, m) {
                let pts: Vec<usize> = c.iter().map(|i| i + 1).collect();
                let q = learner.posterior(&ty.sample_on(k, &pts)?)?;
                min_loss = min_loss.min(population_loss(&q, &dist)?);
            }
            Ok(DichotomyRow {
                ty,
                sensitive_index: None,
                gap: report.gap,
                min_loss: Some(min_loss),
                holds: min_loss > floor,
            })
        })
        .collect()
}
