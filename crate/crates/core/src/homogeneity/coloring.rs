//! Coloring of `(m+1)`-subsets by rounded p-profiles, and the search for
//! monochromatic (hence approximately homogeneous) subsets.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{check_approx_homogeneity, posterior_if_defined, CheckOptions, HomogeneityVerdict, PointSet};
use crate::combinatorics::Combinations;
use crate::domain::{EquivalenceType, Predictor};
use crate::error::{LabError, Result};
use crate::learners::Learner;

/// Largest point set searched exhaustively.
pub const EXHAUSTIVE_SEARCH_LIMIT: usize = 16;

/// Index of the grid multiple of `grid` nearest to `v`, ties rounding down.
pub fn round_to_grid(v: f64, grid: f64) -> u32 {
    let max = (1.0 / grid + 1e-9).floor();
    (v / grid - 0.5).ceil().clamp(0.0, max) as u32
}

/// The color of an `(m+1)`-subset: for every permutation type, in the order of
/// [`EquivalenceType::all_permutation_types`], the rounded probabilities at
/// the held-out points. `None` marks a type on which the learner is undefined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ColorKey {
    m: usize,
    ticks: Vec<Vec<Option<u32>>>,
}

impl ColorKey {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of types in the key, `m! 2^m`.
    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    /// Grid indices for type `t` (index into the permutation-type list).
    pub fn ticks(&self, t: usize) -> &[Option<u32>] {
        &self.ticks[t]
    }

    /// The rounded probabilities for type `t`.
    pub fn values(&self, t: usize, gamma: f64) -> Vec<Option<f64>> {
        let grid = gamma / (10.0 * self.m as f64);
        self.ticks[t].iter().map(|o| o.map(|k| k as f64 * grid)).collect()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LabError::Domain(format!("gamma must lie in (0,1), got {gamma}")));
    }
    Ok(())
}

fn color_with_types(
    learner: &dyn Learner,
    n: usize,
    d: &[usize],
    gamma: f64,
    types: &[EquivalenceType],
) -> Result<ColorKey> {
    let m = d.len() - 1;
    let grid = gamma / (10.0 * m as f64);
    let mut ticks = Vec::with_capacity(types.len());
    for ty in types {
        let mut row = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let rest: Vec<usize> = d.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &p)| p).collect();
            let s = ty.sample_on(n, &rest)?;
            let q = posterior_if_defined(learner, &s)?;
            row.push(q.map(|q| round_to_grid(q.prob_positive(d[i]), grid)));
        }
        ticks.push(row);
    }
    Ok(ColorKey { m, ticks })
}

/// Colors the `(m+1)`-point set `d` inside `{1..n}`.
pub fn color_of_subset(learner: &dyn Learner, n: usize, d: &[usize], gamma: f64) -> Result<ColorKey> {
    check_gamma(gamma)?;
    let set = PointSet::new(n, d.to_vec())?;
    if set.len() != d.len() || set.len() < 2 {
        return Err(LabError::Domain("subset must hold at least two distinct points".into()));
    }
    let types = EquivalenceType::enumerate_permutation_types(set.len() - 1)?;
    color_with_types(learner, n, set.points(), gamma, &types)
}

/// `ln((100m/gamma)^{2m})`, the logarithm of the cap on the number of colors.
pub fn ln_color_count_cap(m: usize, gamma: f64) -> f64 {
    2.0 * m as f64 * (100.0 * m as f64 / gamma).ln()
}

/// Every distinct color over the `(m+1)`-subsets of `x`.
pub fn distinct_colors(learner: &dyn Learner, x: &PointSet, m: usize, gamma: f64) -> Result<Vec<ColorKey>> {
    check_gamma(gamma)?;
    let types = EquivalenceType::enumerate_permutation_types(m)?;
    let keys: Vec<ColorKey> = Combinations::new(x.len(), m + 1)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|c| color_with_types(learner, x.domain_size(), &x.select(c), gamma, &types))
        .collect::<Result<_>>()?;
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for k in keys {
        if seen.insert(k.clone(), ()).is_none() {
            out.push(k);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SubsetSearchOptions {
    /// Maximum backtracking nodes (exhaustive) or color evaluations (greedy).
    pub budget: u64,
    /// Evaluation cap passed to the validating homogeneity check.
    pub validation_cap: u128,
    pub seed: u64,
}

impl Default for SubsetSearchOptions {
    fn default() -> Self {
        Self {
            budget: 5_000_000,
            validation_cap: super::DEFAULT_EXHAUSTIVE_CAP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SubsetSearch {
    /// A monochromatic subset; `validation` is `None` when it has at most `m`
    /// points and nothing can be checked.
    Found {
        points: Vec<usize>,
        validation: Option<HomogeneityVerdict>,
    },
    /// No subset found. `exhaustive` means none exists.
    NotFound { exhaustive: bool },
    BudgetExhausted,
}

impl SubsetSearch {
    pub fn points(&self) -> Option<&[usize]> {
        match self {
            SubsetSearch::Found { points, .. } => Some(points),
            _ => None,
        }
    }
}

struct Colors<'a> {
    learner: &'a dyn Learner,
    x: &'a PointSet,
    gamma: f64,
    types: Vec<EquivalenceType>,
    ids: HashMap<Vec<usize>, u32>,
    interned: HashMap<ColorKey, u32>,
    evaluations: u64,
}

impl<'a> Colors<'a> {
    fn new(learner: &'a dyn Learner, x: &'a PointSet, m: usize, gamma: f64) -> Result<Self> {
        Ok(Self {
            learner,
            x,
            gamma,
            types: EquivalenceType::enumerate_permutation_types(m)?,
            ids: HashMap::new(),
            interned: HashMap::new(),
            evaluations: 0,
        })
    }

    fn intern(&mut self, key: ColorKey) -> u32 {
        let next = self.interned.len() as u32;
        *self.interned.entry(key).or_insert(next)
    }

    fn precompute(&mut self, m: usize) -> Result<()> {
        let combos: Vec<Vec<usize>> = Combinations::new(self.x.len(), m + 1).collect();
        let keys: Vec<ColorKey> = combos
            .par_iter()
            .map(|c| color_with_types(self.learner, self.x.domain_size(), &self.x.select(c), self.gamma, &self.types))
            .collect::<Result<_>>()?;
        for (c, k) in combos.into_iter().zip(keys) {
            let id = self.intern(k);
            self.ids.insert(c, id);
        }
        Ok(())
    }

    /// Color id of the sorted index tuple `c`.
    fn id(&mut self, c: &[usize]) -> Result<u32> {
        if let Some(&id) = self.ids.get(c) {
            return Ok(id);
        }
        self.evaluations += 1;
        let key = color_with_types(self.learner, self.x.domain_size(), &self.x.select(c), self.gamma, &self.types)?;
        let id = self.intern(key);
        self.ids.insert(c.to_vec(), id);
        Ok(id)
    }
}

/// Whether adding index `j` (larger than all of `chosen`) keeps every
/// `(m+1)`-subset on `color`; fixes `color` on first use.
fn extends(colors: &mut Colors<'_>, chosen: &[usize], j: usize, m: usize, color: &mut Option<u32>) -> Result<bool> {
    let mut fixed = *color;
    for c in Combinations::new(chosen.len(), m) {
        let mut tuple: Vec<usize> = c.iter().map(|&i| chosen[i]).collect();
        tuple.push(j);
        tuple.sort_unstable();
        let id = colors.id(&tuple)?;
        match fixed {
            None => fixed = Some(id),
            Some(f) if f != id => return Ok(false),
            _ => {}
        }
    }
    *color = fixed;
    Ok(true)
}

enum Dfs {
    Found(Vec<usize>),
    Exhausted,
    OutOfBudget,
}

fn backtrack(
    colors: &mut Colors<'_>,
    chosen: &mut Vec<usize>,
    color: Option<u32>,
    next: usize,
    m: usize,
    target: usize,
    nodes: &mut u64,
    budget: u64,
) -> Result<Dfs> {
    if chosen.len() == target {
        return Ok(Dfs::Found(chosen.clone()));
    }
    let n = colors.x.len();
    let mut j = next;
    while j < n && chosen.len() + (n - j) >= target {
        *nodes += 1;
        if *nodes > budget {
            return Ok(Dfs::OutOfBudget);
        }
        let mut c = color;
        if extends(colors, chosen, j, m, &mut c)? {
            chosen.push(j);
            match backtrack(colors, chosen, c, j + 1, m, target, nodes, budget)? {
                Dfs::Exhausted => {}
                other => return Ok(other),
            }
            chosen.pop();
        }
        j += 1;
    }
    Ok(Dfs::Exhausted)
}

/// Searches `x` for `target` points whose `(m+1)`-subsets all share one color.
///
/// Point sets of up to 16 points are searched exhaustively by backtracking;
/// larger ones by greedy growth from every starting point. Found subsets are
/// re-validated with [`check_approx_homogeneity`].
pub fn find_homogeneous_subset(
    learner: &dyn Learner,
    x: &PointSet,
    m: usize,
    gamma: f64,
    target: usize,
    opts: SubsetSearchOptions,
) -> Result<SubsetSearch> {
    check_gamma(gamma)?;
    if m == 0 {
        return Err(LabError::Domain("m must be >= 1".into()));
    }
    if target == 0 || target > x.len() {
        return Err(LabError::Domain(format!(
            "target size {target} must lie in 1..={}",
            x.len()
        )));
    }
    let indices = if target <= m + 1 {
        Some((0..target).collect())
    } else if x.len() <= EXHAUSTIVE_SEARCH_LIMIT {
        let mut colors = Colors::new(learner, x, m, gamma)?;
        colors.precompute(m)?;
        let mut nodes = 0;
        match backtrack(&mut colors, &mut Vec::new(), None, 0, m, target, &mut nodes, opts.budget)? {
            Dfs::Found(c) => Some(c),
            Dfs::Exhausted => return Ok(SubsetSearch::NotFound { exhaustive: true }),
            Dfs::OutOfBudget => return Ok(SubsetSearch::BudgetExhausted),
        }
    } else {
        let mut colors = Colors::new(learner, x, m, gamma)?;
        let mut found = None;
        'starts: for start in 0..x.len() {
            let mut chosen: Vec<usize> = Vec::new();
            let mut color = None;
            for j in start..x.len() {
                if chosen.len() + (x.len() - j) < target {
                    break;
                }
                if extends(&mut colors, &chosen, j, m, &mut color)? {
                    chosen.push(j);
                    if chosen.len() == target {
                        found = Some(chosen);
                        break 'starts;
                    }
                }
                if colors.evaluations > opts.budget {
                    return Ok(SubsetSearch::BudgetExhausted);
                }
            }
        }
        match found {
            Some(c) => Some(c),
            None => return Ok(SubsetSearch::NotFound { exhaustive: false }),
        }
    };
    let points = x.select(&indices.unwrap_or_default());
    let validation = if points.len() > m {
        let sub = PointSet::new(x.domain_size(), points.clone())?;
        let check = CheckOptions {
            exhaustive_cap: opts.validation_cap,
            seed: opts.seed,
        };
        Some(check_approx_homogeneity(learner, &sub, m, gamma, check)?)
    } else {
        None
    };
    Ok(SubsetSearch::Found { points, validation })
}

/// Outcome of [`greedy_largest_subset`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedySubset {
    pub points: Vec<usize>,
    /// True when the color budget stopped the search early.
    pub budget_exhausted: bool,
}

/// Grows a maximal monochromatic subset greedily from every starting point
/// of `x` and keeps the largest; stops early once `budget` colors have been
/// computed.
pub fn greedy_largest_subset(
    learner: &dyn Learner,
    x: &PointSet,
    m: usize,
    gamma: f64,
    budget: u64,
) -> Result<GreedySubset> {
    check_gamma(gamma)?;
    if m == 0 || x.len() < m + 1 {
        return Err(LabError::Domain(format!(
            "need |X| >= m + 1 with m >= 1 (|X| = {}, m = {m})",
            x.len()
        )));
    }
    let mut colors = Colors::new(learner, x, m, gamma)?;
    let mut best: Vec<usize> = (0..=m).collect();
    let mut budget_exhausted = false;
    'starts: for start in 0..x.len() {
        if x.len() - start <= best.len() {
            break;
        }
        let mut chosen = Vec::new();
        let mut color = None;
        for j in start..x.len() {
            if extends(&mut colors, &chosen, j, m, &mut color)? {
                chosen.push(j);
            }
            if colors.evaluations >= budget {
                budget_exhausted = true;
                if chosen.len() > best.len() {
                    best = chosen;
                }
                break 'starts;
            }
        }
        if chosen.len() > best.len() {
            best = chosen;
        }
    }
    Ok(GreedySubset {
        points: x.select(&best),
        budget_exhausted,
    })
}
