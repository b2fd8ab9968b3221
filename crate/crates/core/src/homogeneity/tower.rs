//! Tower-function integers and base-2 iterated logarithms.
//!
//! `twr_1(x) = x` and `twr_h(x) = 2^{twr_{h-1}(x)}`. A [`TowerInt`] keeps the
//! height symbolic and only materializes levels that fit in an `f64`, so
//! `log2` of a tall tower is exact height arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{LabError, Result};

/// Levels with `top` at or below this are collapsed into `2^top`.
const COLLAPSE_LIMIT: f64 = 1023.0;

/// The number `twr_height(top)`, kept in canonical form: whenever the value
/// of the lowest level fits in an `f64` it is collapsed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerInt {
    height: u32,
    top: f64,
}

impl TowerInt {
    pub fn new(height: u32, top: f64) -> Result<Self> {
        if height == 0 {
            return Err(LabError::Domain("tower height must be >= 1".into()));
        }
        if !top.is_finite() {
            return Err(LabError::Domain(format!("tower top must be finite, got {top}")));
        }
        if height > 1 && top < 1.0 {
            return Err(LabError::Domain(format!("tower top must be >= 1, got {top}")));
        }
        let mut t = Self { height, top };
        while t.height > 1 && t.top <= COLLAPSE_LIMIT {
            t.top = t.top.exp2();
            t.height -= 1;
        }
        Ok(t)
    }

    /// A plain number (height 1).
    pub fn from_f64(v: f64) -> Result<Self> {
        Self::new(1, v)
    }

    /// `twr_height(top)`.
    pub fn tower(height: u32, top: f64) -> Result<Self> {
        Self::new(height, top)
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    /// The value as an `f64`; `+inf` when it does not fit.
    pub fn to_f64(&self) -> f64 {
        match self.height {
            1 => self.top,
            _ => f64::INFINITY,
        }
    }

    pub fn log2(&self) -> Result<Self> {
        if self.height > 1 {
            return Ok(Self {
                height: self.height - 1,
                top: self.top,
            });
        }
        if self.top <= 0.0 {
            return Err(LabError::Domain(format!("log2 of non-positive value {}", self.top)));
        }
        Ok(Self {
            height: 1,
            top: self.top.log2(),
        })
    }
}

impl Eq for TowerInt {}

impl Ord for TowerInt {
    fn cmp(&self, other: &Self) -> Ordering {
        // canonical form: a taller tower is always larger
        self.height
            .cmp(&other.height)
            .then(self.top.total_cmp(&other.top))
    }
}

impl PartialOrd for TowerInt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TowerInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.height == 1 {
            write!(f, "{}", self.top)
        } else {
            write!(f, "2^^{}(", self.height)?;
            if self.top < 1e15 {
                write!(f, "{})", self.top)
            } else {
                write!(f, "{:e})", self.top)
            }
        }
    }
}

/// Parses `d` (a plain number) or `2^^h(t)` meaning `twr_h(t)`.
impl FromStr for TowerInt {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || LabError::Parse(format!("invalid tower literal {s:?}"));
        if let Some(rest) = s.strip_prefix("2^^") {
            let (h, t) = rest.split_once('(').ok_or_else(bad)?;
            let t = t.strip_suffix(')').ok_or_else(bad)?;
            let h: u32 = h.trim().parse().map_err(|_| bad())?;
            let t: f64 = t.trim().parse().map_err(|_| bad())?;
            return TowerInt::tower(h, t);
        }
        TowerInt::from_f64(s.parse().map_err(|_| bad())?)
    }
}

/// `log^{(k)}(x)`, base 2.
pub fn iterated_log(k: u32, x: TowerInt) -> Result<TowerInt> {
    (0..k).try_fold(x, |acc, _| acc.log2())
}

fn check_phi_args(m: u32, gamma: f64) -> Result<()> {
    if m < 2 {
        return Err(LabError::Domain(format!("m must be > 1, got {m}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LabError::Domain(format!("gamma must lie in (0,1), got {gamma}")));
    }
    Ok(())
}

/// `ln((10m/gamma)^{3m})`.
fn ln_phi_denominator(m: u32, gamma: f64) -> f64 {
    3.0 * m as f64 * (10.0 * m as f64 / gamma).ln()
}

/// `log^{(m)}(n) / (10m/gamma)^{3m}`, evaluated in log space.
///
/// Returns `+inf` when `log^{(m)}(n)` is itself a tower, and `0` when the
/// iterated logarithm is non-positive or undefined (the guarantee is vacuous).
pub fn phi(m: u32, gamma: f64, n: TowerInt) -> Result<f64> {
    check_phi_args(m, gamma)?;
    if n.to_f64() <= 1.0 {
        return Err(LabError::Domain(format!("n must be > 1, got {n}")));
    }
    let numerator = match iterated_log(m, n) {
        Ok(v) => v,
        Err(_) => return Ok(0.0),
    };
    if numerator.height() > 1 {
        return Ok(f64::INFINITY);
    }
    let v = numerator.top();
    if v <= 0.0 {
        return Ok(0.0);
    }
    Ok((v.ln() - ln_phi_denominator(m, gamma)).exp())
}

/// Smallest `n` with `phi(m, gamma, n) >= s`, namely `twr_{m+1}(s (10m/gamma)^{3m})`.
pub fn phi_threshold(m: u32, gamma: f64, s: f64) -> Result<TowerInt> {
    check_phi_args(m, gamma)?;
    if !(s > 0.0) {
        return Err(LabError::Domain(format!("target size must be > 0, got {s}")));
    }
    let target = (s.ln() + ln_phi_denominator(m, gamma)).exp();
    if !target.is_finite() {
        return Err(LabError::Domain("threshold exceeds the representable tower top".into()));
    }
    TowerInt::tower(m + 1, target.max(1.0))
}

/// Guaranteed size of a monochromatic set for `q`-colorings of the `t`-subsets
/// of an `N`-element universe: `log^{(t-1)}(N) / (3 q log2 q)`.
pub fn ramsey_homogeneous_size(q: f64, t: u32, universe: TowerInt) -> Result<f64> {
    if !(q >= 2.0) {
        return Err(LabError::Domain(format!("q must be >= 2, got {q}")));
    }
    if t < 2 {
        return Err(LabError::Domain(format!("t must be >= 2, got {t}")));
    }
    let numerator = match iterated_log(t - 1, universe) {
        Ok(v) => v,
        Err(_) => return Ok(0.0),
    };
    if numerator.height() > 1 {
        return Ok(f64::INFINITY);
    }
    let v = numerator.top();
    if v <= 0.0 || q.is_infinite() {
        return Ok(0.0);
    }
    let ln_denominator = 3f64.ln() + q.ln() + q.log2().ln();
    Ok((v.ln() - ln_denominator).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterated_log_examples() {
        let v = iterated_log(1, TowerInt::from_f64(16.0).unwrap()).unwrap();
        assert_eq!(v.to_f64(), 4.0);
        let t = TowerInt::tower(4, 2.0).unwrap();
        assert_eq!(t.to_f64(), 65536.0);
        assert_eq!(iterated_log(3, t).unwrap().to_f64(), 2.0);
        let tall = TowerInt::tower(5, 3.0).unwrap();
        assert_eq!(iterated_log(2, tall).unwrap(), TowerInt::tower(3, 3.0).unwrap());
        assert!(iterated_log(5, TowerInt::from_f64(16.0).unwrap()).is_err());
    }

    #[test]
    fn canonical_form_collapses_small_levels() {
        let t = TowerInt::tower(3, 2.0).unwrap();
        assert_eq!((t.height(), t.top()), (1, 16.0));
        let t = TowerInt::tower(5, 2.0).unwrap();
        assert_eq!((t.height(), t.top()), (2, 65536.0));
        assert!(TowerInt::tower(0, 2.0).is_err());
    }

    #[test]
    fn ordering_respects_height() {
        let a = TowerInt::from_f64(1e300).unwrap();
        let b = TowerInt::tower(2, 1024.0).unwrap();
        let c = TowerInt::tower(3, 1024.0).unwrap();
        assert!(a < b && b < c);
    }

    #[test]
    fn literal_parsing() {
        assert_eq!("16".parse::<TowerInt>().unwrap().to_f64(), 16.0);
        assert_eq!("2^^4(2)".parse::<TowerInt>().unwrap().to_f64(), 65536.0);
        assert_eq!("2^^6(3)".parse::<TowerInt>().unwrap().to_string(), "2^^3(1.157920892373162e77)");
        assert!("2^^x(2)".parse::<TowerInt>().is_err());
        assert!("abc".parse::<TowerInt>().is_err());
    }

    #[test]
    fn phi_example_exact() {
        // n = 2^(2^40) = twr_3(40)
        let n = TowerInt::tower(3, 40.0).unwrap();
        let v = phi(2, 0.5, n).unwrap();
        let expected = 40.0 / 40f64.powi(6);
        assert!((v - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn phi_threshold_inverts_phi() {
        for (m, gamma, s) in [(2u32, 0.5, 1.0), (2, 0.25, 10.0), (3, 0.5, 2.0)] {
            let n = phi_threshold(m, gamma, s).unwrap();
            let at = phi(m, gamma, n).unwrap();
            assert!((at - s).abs() <= 1e-9 * s, "m={m} gamma={gamma}: {at} vs {s}");
            let below = TowerInt::tower(n.height(), n.top() * 0.99).unwrap();
            assert!(phi(m, gamma, below).unwrap() < s);
        }
    }

    #[test]
    fn ramsey_examples() {
        let n = TowerInt::from_f64(2f64.powi(60)).unwrap();
        assert!((ramsey_homogeneous_size(2.0, 2, n).unwrap() - 10.0).abs() < 1e-12);
        let bigger = TowerInt::from_f64(2f64.powi(90)).unwrap();
        assert!(ramsey_homogeneous_size(2.0, 2, bigger).unwrap() > 10.0);
        assert!(ramsey_homogeneous_size(1.0, 2, n).is_err());
    }

    #[test]
    fn ramsey_dominates_phi_with_default_colors() {
        let (m, gamma) = (2u32, 0.5);
        let q = (10.0 * m as f64 / gamma).powi(2 * m as i32);
        for top in [40.0, 1e3, 1e6, 1e12] {
            let n = TowerInt::tower(3, top).unwrap();
            let r = ramsey_homogeneous_size(q, m + 1, n).unwrap();
            let p = phi(m, gamma, n).unwrap();
            assert!(r >= p, "top={top}: ramsey {r} < phi {p}");
            // both share the numerator log^{(m)} n
            let slack = (10.0 * m as f64 / gamma).powi(3 * m as i32) / (3.0 * q * q.log2());
            assert!((r / p - slack).abs() <= 1e-9 * slack);
        }
    }
}
