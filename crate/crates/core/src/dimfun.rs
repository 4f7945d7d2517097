//! Dimension functions and the ball transform.
//!
//! A dimension function is a continuous, non-decreasing `f` with `f(r) -> 0`
//! as `r -> 0`. Only a closed family is supported: pure power laws `r^s`,
//! power-log laws `r^s (log 1/r)^k`, and tabulated monotone functions with
//! piecewise-linear interpolation. Inside this family quotients
//! `g(r) = r^{-l} f(r)` and limit comparisons can be decided exactly.

use std::f64::consts::E;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ratio `f(first) / f(last)` a table must reach to count as decaying to 0.
pub const DEFAULT_DECAY_THRESHOLD: f64 = 1e-6;

/// Monotone table of `(r, f(r))` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    r: Vec<f64>,
    f: Vec<f64>,
    source: Option<String>,
}

impl Table {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::with_decay_threshold(points, DEFAULT_DECAY_THRESHOLD)
    }

    /// Build a table, requiring `f(first) <= threshold * f(last)`.
    pub fn with_decay_threshold(points: Vec<(f64, f64)>, threshold: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidTable("need at least two samples".into()));
        }
        let (r, f): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if r.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTable("non-finite sample".into()));
        }
        if r[0] <= 0.0 {
            return Err(Error::InvalidTable("radii must be positive".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTable("radii must be strictly increasing".into()));
        }
        if f[0] < 0.0 {
            return Err(Error::InvalidTable("values must be non-negative".into()));
        }
        if f.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::NotADimensionFunction(
                "tabulated values are not non-decreasing".into(),
            ));
        }
        let last = *f.last().unwrap();
        if !(last > 0.0) || f[0] > threshold * last {
            return Err(Error::NotADimensionFunction(format!(
                "tabulated values do not decay: f(r0) = {} > {} * f(r_max) = {}",
                f[0],
                threshold,
                threshold * last
            )));
        }
        Ok(Table { r, f, source: None })
    }

    /// Read a two-column CSV (`r,f`); a header row is optional.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut points = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::InvalidTable(format!(
                    "{}: line {}: expected 2 columns, found {}",
                    path.display(),
                    line + 1,
                    rec.len()
                )));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(r), Ok(f)) => points.push((r, f)),
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::InvalidTable(format!(
                        "{}: line {}: not numeric",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        let mut t = Table::new(points)?;
        t.source = Some(path.display().to_string());
        Ok(t)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().copied().zip(self.f.iter().copied())
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    // Below the first sample the table is continued linearly to (0, 0).
    fn eval(&self, r: f64) -> f64 {
        if r <= self.r[0] {
            return self.f[0] * r / self.r[0];
        }
        let i = self.r.partition_point(|&x| x < r);
        if i >= self.r.len() {
            return *self.f.last().unwrap();
        }
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let (f0, f1) = (self.f[i - 1], self.f[i]);
        f0 + (f1 - f0) * (r - r0) / (r1 - r0)
    }

    fn inverse(&self, y: f64) -> Option<f64> {
        if y < 0.0 || y > *self.f.last().unwrap() {
            return None;
        }
        if y <= self.f[0] {
            return if self.f[0] > 0.0 {
                Some(self.r[0] * y / self.f[0])
            } else if y == 0.0 {
                None
            } else {
                unreachable!()
            };
        }
        let i = self.f.partition_point(|&v| v < y);
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let (f0, f1) = (self.f[i - 1], self.f[i]);
        Some(r0 + (r1 - r0) * (y - f0) / (f1 - f0))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Power { s: f64 },
    PowerLog { s: f64, k: f64 },
    Tabulated(Table),
}

/// A dimension function from the supported closed family.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionFunction(Kind);

/// Outcome of a monotonicity check of `r -> r^{-k} f(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotonicity {
    NonIncreasing,
    NonDecreasing,
    NotMonotone,
}

/// Limit of `f(r) / g(r)` as `r -> 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioLimit {
    Zero,
    Finite,
    Infinite,
}

impl DimensionFunction {
    /// `r -> r^s`.
    pub fn power(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::NotADimensionFunction(format!(
                "r^{s} needs a positive exponent"
            )));
        }
        Ok(DimensionFunction(Kind::Power { s }))
    }

    /// `r -> r^s (log 1/r)^k`.
    ///
    /// Decay to zero needs `s > 0`, or `s == 0` with `k < 0`. The domain is
    /// cut to the range where the function is non-decreasing.
    pub fn power_log(s: f64, k: f64) -> Result<Self> {
        if !(s.is_finite() && k.is_finite()) || s < 0.0 || (s == 0.0 && k >= 0.0) {
            return Err(Error::NotADimensionFunction(format!(
                "r^{s}*log^{k} does not tend to 0"
            )));
        }
        Ok(DimensionFunction(Kind::PowerLog { s, k }))
    }

    pub fn tabulated(table: Table) -> Self {
        DimensionFunction(Kind::Tabulated(table))
    }

    /// Parse `r^s`, `r^s*log^k`, or `table:<path>` (relative to `base`).
    pub fn parse_with_base(spec: &str, base: Option<&Path>) -> Result<Self> {
        let spec = spec.trim();
        if let Some(path) = spec.strip_prefix("table:") {
            let p = Path::new(path.trim());
            let full = match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p.to_path_buf(),
            };
            return Ok(Self::tabulated(Table::from_csv(&full)?));
        }
        let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let (power, log) = match compact.split_once('*') {
            Some((a, b)) => (a, Some(b)),
            None => (compact.as_str(), None),
        };
        let s = parse_exponent(power, "r")?;
        match log {
            None => Self::power(s),
            Some(l) => Self::power_log(s, parse_exponent(l, "log")?),
        }
    }

    /// Exponent `s` when this is a pure power law.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.0 {
            Kind::Power { s } => Some(s),
            _ => None,
        }
    }

    /// `(s, k)` for power and power-log laws (`k = 0` for pure powers).
    pub fn law_exponents(&self) -> Option<(f64, f64)> {
        match self.0 {
            Kind::Power { s } => Some((s, 0.0)),
            Kind::PowerLog { s, k } => Some((s, k)),
            Kind::Tabulated(_) => None,
        }
    }

    pub fn is_power(&self, s: f64) -> bool {
        self.power_exponent() == Some(s)
    }

    pub fn table(&self) -> Option<&Table> {
        match &self.0 {
            Kind::Tabulated(t) => Some(t),
            _ => None,
        }
    }

    /// Right end of the domain `(0, r_max]`.
    pub fn domain_max(&self) -> f64 {
        match &self.0 {
            Kind::Power { .. } => 1.0,
            Kind::PowerLog { s, k } => {
                let cap = 1.0 / E;
                if *k > 0.0 && *s > 0.0 {
                    cap.min((-k / s).exp())
                } else {
                    cap
                }
            }
            Kind::Tabulated(t) => t.r_max(),
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let max = self.domain_max();
        if !(r > 0.0 && r <= max) {
            return Err(Error::domain("r", r, format!("(0, {max}]")));
        }
        Ok(self.eval_unchecked(r))
    }

    /// Evaluation without the domain check; callers guarantee `0 < r <= domain_max`.
    pub(crate) fn eval_unchecked(&self, r: f64) -> f64 {
        match &self.0 {
            Kind::Power { s } => pow(r, *s),
            Kind::PowerLog { s, k } => pow(r, *s) * (-r.ln()).powf(*k),
            Kind::Tabulated(t) => t.eval(r),
        }
    }

    /// Smallest `r` in the domain with `f(r) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let max = self.domain_max();
        let top = self.eval_unchecked(max);
        if !(y > 0.0 && y <= top) {
            return Err(Error::domain("f(r)", y, format!("(0, {top}]")));
        }
        match &self.0 {
            Kind::Power { s } => Ok(if *s == 1.0 { y } else { y.powf(1.0 / s) }),
            Kind::PowerLog { .. } => Ok(bisect_inverse(|r| self.eval_unchecked(r), y, max)),
            Kind::Tabulated(t) => t
                .inverse(y)
                .ok_or_else(|| Error::Unsupported("table is not invertible at this value".into())),
        }
    }

    /// `g(r) = r^{-l} f(r)`, which must itself be a dimension function.
    pub fn derive_quotient(&self, l: u32) -> Result<Self> {
        if l == 0 {
            return Ok(self.clone());
        }
        let lf = l as f64;
        match &self.0 {
            Kind::Power { s } => {
                let s2 = s - lf;
                if s2 <= 0.0 {
                    return Err(Error::NotADimensionFunction(format!(
                        "r^-{l} * r^{s} = r^{s2} does not tend to 0"
                    )));
                }
                Self::power(s2)
            }
            Kind::PowerLog { s, k } => {
                let s2 = s - lf;
                if s2 < 0.0 || (s2 == 0.0 && *k >= 0.0) {
                    return Err(Error::NotADimensionFunction(format!(
                        "r^-{l} * r^{s}*log^{k} does not tend to 0"
                    )));
                }
                Self::power_log(s2, *k)
            }
            Kind::Tabulated(t) => {
                let pts = t.points().map(|(r, f)| (r, f / r.powi(l as i32))).collect();
                Ok(Self::tabulated(Table::new(pts)?))
            }
        }
    }

    /// Monotonicity of `r -> r^{-k} f(r)` on the domain.
    ///
    /// Exact for law kinds; for tables the ratio is scanned on a geometric grid
    /// spanning the sampled range.
    pub fn check_monotone_ratio(&self, k: u32, grid: usize) -> Result<Monotonicity> {
        if grid < 2 {
            return Err(Error::Precondition("grid must have at least 2 points".into()));
        }
        let kf = k as f64;
        Ok(match &self.0 {
            Kind::Power { s } => {
                if *s >= kf {
                    Monotonicity::NonDecreasing
                } else {
                    Monotonicity::NonIncreasing
                }
            }
            Kind::PowerLog { s, k: kl } => {
                // d/dr log(ratio) has the sign of (s - k) - kl / L with L = log(1/r) >= L0.
                let l0 = -self.domain_max().ln();
                let d = s - kf;
                let (inc, dec) = if *kl >= 0.0 {
                    (d - kl / l0 >= 0.0, d <= 0.0)
                } else {
                    (d >= 0.0, d - kl / l0 <= 0.0)
                };
                if inc {
                    Monotonicity::NonDecreasing
                } else if dec {
                    Monotonicity::NonIncreasing
                } else {
                    Monotonicity::NotMonotone
                }
            }
            Kind::Tabulated(t) => {
                let (lo, hi) = (t.r_min(), t.r_max());
                let ratio = |r: f64| t.eval(r) / r.powi(k as i32);
                let pts: Vec<f64> = (0..grid)
                    .map(|i| {
                        let r = lo * (hi / lo).powf(i as f64 / (grid - 1) as f64);
                        ratio(r.min(hi))
                    })
                    .collect();
                classify_sequence(&pts)
            }
        })
    }

    /// Limit of `self(r) / other(r)` as `r -> 0` for law kinds.
    pub fn ratio_limit(&self, other: &Self) -> Option<RatioLimit> {
        let (s1, k1) = self.law_exponents()?;
        let (s2, k2) = other.law_exponents()?;
        Some(if s1 > s2 || (s1 == s2 && k1 < k2) {
            RatioLimit::Zero
        } else if s1 == s2 && k1 == k2 {
            RatioLimit::Finite
        } else {
            RatioLimit::Infinite
        })
    }
}

fn pow(r: f64, s: f64) -> f64 {
    if s == 1.0 {
        r
    } else if s == s.trunc() && s.abs() <= 16.0 {
        r.powi(s as i32)
    } else {
        r.powf(s)
    }
}

fn bisect_inverse(f: impl Fn(f64) -> f64, y: f64, max: f64) -> f64 {
    // f is increasing on (0, max]; search in log space.
    let (mut lo, mut hi) = (f64::MIN_POSITIVE.ln(), max.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp()) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    hi.exp()
}

pub(crate) fn classify_sequence(v: &[f64]) -> Monotonicity {
    let up = v.windows(2).all(|w| w[1] >= w[0]);
    let down = v.windows(2).all(|w| w[1] <= w[0]);
    match (up, down) {
        (true, _) => Monotonicity::NonDecreasing,
        (false, true) => Monotonicity::NonIncreasing,
        _ => Monotonicity::NotMonotone,
    }
}

fn parse_exponent(tok: &str, base: &str) -> Result<f64> {
    let rest = tok
        .strip_prefix(base)
        .ok_or_else(|| Error::Parse(format!("expected `{base}` in `{tok}`")))?;
    if rest.is_empty() {
        return Ok(1.0);
    }
    let num = rest
        .strip_prefix('^')
        .ok_or_else(|| Error::Parse(format!("expected `^` after `{base}` in `{tok}`")))?;
    let num = num.trim_start_matches('(').trim_end_matches(')');
    num.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad exponent `{num}` in `{tok}`")))
}

impl FromStr for DimensionFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_base(s, None)
    }
}

impl fmt::Display for DimensionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Kind::Power { s } => write!(f, "r^{s}"),
            Kind::PowerLog { s, k } => write!(f, "r^{s}*log^{k}"),
            Kind::Tabulated(t) => match &t.source {
                Some(p) => write!(f, "table:{p}"),
                None => write!(f, "table:<{} samples>", t.r.len()),
            },
        }
    }
}

impl Serialize for DimensionFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Norm a ball is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    Euclidean,
    Supremum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub norm: Norm,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64, norm: Norm) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain("radius", radius, "(0, inf)"));
        }
        Ok(Ball {
            center,
            radius,
            norm,
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.center.len());
        let d = match self.norm {
            Norm::Supremum => x
                .iter()
                .zip(&self.center)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            Norm::Euclidean => x
                .iter()
                .zip(&self.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        };
        d < self.radius
    }
}

/// Radius of `B^f` for a ball of radius `r` in `R^m`: `f(r)^{1/m}`.
///
/// `f = r^m` returns `r` unchanged, bit for bit.
pub fn transformed_radius(r: f64, f: &DimensionFunction, m: u32) -> Result<f64> {
    if f.is_power(m as f64) {
        f.eval(r)?;
        return Ok(r);
    }
    let v = f.eval(r)?;
    Ok(match m {
        1 => v,
        2 => v.sqrt(),
        _ => v.powf(1.0 / m as f64),
    })
}

/// Inverse of [`transformed_radius`]: the `r` with `f(r)^{1/m} = target`.
pub fn untransformed_radius(target: f64, f: &DimensionFunction, m: u32) -> Result<f64> {
    if f.is_power(m as f64) {
        return Ok(target);
    }
    f.inverse(target.powi(m as i32))
}

/// `B^f = B(x, f(r)^{1/m})`.
pub fn ball_transform(ball: &Ball, f: &DimensionFunction, m: u32) -> Result<Ball> {
    if m == 0 {
        return Err(Error::Precondition("m must be positive".into()));
    }
    Ok(Ball {
        center: ball.center.clone(),
        radius: transformed_radius(ball.radius, f, m)?,
        norm: ball.norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(s: f64) -> DimensionFunction {
        DimensionFunction::power(s).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p(2.0).eval(0.5).unwrap(), 0.25);
        assert_eq!(p(1.0).eval(0.125).unwrap(), 0.125);
        let pl = DimensionFunction::power_log(1.0, 1.0).unwrap();
        let r = (-2.0f64).exp();
        assert_relative_eq!(pl.eval(r).unwrap(), 2.0 * r, max_relative = 1e-14);
        assert_relative_eq!(pl.eval(r).unwrap(), 0.2706705664732254, max_relative = 1e-12);
    }

    #[test]
    fn eval_out_of_domain() {
        assert!(matches!(p(2.0).eval(0.0), Err(Error::Domain { .. })));
        assert!(matches!(p(2.0).eval(1.5), Err(Error::Domain { .. })));
        let pl = DimensionFunction::power_log(1.0, 1.0).unwrap();
        assert!(pl.eval(0.5).is_err());
    }

    #[test]
    fn quotient_examples() {
        assert_eq!(p(2.0).derive_quotient(1).unwrap(), p(1.0));
        assert!(matches!(
            p(1.0).derive_quotient(1),
            Err(Error::NotADimensionFunction(_))
        ));
        let pl = DimensionFunction::power_log(3.0, 2.0).unwrap();
        assert_eq!(
            pl.derive_quotient(2).unwrap(),
            DimensionFunction::power_log(1.0, 2.0).unwrap()
        );
        // s == l with a negative log exponent still decays.
        let pl = DimensionFunction::power_log(2.0, -1.0).unwrap();
        assert!(pl.derive_quotient(2).is_ok());
        let pl = DimensionFunction::power_log(2.0, 0.5).unwrap();
        assert!(pl.derive_quotient(2).is_err());
    }

    #[test]
    fn power_log_domain_is_monotone_part() {
        let pl = DimensionFunction::power_log(1.0, 2.0).unwrap();
        assert_relative_eq!(pl.domain_max(), (-2.0f64).exp());
        let grid: Vec<f64> = (1..=200)
            .map(|i| pl.eval(pl.domain_max() * i as f64 / 200.0).unwrap())
            .collect();
        assert_eq!(classify_sequence(&grid), Monotonicity::NonDecreasing);
    }

    #[test]
    fn monotone_ratio_examples() {
        assert_eq!(
            p(3.0).check_monotone_ratio(2, 100).unwrap(),
            Monotonicity::NonDecreasing
        );
        assert_eq!(
            p(1.0).check_monotone_ratio(2, 100).unwrap(),
            Monotonicity::NonIncreasing
        );
        assert!(p(1.0).check_monotone_ratio(2, 1).is_err());
    }

    #[test]
    fn monotone_ratio_power_log_matches_scan() {
        for &(s, k, kk) in &[(2.0, 0.5, 1u32), (2.0, -0.5, 2), (1.5, 1.0, 1), (3.0, 2.0, 1)] {
            let f = DimensionFunction::power_log(s, k).unwrap();
            let max = f.domain_max();
            let scan: Vec<f64> = (0..2000)
                .map(|i| {
                    let r = max * (1e-12f64).powf(1.0 - i as f64 / 1999.0);
                    f.eval(r).unwrap() / r.powi(kk as i32)
                })
                .collect();
            assert_eq!(
                f.check_monotone_ratio(kk, 100).unwrap(),
                classify_sequence(&scan),
                "s={s} k={k} kk={kk}"
            );
        }
    }

    #[test]
    fn monotone_ratio_tabulated_matches_direct_scan() {
        // On 1/r in [20.5, 23.5] cos(1/r) < 0, so r (2 + sin(1/r)) increases.
        let h = |r: f64| r * (2.0 + (1.0 / r).sin());
        let (lo, hi) = (1.0 / 23.5, 1.0 / 20.5);
        let mut pts: Vec<(f64, f64)> = vec![(1e-9, h(1e-9).min(1e-9))];
        for i in 0..=200 {
            let r = lo + (hi - lo) * i as f64 / 200.0;
            pts.push((r, h(r)));
        }
        let t = Table::new(pts.clone()).unwrap();
        let f = DimensionFunction::tabulated(t);
        let scan: Vec<f64> = (0..400)
            .map(|i| {
                let r = 1e-9 * (hi / 1e-9).powf(i as f64 / 399.0);
                f.eval(r.min(hi)).unwrap() / r.min(hi)
            })
            .collect();
        assert_eq!(
            f.check_monotone_ratio(1, 400).unwrap(),
            classify_sequence(&scan)
        );
    }

    #[test]
    fn table_validation() {
        assert!(Table::new(vec![(0.1, 1e-9), (0.2, 0.5), (1.0, 1.0)]).is_ok());
        assert!(matches!(
            Table::new(vec![(0.1, 0.3), (1.0, 1.0)]),
            Err(Error::NotADimensionFunction(_))
        ));
        assert!(Table::new(vec![(0.2, 0.0), (0.1, 1.0)]).is_err());
        assert!(Table::new(vec![(0.1, 0.0), (0.2, 1.0), (0.3, 0.5)]).is_err());
        assert!(Table::with_decay_threshold(vec![(0.1, 0.3), (1.0, 1.0)], 0.5).is_ok());
    }

    #[test]
    fn table_quotient_checks_monotonicity() {
        let pts: Vec<(f64, f64)> = (0..=50)
            .map(|i| {
                let r = 1e-7 * 10f64.powf(i as f64 * 7.0 / 50.0);
                (r, r * r)
            })
            .collect();
        let f = DimensionFunction::tabulated(Table::new(pts).unwrap());
        let g = f.derive_quotient(1).unwrap();
        assert_relative_eq!(g.eval(0.5).unwrap(), 0.5, max_relative = 0.01);
        assert!(f.derive_quotient(2).is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("r^1.75".parse::<DimensionFunction>().unwrap(), p(1.75));
        assert_eq!("r".parse::<DimensionFunction>().unwrap(), p(1.0));
        assert_eq!(
            "r^2 * log^-1".parse::<DimensionFunction>().unwrap(),
            DimensionFunction::power_log(2.0, -1.0).unwrap()
        );
        assert!("x^2".parse::<DimensionFunction>().is_err());
        assert!("r^-1".parse::<DimensionFunction>().is_err());
        assert_eq!(p(1.75).to_string(), "r^1.75");
    }

    #[test]
    fn ball_transform_examples() {
        let b = Ball::new(vec![0.0], 0.25, Norm::Supremum).unwrap();
        assert_eq!(ball_transform(&b, &p(2.0), 1).unwrap().radius, 0.0625);
        let b = Ball::new(vec![0.0, 0.0], 0.01, Norm::Euclidean).unwrap();
        assert_relative_eq!(ball_transform(&b, &p(1.0), 2).unwrap().radius, 0.1);
        assert!(Ball::new(vec![0.0], 0.0, Norm::Euclidean).is_err());
        let big = Ball::new(vec![0.0], 2.0, Norm::Euclidean).unwrap();
        assert!(ball_transform(&big, &p(2.0), 1).is_err());
    }

    #[test]
    fn ratio_limit_examples() {
        let pl = |s, k| DimensionFunction::power_log(s, k).unwrap();
        assert_eq!(p(2.0).ratio_limit(&p(1.0)), Some(RatioLimit::Zero));
        assert_eq!(p(1.0).ratio_limit(&p(2.0)), Some(RatioLimit::Infinite));
        assert_eq!(p(1.0).ratio_limit(&p(1.0)), Some(RatioLimit::Finite));
        assert_eq!(pl(1.0, -1.0).ratio_limit(&p(1.0)), Some(RatioLimit::Zero));
        assert_eq!(pl(1.0, 1.0).ratio_limit(&p(1.0)), Some(RatioLimit::Infinite));
    }

    fn law() -> impl Strategy<Value = DimensionFunction> {
        prop_oneof![
            (0.1f64..6.0).prop_map(p),
            (0.1f64..6.0, -3.0f64..3.0)
                .prop_map(|(s, k)| DimensionFunction::power_log(s, k).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn eval_is_monotone(f in law(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let max = f.domain_max();
            let (r1, r2) = (a.min(b) * max, a.max(b) * max);
            prop_assume!(r1 > 0.0);
            prop_assert!(f.eval(r1).unwrap() <= f.eval(r2).unwrap());
            prop_assert!(f.eval(r1).unwrap() >= 0.0);
        }

        #[test]
        fn ball_transform_identity(m in 1u32..6, r in 1e-9f64..1.0, x in -5.0f64..5.0) {
            let b = Ball::new(vec![x; m as usize], r, Norm::Supremum).unwrap();
            let t = ball_transform(&b, &p(m as f64), m).unwrap();
            prop_assert_eq!(t.radius.to_bits(), r.to_bits());
            prop_assert_eq!(t.center, b.center);
        }

        #[test]
        fn quotient_associativity(s in 3.0f64..8.0, k in -2.0f64..0.0, a in 0u32..2, b in 0u32..2) {
            for f in [p(s), DimensionFunction::power_log(s, k).unwrap()] {
                let two = f.derive_quotient(a).unwrap().derive_quotient(b).unwrap();
                let one = f.derive_quotient(a + b).unwrap();
                let (s2, k2) = two.law_exponents().unwrap();
                let (s1, k1) = one.law_exponents().unwrap();
                prop_assert!((s2 - s1).abs() <= 1e-12 && k1 == k2);
            }
        }

        #[test]
        fn ratio_limit_consistent_with_sampling(
            s1 in 0.5f64..3.0, k1 in -2.0f64..2.0, ds in prop_oneof![Just(0.0), -1.0f64..1.0], dk in -2.0f64..2.0,
        ) {
            let s2 = s1 + ds;
            prop_assume!(s2 > 0.2);
            prop_assume!(ds == 0.0 || ds.abs() > 0.2);
            prop_assume!(dk.abs() > 0.2 || ds != 0.0);
            let f = DimensionFunction::power_log(s1, k1).unwrap();
            let g = DimensionFunction::power_log(s2, k1 + dk).unwrap();
            let ratios: Vec<f64> = [1e-3, 1e-6, 1e-9]
                .iter()
                .map(|&r| f.eval_unchecked(r) / g.eval_unchecked(r))
                .collect();
            match f.ratio_limit(&g).unwrap() {
                RatioLimit::Zero => prop_assert!(ratios[2] < ratios[0]),
                RatioLimit::Infinite => prop_assert!(ratios[2] > ratios[0]),
                RatioLimit::Finite => {}
            }
        }
    }
}
