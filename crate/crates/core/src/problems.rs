//! Approximation problems: the linear-forms set W(n, m, b, Psi) and the squares set S2(psi).
//!
//! Heights are always sup norms: `|a| = max_i |a_i|`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Sup norm of an integer vector.
pub fn height(a: &[i64]) -> u64 {
    a.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
}

/// Number of `a` in `Z^n` with `|a| = h` and `|a_i| = h` for `forced` fixed coordinates.
pub fn shell_count(n: usize, h: u64, forced: usize) -> u128 {
    if h == 0 {
        return u128::from(forced == 0);
    }
    let (h, n) = (h as u128, n as u32);
    if forced == 0 {
        (2 * h + 1).pow(n) - (2 * h - 1).pow(n)
    } else {
        (1u128 << forced) * (2 * h + 1).pow(n - forced as u32)
    }
}

/// Visit every `a` with `|a| = h` exactly once.
///
/// Vectors are grouped by the first coordinate reaching `h`, so the visit order
/// is deterministic but not lexicographic.
pub fn for_each_in_shell(n: usize, h: u64, mut f: impl FnMut(&[i64])) {
    if h == 0 || n == 0 {
        return;
    }
    let h = h as i64;
    let mut a = vec![0i64; n];
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    for k in 0..n {
        for i in 0..n {
            let (l, u) = if i < k { (-(h - 1), h - 1) } else { (-h, h) };
            lo[i] = l;
            hi[i] = u;
        }
        a.copy_from_slice(&lo);
        'odometer: loop {
            f(&a);
            let mut i = n;
            loop {
                if i == 0 {
                    break 'odometer;
                }
                i -= 1;
                // Position k only takes the values -h and h.
                let step = if i == k { 2 * h } else { 1 };
                if a[i] + step <= hi[i] {
                    a[i] += step;
                    continue 'odometer;
                }
                a[i] = lo[i];
            }
        }
    }
}

/// Registry of named support predicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CustomSupport {
    /// Every `|a_i|` is prime.
    CoordinatesAllPrime,
    /// `gcd(a_1, ..., a_n) = 1`.
    Primitive,
}

impl CustomSupport {
    pub const ALL: [CustomSupport; 2] = [CustomSupport::CoordinatesAllPrime, CustomSupport::Primitive];

    pub fn name(self) -> &'static str {
        match self {
            CustomSupport::CoordinatesAllPrime => "coordinates-all-prime",
            CustomSupport::Primitive => "primitive",
        }
    }

    pub fn contains(self, a: &[i64]) -> bool {
        match self {
            CustomSupport::CoordinatesAllPrime => a.iter().all(|x| is_prime(x.unsigned_abs())),
            CustomSupport::Primitive => a.iter().fold(0u64, |g, x| gcd(g, x.unsigned_abs())) == 1,
        }
    }
}

impl FromStr for CustomSupport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown support predicate `{s}`")))
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Set of admissible `a`: an intersection of `Z_i` restrictions and an optional named predicate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Support {
    zi: Vec<usize>,
    custom: Option<CustomSupport>,
}

impl Support {
    pub fn all() -> Self {
        Support::default()
    }

    /// `Z_i = {a : |a| = |a_i|}` with `i` counted from 1.
    pub fn zi(i: usize) -> Self {
        Support {
            zi: vec![i],
            custom: None,
        }
    }

    pub fn custom(c: CustomSupport) -> Self {
        Support {
            zi: Vec::new(),
            custom: Some(c),
        }
    }

    pub fn is_all(&self) -> bool {
        self.zi.is_empty() && self.custom.is_none()
    }

    pub fn zi_indices(&self) -> &[usize] {
        &self.zi
    }

    pub fn custom_predicate(&self) -> Option<CustomSupport> {
        self.custom
    }

    pub fn restricted_to(&self, i: usize) -> Self {
        let mut s = self.clone();
        if !s.zi.contains(&i) {
            s.zi.push(i);
            s.zi.sort_unstable();
        }
        s
    }

    pub fn contains(&self, a: &[i64]) -> bool {
        let h = height(a);
        self.zi.iter().all(|&i| a[i - 1].unsigned_abs() == h)
            && self.custom.is_none_or(|c| c.contains(a))
    }

    /// Membership count on the shell `|a| = h`.
    pub fn shell_members(&self, n: usize, h: u64) -> u128 {
        if self.custom.is_none() {
            return shell_count(n, h, self.zi.len());
        }
        let mut c = 0u128;
        for_each_in_shell(n, h, |a| c += u128::from(self.contains(a)));
        c
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self.zi.iter().find(|&&i| i == 0 || i > n) {
            Some(&i) => Err(Error::domain("support index i", i, format!("[1, {n}]"))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.zi.iter().map(|i| format!("z{i}")).collect();
        if let Some(c) = self.custom {
            parts.push(format!("custom:{}", c.name()));
        }
        if parts.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

impl FromStr for Support {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Support::all();
        for part in s.split('+').map(str::trim) {
            if part == "all" {
                continue;
            } else if let Some(name) = part.strip_prefix("custom:") {
                out.custom = Some(name.parse()?);
            } else if let Some(i) = part.strip_prefix('z').or_else(|| part.strip_prefix('Z')) {
                let i: usize = i
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad support `{part}`")))?;
                out = out.restricted_to(i);
            } else {
                out.custom = Some(part.parse()?);
            }
        }
        Ok(out)
    }
}

/// The approximating function `Psi`.
#[derive(Clone, Debug, PartialEq)]
pub enum PsiLaw {
    /// `Psi(a) = |a|^{-tau}`.
    Power { tau: f64 },
    /// Finitely supported values; zero off the table.
    Table(BTreeMap<Vec<i64>, f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsiSpec {
    law: PsiLaw,
    support: Support,
    by_shell: BTreeMap<u64, Vec<(Vec<i64>, f64)>>,
}

impl PsiSpec {
    pub fn power(tau: f64, support: Support) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::domain("tau", tau, "(0, inf)"));
        }
        Ok(PsiSpec {
            law: PsiLaw::Power { tau },
            support,
            by_shell: BTreeMap::new(),
        })
    }

    pub fn table(entries: BTreeMap<Vec<i64>, f64>, support: Support) -> Result<Self> {
        let mut by_shell: BTreeMap<u64, Vec<(Vec<i64>, f64)>> = BTreeMap::new();
        for (a, &v) in &entries {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidTable(format!("Psi{a:?} = {v} must be finite and >= 0")));
            }
            if a.iter().all(|&x| x == 0) {
                return Err(Error::InvalidTable("table contains a = 0".into()));
            }
            by_shell.entry(height(a)).or_default().push((a.clone(), v));
        }
        Ok(PsiSpec {
            law: PsiLaw::Table(entries),
            support,
            by_shell,
        })
    }

    /// Table CSV: `n` integer columns, then the value.
    pub fn table_from_csv(path: &Path, n: usize, support: Support) -> Result<Self> {
        let rows = read_numeric_csv(path, n + 1)?;
        let mut entries = BTreeMap::new();
        for (line, row) in rows {
            let a: Vec<i64> = row[..n]
                .iter()
                .map(|s| s.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    Error::InvalidTable(format!("{}: line {line}: bad integer", path.display()))
                })?;
            let v: f64 = row[n].parse().map_err(|_| {
                Error::InvalidTable(format!("{}: line {line}: bad value", path.display()))
            })?;
            entries.insert(a, v);
        }
        Self::table(entries, support)
    }

    pub fn law(&self) -> &PsiLaw {
        &self.law
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn tau(&self) -> Option<f64> {
        match self.law {
            PsiLaw::Power { tau } => Some(tau),
            PsiLaw::Table(_) => None,
        }
    }

    pub fn with_support(&self, support: Support) -> Self {
        PsiSpec {
            support,
            ..self.clone()
        }
    }

    /// `Psi(a)` on the support, 0 elsewhere; `a` must be nonzero.
    pub fn value(&self, a: &[i64]) -> f64 {
        if !self.support.contains(a) {
            return 0.0;
        }
        match &self.law {
            PsiLaw::Power { tau } => radial_power(height(a), *tau),
            PsiLaw::Table(t) => t.get(a).copied().unwrap_or(0.0),
        }
    }

    /// Largest height carrying a nonzero value, if finite.
    pub fn max_height(&self) -> Option<u64> {
        match self.law {
            PsiLaw::Power { .. } => None,
            PsiLaw::Table(_) => self
                .by_shell
                .iter()
                .rev()
                .find(|(_, v)| v.iter().any(|(a, x)| *x > 0.0 && self.support.contains(a)))
                .map(|(h, _)| *h),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.law, PsiLaw::Table(_)) && self.max_height().is_none()
    }

    /// Calls `f(Psi, multiplicity)` for the nonzero values on the shell `|a| = h`.
    ///
    /// Power laws are constant on shells and produce one call; tables produce one
    /// call per supported entry, in key order.
    pub fn for_each_shell_value(&self, n: usize, h: u64, mut f: impl FnMut(f64, u128)) {
        match &self.law {
            PsiLaw::Power { tau } => {
                let c = self.support.shell_members(n, h);
                if c > 0 {
                    f(radial_power(h, *tau), c);
                }
            }
            PsiLaw::Table(_) => {
                if let Some(entries) = self.by_shell.get(&h) {
                    for (a, v) in entries {
                        if *v > 0.0 && self.support.contains(a) {
                            f(*v, 1);
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn radial_power(h: u64, tau: f64) -> f64 {
    let h = h as f64;
    if tau == tau.trunc() && tau <= 16.0 {
        1.0 / h.powi(tau as i32)
    } else {
        h.powf(-tau)
    }
}

pub(crate) fn read_numeric_csv(path: &Path, cols: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 1;
        if rec.len() != cols {
            return Err(Error::InvalidTable(format!(
                "{}: line {line}: expected {cols} columns, found {}",
                path.display(),
                rec.len()
            )));
        }
        let row: Vec<String> = rec.iter().map(str::to_string).collect();
        if i == 0 && row[cols - 1].parse::<f64>().is_err() {
            continue;
        }
        out.push((line, row));
    }
    Ok(out)
}

/// `W_{n,m}^b(Psi)`: points `X` in `I^{n x m}` with `max_j ||a . x_j - b_j|| < Psi(a)` for infinitely many `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFormsProblem {
    n: usize,
    m: usize,
    b: Vec<f64>,
    psi: PsiSpec,
}

impl LinearFormsProblem {
    pub fn new(n: usize, m: usize, b: Option<Vec<f64>>, psi: PsiSpec) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Precondition("n and m must be positive".into()));
        }
        let b = b.unwrap_or_else(|| vec![0.0; m]);
        if b.len() != m {
            return Err(Error::Precondition(format!(
                "b has {} entries, expected m = {m}",
                b.len()
            )));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition("b must be finite".into()));
        }
        psi.support.validate(n)?;
        if let PsiLaw::Table(t) = &psi.law {
            if let Some(a) = t.keys().find(|a| a.len() != n) {
                return Err(Error::InvalidTable(format!(
                    "table key {a:?} has length {}, expected n = {n}",
                    a.len()
                )));
            }
        }
        Ok(LinearFormsProblem { n, m, b, psi })
    }

    /// Homogeneous problem with `Psi(a) = |a|^{-tau}` on all of `Z^n`.
    pub fn power(n: usize, m: usize, tau: f64) -> Result<Self> {
        Self::new(n, m, None, PsiSpec::power(tau, Support::all())?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn psi(&self) -> &PsiSpec {
        &self.psi
    }

    /// Whether the theorems apply (`n + m > 2`); smaller cases are exploratory.
    pub fn theorem_mode(&self) -> bool {
        self.n + self.m > 2
    }

    pub fn psi_value(&self, a: &[i64]) -> Result<f64> {
        if a.len() != self.n {
            return Err(Error::Precondition(format!(
                "a has {} entries, expected n = {}",
                a.len(),
                self.n
            )));
        }
        if a.iter().all(|&x| x == 0) {
            return Err(Error::domain("a", "0", "Z^n \\ {0}"));
        }
        Ok(self.psi.value(a))
    }

    pub fn restrict_to_zi(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.n {
            return Err(Error::domain("i", i, format!("[1, {}]", self.n)));
        }
        Ok(LinearFormsProblem {
            psi: self.psi.with_support(self.psi.support.restricted_to(i)),
            ..self.clone()
        })
    }

    /// Partial sums of `Psi(a)^m` over each `Z_i` up to height `h_max`.
    pub fn zi_decompose(&self, h_max: u64) -> Result<Vec<(usize, f64)>> {
        if h_max == 0 {
            return Err(Error::Precondition("H must be at least 1".into()));
        }
        (1..=self.n)
            .map(|i| {
                let r = self.restrict_to_zi(i)?;
                Ok((i, crate::series::schmidt_total(&r, h_max)))
            })
            .collect()
    }
}

/// The scalar function `psi(h)` of the squares problem.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarPsi {
    /// `psi(h) = h^{-tau}`.
    Power { tau: f64 },
    /// `psi(h) = values[h - 1]`, zero past the end.
    Table(Vec<f64>),
}

/// `S2(psi)`: points `x` in `I^2` with `|a^2 . x - p^2| < psi(|a|)` for infinitely many `(a, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SquaresProblem {
    psi: ScalarPsi,
}

impl SquaresProblem {
    pub fn new(psi: ScalarPsi) -> Result<Self> {
        match &psi {
            ScalarPsi::Power { tau } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(Error::domain("tau", tau, "(0, inf)"));
                }
            }
            ScalarPsi::Table(v) => {
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::InvalidTable("psi values must be finite and >= 0".into()));
                }
                if v.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::InvalidTable("psi(h) must be non-increasing".into()));
                }
            }
        }
        Ok(SquaresProblem { psi })
    }

    pub fn power(tau: f64) -> Result<Self> {
        Self::new(ScalarPsi::Power { tau })
    }

    /// Table CSV: `h,psi` rows with `h = 1, 2, ...` consecutive.
    pub fn table_from_csv(path: &Path) -> Result<Self> {
        let rows = read_numeric_csv(path, 2)?;
        let mut v = Vec::with_capacity(rows.len());
        for (line, row) in rows {
            let h: u64 = row[0].parse().map_err(|_| {
                Error::InvalidTable(format!("{}: line {line}: bad height", path.display()))
            })?;
            if h != v.len() as u64 + 1 {
                return Err(Error::InvalidTable(format!(
                    "{}: line {line}: heights must be 1, 2, 3, ...",
                    path.display()
                )));
            }
            v.push(row[1].parse().map_err(|_| {
                Error::InvalidTable(format!("{}: line {line}: bad value", path.display()))
            })?);
        }
        Self::new(ScalarPsi::Table(v))
    }

    pub fn psi(&self) -> &ScalarPsi {
        &self.psi
    }

    pub fn tau(&self) -> Option<f64> {
        match self.psi {
            ScalarPsi::Power { tau } => Some(tau),
            ScalarPsi::Table(_) => None,
        }
    }

    pub fn value(&self, h: u64) -> f64 {
        if h == 0 {
            return 0.0;
        }
        match &self.psi {
            ScalarPsi::Power { tau } => radial_power(h, *tau),
            ScalarPsi::Table(v) => v.get(h as usize - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.psi, ScalarPsi::Table(v) if v.iter().all(|&x| x == 0.0))
    }
}

/// Either problem kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Linear(LinearFormsProblem),
    Squares(SquaresProblem),
}

impl Problem {
    /// Ambient dimension of the set: `n m` or 2.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Problem::Linear(p) => p.n * p.m,
            Problem::Squares(_) => 2,
        }
    }

    pub fn theorem_mode(&self) -> bool {
        match self {
            Problem::Linear(p) => p.theorem_mode(),
            Problem::Squares(_) => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(entries: &[(&[i64], f64)]) -> BTreeMap<Vec<i64>, f64> {
        entries.iter().map(|(a, v)| (a.to_vec(), *v)).collect()
    }

    fn brute_shell(n: usize, h: u64) -> Vec<Vec<i64>> {
        let h = h as i64;
        let mut out = Vec::new();
        let mut a = vec![-h; n];
        loop {
            if height(&a) == h as u64 {
                out.push(a.clone());
            }
            let mut i = 0;
            while i < n && a[i] == h {
                a[i] = -h;
                i += 1;
            }
            if i == n {
                break;
            }
            a[i] += 1;
        }
        out.sort();
        out
    }

    #[test]
    fn shell_enumeration_matches_brute_force() {
        for n in 1..=4 {
            for h in 1..=4u64 {
                let mut got = Vec::new();
                for_each_in_shell(n, h, |a| got.push(a.to_vec()));
                assert_eq!(got.len() as u128, shell_count(n, h, 0));
                got.sort();
                assert_eq!(got, brute_shell(n, h), "n={n} h={h}");
                for forced in 1..=n {
                    let c = got
                        .iter()
                        .filter(|a| a[..forced].iter().all(|x| x.unsigned_abs() == h))
                        .count();
                    assert_eq!(c as u128, shell_count(n, h, forced));
                }
            }
        }
    }

    #[test]
    fn psi_value_examples() {
        let p = LinearFormsProblem::power(2, 1, 2.0).unwrap();
        assert_eq!(p.psi_value(&[3, 1]).unwrap(), 1.0 / 9.0);
        let p = LinearFormsProblem::new(2, 1, None, PsiSpec::power(2.0, Support::zi(1)).unwrap())
            .unwrap();
        assert_eq!(p.psi_value(&[1, 3]).unwrap(), 0.0);
        let t = PsiSpec::table(table(&[(&[1, 0], 0.2)]), Support::all()).unwrap();
        let p = LinearFormsProblem::new(2, 1, None, t).unwrap();
        assert_eq!(p.psi_value(&[0, 1]).unwrap(), 0.0);
        assert_eq!(p.psi_value(&[1, 0]).unwrap(), 0.2);
        assert!(matches!(p.psi_value(&[0, 0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn zi_decompose_examples() {
        let p = LinearFormsProblem::power(2, 1, 2.0).unwrap();
        let d = p.zi_decompose(10).unwrap();
        assert_eq!(d[0].1, d[1].1);

        let t = PsiSpec::table(table(&[(&[5, 1], 1.0)]), Support::all()).unwrap();
        let p = LinearFormsProblem::new(2, 1, None, t).unwrap();
        assert_eq!(p.zi_decompose(10).unwrap(), vec![(1, 1.0), (2, 0.0)]);
    }

    #[test]
    fn zi_decompose_matches_enumeration() {
        let p = LinearFormsProblem::power(2, 1, 1.0).unwrap();
        let d = p.zi_decompose(4).unwrap();
        for (i, sum) in d {
            let mut direct = 0.0;
            for a1 in -4i64..=4 {
                for a2 in -4i64..=4 {
                    let a = [a1, a2];
                    let h = height(&a);
                    if h > 0 && a[i - 1].unsigned_abs() == h {
                        direct += 1.0 / h as f64;
                    }
                }
            }
            assert!((sum - direct).abs() < 1e-12, "i={i}: {sum} vs {direct}");
        }
    }

    #[test]
    fn restrict_to_zi_examples() {
        let p = LinearFormsProblem::power(2, 1, 2.0).unwrap();
        let r = p.restrict_to_zi(1).unwrap();
        assert_eq!(r.psi().support(), &Support::zi(1));
        assert_eq!(r.restrict_to_zi(1).unwrap(), r);
        assert!(p.restrict_to_zi(3).is_err());

        let t = PsiSpec::table(
            table(&[(&[1, 2], 0.3), (&[2, 2], 0.1), (&[4, -1], 0.2), (&[0, 7], 0.05)]),
            Support::all(),
        )
        .unwrap();
        let p = LinearFormsProblem::new(2, 1, None, t).unwrap();
        let r = p.restrict_to_zi(2).unwrap();
        for a1 in -10i64..=10 {
            for a2 in -10i64..=10 {
                if a1 == 0 && a2 == 0 {
                    continue;
                }
                let a = [a1, a2];
                let want = if a2.unsigned_abs() == height(&a) {
                    p.psi_value(&a).unwrap()
                } else {
                    0.0
                };
                assert_eq!(r.psi_value(&a).unwrap(), want);
            }
        }
    }

    #[test]
    fn support_parse_roundtrip() {
        for s in ["all", "z1", "z1+z2", "custom:primitive", "z2+custom:coordinates-all-prime"] {
            let parsed: Support = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert!("custom:nope".parse::<Support>().is_err());
        assert!(LinearFormsProblem::new(2, 1, None, PsiSpec::power(1.0, Support::zi(3)).unwrap())
            .is_err());
    }

    #[test]
    fn custom_predicates() {
        assert!(CustomSupport::CoordinatesAllPrime.contains(&[2, -3]));
        assert!(!CustomSupport::CoordinatesAllPrime.contains(&[2, 1]));
        assert!(CustomSupport::Primitive.contains(&[2, 3]));
        assert!(!CustomSupport::Primitive.contains(&[2, -4]));
    }

    #[test]
    fn squares_validation() {
        assert!(SquaresProblem::new(ScalarPsi::Table(vec![0.5, 0.25, 0.25, 0.0])).is_ok());
        assert!(SquaresProblem::new(ScalarPsi::Table(vec![0.5, 0.6])).is_err());
        assert!(SquaresProblem::power(0.0).is_err());
        let s = SquaresProblem::power(3.0).unwrap();
        assert_eq!(s.value(2), 0.125);
    }

    #[test]
    fn b_defaults_to_zero() {
        let p = LinearFormsProblem::power(2, 3, 2.0).unwrap();
        assert_eq!(p.b(), &[0.0, 0.0, 0.0]);
        assert!(LinearFormsProblem::new(2, 2, Some(vec![0.1]), PsiSpec::power(1.0, Support::all()).unwrap()).is_err());
        assert!(!LinearFormsProblem::power(1, 1, 2.0).unwrap().theorem_mode());
        assert!(LinearFormsProblem::power(2, 1, 2.0).unwrap().theorem_mode());
    }

    proptest! {
        #[test]
        fn psi_vanishes_off_support(a1 in -20i64..20, a2 in -20i64..20, a3 in -20i64..20, sup in 0usize..5) {
            prop_assume!(a1 != 0 || a2 != 0 || a3 != 0);
            let support = match sup {
                0 => Support::all(),
                1 => Support::zi(1),
                2 => Support::zi(3),
                3 => Support::custom(CustomSupport::Primitive),
                _ => Support::zi(2).restricted_to(1),
            };
            let p = LinearFormsProblem::new(3, 1, None, PsiSpec::power(1.5, support.clone()).unwrap()).unwrap();
            let a = [a1, a2, a3];
            let v = p.psi_value(&a).unwrap();
            prop_assert_eq!(v > 0.0, support.contains(&a));
        }

        #[test]
        fn zi_sums_cover_total(n in 2usize..4, tau in 0.5f64..4.0, h in 1u64..12) {
            let p = LinearFormsProblem::power(n, 1, tau).unwrap();
            let total = crate::series::schmidt_total(&p, h);
            let parts: f64 = p.zi_decompose(h).unwrap().iter().map(|x| x.1).sum();
            prop_assert!(parts >= total * (1.0 - 1e-12));
            for i in 1..=n {
                let r = p.restrict_to_zi(i).unwrap();
                prop_assert!(crate::series::schmidt_total(&r, h) <= total * (1.0 + 1e-12));
            }
        }
    }
}
