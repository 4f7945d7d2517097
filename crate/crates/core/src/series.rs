//! Partial sums of the convergence criteria, convergence classification and
//! critical-exponent solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dimfun::DimensionFunction;
use crate::error::{Error, Result};
use crate::fit::{fit_line, fit_plane, Accumulator};
use crate::problems::{LinearFormsProblem, Problem, SquaresProblem};

/// Which criterion a series sums.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SeriesLabel {
    Schmidt,
    Hausdorff(String),
    Squares(String),
    CorollaryOne(f64),
    CorollaryTwo(f64),
    UnionBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialSumSeries {
    pub heights: Vec<u64>,
    pub sums: Vec<f64>,
    pub label: SeriesLabel,
}

impl PartialSumSeries {
    pub fn last(&self) -> f64 {
        self.sums.last().copied().unwrap_or(0.0)
    }

    pub fn at(&self, h: u64) -> Option<f64> {
        self.heights.iter().position(|&x| x == h).map(|i| self.sums[i])
    }
}

/// Powers of two up to `h_max`, followed by `h_max` itself.
pub fn checkpoints(h_max: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..64)
        .map(|k| 1u64 << k)
        .take_while(|&h| h <= h_max)
        .collect();
    if v.last() != Some(&h_max) && h_max > 0 {
        v.push(h_max);
    }
    v
}

fn accumulate(
    h_max: u64,
    label: SeriesLabel,
    parallel: bool,
    shell: impl Fn(u64) -> f64 + Sync,
) -> PartialSumSeries {
    let cps = checkpoints(h_max);
    let shell_sums: Vec<f64> = if parallel {
        (1..=h_max).into_par_iter().map(&shell).collect()
    } else {
        (1..=h_max).map(&shell).collect()
    };
    let mut acc = Accumulator::new();
    let mut sums = Vec::with_capacity(cps.len());
    let mut next = 0;
    for (i, s) in shell_sums.into_iter().enumerate() {
        acc.add(s);
        if cps[next] == i as u64 + 1 {
            sums.push(acc.value());
            next += 1;
        }
    }
    PartialSumSeries {
        heights: cps,
        sums,
        label,
    }
}

fn linear_series(
    p: &LinearFormsProblem,
    h_max: u64,
    label: SeriesLabel,
    term: impl Fn(f64, u64) -> f64 + Sync,
) -> Result<PartialSumSeries> {
    if h_max == 0 {
        return Err(Error::Precondition("H must be at least 1".into()));
    }
    let n = p.n();
    let parallel = p.psi().support().custom_predicate().is_some();
    Ok(accumulate(h_max, label, parallel, |h| {
        let mut acc = Accumulator::new();
        p.psi()
            .for_each_shell_value(n, h, |psi, mult| acc.add(term(psi, h) * mult as f64));
        acc.value()
    }))
}

#[inline]
fn schmidt_term(psi: f64, m: usize) -> f64 {
    psi.powi(m as i32)
}

/// `g` continued by its value at the right end of the domain.
fn eval_extended(g: &DimensionFunction, r: f64) -> f64 {
    g.eval_unchecked(r.min(g.domain_max()))
}

/// `S_h = sum over 0 < |a| <= h of Psi(a)^m`.
pub fn schmidt_sum(p: &LinearFormsProblem, h_max: u64) -> Result<PartialSumSeries> {
    let m = p.m();
    linear_series(p, h_max, SeriesLabel::Schmidt, |psi, _| schmidt_term(psi, m))
}

pub(crate) fn schmidt_total(p: &LinearFormsProblem, h_max: u64) -> f64 {
    schmidt_sum(p, h_max).map(|s| s.last()).unwrap_or(0.0)
}

/// `S_h = sum over 0 < |a| <= h of g(Psi(a)/|a|) |a|^m` with `g = r^{-(n-1)m} f`.
///
/// Arguments of `g` beyond its domain use the value at the domain end.
pub fn hausdorff_sum(
    p: &LinearFormsProblem,
    f: &DimensionFunction,
    h_max: u64,
) -> Result<PartialSumSeries> {
    let (n, m) = (p.n(), p.m());
    let g = f.derive_quotient(((n - 1) * m) as u32)?;
    let label = SeriesLabel::Hausdorff(f.to_string());
    if g.is_power(m as f64) {
        return linear_series(p, h_max, label, |psi, _| schmidt_term(psi, m));
    }
    linear_series(p, h_max, label, |psi, h| {
        let hf = h as f64;
        eval_extended(&g, psi / hf) * hf.powi(m as i32)
    })
}

/// Cached per-shell values of a linear-forms problem, reusable across exponents.
#[derive(Clone, Debug)]
pub struct ShellCache {
    n: usize,
    m: usize,
    h_max: u64,
    // (h, Psi, multiplicity), in shell order.
    entries: Vec<(u64, f64, f64)>,
}

impl ShellCache {
    pub fn build(p: &LinearFormsProblem, h_max: u64) -> Self {
        let n = p.n();
        let per_shell: Vec<Vec<(u64, f64, f64)>> = (1..=h_max)
            .into_par_iter()
            .map(|h| {
                let mut v = Vec::new();
                p.psi()
                    .for_each_shell_value(n, h, |psi, c| v.push((h, psi, c as f64)));
                v
            })
            .collect();
        ShellCache {
            n,
            m: p.m(),
            h_max,
            entries: per_shell.into_iter().flatten().collect(),
        }
    }

    pub fn h_max(&self) -> u64 {
        self.h_max
    }

    /// `sum Psi(a)^delta |a|^{m - delta}` with `delta = s - (n-1)m`.
    pub fn corollary_one(&self, s: f64) -> Result<PartialSumSeries> {
        let base = ((self.n - 1) * self.m) as f64;
        if !(s > base && s <= (self.n * self.m) as f64) {
            return Err(Error::domain(
                "s",
                s,
                format!("({base}, {}]", self.n * self.m),
            ));
        }
        let delta = s - base;
        let m = self.m as f64;
        let cps = checkpoints(self.h_max);
        let mut sums = Vec::with_capacity(cps.len());
        let mut acc = Accumulator::new();
        let mut next = 0;
        let mut idx = 0;
        for h in 1..=self.h_max {
            let mut shell = Accumulator::new();
            while idx < self.entries.len() && self.entries[idx].0 == h {
                let (_, psi, c) = self.entries[idx];
                shell.add(psi.powf(delta) * (h as f64).powf(m - delta) * c);
                idx += 1;
            }
            acc.add(shell.value());
            if cps[next] == h {
                sums.push(acc.value());
                next += 1;
            }
        }
        Ok(PartialSumSeries {
            heights: cps,
            sums,
            label: SeriesLabel::CorollaryOne(s),
        })
    }
}

/// The criterion sum for `f = r^s`: `sum Psi(a)^delta |a|^{m-delta}`, `delta = s - (n-1)m`.
pub fn corollary_one_sum(p: &LinearFormsProblem, s: f64, h_max: u64) -> Result<PartialSumSeries> {
    if h_max == 0 {
        return Err(Error::Precondition("H must be at least 1".into()));
    }
    ShellCache::build(p, h_max).corollary_one(s)
}

/// `S_H = sum_{h <= H} g(psi(h)/h^2) h^2` with `g = r^{-1} f`.
pub fn squares_sum(
    sp: &SquaresProblem,
    f: &DimensionFunction,
    h_max: u64,
) -> Result<PartialSumSeries> {
    if h_max == 0 {
        return Err(Error::Precondition("H must be at least 1".into()));
    }
    let g = f.derive_quotient(1)?;
    Ok(accumulate(h_max, SeriesLabel::Squares(f.to_string()), false, |h| {
        let psi = sp.value(h);
        if psi == 0.0 {
            return 0.0;
        }
        let h2 = (h * h) as f64;
        eval_extended(&g, psi / h2) * h2
    }))
}

/// `sum_{h <= H} psi(h)^{s-1} h^{4-2s}` for `1 < s <= 2`.
pub fn corollary_two_sum(sp: &SquaresProblem, s: f64, h_max: u64) -> Result<PartialSumSeries> {
    if !(s > 1.0 && s <= 2.0) {
        return Err(Error::domain("s", s, "(1, 2]"));
    }
    if h_max == 0 {
        return Err(Error::Precondition("H must be at least 1".into()));
    }
    Ok(accumulate(h_max, SeriesLabel::CorollaryTwo(s), false, |h| {
        let psi = sp.value(h);
        if psi == 0.0 {
            0.0
        } else {
            psi.powf(s - 1.0) * (h as f64).powf(4.0 - 2.0 * s)
        }
    }))
}

/// Partial sums of the single-`a` measure bounds: `(2 Psi(a))^m`, or for squares
/// `sum_p min(1, 2 psi / max(a_i^2))` over the relevant `p`, one `a` per sign class.
pub fn union_bound_sum(problem: &Problem, h_max: u64) -> Result<PartialSumSeries> {
    match problem {
        Problem::Linear(p) => {
            let m = p.m();
            linear_series(p, h_max, SeriesLabel::UnionBound, |psi, _| (2.0 * psi).powi(m as i32))
        }
        Problem::Squares(sp) => {
            if h_max == 0 {
                return Err(Error::Precondition("H must be at least 1".into()));
            }
            Ok(accumulate(h_max, SeriesLabel::UnionBound, false, |h| {
                let psi = sp.value(h);
                if psi == 0.0 {
                    return 0.0;
                }
                let mut acc = Accumulator::new();
                let big = (h * h) as f64;
                for other in 0..=h {
                    let total = big + (other * other) as f64;
                    let shifts = (total + psi).sqrt().floor() + 1.0;
                    let per = (2.0 * psi / big).min(1.0) * shifts;
                    // (h, other) and (other, h) are distinct unless other = h.
                    acc.add(if other == h { per } else { 2.0 * per });
                }
                acc.value()
            }))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Converges { limit: f64, error: f64 },
    Diverges { exponent: f64 },
    Inconclusive { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Fitted exponent `beta` of the window increments `c H^beta (log H)^gamma`.
    pub slope: f64,
    pub slope_stderr: f64,
    /// `gamma` from the three-parameter fit, when it is determined.
    pub log_exponent: Option<f64>,
    pub windows_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub eps_div: f64,
    pub tail_windows: usize,
    pub max_stderr: f64,
    pub bootstrap: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            eps_div: 0.05,
            tail_windows: 8,
            max_stderr: 0.05,
            bootstrap: 200,
        }
    }
}

pub fn classify(series: &PartialSumSeries) -> Result<Classification> {
    classify_with(series, &ClassifyOptions::default())
}

/// Classify from the window increments between consecutive checkpoints.
///
/// Only windows with the dominant height ratio are fitted, so a trailing partial
/// window does not bias the slope.
pub fn classify_with(series: &PartialSumSeries, opts: &ClassifyOptions) -> Result<Classification> {
    let hs = &series.heights;
    let ss = &series.sums;
    if hs.len() < 8 || hs.len() != ss.len() {
        return Err(Error::Precondition(format!(
            "classification needs at least 8 checkpoints, got {}",
            hs.len()
        )));
    }
    if (*hs.last().unwrap() as f64) < 100.0 * hs[0].max(1) as f64 {
        return Err(Error::Precondition(
            "checkpoints must span at least two decades".into(),
        ));
    }
    let inconclusive = |reason: &str, slope: f64, se: f64, used: usize| Classification {
        verdict: Verdict::Inconclusive {
            reason: reason.into(),
        },
        slope,
        slope_stderr: se,
        log_exponent: None,
        windows_used: used,
    };
    let last = *ss.last().unwrap();
    let windows: Vec<(f64, f64, f64)> = hs
        .windows(2)
        .zip(ss.windows(2))
        .map(|(h, s)| (h[0] as f64, h[1] as f64 / h[0] as f64, s[1] - s[0]))
        .collect();
    let converged = |limit: f64| Classification {
        verdict: Verdict::Converges { limit, error: 0.0 },
        slope: f64::NEG_INFINITY,
        slope_stderr: 0.0,
        log_exponent: None,
        windows_used: 0,
    };
    if ss.iter().all(|&x| x == 0.0) {
        return Ok(converged(0.0));
    }
    if windows.iter().rev().take(2).all(|w| w.2 == 0.0) {
        return Ok(converged(last));
    }
    let ratio = windows[windows.len() / 2].1;
    let tail: Vec<&(f64, f64, f64)> = windows
        .iter()
        .filter(|w| (w.1 - ratio).abs() <= 1e-9 * ratio)
        .collect();
    let tail = &tail[tail.len().saturating_sub(opts.tail_windows)..];
    if tail.len() < 4 {
        return Ok(inconclusive("fewer than 4 comparable windows", f64::NAN, f64::NAN, tail.len()));
    }
    if tail.iter().any(|w| !(w.2 > 0.0)) {
        return Ok(inconclusive("vanishing window increments", f64::NAN, f64::NAN, tail.len()));
    }
    let xs: Vec<f64> = tail.iter().map(|w| w.0.log2()).collect();
    let ys: Vec<f64> = tail.iter().map(|w| w.2.log2()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::Precondition("degenerate fit".into()))?;
    let (sigma, se) = (fit.slope / ratio.log2(), fit.slope_stderr / ratio.log2());
    let lx: Vec<f64> = tail.iter().map(|w| w.0.ln().max(1e-300).ln()).collect();
    let gamma = fit_plane(&xs, &lx, &ys).map(|c| c[2] / std::f64::consts::LN_2);
    let base = Classification {
        verdict: Verdict::Inconclusive {
            reason: String::new(),
        },
        slope: sigma,
        slope_stderr: se,
        log_exponent: gamma.filter(|g| g.is_finite()),
        windows_used: tail.len(),
    };
    if se > opts.max_stderr {
        return Ok(inconclusive("unstable increment fit", sigma, se, tail.len()));
    }
    if sigma > -opts.eps_div {
        return Ok(Classification {
            verdict: Verdict::Diverges { exponent: sigma },
            ..base
        });
    }
    let d_last = tail.last().unwrap().2;
    let tail_sum = |slope: f64| {
        let q = ratio.powf(slope);
        d_last * q / (1.0 - q)
    };
    let est = tail_sum(sigma);
    // Residual bootstrap of the slope.
    let resid: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - fit.intercept - fit.slope * x)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut acc = (0.0, 0.0);
    let mut kept = 0usize;
    for _ in 0..opts.bootstrap {
        let yb: Vec<f64> = xs
            .iter()
            .map(|x| fit.intercept + fit.slope * x + resid[rng.gen_range(0..resid.len())])
            .collect();
        if let Some(fb) = fit_line(&xs, &yb) {
            let sb = fb.slope / ratio.log2();
            if sb < 0.0 {
                let t = tail_sum(sb);
                acc.0 += t;
                acc.1 += t * t;
                kept += 1;
            }
        }
    }
    if kept * 10 < opts.bootstrap * 9 {
        return Ok(inconclusive("tail extrapolation unstable", sigma, se, tail.len()));
    }
    let mean = acc.0 / kept as f64;
    let sd = (acc.1 / kept as f64 - mean * mean).max(0.0).sqrt();
    Ok(Classification {
        verdict: Verdict::Converges {
            limit: last + est,
            error: 2.0 * sd + 1e-3 * est.abs(),
        },
        ..base
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExponentMethod {
    Analytic,
    NumericBisection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExponentFlag {
    /// The criterion diverges for every admissible exponent.
    FullDimension,
    /// Psi has finite support, so the limsup set is empty.
    EmptySet,
    /// The criterion converges already at the lower end of the bracket.
    BelowBracket,
    /// The criterion diverges at the upper end of a bracket below the ambient dimension.
    AboveBracket,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProbeVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Probe {
    pub s: f64,
    pub height: u64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub verdict: ProbeVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentResult {
    pub s_star: f64,
    pub method: ExponentMethod,
    pub bracket: (f64, f64),
    pub flag: Option<ExponentFlag>,
    pub diagnostics: Vec<Probe>,
}

impl ExponentResult {
    fn analytic(s: f64, flag: Option<ExponentFlag>) -> Self {
        ExponentResult {
            s_star: s,
            method: ExponentMethod::Analytic,
            bracket: (s, s),
            flag,
            diagnostics: Vec::new(),
        }
    }
}

/// `s* = (n-1)m + (n+m)/(1+tau)` for `Psi = |a|^{-tau}` on all of `Z^n`.
pub fn critical_exponent_analytic(p: &LinearFormsProblem) -> Result<ExponentResult> {
    let tau = p
        .psi()
        .tau()
        .filter(|_| p.psi().support().is_all())
        .ok_or_else(|| {
            Error::Unsupported("analytic exponent needs a power law on all of Z^n".into())
        })?;
    let (n, m) = (p.n() as f64, p.m() as f64);
    if tau <= n / m {
        return Ok(ExponentResult::analytic(n * m, Some(ExponentFlag::FullDimension)));
    }
    Ok(ExponentResult::analytic(
        (n - 1.0) * m + (n + m) / (1.0 + tau),
        None,
    ))
}

/// `dim S2(tau) = (5+tau)/(2+tau)`; 2 when `tau <= 1`.
pub fn squares_critical_exponent(tau: f64) -> Result<ExponentResult> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::domain("tau", tau, "(0, inf)"));
    }
    if tau <= 1.0 {
        return Ok(ExponentResult::analytic(2.0, Some(ExponentFlag::FullDimension)));
    }
    Ok(ExponentResult::analytic((5.0 + tau) / (2.0 + tau), None))
}

const PROBE_TAIL_WINDOWS: usize = 6;
const PROBE_MAX_STDERR: f64 = 0.05;

fn probe_at(series: &PartialSumSeries, s: f64) -> Probe {
    let opts = ClassifyOptions {
        eps_div: 0.0,
        tail_windows: PROBE_TAIL_WINDOWS,
        max_stderr: PROBE_MAX_STDERR,
        bootstrap: 0,
    };
    let height = *series.heights.last().unwrap_or(&0);
    let mk = |slope, se, verdict| Probe {
        s,
        height,
        slope,
        slope_stderr: se,
        verdict,
    };
    let Ok(c) = classify_with(series, &opts) else {
        return mk(f64::NAN, f64::NAN, ProbeVerdict::Inconclusive);
    };
    let verdict = match c.verdict {
        Verdict::Diverges { .. } if c.slope > 2.0 * c.slope_stderr => ProbeVerdict::Diverges,
        Verdict::Converges { .. } if c.slope < -2.0 * c.slope_stderr => ProbeVerdict::Converges,
        _ => ProbeVerdict::Inconclusive,
    };
    mk(c.slope, c.slope_stderr, verdict)
}

/// Bisection on the sign of the fitted increment slope.
///
/// `series_at(s, widened)` produces the criterion series at exponent `s`; an
/// inconclusive probe is retried once on the widened series.
fn bisect(
    bracket: (f64, f64),
    tol: f64,
    full_dim: f64,
    series_at: &mut dyn FnMut(f64, bool) -> Result<PartialSumSeries>,
) -> Result<ExponentResult> {
    let (mut lo, mut hi) = bracket;
    let mut diagnostics = Vec::new();
    let mut decide = |s: f64, diag: &mut Vec<Probe>| -> Result<ProbeVerdict> {
        let mut pr = probe_at(&series_at(s, false)?, s);
        if pr.verdict == ProbeVerdict::Inconclusive {
            diag.push(pr);
            pr = probe_at(&series_at(s, true)?, s);
        }
        let v = pr.verdict;
        diag.push(pr);
        Ok(v)
    };
    let result = |s_star: f64, b: (f64, f64), flag, diagnostics| ExponentResult {
        s_star,
        method: ExponentMethod::NumericBisection,
        bracket: b,
        flag,
        diagnostics,
    };
    let v_lo = decide(lo, &mut diagnostics)?;
    let v_hi = decide(hi, &mut diagnostics)?;
    if v_lo == ProbeVerdict::Inconclusive || v_hi == ProbeVerdict::Inconclusive {
        return Ok(result(
            0.5 * (lo + hi),
            (lo, hi),
            Some(ExponentFlag::Inconclusive),
            diagnostics,
        ));
    }
    if v_lo == ProbeVerdict::Converges {
        return Ok(result(lo, (lo, lo), Some(ExponentFlag::BelowBracket), diagnostics));
    }
    if v_hi == ProbeVerdict::Diverges {
        let flag = if hi >= full_dim {
            ExponentFlag::FullDimension
        } else {
            ExponentFlag::AboveBracket
        };
        return Ok(result(hi, (hi, hi), Some(flag), diagnostics));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match decide(mid, &mut diagnostics)? {
            ProbeVerdict::Diverges => lo = mid,
            ProbeVerdict::Converges => hi = mid,
            ProbeVerdict::Inconclusive => {
                return Ok(result(
                    0.5 * (lo + hi),
                    (lo, hi),
                    Some(ExponentFlag::Inconclusive),
                    diagnostics,
                ))
            }
        }
    }
    Ok(result(0.5 * (lo + hi), (lo, hi), None, diagnostics))
}

fn check_bisection_args(bracket: (f64, f64), tol: f64, h_max: u64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::domain("tol", tol, "(0, inf)"));
    }
    if !(bracket.0 < bracket.1) {
        return Err(Error::Precondition("bracket must satisfy s_lo < s_hi".into()));
    }
    if h_max < 128 {
        return Err(Error::Precondition(
            "H_max must be at least 128 for a stable classification".into(),
        ));
    }
    Ok(())
}

/// Bisection on `s` using the convergence of the criterion sum for `f = r^s`.
pub fn critical_exponent_numeric(
    p: &LinearFormsProblem,
    bracket: (f64, f64),
    tol: f64,
    h_max: u64,
) -> Result<ExponentResult> {
    check_bisection_args(bracket, tol, h_max)?;
    let (base, full) = (((p.n() - 1) * p.m()) as f64, (p.n() * p.m()) as f64);
    if !(base < bracket.0 && bracket.1 <= full) {
        return Err(Error::Precondition(format!(
            "bracket must lie in ({base}, {full}]"
        )));
    }
    if p.psi().max_height().is_some() || p.psi().is_zero() {
        return Ok(ExponentResult {
            s_star: bracket.0,
            method: ExponentMethod::NumericBisection,
            bracket: (bracket.0, bracket.0),
            flag: Some(ExponentFlag::EmptySet),
            diagnostics: Vec::new(),
        });
    }
    let cache = ShellCache::build(p, h_max);
    let mut wide: Option<ShellCache> = None;
    bisect(bracket, tol, full, &mut |s, widened| {
        if widened {
            wide.get_or_insert_with(|| ShellCache::build(p, h_max * 4))
                .corollary_one(s)
        } else {
            cache.corollary_one(s)
        }
    })
}

/// Bisection for the squares problem on `sum psi(h)^{s-1} h^{4-2s}`.
pub fn squares_critical_exponent_numeric(
    sp: &SquaresProblem,
    bracket: (f64, f64),
    tol: f64,
    h_max: u64,
) -> Result<ExponentResult> {
    check_bisection_args(bracket, tol, h_max)?;
    if !(1.0 < bracket.0 && bracket.1 <= 2.0) {
        return Err(Error::Precondition("bracket must lie in (1, 2]".into()));
    }
    if matches!(sp.psi(), crate::problems::ScalarPsi::Table(_)) {
        return Ok(ExponentResult {
            s_star: bracket.0,
            method: ExponentMethod::NumericBisection,
            bracket: (bracket.0, bracket.0),
            flag: Some(ExponentFlag::EmptySet),
            diagnostics: Vec::new(),
        });
    }
    bisect(bracket, tol, 2.0, &mut |s, widened| {
        corollary_two_sum(sp, s, if widened { h_max * 4 } else { h_max })
    })
}
