//! Monte Carlo measure probes and the zero-one trend.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{for_each_in_shell, LinearFormsProblem, Problem, SquaresProblem};
use crate::rng::{fixed_point, to_unit};
use crate::series::{classify, union_bound_sum, Verdict};
use crate::windows::{Schedule, Window};

const Z95: f64 = 1.959_963_984_540_054;
const TWO64: f64 = 18_446_744_073_709_551_616.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McMeasureReport {
    pub window: Window,
    pub samples: u64,
    pub hits: u64,
    pub fraction: f64,
    pub wilson_ci: (f64, f64),
    pub seed: u64,
    pub out_of_theorem: bool,
}

/// 95% Wilson score interval.
pub fn wilson_interval(hits: u64, samples: u64) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn report(problem: &Problem, window: Window, samples: u64, hits: u64, seed: u64) -> McMeasureReport {
    McMeasureReport {
        window,
        samples,
        hits,
        fraction: hits as f64 / samples as f64,
        wilson_ci: wilson_interval(hits, samples),
        seed,
        out_of_theorem: !problem.theorem_mode(),
    }
}

/// Per-sample hit tests for a fixed list of windows.
struct Tester<'a> {
    problem: &'a Problem,
    windows: Vec<Window>,
    /// `max Psi` over each dyadic piece `[2^k, 2^{k+1})` of each window.
    pieces: Vec<Vec<(Window, f64)>>,
    b_fixed: Vec<u64>,
}

impl<'a> Tester<'a> {
    fn new(problem: &'a Problem, windows: &[Window]) -> Self {
        let pieces = windows
            .iter()
            .map(|w| {
                dyadic_pieces(*w)
                    .into_iter()
                    .map(|d| (d, max_psi(problem, d)))
                    .filter(|&(_, psi)| psi > 0.0)
                    .collect()
            })
            .collect();
        let b_fixed = match problem {
            Problem::Linear(p) => p.b().iter().map(|&b| to_fixed(b.rem_euclid(1.0))).collect(),
            Problem::Squares(_) => Vec::new(),
        };
        Tester {
            problem,
            windows: windows.to_vec(),
            pieces,
            b_fixed,
        }
    }

    fn dim(&self) -> usize {
        self.problem.ambient_dim()
    }

    fn hit(&self, w: usize, x: &[u64], scratch: &mut Scratch) -> bool {
        match self.problem {
            Problem::Linear(p) if p.n() == 2 => self.pieces[w]
                .iter()
                .any(|&(d, psi_max)| self.hit_pairs(p, d, psi_max, x, scratch)),
            Problem::Linear(p) => self.pieces[w]
                .iter()
                .any(|&(d, _)| (d.lo..d.hi).any(|h| self.hit_shell(p, h, x))),
            Problem::Squares(sp) => {
                let xf = [to_unit(x[0]), to_unit(x[1])];
                hit_squares(sp, self.windows[w], &xf)
            }
        }
    }

    /// Exact test of one `a` in fixed point.
    fn check(&self, p: &LinearFormsProblem, a: &[i64], x: &[u64]) -> bool {
        let psi = p.psi().value(a);
        if psi <= 0.0 {
            return false;
        }
        let thr = psi * TWO64;
        let n = p.n();
        (0..p.m()).all(|j| {
            let mut v = 0u64.wrapping_sub(self.b_fixed[j]);
            for i in 0..n {
                v = v.wrapping_add((a[i] as u64).wrapping_mul(x[j * n + i]));
            }
            (v.min(v.wrapping_neg()) as f64) < thr
        })
    }

    fn hit_shell(&self, p: &LinearFormsProblem, h: u64, x: &[u64]) -> bool {
        let mut hit = false;
        for_each_in_shell(p.n(), h, |a| {
            if !hit && self.check(p, a, x) {
                hit = true;
            }
        });
        hit
    }

    /// `n = 2`: match `a_1 x_1` against `b - a_2 x_2` on the circle by bucketing.
    fn hit_pairs(
        &self,
        p: &LinearFormsProblem,
        d: Window,
        psi_max: f64,
        x: &[u64],
        s: &mut Scratch,
    ) -> bool {
        let top = d.top() as i64;
        let len = (2 * top + 1) as usize;
        let bits = (usize::BITS - len.leading_zeros()).max(1);
        let shift = 64 - bits;
        let buckets = 1usize << bits;
        s.heads.clear();
        s.heads.resize(buckets + 1, 0);
        s.vals.clear();
        s.vals.resize(len, (0, 0));
        let (x1, x2, b) = (x[0], x[1], self.b_fixed[0]);
        let v_of = |a2: i64| b.wrapping_sub((a2 as u64).wrapping_mul(x2));
        for a2 in -top..=top {
            s.heads[(v_of(a2) >> shift) as usize + 1] += 1;
        }
        for i in 0..buckets {
            s.heads[i + 1] += s.heads[i];
        }
        s.fill.clear();
        s.fill.extend_from_slice(&s.heads[..buckets]);
        for a2 in -top..=top {
            let v = v_of(a2);
            let k = (v >> shift) as usize;
            s.vals[s.fill[k] as usize] = (v, a2);
            s.fill[k] += 1;
        }
        let thr = (psi_max * TWO64).min(u64::MAX as f64) as u64;
        let nb = ((((2 * thr as u128) >> shift) as usize) + 2).min(buckets);
        let lo_h = d.lo as i64;
        for a1 in -top..=top {
            let u = (a1 as u64).wrapping_mul(x1);
            let first = (u.wrapping_sub(thr) >> shift) as usize;
            for off in 0..nb {
                let k = (first + off) % buckets;
                for &(v, a2) in &s.vals[s.heads[k] as usize..s.heads[k + 1] as usize] {
                    let diff = u.wrapping_sub(v);
                    if diff.min(diff.wrapping_neg()) > thr {
                        continue;
                    }
                    if a1.abs().max(a2.abs()) < lo_h {
                        continue;
                    }
                    if self.check(p, &[a1, a2], x) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

#[derive(Default)]
struct Scratch {
    heads: Vec<u32>,
    fill: Vec<u32>,
    vals: Vec<(u64, i64)>,
}

fn to_fixed(v: f64) -> u64 {
    (v * TWO64).min(u64::MAX as f64) as u64
}

/// Splits `[lo, hi)` at powers of two.
fn dyadic_pieces(w: Window) -> Vec<Window> {
    let mut out = Vec::new();
    let mut lo = w.lo;
    while lo < w.hi {
        let next = if lo.is_power_of_two() { 2 * lo } else { lo.next_power_of_two() };
        let hi = next.min(w.hi);
        out.push(Window { lo, hi });
        lo = hi;
    }
    out
}

fn max_psi(problem: &Problem, w: Window) -> f64 {
    match problem {
        Problem::Linear(p) => {
            if let Some(tau) = p.psi().tau() {
                return (w.lo as f64).powf(-tau);
            }
            let mut m = 0.0f64;
            if let Some(top) = p.psi().max_height() {
                for h in w.lo..w.hi.min(top + 1) {
                    p.psi().for_each_shell_value(p.n(), h, |v, _| m = m.max(v));
                }
            }
            m
        }
        Problem::Squares(sp) => (w.lo..w.hi).map(|h| sp.value(h)).fold(0.0, f64::max),
    }
}

fn hit_squares(sp: &SquaresProblem, w: Window, x: &[f64]) -> bool {
    let top = w.top() as i64;
    for a1 in 0..=top {
        for a2 in 0..=top {
            let h = a1.max(a2) as u64;
            if !w.contains(h) {
                continue;
            }
            let psi = sp.value(h);
            if psi > 0.0 && crate::geometry::square_distance(x, &[a1, a2]) < psi {
                return true;
            }
        }
    }
    false
}

/// Hit bitmasks (bit `k` for window `k`) of samples `0..samples`.
fn hit_masks(
    problem: &Problem,
    windows: &[Window],
    samples: u64,
    seed: u64,
    stop_at_first: bool,
) -> Vec<u64> {
    let tester = Tester::new(problem, windows);
    let dim = tester.dim();
    (0..samples)
        .into_par_iter()
        .map_init(
            || (Scratch::default(), vec![0u64; dim]),
            |(scratch, x), i| {
                fixed_point(seed, i, x);
                let mut mask = 0u64;
                for w in 0..windows.len() {
                    if tester.hit(w, x, scratch) {
                        mask |= 1 << w;
                        if stop_at_first {
                            break;
                        }
                    }
                }
                mask
            },
        )
        .collect()
}

fn validate(problem: &Problem, samples: u64) -> Result<()> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be at least 1".into()));
    }
    if let Problem::Linear(p) = problem {
        if p.n() * p.m() > 16 {
            return Err(Error::Unsupported("more than 16 coordinates".into()));
        }
    }
    Ok(())
}

/// Fraction of uniform points of the unit cube hit by some `a` with `|a|` in `window`.
pub fn mc_measure(problem: &Problem, window: Window, samples: u64, seed: u64) -> Result<McMeasureReport> {
    validate(problem, samples)?;
    let hits = hit_masks(problem, &[window], samples, seed, true)
        .iter()
        .filter(|&&m| m != 0)
        .count() as u64;
    Ok(report(problem, window, samples, hits, seed))
}

/// Whether a given point of the unit cube is hit in `window`, by the same test the sampler uses.
pub fn sample_hit(problem: &Problem, window: Window, seed: u64, index: u64) -> (Vec<f64>, bool) {
    let tester = Tester::new(problem, &[window]);
    let mut x = vec![0u64; tester.dim()];
    fixed_point(seed, index, &mut x);
    let hit = tester.hit(0, &x, &mut Scratch::default());
    (x.into_iter().map(to_unit).collect(), hit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    TowardOne,
    TowardZero,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroOneReport {
    pub trend: Trend,
    pub windows: Vec<McMeasureReport>,
    pub cumulative: Vec<McMeasureReport>,
    /// Union bound for each window: the sum of the single-`a` measures.
    pub union_bounds: Vec<f64>,
    pub union_series: Verdict,
    /// Every window fraction is within `bound + 3 * CI half-width`.
    pub dominated: bool,
}

/// Per-window and cumulative fractions from the same samples, and the trend they show.
pub fn zero_one_probe(
    problem: &Problem,
    schedule: &Schedule,
    samples: u64,
    seed: u64,
) -> Result<ZeroOneReport> {
    validate(problem, samples)?;
    if schedule.len() < 4 {
        return Err(Error::Precondition("the zero-one probe needs at least 4 windows".into()));
    }
    if schedule.len() > 64 {
        return Err(Error::Precondition("at most 64 windows".into()));
    }
    let windows = schedule.windows();
    let masks = hit_masks(problem, &windows, samples, seed, false);
    let mut per = vec![0u64; windows.len()];
    let mut cum = vec![0u64; windows.len()];
    for m in &masks {
        for k in 0..windows.len() {
            if m & (1 << k) != 0 {
                per[k] += 1;
            }
            if m & ((2u64 << k) - 1) != 0 {
                cum[k] += 1;
            }
        }
    }
    let window_reports: Vec<McMeasureReport> = windows
        .iter()
        .zip(&per)
        .map(|(w, &h)| report(problem, *w, samples, h, seed))
        .collect();
    let cumulative: Vec<McMeasureReport> = schedule
        .cumulative()
        .iter()
        .zip(&cum)
        .map(|(w, &h)| report(problem, *w, samples, h, seed))
        .collect();
    let union_bounds = windows
        .iter()
        .map(|w| union_bound(problem, *w))
        .collect::<Result<Vec<f64>>>()?;
    let dominated = window_reports.iter().zip(&union_bounds).all(|(r, b)| {
        let half = (r.wilson_ci.1 - r.wilson_ci.0) / 2.0;
        r.fraction <= b + 3.0 * half
    });
    let h_series = schedule.max_height().max(1 << 10);
    let union_series = classify(&union_bound_sum(problem, h_series)?)?.verdict;
    let fr: Vec<f64> = cumulative.iter().map(|r| r.fraction).collect();
    let increasing = fr.windows(2).all(|w| w[1] >= w[0]) && fr.last() > fr.first();
    // A convergent union series settles the question, so it is checked first.
    let trend = if dominated && matches!(union_series, Verdict::Converges { .. }) {
        Trend::TowardZero
    } else if increasing && *fr.last().unwrap() > 0.9 {
        Trend::TowardOne
    } else {
        Trend::Inconclusive
    };
    Ok(ZeroOneReport {
        trend,
        windows: window_reports,
        cumulative,
        union_bounds,
        union_series,
        dominated,
    })
}

/// Sum over the window of the measure bound of one `a`.
pub fn union_bound(problem: &Problem, w: Window) -> Result<f64> {
    let s = union_bound_sum(problem, w.top())?;
    let below = if w.lo > 1 {
        union_bound_sum(problem, w.lo - 1)?.last()
    } else {
        0.0
    };
    Ok((s.last() - below).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hit_list, satisfies_squares};
    use crate::problems::{PsiSpec, Support};
    use std::collections::BTreeMap;

    fn linear(n: usize, m: usize, tau: f64) -> Problem {
        Problem::Linear(LinearFormsProblem::power(n, m, tau).unwrap())
    }

    #[test]
    fn wilson_interval_brackets_the_fraction() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        // Hand value for 0 of 10.
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532_799).abs() < 1e-6);
    }

    #[test]
    fn dyadic_pieces_split_at_powers_of_two() {
        let w = |a, b| Window { lo: a, hi: b };
        assert_eq!(dyadic_pieces(w(1, 16)), vec![w(1, 2), w(2, 4), w(4, 8), w(8, 16)]);
        assert_eq!(dyadic_pieces(w(3, 9)), vec![w(3, 4), w(4, 8), w(8, 9)]);
    }

    #[test]
    fn zero_psi_gives_zero_fraction() {
        let mut t = BTreeMap::new();
        t.insert(vec![1, 0], 0.0);
        let p = Problem::Linear(
            LinearFormsProblem::new(2, 1, None, PsiSpec::table(t, Support::all()).unwrap()).unwrap(),
        );
        let r = mc_measure(&p, Window::new(1, 64).unwrap(), 2000, 1).unwrap();
        assert_eq!(r.hits, 0);
        assert_eq!(r.fraction, 0.0);
    }

    #[test]
    fn sampler_agrees_with_direct_evaluation() {
        let mut cases = vec![linear(2, 1, 2.0), linear(1, 2, 1.5), linear(2, 2, 2.0), linear(3, 1, 1.5)];
        cases.push(Problem::Linear(
            LinearFormsProblem::new(2, 1, Some(vec![0.37]), PsiSpec::power(2.0, Support::zi(1)).unwrap())
                .unwrap(),
        ));
        for prob in &cases {
            let Problem::Linear(p) = prob else { unreachable!() };
            for w in [Window::new(1, 9).unwrap(), Window::new(8, 24).unwrap()] {
                for i in 0..300 {
                    let (x, hit) = sample_hit(prob, w, 9, i);
                    let direct = !hit_list(&x, p, w.lo, w.top()).unwrap().is_empty();
                    assert_eq!(hit, direct, "{p:?} {w} {x:?}");
                }
            }
        }
        let sq = Problem::Squares(SquaresProblem::power(2.0).unwrap());
        let Problem::Squares(sp) = &sq else { unreachable!() };
        let w = Window::new(2, 8).unwrap();
        for i in 0..300 {
            let (x, hit) = sample_hit(&sq, w, 4, i);
            let direct = (0..8i64)
                .flat_map(|a| (0..8i64).map(move |b| [a, b]))
                .any(|a| w.contains(a[0].max(a[1]) as u64) && satisfies_squares(&x, &a, sp));
            assert_eq!(hit, direct);
        }
    }

    #[test]
    fn measure_is_deterministic_and_within_union_bound() {
        let p = linear(2, 1, 2.5);
        let w = Window::new(16, 32).unwrap();
        let a = mc_measure(&p, w, 20_000, 42).unwrap();
        let b = mc_measure(&p, w, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let half = (a.wilson_ci.1 - a.wilson_ci.0) / 2.0;
        let bound = union_bound(&p, w).unwrap();
        assert!(a.fraction <= bound + 3.0 * half, "{} vs {bound}", a.fraction);
        assert!(a.hits > 0);
    }

    #[test]
    fn union_bound_matches_shell_sum() {
        // (2 Psi)^m summed over 8h vectors per shell.
        let p = linear(2, 1, 2.0);
        let expect: f64 = (4..8).map(|h: u64| 8.0 * h as f64 * 2.0 / (h * h) as f64).sum();
        let got = union_bound(&p, Window::new(4, 8).unwrap()).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn probe_needs_four_windows() {
        let p = linear(2, 1, 2.0);
        let s: Schedule = "dyadic:2..5".parse().unwrap();
        assert!(zero_one_probe(&p, &s, 100, 1).is_err());
    }
}
