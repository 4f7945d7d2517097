//! Restriction of `W_{n,m}^b(Psi)` to slices `V + X0`, where `V` varies the first
//! coordinate of every column, and the slicing inequality on box unions.

use rayon::prelude::*;
use serde::Serialize;

use crate::dimfun::{transformed_radius, untransformed_radius, DimensionFunction};
use crate::error::{Error, Result};
use crate::problems::{for_each_in_shell, LinearFormsProblem, PsiSpec};
use crate::rng::{low_discrepancy, stream};
use crate::series::{classify, schmidt_sum, Verdict};
use crate::windows::{Schedule, Window};

const TWO64: f64 = 18_446_744_073_709_551_616.0;

/// A slice `V + X0`: the coordinates `x_{j,i}`, `i >= 2`, are fixed by `x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSpec {
    problem: LinearFormsProblem,
    /// `x0[j (n-1) + i - 2] = x_{j,i}`.
    x0: Vec<f64>,
}

impl SliceSpec {
    pub fn new(problem: LinearFormsProblem, x0: Vec<f64>) -> Result<Self> {
        if !problem.psi().support().zi_indices().contains(&1) {
            return Err(Error::Precondition(
                "slices need the support restricted to Z_1 (restrict_to_zi(1))".into(),
            ));
        }
        let want = problem.m() * (problem.n() - 1);
        if x0.len() != want {
            return Err(Error::Precondition(format!(
                "x0 has {} entries, expected m (n - 1) = {want}",
                x0.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("x0 must be finite".into()));
        }
        Ok(SliceSpec { problem, x0 })
    }

    pub fn problem(&self) -> &LinearFormsProblem {
        &self.problem
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// The point of `I^{n x m}` with first coordinates `y`.
    pub fn point(&self, y: &[f64]) -> Vec<f64> {
        let (n, m) = (self.problem.n(), self.problem.m());
        let mut x = vec![0.0; n * m];
        for j in 0..m {
            x[j * n] = y[j];
            x[j * n + 1..(j + 1) * n].copy_from_slice(&self.x0[j * (n - 1)..(j + 1) * (n - 1)]);
        }
        x
    }

    /// `b_j - sum_{i >= 2} a_i x_{j,i}`.
    fn offsets(&self, a: &[i64]) -> Vec<f64> {
        let n = self.problem.n();
        (0..self.problem.m())
            .map(|j| {
                let s: f64 = (1..n)
                    .map(|i| a[i] as f64 * self.x0[j * (n - 1) + i - 1])
                    .sum();
                self.problem.b()[j] - s
            })
            .collect()
    }

    /// Calls `f(a, Psi(a))` for the supported `a` in the window with `Psi(a) > 0`.
    fn for_each_a(&self, w: Window, mut f: impl FnMut(&[i64], f64)) {
        for h in w.lo..w.hi {
            for_each_in_shell(self.problem.n(), h, |a| {
                let psi = self.problem.psi().value(a);
                if psi > 0.0 {
                    f(a, psi);
                }
            });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub a: Vec<i64>,
    pub p: Vec<i64>,
}

impl SliceBall {
    /// Sup-norm membership on the torus.
    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(&self.center)
            .all(|(v, c)| circle_distance(*v, *c) < self.radius)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceBallFamily {
    pub m: usize,
    pub balls: Vec<SliceBall>,
    pub torus: bool,
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// One ball per `a` in the window and per residue class of `p` modulo `a_1`, with
/// center `(b_j - sum_{i>=2} a_i x_{j,i} - p_j) / a_1` in `[0, 1)` and radius `Psi(a)/|a_1|`.
pub fn slice_balls(s: &SliceSpec, w: Window) -> Result<SliceBallFamily> {
    let m = s.problem.m();
    let mut balls = Vec::new();
    s.for_each_a(w, |a, psi| {
        let a1 = a[0];
        let q = a1.unsigned_abs() as i64;
        let off = s.offsets(a);
        // Shifts putting the center in [0, 1): p_j = floor(off_j) - k (a_1 > 0) or ceil(off_j) + k.
        let base: Vec<i64> = off
            .iter()
            .map(|o| if a1 > 0 { o.floor() as i64 } else { o.ceil() as i64 })
            .collect();
        let total = (q as u64).pow(m as u32);
        for t in 0..total {
            let mut rest = t;
            let mut p = Vec::with_capacity(m);
            let mut center = Vec::with_capacity(m);
            for j in 0..m {
                let k = (rest % q as u64) as i64;
                rest /= q as u64;
                let pj = if a1 > 0 { base[j] - k } else { base[j] + k };
                center.push(((off[j] - pj as f64) / a1 as f64).rem_euclid(1.0));
                p.push(pj);
            }
            balls.push(SliceBall {
                center,
                radius: psi / q as f64,
                a: a.to_vec(),
                p,
            });
        }
    });
    Ok(SliceBallFamily {
        m,
        balls,
        torus: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `r -> g(r)^{1/m}`.
    Inflate,
    /// `r -> g^{-1}(r^m)`.
    Deflate,
}

pub fn transform_family(
    fam: &SliceBallFamily,
    g: &DimensionFunction,
    m: u32,
    direction: Direction,
) -> Result<SliceBallFamily> {
    if m == 0 {
        return Err(Error::Precondition("m must be positive".into()));
    }
    let balls = fam
        .balls
        .iter()
        .map(|b| {
            let radius = match direction {
                Direction::Inflate => transformed_radius(b.radius, g, m)?,
                Direction::Deflate => untransformed_radius(b.radius, g, m)?,
            };
            Ok(SliceBall {
                radius,
                ..b.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SliceBallFamily {
        balls,
        ..fam.clone()
    })
}

pub fn shrink_family(fam: &SliceBallFamily, delta: f64) -> Result<SliceBallFamily> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("delta", delta, "(0, 1)"));
    }
    let mut out = fam.clone();
    for b in &mut out.balls {
        b.radius *= delta;
    }
    Ok(out)
}

/// Arcs `[start, start + len)` of the circle `R/Z` scaled by `2^64`; `len = None` is the whole circle.
#[derive(Clone, Debug, Default)]
pub struct ArcUnion {
    arcs: Vec<(u64, u64)>,
    full: bool,
}

impl ArcUnion {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the arcs `(center, radius)` to the union.
    pub fn extend(&mut self, intervals: &[(f64, f64)]) {
        if self.full {
            return;
        }
        let mut new: Vec<(u64, u64)> = Vec::with_capacity(intervals.len() + 1);
        for &(c, r) in intervals {
            if !(r > 0.0) {
                continue;
            }
            if r >= 0.5 {
                self.full = true;
                self.arcs.clear();
                return;
            }
            let start = ((c - r).rem_euclid(1.0) * TWO64) as u128;
            let len = ((2.0 * r) * TWO64).ceil() as u128;
            let end = start + len;
            let two64 = 1u128 << 64;
            if end > two64 {
                new.push((start as u64, u64::MAX));
                new.push((0, (end - two64) as u64));
            } else {
                new.push((start as u64, (end - 1) as u64));
            }
        }
        new.sort_unstable_by_key(|x| x.0);
        let old = std::mem::take(&mut self.arcs);
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(old.len() + new.len());
        let (mut i, mut j) = (0, 0);
        while i < old.len() || j < new.len() {
            let next = if j >= new.len() || (i < old.len() && old[i].0 <= new[j].0) {
                i += 1;
                old[i - 1]
            } else {
                j += 1;
                new[j - 1]
            };
            // Arcs are closed `[s, e]` in units of 2^-64; adjacent ones join.
            match merged.last_mut() {
                Some(last) if next.0 <= last.1.saturating_add(1) => last.1 = last.1.max(next.1),
                _ => merged.push(next),
            }
        }
        if merged.len() == 1 && merged[0] == (0, u64::MAX) {
            self.full = true;
            merged.clear();
        }
        self.arcs = merged;
    }

    pub fn length(&self) -> f64 {
        if self.full {
            return 1.0;
        }
        let total: u128 = self.arcs.iter().map(|&(s, e)| (e - s) as u128 + 1).sum();
        total as f64 / TWO64
    }

    /// Lengths of the connected components, joining the arcs through 0.
    pub fn components(&self) -> Vec<f64> {
        if self.full {
            return vec![1.0];
        }
        let mut lens: Vec<f64> = self
            .arcs
            .iter()
            .map(|&(s, e)| ((e - s) as u128 + 1) as f64 / TWO64)
            .collect();
        if self.arcs.len() > 1 && self.arcs[0].0 == 0 && self.arcs.last().unwrap().1 == u64::MAX {
            let tail = lens.pop().unwrap();
            lens[0] += tail;
        }
        lens
    }
}

/// Exact length of a union of arcs `(center, radius)` on `R/Z`.
pub fn circle_union_length(intervals: &[(f64, f64)]) -> f64 {
    let mut u = ArcUnion::new();
    u.extend(intervals);
    u.length()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceMeasure {
    /// Exact length for `m = 1`, otherwise the Monte Carlo fraction.
    pub measure: f64,
    pub exact: bool,
    pub samples: u64,
    pub wilson_ci: Option<(f64, f64)>,
}

pub fn slice_measure_probe(fam: &SliceBallFamily, samples: u64, seed: u64) -> Result<SliceMeasure> {
    if fam.m == 1 {
        let iv: Vec<(f64, f64)> = fam.balls.iter().map(|b| (b.center[0], b.radius)).collect();
        return Ok(SliceMeasure {
            measure: circle_union_length(&iv),
            exact: true,
            samples: 0,
            wilson_ci: None,
        });
    }
    if samples == 0 {
        return Err(Error::Precondition("samples must be at least 1".into()));
    }
    let hits: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let y: Vec<f64> = (0..fam.m)
                .map(|_| rand::Rng::gen::<f64>(&mut rng))
                .collect();
            u64::from(fam.balls.iter().any(|b| b.contains(&y)))
        })
        .sum();
    Ok(SliceMeasure {
        measure: hits as f64 / samples as f64,
        exact: false,
        samples,
        wilson_ci: Some(crate::estimators::wilson_interval(hits, samples)),
    })
}

/// `x0` for slice `i`: point `i` of a low-discrepancy sequence.
pub fn default_slices(count: usize, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..count as u64)
        .map(|i| low_discrepancy(i, m * (n - 1)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceTrace {
    pub x0: Vec<f64>,
    /// Measure of the inflated family's union per cumulative window.
    pub inflated_union: Vec<f64>,
    /// `sum g(r)` over the components of the deflated union (over the balls when `m > 1`).
    pub deflated_content: Vec<f64>,
    pub deflated_union: Vec<f64>,
}

impl SliceTrace {
    /// Strict growth of the deflated content over the last `k` windows.
    pub fn content_increasing(&self, k: usize) -> bool {
        let c = &self.deflated_content;
        c.len() >= k && c[c.len() - k..].windows(2).all(|w| w[1] > w[0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub f: DimensionFunction,
    pub g: DimensionFunction,
    pub windows: Vec<Window>,
    pub slices: Vec<SliceTrace>,
    /// Exponent `tau~` of `Psi~` when `Psi` and `f` are power laws.
    pub inflated_tau: Option<f64>,
    /// Verdict for the Schmidt series of `Psi~` on `Z_1`.
    pub inflated_series: Option<Verdict>,
}

impl PipelineReport {
    pub fn slices_above(&self, level: f64) -> usize {
        self.slices
            .iter()
            .filter(|s| s.inflated_union.last().is_some_and(|&u| u > level))
            .count()
    }

    pub fn slices_growing(&self, k: usize) -> usize {
        self.slices.iter().filter(|s| s.content_increasing(k)).count()
    }
}

/// For each slice: the union of the `Psi~` family over cumulative windows, and the
/// `g`-content of the deflated (`Psi`) family, with `g = r^{-(n-1)m} f`.
pub fn slice_to_hausdorff_pipeline(
    p: &LinearFormsProblem,
    f: &DimensionFunction,
    slices: &[Vec<f64>],
    schedule: &Schedule,
    samples: u64,
    seed: u64,
) -> Result<PipelineReport> {
    let (n, m) = (p.n(), p.m());
    if n < 2 {
        return Err(Error::Precondition("slicing needs n >= 2".into()));
    }
    let g = f.derive_quotient(((n - 1) * m) as u32)?;
    let specs = slices
        .iter()
        .map(|x0| SliceSpec::new(p.clone(), x0.clone()))
        .collect::<Result<Vec<_>>>()?;
    let windows = schedule.windows();
    let traces = specs
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if m == 1 {
                trace_exact(s, &g, &windows)
            } else {
                trace_sampled(s, &g, &windows, samples, seed.wrapping_add(i as u64))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let (inflated_tau, inflated_series) = match (p.psi().tau(), f.power_exponent()) {
        (Some(tau), Some(s)) => {
            let sigma = s - ((n - 1) * m) as f64;
            let tt = (sigma * (tau + 1.0) - m as f64) / m as f64;
            let verdict = if tt > 0.0 {
                let q = LinearFormsProblem::new(
                    n,
                    m,
                    Some(p.b().to_vec()),
                    PsiSpec::power(tt, p.psi().support().clone())?,
                )?;
                let h = schedule.max_height().max(1 << 10);
                Some(classify(&schmidt_sum(&q, h)?)?.verdict)
            } else {
                None
            };
            (Some(tt), verdict)
        }
        _ => (None, None),
    };
    Ok(PipelineReport {
        f: f.clone(),
        g,
        windows: schedule.cumulative(),
        slices: traces,
        inflated_tau,
        inflated_series,
    })
}

fn trace_exact(s: &SliceSpec, g: &DimensionFunction, windows: &[Window]) -> Result<SliceTrace> {
    let mut inflated = ArcUnion::new();
    let mut deflated = ArcUnion::new();
    let mut trace = SliceTrace {
        x0: s.x0.clone(),
        inflated_union: Vec::new(),
        deflated_content: Vec::new(),
        deflated_union: Vec::new(),
    };
    let mut err = None;
    for w in windows {
        let mut inf_iv = Vec::new();
        let mut def_iv = Vec::new();
        s.for_each_a(*w, |a, psi| {
            if err.is_some() {
                return;
            }
            let q = a[0].unsigned_abs() as f64;
            let r = psi / q;
            let big = match transformed_radius(r, g, 1) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            // The ball family transformed back from `big`, as `Deflate` would produce.
            let small = match untransformed_radius(big, g, 1) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            let c0 = (s.offsets(a)[0] / a[0] as f64).rem_euclid(1.0);
            for k in 0..q as u64 {
                let c = (c0 + k as f64 / q).rem_euclid(1.0);
                inf_iv.push((c, big));
                def_iv.push((c, small));
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        inflated.extend(&inf_iv);
        drop(inf_iv);
        deflated.extend(&def_iv);
        drop(def_iv);
        trace.inflated_union.push(inflated.length());
        trace.deflated_union.push(deflated.length());
        let mut content = crate::fit::Accumulator::new();
        for len in deflated.components() {
            content.add(g.eval(len / 2.0)?);
        }
        trace.deflated_content.push(content.value());
    }
    Ok(trace)
}

fn trace_sampled(
    s: &SliceSpec,
    g: &DimensionFunction,
    windows: &[Window],
    samples: u64,
    seed: u64,
) -> Result<SliceTrace> {
    let m = s.problem.m() as u32;
    let mut trace = SliceTrace {
        x0: s.x0.clone(),
        inflated_union: Vec::new(),
        deflated_content: Vec::new(),
        deflated_union: Vec::new(),
    };
    let mut inflated = SliceBallFamily {
        m: m as usize,
        balls: Vec::new(),
        torus: true,
    };
    let mut deflated = inflated.clone();
    let mut content = crate::fit::Accumulator::new();
    for w in windows {
        let fam = slice_balls(s, *w)?;
        let big = transform_family(&fam, g, m, Direction::Inflate)?;
        let small = transform_family(&big, g, m, Direction::Deflate)?;
        for b in &small.balls {
            content.add(g.eval(b.radius)?);
        }
        inflated.balls.extend(big.balls);
        deflated.balls.extend(small.balls);
        trace
            .inflated_union
            .push(slice_measure_probe(&inflated, samples, seed)?.measure);
        trace
            .deflated_union
            .push(slice_measure_probe(&deflated, samples, seed)?.measure);
        trace.deflated_content.push(content.value());
    }
    Ok(trace)
}

/// A finite union of closed axis-aligned boxes `prod_i [lo_i, hi_i]` in `R^k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductSet {
    pub dim: usize,
    pub boxes: Vec<Vec<(f64, f64)>>,
}

impl ProductSet {
    pub fn new(dim: usize, boxes: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Unsupported("boxes in R^0".into()));
        }
        for b in &boxes {
            if b.len() != dim {
                return Err(Error::Unsupported(format!(
                    "box with {} sides in R^{dim}",
                    b.len()
                )));
            }
            if b.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
                return Err(Error::Unsupported(format!("box {b:?} is not a closed bounded box")));
            }
        }
        Ok(ProductSet { dim, boxes })
    }

    pub fn volume(&self) -> f64 {
        union_volume(&self.boxes)
    }
}

/// Lebesgue measure of a union of boxes by coordinate compression.
fn union_volume(boxes: &[Vec<(f64, f64)>]) -> f64 {
    let Some(first) = boxes.first() else {
        return 0.0;
    };
    let k = first.len();
    let cuts: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut v: Vec<f64> = boxes.iter().flat_map(|b| [b[i].0, b[i].1]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; k];
    if cuts.iter().any(|c| c.len() < 2) {
        return 0.0;
    }
    loop {
        let mid: Vec<f64> = (0..k).map(|i| 0.5 * (cuts[i][idx[i]] + cuts[i][idx[i] + 1])).collect();
        if boxes
            .iter()
            .any(|b| b.iter().zip(&mid).all(|(&(lo, hi), &x)| lo <= x && x <= hi))
        {
            total += (0..k)
                .map(|i| cuts[i][idx[i] + 1] - cuts[i][idx[i]])
                .product::<f64>();
        }
        let mut d = 0;
        loop {
            if d == k {
                return total;
            }
            idx[d] += 1;
            if idx[d] + 1 < cuts[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Number of closed grid cubes of side `t` meeting a union of boxes.
fn grid_cells(boxes: &[Vec<(f64, f64)>], t: f64) -> f64 {
    let cells: Vec<Vec<(f64, f64)>> = boxes
        .iter()
        .map(|b| {
            b.iter()
                .map(|&(lo, hi)| {
                    let a = (lo / t).floor();
                    let z = ((hi / t).ceil() - 1.0).max(a);
                    (a, z + 1.0)
                })
                .collect()
        })
        .collect();
    union_volume(&cells).round()
}

/// Volume of the unit ball of `R^l`.
pub fn unit_ball_volume(l: usize) -> f64 {
    match l {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(l - 2) * 2.0 * std::f64::consts::PI / l as f64,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlicingCheck {
    /// Upper bound for the integral of `H^g_delta` over the slices.
    pub lhs_bound: f64,
    /// Lower bound for `alpha(l) 2^l H^f_delta(A)`.
    pub rhs_bound: f64,
    pub holds: bool,
    pub resolution: f64,
}

/// Checks `int H^g(A cap phi^{-1}{y}) dy <= alpha(l) 2^l H^f(A)` for `phi` the projection
/// to the last `l` coordinates, at the default resolution.
pub fn slicing_inequality_check(a: &ProductSet, f: &DimensionFunction, l: usize) -> Result<SlicingCheck> {
    let side = a
        .boxes
        .iter()
        .flat_map(|b| b.iter().map(|&(lo, hi)| hi - lo))
        .filter(|&s| s > 0.0)
        .fold(1.0f64, f64::min);
    slicing_inequality_check_at(a, f, l, side / 32.0)
}

/// As [`slicing_inequality_check`], with both contents taken at scale `delta`.
///
/// Each slice is covered by the balls circumscribing grid cubes of radius `delta`;
/// the right side uses Lebesgue measure on `A` as a mass distribution.
pub fn slicing_inequality_check_at(
    a: &ProductSet,
    f: &DimensionFunction,
    l: usize,
    delta: f64,
) -> Result<SlicingCheck> {
    let k = a.dim;
    if l == 0 || l >= k {
        return Err(Error::Precondition(format!("need 1 <= l < k = {k}, got l = {l}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain("delta", delta, "(0, inf)"));
    }
    let s = f
        .power_exponent()
        .ok_or_else(|| Error::Unsupported(format!("slicing bounds need a power law, got {f}")))?;
    let g = f.derive_quotient(l as u32)?;
    let d = k - l;
    let e = s - l as f64;
    let volume = a.volume();
    let tol = 1e-12;
    if a.boxes.is_empty() || volume == 0.0 && s <= k as f64 {
        return Ok(SlicingCheck {
            lhs_bound: 0.0,
            rhs_bound: 0.0,
            holds: true,
            resolution: delta,
        });
    }
    if e > d as f64 {
        // Covers by cubes of side t give sum ~ t^{e-d} -> 0 on every slice, and H^f_delta(A) = 0 alike.
        return Ok(SlicingCheck {
            lhs_bound: 0.0,
            rhs_bound: 0.0,
            holds: true,
            resolution: delta,
        });
    }
    let t = 2.0 * delta / (d as f64).sqrt();
    let gd = g.eval(delta)?;
    // Cells of the arrangement of the projected boxes; the slice is constant on each.
    let proj: Vec<Vec<(f64, f64)>> = a.boxes.iter().map(|b| b[d..].to_vec()).collect();
    let cuts: Vec<Vec<f64>> = (0..l)
        .map(|i| {
            let mut v: Vec<f64> = proj.iter().flat_map(|b| [b[i].0, b[i].1]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut lhs = 0.0;
    if cuts.iter().all(|c| c.len() >= 2) {
        let mut idx = vec![0usize; l];
        'cells: loop {
            let mid: Vec<f64> = (0..l).map(|i| 0.5 * (cuts[i][idx[i]] + cuts[i][idx[i] + 1])).collect();
            let slice: Vec<Vec<(f64, f64)>> = a
                .boxes
                .iter()
                .zip(&proj)
                .filter(|(_, pb)| pb.iter().zip(&mid).all(|(&(lo, hi), &y)| lo <= y && y <= hi))
                .map(|(b, _)| b[..d].to_vec())
                .collect();
            if !slice.is_empty() {
                let vol: f64 = (0..l).map(|i| cuts[i][idx[i] + 1] - cuts[i][idx[i]]).product();
                lhs += vol * grid_cells(&slice, t) * gd;
            }
            let mut c = 0;
            loop {
                if c == l {
                    break 'cells;
                }
                idx[c] += 1;
                if idx[c] + 1 < cuts[c].len() {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
        }
    }
    let rhs = unit_ball_volume(l) * 2f64.powi(l as i32) * volume * delta.powf(s - k as f64)
        / unit_ball_volume(k);
    Ok(SlicingCheck {
        lhs_bound: lhs,
        rhs_bound: rhs,
        holds: lhs <= rhs * (1.0 + tol),
        resolution: delta,
    })
}

/// Box unions in `R^2` and `R^3` with the admissible `(f, l)` pairs from `r^2`, `r^1.5`, `r^3`
/// and `l = 1, 2`.
pub fn regression_corpus() -> Vec<(String, ProductSet, DimensionFunction, usize)> {
    let sets: Vec<(&str, ProductSet)> = vec![
        ("unit-square", ProductSet::new(2, vec![vec![(0.0, 1.0), (0.0, 1.0)]]).unwrap()),
        ("strip", ProductSet::new(2, vec![vec![(0.0, 1.0), (0.0, 0.125)]]).unwrap()),
        (
            "l-shape",
            ProductSet::new(2, vec![vec![(0.0, 1.0), (0.0, 0.25)], vec![(0.0, 0.25), (0.0, 1.0)]]).unwrap(),
        ),
        (
            "two-squares",
            ProductSet::new(2, vec![vec![(0.0, 0.3), (0.1, 0.4)], vec![(0.6, 0.9), (0.5, 0.8)]]).unwrap(),
        ),
        (
            "overlap",
            ProductSet::new(2, vec![vec![(0.1, 0.7), (0.2, 0.5)], vec![(0.4, 0.9), (0.3, 0.95)]]).unwrap(),
        ),
        (
            "unit-cube",
            ProductSet::new(3, vec![vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]]).unwrap(),
        ),
        (
            "slab",
            ProductSet::new(3, vec![vec![(0.0, 1.0), (0.0, 1.0), (0.0, 0.125)]]).unwrap(),
        ),
        (
            "rod",
            ProductSet::new(3, vec![vec![(0.0, 0.125), (0.0, 0.125), (0.0, 1.0)]]).unwrap(),
        ),
        (
            "cross",
            ProductSet::new(
                3,
                vec![
                    vec![(0.0, 1.0), (0.4, 0.6), (0.4, 0.6)],
                    vec![(0.4, 0.6), (0.0, 1.0), (0.4, 0.6)],
                    vec![(0.4, 0.6), (0.4, 0.6), (0.0, 1.0)],
                ],
            )
            .unwrap(),
        ),
        (
            "staircase",
            ProductSet::new(
                3,
                vec![
                    vec![(0.0, 0.5), (0.0, 0.5), (0.0, 0.5)],
                    vec![(0.25, 0.75), (0.25, 0.75), (0.25, 0.75)],
                    vec![(0.5, 1.0), (0.5, 1.0), (0.5, 1.0)],
                ],
            )
            .unwrap(),
        ),
    ];
    let mut out = Vec::new();
    for (name, set) in sets {
        for s in [2.0, 1.5, 3.0] {
            let f = DimensionFunction::power(s).unwrap();
            for l in 1..set.dim {
                if f.derive_quotient(l as u32).is_ok() {
                    out.push((format!("{name} r^{s} l={l}"), set.clone(), f.clone(), l));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::satisfies;
    use crate::problems::Support;
    use crate::rng::uniform_point;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn z1(n: usize, m: usize, tau: f64) -> LinearFormsProblem {
        LinearFormsProblem::power(n, m, tau).unwrap().restrict_to_zi(1).unwrap()
    }

    fn single(a: &[i64], psi: f64) -> LinearFormsProblem {
        let mut t = BTreeMap::new();
        t.insert(a.to_vec(), psi);
        LinearFormsProblem::new(2, 1, None, PsiSpec::table(t, Support::zi(1)).unwrap()).unwrap()
    }

    #[test]
    fn hand_solved_slice_ball() {
        // (0 - (0.5 - 1)) / 2 = 0.25 with p = -1, the same arc as p = 1 on the circle.
        let s = SliceSpec::new(single(&[2, 1], 0.1), vec![0.5]).unwrap();
        let fam = slice_balls(&s, Window::new(2, 3).unwrap()).unwrap();
        assert_eq!(fam.balls.len(), 2);
        let b = fam.balls.iter().find(|b| (b.center[0] - 0.25).abs() < 1e-15).unwrap();
        assert_eq!(b.radius, 0.05);
        assert_eq!(((0.0 - (0.5 + b.p[0] as f64)) / 2.0f64).rem_euclid(1.0), 0.25);
        let s = SliceSpec::new(single(&[1, 0], 0.1), vec![0.37]).unwrap();
        let fam = slice_balls(&s, Window::new(1, 2).unwrap()).unwrap();
        assert_eq!(fam.balls.len(), 1);
        assert_eq!(fam.balls[0].center, vec![0.0]);
        assert_eq!(fam.balls[0].radius, 0.1);
    }

    #[test]
    fn requires_z1_support() {
        let p = LinearFormsProblem::power(2, 1, 3.0).unwrap();
        assert!(SliceSpec::new(p, vec![0.2]).is_err());
        assert!(SliceSpec::new(z1(2, 1, 3.0), vec![0.2, 0.3]).is_err());
    }

    #[test]
    fn slice_membership_matches_inequalities() {
        for (n, m) in [(2, 1), (3, 1), (2, 2)] {
            let p = z1(n, m, 1.5);
            let x0 = default_slices(1, n, m).remove(0);
            let s = SliceSpec::new(p.clone(), x0).unwrap();
            let w = Window::new(1, 7).unwrap();
            let fam = slice_balls(&s, w).unwrap();
            let mut y = vec![0.0; m];
            for i in 0..400 {
                uniform_point(21, i, &mut y);
                let x = s.point(&y);
                s.for_each_a(w, |a, _| {
                    let lhs = fam.balls.iter().any(|b| b.a == a && b.contains(&y));
                    assert_eq!(lhs, satisfies(&x, a, &p), "a = {a:?} y = {y:?}");
                });
            }
        }
    }

    #[test]
    fn transform_examples() {
        let fam = SliceBallFamily {
            m: 1,
            balls: vec![SliceBall {
                center: vec![0.5],
                radius: 0.01,
                a: vec![1, 0],
                p: vec![0],
            }],
            torus: true,
        };
        let g = DimensionFunction::power(0.5).unwrap();
        let big = transform_family(&fam, &g, 1, Direction::Inflate).unwrap();
        assert!((big.balls[0].radius - 0.1).abs() < 1e-15);
        let id = DimensionFunction::power(1.0).unwrap();
        assert_eq!(transform_family(&fam, &id, 1, Direction::Inflate).unwrap(), fam);
        let half = shrink_family(&big, 0.5).unwrap();
        assert!((half.balls[0].radius - 0.05).abs() < 1e-15);
        assert!(shrink_family(&fam, 1.0).is_err());
    }

    #[test]
    fn circle_unions() {
        assert!((circle_union_length(&[(0.05, 0.05), (0.5, 0.1)]) - 0.3).abs() < 1e-15);
        // [0.95, 1.05] and [0, 0.1] merge across 0 into [0.95, 1.1].
        assert!((circle_union_length(&[(1.0, 0.05), (0.05, 0.05)]) - 0.15).abs() < 1e-15);
        assert_eq!(circle_union_length(&[(0.3, 0.5)]), 1.0);
        assert_eq!(circle_union_length(&[]), 0.0);
        let mut u = ArcUnion::new();
        u.extend(&[(0.0, 0.1)]);
        u.extend(&[(0.5, 0.1)]);
        let mut c = u.components();
        c.sort_by(f64::total_cmp);
        assert_eq!(c.len(), 2);
        assert!((c[0] - 0.2).abs() < 1e-15 && (c[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn sampled_measure_for_two_dimensional_slices() {
        let fam = SliceBallFamily {
            m: 2,
            balls: vec![SliceBall {
                center: vec![0.0, 0.0],
                radius: 0.25,
                a: vec![1, 0],
                p: vec![0, 0],
            }],
            torus: true,
        };
        let r = slice_measure_probe(&fam, 20_000, 3).unwrap();
        let (lo, hi) = r.wilson_ci.unwrap();
        assert!(lo < 0.25 && 0.25 < hi, "{r:?}");
        assert_eq!(r, slice_measure_probe(&fam, 20_000, 3).unwrap());
    }

    #[test]
    fn divergent_family_fills_and_shrunk_family_follows() {
        // Psi~ = |a|^-2 on Z_1 from height 32: radii h^-3, one arc per residue.
        let s = SliceSpec::new(z1(2, 1, 2.0), default_slices(1, 2, 1).remove(0)).unwrap();
        let mut full = ArcUnion::new();
        let mut shrunk = ArcUnion::new();
        let mut lens = Vec::new();
        for w in Schedule::from_edges(vec![32, 48, 64, 96, 128]).unwrap().windows() {
            let fam = slice_balls(&s, w).unwrap();
            let iv: Vec<(f64, f64)> = fam.balls.iter().map(|b| (b.center[0], b.radius)).collect();
            full.extend(&iv);
            let sh = shrink_family(&fam, 1.0 / 3.0).unwrap();
            let iv: Vec<(f64, f64)> = sh.balls.iter().map(|b| (b.center[0], b.radius)).collect();
            shrunk.extend(&iv);
            lens.push((full.length(), shrunk.length()));
        }
        assert!(lens.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1));
        assert!(lens.last().unwrap().0 > 0.95, "{lens:?}");
        assert!(lens.last().unwrap().1 > 0.6, "{lens:?}");
    }

    #[test]
    fn pipeline_collapses_for_ambient_power() {
        let p = z1(2, 1, 3.0);
        let f = DimensionFunction::power(2.0).unwrap();
        let sched = Schedule::from_edges(vec![4, 8, 12, 16, 20]).unwrap();
        let r = slice_to_hausdorff_pipeline(&p, &f, &default_slices(2, 2, 1), &sched, 0, 1).unwrap();
        assert_eq!(r.inflated_tau, Some(3.0));
        for t in &r.slices {
            assert_eq!(t.inflated_union, t.deflated_union);
        }
    }

    #[test]
    fn unit_square_check() {
        let a = ProductSet::new(2, vec![vec![(0.0, 1.0), (0.0, 1.0)]]).unwrap();
        let f = DimensionFunction::power(2.0).unwrap();
        let c = slicing_inequality_check(&a, &f, 1).unwrap();
        // Unit slices cost exactly 1/2 each; the right side is 4/pi.
        assert!((c.lhs_bound - 0.5).abs() < 1e-12);
        assert!((c.rhs_bound - 4.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!(c.holds);
        let empty = ProductSet::new(2, vec![]).unwrap();
        let c = slicing_inequality_check(&empty, &f, 1).unwrap();
        assert_eq!((c.lhs_bound, c.rhs_bound, c.holds), (0.0, 0.0, true));
        assert!(slicing_inequality_check(&a, &DimensionFunction::power(1.5).unwrap(), 2).is_err());
        assert!(ProductSet::new(2, vec![vec![(0.0, 1.0)]]).is_err());
    }

    #[test]
    fn corpus_holds() {
        let corpus = regression_corpus();
        assert!(corpus.len() >= 12);
        for (name, a, f, l) in &corpus {
            let c = slicing_inequality_check(a, f, *l).unwrap();
            assert!(c.holds, "{name}: {c:?}");
        }
    }

    #[test]
    fn thin_strips() {
        let f = DimensionFunction::power(2.0).unwrap();
        for eps in [1.0, 0.5, 0.25] {
            let a = ProductSet::new(2, vec![vec![(0.0, 1.0), (0.0, eps)]]).unwrap();
            let c = slicing_inequality_check(&a, &f, 1).unwrap();
            assert!((c.lhs_bound - eps / 2.0).abs() < 1e-12, "{c:?}");
            assert!(c.holds);
        }
    }

    #[test]
    fn union_volume_by_inclusion_exclusion() {
        let boxes = vec![
            vec![(0.0, 2.0), (0.0, 1.0)],
            vec![(1.0, 3.0), (0.5, 2.0)],
        ];
        assert!((union_volume(&boxes) - (2.0 + 3.0 - 0.5)).abs() < 1e-12);
        assert_eq!(grid_cells(&[vec![(0.0, 1.0)]], 0.25), 4.0);
        assert_eq!(grid_cells(&[vec![(0.1, 0.1)]], 0.25), 1.0);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn inflate_then_deflate_is_identity(r in 1e-9f64..0.3, s in 0.2f64..1.0) {
            let g = DimensionFunction::power(s).unwrap();
            let fam = SliceBallFamily {
                m: 1,
                balls: vec![SliceBall { center: vec![0.1], radius: r, a: vec![1, 0], p: vec![0] }],
                torus: true,
            };
            let back = transform_family(&transform_family(&fam, &g, 1, Direction::Inflate).unwrap(), &g, 1, Direction::Deflate).unwrap();
            prop_assert!((back.balls[0].radius - r).abs() <= 1e-12 * r);
        }

        #[test]
        fn shrink_composes(d1 in 0.01f64..0.99, d2 in 0.01f64..0.99, r in 1e-6f64..0.5) {
            let fam = SliceBallFamily {
                m: 1,
                balls: vec![SliceBall { center: vec![0.1], radius: r, a: vec![1, 0], p: vec![0] }],
                torus: true,
            };
            let two = shrink_family(&shrink_family(&fam, d1).unwrap(), d2).unwrap();
            let one = shrink_family(&fam, d1 * d2).unwrap();
            prop_assert!((two.balls[0].radius - one.balls[0].radius).abs() <= 4.0 * f64::EPSILON * r);
        }

        #[test]
        fn arc_union_matches_sampling(arcs in proptest::collection::vec((0.0f64..1.0, 0.0f64..0.2), 1..12)) {
            let len = circle_union_length(&arcs);
            let n = 4000;
            let covered = (0..n).filter(|i| {
                let y = (*i as f64 + 0.5) / n as f64;
                arcs.iter().any(|&(c, r)| circle_distance(y, c) < r)
            }).count() as f64 / n as f64;
            prop_assert!((len - covered).abs() <= 2.0 * arcs.len() as f64 / n as f64 + 1e-12);
        }
    }
}
