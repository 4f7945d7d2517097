//! Resonant planes, their neighborhoods, and the covering counts used in the
//! convergence argument.
//!
//! A point `X` of `I^{n x m}` is stored column by column: `x_j = X[j n .. (j+1) n]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dimfun::{Ball, Norm};
use crate::error::{Error, Result};
use crate::problems::{for_each_in_shell, LinearFormsProblem, SquaresProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PlaneKind {
    /// `a . x - b_j = p_j`.
    Linear,
    /// `a^2 . x = p^2` with `n = 2`, `m = 1`.
    Squared,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonantPlane {
    a: Vec<i64>,
    p: Vec<i64>,
    b: Vec<f64>,
    kind: PlaneKind,
}

impl ResonantPlane {
    pub fn new(a: Vec<i64>, p: Vec<i64>, b: Vec<f64>, kind: PlaneKind) -> Result<Self> {
        if a.iter().all(|&x| x == 0) {
            return Err(Error::domain("a", "0", "Z^n \\ {0}"));
        }
        if p.len() != b.len() {
            return Err(Error::Precondition("p and b must both have m entries".into()));
        }
        if kind == PlaneKind::Squared
            && (a.len() != 2 || p.len() != 1 || b.iter().any(|&x| x != 0.0))
        {
            return Err(Error::Precondition(
                "squared planes need n = 2, m = 1 and b = 0".into(),
            ));
        }
        Ok(ResonantPlane { a, p, b, kind })
    }

    pub fn linear(a: Vec<i64>, p: Vec<i64>, b: Vec<f64>) -> Result<Self> {
        Self::new(a, p, b, PlaneKind::Linear)
    }

    pub fn squared(a: [i64; 2], p: i64) -> Result<Self> {
        Self::new(a.to_vec(), vec![p], vec![0.0], PlaneKind::Squared)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn a(&self) -> &[i64] {
        &self.a
    }

    pub fn p(&self) -> &[i64] {
        &self.p
    }

    pub fn kind(&self) -> PlaneKind {
        self.kind
    }

    /// Normal vector: `a`, or `a^2` for squared planes.
    pub fn normal(&self) -> Vec<f64> {
        match self.kind {
            PlaneKind::Linear => self.a.iter().map(|&x| x as f64).collect(),
            PlaneKind::Squared => self.a.iter().map(|&x| (x * x) as f64).collect(),
        }
    }

    pub fn normal_norm(&self) -> f64 {
        self.normal().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Signed residual `a . x_j - b_j - p_j` (or `a^2 . x - p^2`).
    pub fn residual(&self, x: &[f64], j: usize) -> f64 {
        let n = self.n();
        let col = &x[j * n..(j + 1) * n];
        match self.kind {
            PlaneKind::Linear => (dot_i(&self.a, col) - self.b[j]) - self.p[j] as f64,
            PlaneKind::Squared => {
                let v: f64 = self
                    .a
                    .iter()
                    .zip(col)
                    .map(|(&a, &x)| (a * a) as f64 * x)
                    .sum();
                v - (self.p[0] * self.p[0]) as f64
            }
        }
    }
}

#[inline]
fn dot_i(a: &[i64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (ai, xi) in a.iter().zip(x) {
        s += *ai as f64 * xi;
    }
    s
}

/// Distance to the nearest integer.
#[inline]
pub fn dist_to_int(v: f64) -> f64 {
    (v - v.round()).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Neighborhood {
    pub plane: ResonantPlane,
    pub delta: f64,
}

impl Neighborhood {
    pub fn new(plane: ResonantPlane, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::domain("delta", delta, "[0, inf)"));
        }
        Ok(Neighborhood { plane, delta })
    }

    /// Every column lies at Euclidean distance `< delta` from its plane; empty when `delta = 0`.
    pub fn contains(&self, x: &[f64]) -> bool {
        if self.delta == 0.0 {
            return false;
        }
        let norm = self.plane.normal_norm();
        (0..self.plane.m()).all(|j| self.plane.residual(x, j).abs() / norm < self.delta)
    }
}

pub fn neighborhood_membership(x: &[f64], nb: &Neighborhood) -> bool {
    nb.contains(x)
}

/// `max_j ||a . x_j - b_j|| < Psi(a)`.
pub fn satisfies(x: &[f64], a: &[i64], p: &LinearFormsProblem) -> bool {
    let psi = p.psi().value(a);
    psi > 0.0 && max_torus_distance(x, a, p.b()) < psi
}

/// `max_j ||a . x_j - b_j||`.
pub fn max_torus_distance(x: &[f64], a: &[i64], b: &[f64]) -> f64 {
    let n = a.len();
    b.iter()
        .enumerate()
        .map(|(j, bj)| dist_to_int(dot_i(a, &x[j * n..(j + 1) * n]) - bj))
        .fold(0.0, f64::max)
}

/// `|a^2 . x - p^2| < psi(|a|)` for some integer `p`.
pub fn satisfies_squares(x: &[f64], a: &[i64], sp: &SquaresProblem) -> bool {
    let h = crate::problems::height(a);
    let psi = sp.value(h);
    psi > 0.0 && square_distance(x, a) < psi
}

/// `min_p |a^2 . x - p^2|`.
pub fn square_distance(x: &[f64], a: &[i64]) -> f64 {
    let v = (a[0] * a[0]) as f64 * x[0] + (a[1] * a[1]) as f64 * x[1];
    let r = v.max(0.0).sqrt().floor();
    [r - 1.0, r, r + 1.0]
        .iter()
        .filter(|p| **p >= 0.0)
        .map(|p| (v - p * p).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Per-coordinate integer ranges of the shifts `p` whose neighborhood meets the unit cube.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftRange {
    pub ranges: Vec<(i64, i64)>,
}

impl ShiftRange {
    pub fn count(&self) -> u128 {
        self.ranges
            .iter()
            .map(|&(lo, hi)| if hi >= lo { (hi - lo + 1) as u128 } else { 0 })
            .product()
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.iter()
            .zip(&self.ranges)
            .all(|(x, &(lo, hi))| lo <= *x && *x <= hi)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let total = self.count();
        let mut cur: Vec<i64> = self.ranges.iter().map(|r| r.0).collect();
        let mut emitted = 0u128;
        std::iter::from_fn(move || {
            if emitted >= total {
                return None;
            }
            let out = cur.clone();
            emitted += 1;
            for (i, &(lo, hi)) in self.ranges.iter().enumerate().rev() {
                if cur[i] < hi {
                    cur[i] += 1;
                    break;
                }
                cur[i] = lo;
            }
            Some(out)
        })
    }
}

/// Shifts `p` with `Delta(R_{a,p}^b, delta)` meeting `I^{n x m}`.
///
/// Coordinate `j` ranges over the integers strictly inside
/// `(min a.x - b_j - w, max a.x - b_j + w)` with `w = delta |a|_2`, the extremes
/// taken over the closed cube; closed when `delta = 0`.
pub fn relevant_shifts(a: &[i64], b: &[f64], delta: f64) -> Result<ShiftRange> {
    if a.iter().all(|&x| x == 0) {
        return Err(Error::domain("a", "0", "Z^n \\ {0}"));
    }
    if !(delta >= 0.0) {
        return Err(Error::domain("delta", delta, "[0, inf)"));
    }
    let neg: i64 = a.iter().map(|&x| x.min(0)).sum();
    let pos: i64 = a.iter().map(|&x| x.max(0)).sum();
    let w = delta * (a.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt();
    let ranges = b
        .iter()
        .map(|bj| {
            let lo = neg as f64 - bj - w;
            let hi = pos as f64 - bj + w;
            if w == 0.0 {
                (lo.ceil() as i64, hi.floor() as i64)
            } else {
                (lo.floor() as i64 + 1, hi.ceil() as i64 - 1)
            }
        })
        .collect();
    Ok(ShiftRange { ranges })
}

/// Constant `C` with `#relevant_shifts <= C |a|^m` whenever `delta <= delta_max`.
pub fn shift_constant(n: usize, m: usize, delta_max: f64) -> f64 {
    let n = n as f64;
    (n + 1.0 + 2.0 * delta_max * n.sqrt()).powi(m as i32)
}

/// For every `a` with `1 <= |a| <= h_max`: `satisfies` agrees with membership in
/// some neighborhood `Delta(R_{a,p}^b, Psi(a)/|a|_2)` with `p` from [`relevant_shifts`].
pub fn equivalence_check(x: &[f64], p: &LinearFormsProblem, h_max: u64) -> bool {
    (1..=h_max).all(|h| {
        let mut ok = true;
        for_each_in_shell(p.n(), h, |a| {
            if ok {
                ok = equivalent_at(x, a, p);
            }
        });
        ok
    })
}

fn equivalent_at(x: &[f64], a: &[i64], p: &LinearFormsProblem) -> bool {
    let lhs = satisfies(x, a, p);
    let psi = p.psi().value(a);
    let norm = a.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
    let delta = psi / norm;
    let rhs = if delta == 0.0 {
        false
    } else {
        let shifts = match relevant_shifts(a, p.b(), delta) {
            Ok(s) => s,
            Err(_) => return false,
        };
        let n = p.n();
        // The neighborhood condition factors over columns, so search each p_j
        // separately among the integers within psi of a . x_j - b_j.
        (0..p.m()).all(|j| {
            let v = dot_i(a, &x[j * n..(j + 1) * n]) - p.b()[j];
            let (lo, hi) = shifts.ranges[j];
            let first = ((v - psi).floor() as i64).max(lo);
            let last = ((v + psi).ceil() as i64).min(hi);
            (first..=last).any(|pj| (v - pj as f64).abs() / norm < delta)
        })
    };
    lhs == rhs
}

/// All `a` with `h1 <= |a| <= h2`, `Psi(a) > 0` and `satisfies(x, a, p)`, sorted lexicographically.
pub fn hit_list(x: &[f64], p: &LinearFormsProblem, h1: u64, h2: u64) -> Result<Vec<Vec<i64>>> {
    if h1 > h2 {
        return Err(Error::Precondition("H1 must not exceed H2".into()));
    }
    let per_shell: Vec<Vec<Vec<i64>>> = (h1.max(1)..=h2)
        .into_par_iter()
        .map(|h| {
            let mut v = Vec::new();
            for_each_in_shell(p.n(), h, |a| {
                if satisfies(x, a, p) {
                    v.push(a.to_vec());
                }
            });
            v
        })
        .collect();
    let mut out: Vec<Vec<i64>> = per_shell.into_iter().flatten().collect();
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverReport {
    pub count: u128,
    /// `C_geom (1/r)^{(n-1)m}`.
    pub bound: f64,
    pub constant: f64,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balls: Option<Vec<Ball>>,
}

/// Constant of [`cover_neighborhood`]: `(n + sqrt(n) + 1)^m`, valid for `delta <= r <= 1`.
pub fn cover_constant(n: usize, m: usize) -> f64 {
    let n = n as f64;
    (n + n.sqrt() + 1.0).powi(m as i32)
}

/// Per-form cover: tangential grid cells of side `2r`; along the dominant
/// coordinate, consecutive balls from the low end of each cell's interval.
struct FormCover {
    istar: usize,
    side: f64,
    count: u128,
    // (cell multi-index, interval low end, ball count); filled only when balls are wanted
    columns: Vec<(Vec<usize>, f64, u64)>,
}

/// Interval of the dominant coordinate `x_{i*}` compatible with some point of
/// the tangential cell box `[lo_i, hi_i]`: `|sum c_i x_i - value| < w`.
pub(crate) fn cell_interval(
    coef: &[f64],
    istar: usize,
    cell_lo: &[f64],
    cell_hi: &[f64],
    value: f64,
    w: f64,
) -> Option<(f64, f64)> {
    let (mut tmin, mut tmax) = (0.0, 0.0);
    for i in 0..coef.len() {
        if i == istar {
            continue;
        }
        let (u, v) = (coef[i] * cell_lo[i], coef[i] * cell_hi[i]);
        tmin += u.min(v);
        tmax += u.max(v);
    }
    let c = coef[istar];
    let (a, b) = ((value - w - tmax) / c, (value + w - tmin) / c);
    let (lo, hi) = (a.min(b).max(0.0), a.max(b).min(1.0));
    (hi > lo).then_some((lo, hi))
}

fn form_cover(coef: &[f64], value: f64, w: f64, r: f64, keep: bool) -> FormCover {
    let n = coef.len();
    let istar = (0..n)
        .max_by(|&i, &j| coef[i].abs().total_cmp(&coef[j].abs()).then(j.cmp(&i)))
        .unwrap();
    let side = 2.0 * r;
    let cells = (1.0 / side).ceil().max(1.0) as usize;
    let mut columns = Vec::new();
    let mut count = 0u128;
    let tang: Vec<usize> = (0..n).filter(|&i| i != istar).collect();
    let mut idx = vec![0usize; tang.len()];
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    loop {
        for (k, &i) in tang.iter().enumerate() {
            lo[i] = idx[k] as f64 * side;
            hi[i] = ((idx[k] + 1) as f64 * side).min(1.0);
        }
        if let Some((a, b)) = cell_interval(coef, istar, &lo, &hi, value, w) {
            // Relative slack absorbs rounding when the interval is a whole number of sides.
            let balls = ((b - a) / side * (1.0 - 1e-12)).ceil().max(1.0) as u64;
            count += balls as u128;
            if keep {
                columns.push((idx.clone(), a, balls));
            }
        }
        let mut k = tang.len();
        loop {
            if k == 0 {
                return FormCover {
                    istar,
                    side,
                    count,
                    columns,
                };
            }
            k -= 1;
            if idx[k] + 1 < cells {
                idx[k] += 1;
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Cover `Delta ∩ I^{n x m}` by supremum-norm balls of radius `r`.
///
/// The neighborhood is a product over the `m` columns, so the cover is the
/// product of per-column covers. Balls are listed only when `with_balls` is set.
pub fn cover_neighborhood(nb: &Neighborhood, r: f64, with_balls: bool) -> Result<CoverReport> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain("r", r, "(0, inf)"));
    }
    let (n, m) = (nb.plane.n(), nb.plane.m());
    let constant = cover_constant(n, m);
    let bound = constant * (1.0 / r).powi(((n - 1) * m) as i32);
    if nb.delta == 0.0 {
        return Ok(CoverReport {
            count: 0,
            bound,
            constant,
            certified: true,
            balls: with_balls.then(Vec::new),
        });
    }
    let coef = nb.plane.normal();
    let w = nb.delta * nb.plane.normal_norm();
    let forms: Vec<FormCover> = (0..m)
        .map(|j| {
            let value = match nb.plane.kind {
                PlaneKind::Linear => nb.plane.b[j] + nb.plane.p[j] as f64,
                PlaneKind::Squared => (nb.plane.p[0] * nb.plane.p[0]) as f64,
            };
            form_cover(&coef, value, w, r, with_balls)
        })
        .collect();
    let count: u128 = forms.iter().map(|f| f.count).product();
    let balls = with_balls.then(|| {
        let per_form: Vec<Vec<Vec<f64>>> = forms
            .iter()
            .map(|fc| {
                let mut centers = Vec::new();
                for (idx, low, k) in &fc.columns {
                    for t in 0..*k {
                        let mut c = vec![0.0; n];
                        let mut it = idx.iter();
                        for (i, ci) in c.iter_mut().enumerate() {
                            *ci = if i == fc.istar {
                                low + r * (2 * t + 1) as f64
                            } else {
                                (*it.next().unwrap() as f64 + 0.5) * fc.side
                            };
                        }
                        centers.push(c);
                    }
                }
                centers
            })
            .collect();
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for centers in &per_form {
            out = out
                .iter()
                .flat_map(|prefix| {
                    centers.iter().map(move |c| {
                        let mut v = prefix.clone();
                        v.extend_from_slice(c);
                        v
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|center| Ball {
                center,
                radius: r,
                norm: Norm::Supremum,
            })
            .collect()
    });
    Ok(CoverReport {
        count,
        bound,
        constant,
        certified: (count as f64) <= bound,
        balls,
    })
}
