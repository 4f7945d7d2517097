//! Box counting on dyadic grids and grid-cover content bounds.

use rayon::prelude::*;
use serde::Serialize;

use super::generation::{Generation, GenerationSet};
use crate::dimfun::{DimensionFunction, Norm};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::windows::Window;

/// How a grid box is decided to meet the set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sampling {
    /// Exact intersection of the box with the slabs; ambient dimension at most 2.
    Exact,
    /// Probe the centers of an `s x ... x s` subgrid.
    Subgrid(u32),
    /// Probe the box center only.
    Center,
}

impl Sampling {
    /// `Exact` in dimension at most 2, 3x3 subgrids otherwise.
    pub fn default_for(dim: usize) -> Self {
        if dim <= 2 {
            Sampling::Exact
        } else {
            Sampling::Subgrid(3)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub slope_stderr: f64,
}

impl std::fmt::Display for Sampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sampling::Exact => f.write_str("exact"),
            Sampling::Subgrid(k) => write!(f, "subgrid:{k}"),
            Sampling::Center => f.write_str("center"),
        }
    }
}

impl std::str::FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(Sampling::Exact),
            "center" => Ok(Sampling::Center),
            t => t
                .strip_prefix("subgrid:")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 1)
                .map(Sampling::Subgrid)
                .ok_or_else(|| Error::Parse(format!("bad sampling `{s}`: exact, center or subgrid:k"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountReport {
    pub generations: Vec<Window>,
    /// Box sides, coarsest first.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub fit: BoxFit,
    /// Indices `[start, end]` of the scales entering the fit.
    pub fit_range: (usize, usize),
    /// Slopes between adjacent scales.
    pub local_slopes: Vec<f64>,
    pub sampling: Sampling,
    pub out_of_theorem: bool,
}

/// Occupied boxes of side `2^{-l}` for every `l` in `levels`.
pub fn occupied_counts(set: &GenerationSet, levels: (u32, u32), sampling: Sampling) -> Result<Vec<u64>> {
    let (coarse, fine) = levels;
    if coarse > fine {
        return Err(Error::Precondition("empty level range".into()));
    }
    let dim = set.dim();
    if fine as usize * dim > 62 {
        return Err(Error::Precondition(format!(
            "2^-{fine} grids in dimension {dim} are too fine"
        )));
    }
    match sampling {
        Sampling::Exact if dim > 2 => {
            return Err(Error::Unsupported(format!(
                "exact box intersection in dimension {dim}; use subgrid probes"
            )))
        }
        Sampling::Subgrid(0) => {
            return Err(Error::Precondition("subgrid size must be positive".into()))
        }
        _ => {}
    }
    let counter = Counter {
        gens: &set.generations,
        dim,
        fine,
        sampling,
    };
    let root = Node {
        cell: vec![0; dim],
        level: 0,
        cands: set
            .generations
            .iter()
            .map(|g| (0..g.pieces() as u32).collect())
            .collect(),
    };
    let mut counts = vec![0u64; fine as usize + 1];
    // Split a few levels serially, then hand subtrees to the pool.
    let split = 3.min(fine);
    let mut frontier = vec![root];
    for _ in 0..split {
        let mut next = Vec::new();
        for node in frontier {
            next.extend(counter.children(&node));
        }
        frontier = next;
    }
    let sub: Vec<Vec<u64>> = frontier
        .par_iter()
        .map(|node| {
            let mut c = vec![0u64; fine as usize + 1];
            counter.walk(node, &mut c);
            c
        })
        .collect();
    for c in &sub {
        for (t, v) in counts.iter_mut().zip(c) {
            *t += v;
        }
    }
    // Coarse levels above the split come from their occupied descendants.
    let occupied: Vec<Vec<u64>> = frontier
        .iter()
        .zip(&sub)
        .filter(|(_, c)| c[split as usize] > 0)
        .map(|(node, _)| node.cell.clone())
        .collect();
    for l in 0..split {
        let shift = split - l;
        let mut parents: Vec<Vec<u64>> = occupied
            .iter()
            .map(|c| c.iter().map(|v| v >> shift).collect())
            .collect();
        parents.sort();
        parents.dedup();
        counts[l as usize] = parents.len() as u64;
    }
    Ok(counts[coarse as usize..=fine as usize].to_vec())
}

struct Node {
    cell: Vec<u64>,
    level: u32,
    cands: Vec<Vec<u32>>,
}

struct Counter<'a> {
    gens: &'a [Generation],
    dim: usize,
    fine: u32,
    sampling: Sampling,
}

impl Counter<'_> {
    fn lo(&self, cell: &[u64], level: u32) -> (Vec<f64>, f64) {
        let side = (-(level as f64)).exp2();
        (cell.iter().map(|&c| c as f64 * side).collect(), side)
    }

    fn children(&self, node: &Node) -> Vec<Node> {
        let level = node.level + 1;
        let mut out = Vec::new();
        for bits in 0..(1u64 << self.dim) {
            let cell: Vec<u64> = node
                .cell
                .iter()
                .enumerate()
                .map(|(i, &c)| 2 * c + ((bits >> i) & 1))
                .collect();
            let (lo, side) = self.lo(&cell, level);
            let mut order: Vec<usize> = (0..self.gens.len()).collect();
            order.sort_by_key(|&g| node.cands[g].len());
            let mut cands = vec![Vec::new(); self.gens.len()];
            let mut alive = true;
            for g in order {
                let gen = &self.gens[g];
                cands[g] = node.cands[g]
                    .iter()
                    .copied()
                    .filter(|&i| gen.piece_meets_box(i as usize, &lo, side))
                    .collect();
                if cands[g].is_empty() {
                    alive = false;
                    break;
                }
            }
            if alive {
                out.push(Node { cell, level, cands });
            }
        }
        out
    }

    /// Counts occupied descendants per level; returns whether `node` is occupied.
    fn walk(&self, node: &Node, counts: &mut [u64]) -> bool {
        let occupied = if node.level == self.fine {
            self.leaf(node)
        } else {
            let mut any = false;
            for child in self.children(node) {
                any |= self.walk(&child, counts);
            }
            any
        };
        if occupied {
            counts[node.level as usize] += 1;
        }
        occupied
    }

    fn leaf(&self, node: &Node) -> bool {
        let (lo, side) = self.lo(&node.cell, node.level);
        match self.sampling {
            Sampling::Exact => {
                let (x0, y0, w, h) = if self.dim == 1 {
                    (lo[0], 0.0, side, 1.0)
                } else {
                    (lo[0], lo[1], side, side)
                };
                let poly = vec![[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]];
                let mut order: Vec<usize> = (0..self.gens.len()).collect();
                order.sort_by_key(|&g| node.cands[g].len());
                self.feasible(&poly, &order, &node.cands)
            }
            Sampling::Subgrid(s) => self.probe(node, &lo, side, s),
            Sampling::Center => self.probe(node, &lo, side, 1),
        }
    }

    fn feasible(&self, poly: &[[f64; 2]], order: &[usize], cands: &[Vec<u32>]) -> bool {
        let Some((&g, rest)) = order.split_first() else {
            return area(poly) > 0.0;
        };
        let gen = &self.gens[g];
        cands[g].iter().any(|&i| {
            let mut p = poly.to_vec();
            for s in gen.slabs(i as usize) {
                let nv = gen.normal(s);
                let n = [nv[0], if self.dim > 1 { nv[1] } else { 0.0 }];
                let (c, hw) = (gen.centers[s], gen.halves[s]);
                p = clip(&p, n, c + hw);
                p = clip(&p, [-n[0], -n[1]], hw - c);
                if p.len() < 3 {
                    return false;
                }
            }
            area(&p) > 0.0 && self.feasible(&p, rest, cands)
        })
    }

    fn probe(&self, node: &Node, lo: &[f64], side: f64, s: u32) -> bool {
        let total = (s as u64).pow(self.dim as u32);
        let mut x = vec![0.0; self.dim];
        (0..total).any(|mut t| {
            for (i, xi) in x.iter_mut().enumerate() {
                let k = t % s as u64;
                t /= s as u64;
                *xi = lo[i] + (k as f64 + 0.5) * side / s as f64;
            }
            self.gens.iter().enumerate().all(|(g, gen)| {
                node.cands[g]
                    .iter()
                    .any(|&i| gen.piece_contains(i as usize, &x))
            })
        })
    }
}

/// Sutherland-Hodgman clip of a convex polygon to `n . x <= c`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let val = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - c;
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (vp, vq) = (val(&p), val(&q));
        if vp <= 0.0 {
            out.push(p);
        }
        if (vp < 0.0 && vq > 0.0) || (vp > 0.0 && vq < 0.0) {
            let t = vp / (vp - vq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}

/// Box counts at sides `2^{-l}`, `l` in `levels`, with a least-squares slope of
/// `log N` against `log(1/delta)` over `fit_range` (all scales by default).
pub fn box_count(
    set: &GenerationSet,
    levels: (u32, u32),
    sampling: Sampling,
    fit_range: Option<(usize, usize)>,
) -> Result<BoxCountReport> {
    let (coarse, fine) = levels;
    if fine < coarse + 4 {
        return Err(Error::Precondition("box counting needs at least 5 scales".into()));
    }
    let counts = occupied_counts(set, levels, sampling)?;
    let scales: Vec<f64> = (coarse..=fine).map(|l| (-(l as f64)).exp2()).collect();
    let (start, end) = fit_range.unwrap_or((0, scales.len() - 1));
    if start >= end || end >= scales.len() {
        return Err(Error::Precondition(format!(
            "fit range ({start}, {end}) outside 0..{}",
            scales.len()
        )));
    }
    let local_slopes = counts
        .windows(2)
        .map(|c| {
            if c[0] == 0 {
                0.0
            } else {
                (c[1] as f64 / c[0] as f64).log2()
            }
        })
        .collect();
    let fit = if counts[start..=end].contains(&0) {
        BoxFit {
            slope: 0.0,
            intercept: f64::NEG_INFINITY,
            residual_rms: 0.0,
            slope_stderr: 0.0,
        }
    } else {
        let xs: Vec<f64> = scales[start..=end].iter().map(|d| -d.log2()).collect();
        let ys: Vec<f64> = counts[start..=end].iter().map(|&c| (c as f64).log2()).collect();
        let f = fit_line(&xs, &ys).ok_or_else(|| Error::Precondition("degenerate fit".into()))?;
        BoxFit {
            slope: f.slope,
            intercept: f.intercept,
            residual_rms: f.residual_rms,
            slope_stderr: f.slope_stderr,
        }
    };
    Ok(BoxCountReport {
        generations: set.windows().to_vec(),
        scales,
        counts,
        fit,
        fit_range: (start, end),
        local_slopes,
        sampling,
        out_of_theorem: !set.theorem_mode(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContentReport {
    pub f: DimensionFunction,
    pub rho: f64,
    pub norm: Norm,
    pub boxes: u64,
    pub radius: f64,
    pub value: f64,
}

/// `sum f(r)` over balls circumscribing the occupied boxes of side `rho = 2^{-level}`.
pub fn content_upper_bound(
    set: &GenerationSet,
    f: &DimensionFunction,
    level: u32,
    norm: Norm,
    sampling: Sampling,
) -> Result<ContentReport> {
    let rho = (-(level as f64)).exp2();
    let boxes = occupied_counts(set, (level, level), sampling)?[0];
    let radius = match norm {
        Norm::Supremum => rho / 2.0,
        Norm::Euclidean => rho * (set.dim() as f64).sqrt() / 2.0,
    };
    let value = if boxes == 0 {
        0.0
    } else {
        boxes as f64 * f.eval(radius)?
    };
    Ok(ContentReport {
        f: f.clone(),
        rho,
        norm,
        boxes,
        radius,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::generation::{Piece, Slab};
    use crate::problems::{LinearFormsProblem, Problem, SquaresProblem};
    use crate::windows::Schedule;
    use proptest::prelude::*;

    fn strip(width: f64) -> GenerationSet {
        let s = Slab {
            normal: vec![1.0, 0.0],
            center: 0.0,
            half_width: width,
        };
        GenerationSet::from_pieces(2, vec![vec![Piece(vec![s])]]).unwrap()
    }

    #[test]
    fn sampling_strings() {
        for s in [Sampling::Exact, Sampling::Center, Sampling::Subgrid(3)] {
            assert_eq!(s.to_string().parse::<Sampling>().unwrap(), s);
        }
        assert!("subgrid:0".parse::<Sampling>().is_err());
    }

    #[test]
    fn thin_strip_counts_like_a_line() {
        let r = box_count(&strip(1e-9), (2, 8), Sampling::Exact, None).unwrap();
        let expect: Vec<u64> = (2..=8).map(|l| 1u64 << l).collect();
        assert_eq!(r.counts, expect);
        assert!((r.fit.slope - 1.0).abs() < 1e-12);
        let c = box_count(&strip(1e-9), (2, 8), Sampling::Center, None).unwrap();
        assert!(c.counts.iter().all(|&n| n == 0));
    }

    #[test]
    fn whole_and_empty_sets() {
        let whole = GenerationSet::from_pieces(2, vec![]).unwrap();
        let n = occupied_counts(&whole, (0, 5), Sampling::Exact).unwrap();
        assert_eq!(n, vec![1, 4, 16, 64, 256, 1024]);
        let empty = GenerationSet::from_pieces(2, vec![vec![]]).unwrap();
        assert_eq!(occupied_counts(&empty, (0, 5), Sampling::Exact).unwrap(), vec![0; 6]);
    }

    #[test]
    fn content_of_square_and_empty_set() {
        let whole = GenerationSet::from_pieces(2, vec![]).unwrap();
        let f = DimensionFunction::power(2.0).unwrap();
        let c = content_upper_bound(&whole, &f, 4, Norm::Supremum, Sampling::Exact).unwrap();
        assert_eq!(c.boxes, 256);
        assert_eq!(c.radius, 1.0 / 32.0);
        assert_eq!(c.value, 0.25);
        let empty = GenerationSet::from_pieces(2, vec![vec![]]).unwrap();
        let c = content_upper_bound(&empty, &f, 4, Norm::Supremum, Sampling::Exact).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn exact_count_matches_brute_force_on_a_small_grid() {
        let p = Problem::Squares(SquaresProblem::power(1.0).unwrap());
        let set = GenerationSet::new(&p, &Schedule::dyadic(1, 3).unwrap().windows()).unwrap();
        // Oracle: a box is occupied when some dense sample inside it lies in the set.
        let level = 4;
        let n = 1u64 << level;
        let fine = 64;
        let mut oracle = 0;
        for i in 0..n {
            for j in 0..n {
                let mut hit = false;
                'outer: for u in 0..fine {
                    for v in 0..fine {
                        let x = [
                            (i as f64 + (u as f64 + 0.5) / fine as f64) / n as f64,
                            (j as f64 + (v as f64 + 0.5) / fine as f64) / n as f64,
                        ];
                        if set.contains(&x) {
                            hit = true;
                            break 'outer;
                        }
                    }
                }
                oracle += hit as u64;
            }
        }
        let exact = occupied_counts(&set, (level, level), Sampling::Exact).unwrap()[0];
        let probe = occupied_counts(&set, (level, level), Sampling::Subgrid(fine as u32)).unwrap()[0];
        assert_eq!(probe, oracle);
        assert!(exact >= oracle);
        assert!(exact <= oracle + oracle / 20, "exact {exact} oracle {oracle}");
    }

    #[test]
    fn probes_respect_generations_in_higher_dimension() {
        let p = Problem::Linear(LinearFormsProblem::power(3, 1, 1.0).unwrap());
        let set = GenerationSet::new(&p, &Schedule::dyadic(0, 2).unwrap().windows()).unwrap();
        assert!(occupied_counts(&set, (0, 3), Sampling::Exact).is_err());
        let c = occupied_counts(&set, (0, 4), Sampling::Subgrid(2)).unwrap();
        assert!(c.windows(2).all(|w| w[0] <= w[1] && w[1] <= 8 * w[0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn counts_are_monotone_and_slopes_bounded(tau in 1.0f64..4.0, squares in any::<bool>(), k in 1usize..3) {
            let p = if squares {
                Problem::Squares(SquaresProblem::power(tau).unwrap())
            } else {
                Problem::Linear(LinearFormsProblem::power(2, 1, tau).unwrap())
            };
            let w = Schedule::dyadic(1, 1 + k as u32).unwrap().windows();
            let set = GenerationSet::new(&p, &w).unwrap();
            let r = box_count(&set, (2, 7), Sampling::Exact, None).unwrap();
            for (i, pair) in r.counts.windows(2).enumerate() {
                prop_assert!(pair[0] <= pair[1]);
                prop_assert!((0.0..=2.0).contains(&r.local_slopes[i]) || pair[0] == 0);
            }
            prop_assert!((0.0..=2.0).contains(&r.fit.slope));
        }

        #[test]
        fn ambient_power_content_is_count_times_radius(level in 1u32..6, s in 0.5f64..3.0) {
            let set = strip(0.01 + s / 10.0);
            let f = DimensionFunction::power(2.0).unwrap();
            let c = content_upper_bound(&set, &f, level, Norm::Supremum, Sampling::Exact).unwrap();
            let rho = (-(level as f64)).exp2();
            prop_assert_eq!(c.value, c.boxes as f64 * (rho / 2.0).powi(2));
        }
    }
}
