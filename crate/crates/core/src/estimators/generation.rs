//! Finite-generation truncations `G_K` of the limsup sets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{relevant_shifts, satisfies, satisfies_squares};
use crate::problems::{for_each_in_shell, height, LinearFormsProblem, Problem, SquaresProblem};
use crate::windows::Window;

/// The open slab `|normal . x - center| < half_width`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Slab {
    pub normal: Vec<f64>,
    pub center: f64,
    pub half_width: f64,
}

/// Intersection of slabs; one neighborhood `Delta(R_{a,p}, .)` of the set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Piece(pub Vec<Slab>);

/// One generation stored flat.
#[derive(Clone, Debug, Default)]
pub(crate) struct Generation {
    dim: usize,
    pub(crate) normals: Vec<f64>,
    pub(crate) centers: Vec<f64>,
    pub(crate) halves: Vec<f64>,
    /// Sums of the negative and positive normal entries, for range tests on boxes.
    pub(crate) neg: Vec<f64>,
    pub(crate) pos: Vec<f64>,
    pub(crate) starts: Vec<u32>,
}

impl Generation {
    fn new(dim: usize) -> Self {
        Generation {
            dim,
            starts: vec![0],
            ..Default::default()
        }
    }

    fn push_slab(&mut self, normal: &[f64], center: f64, half: f64) {
        self.normals.extend_from_slice(normal);
        self.centers.push(center);
        self.halves.push(half);
        self.neg.push(normal.iter().map(|v| v.min(0.0)).sum());
        self.pos.push(normal.iter().map(|v| v.max(0.0)).sum());
    }

    fn close_piece(&mut self) {
        self.starts.push(self.centers.len() as u32);
    }

    pub(crate) fn pieces(&self) -> usize {
        self.starts.len() - 1
    }

    pub(crate) fn slabs(&self, piece: usize) -> std::ops::Range<usize> {
        self.starts[piece] as usize..self.starts[piece + 1] as usize
    }

    pub(crate) fn normal(&self, slab: usize) -> &[f64] {
        &self.normals[slab * self.dim..(slab + 1) * self.dim]
    }

    fn slab_contains(&self, slab: usize, x: &[f64]) -> bool {
        let v: f64 = self.normal(slab).iter().zip(x).map(|(a, b)| a * b).sum();
        (v - self.centers[slab]).abs() < self.halves[slab]
    }

    pub(crate) fn piece_contains(&self, piece: usize, x: &[f64]) -> bool {
        self.slabs(piece).all(|s| self.slab_contains(s, x))
    }

    /// Whether the piece can meet the closed box `[lo, lo + side]^k`; never a false negative.
    pub(crate) fn piece_meets_box(&self, piece: usize, lo: &[f64], side: f64) -> bool {
        self.slabs(piece).all(|s| {
            let base: f64 = self.normal(s).iter().zip(lo).map(|(a, b)| a * b).sum();
            let min = base + self.neg[s] * side;
            let max = base + self.pos[s] * side;
            let slack = 1e-12 * (1.0 + base.abs() + (self.pos[s] - self.neg[s]) * side);
            max + slack > self.centers[s] - self.halves[s]
                && min - slack < self.centers[s] + self.halves[s]
        })
    }
}

#[derive(Clone, Debug)]
enum Source {
    Problem(Problem),
    Pieces,
}

/// `G_K`: points hit in every one of the `K` windows.
#[derive(Clone, Debug)]
pub struct GenerationSet {
    dim: usize,
    windows: Vec<Window>,
    pub(crate) generations: Vec<Generation>,
    source: Source,
}

impl GenerationSet {
    /// `G_K` for the problem with one window per generation.
    pub fn new(problem: &Problem, windows: &[Window]) -> Result<Self> {
        if windows.windows(2).any(|w| w[1].lo < w[0].hi) {
            return Err(Error::Precondition(
                "generation windows must be disjoint and increasing".into(),
            ));
        }
        let dim = problem.ambient_dim();
        let generations = windows
            .iter()
            .map(|w| match problem {
                Problem::Linear(p) => linear_generation(p, *w),
                Problem::Squares(sp) => Ok(squares_generation(sp, *w)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GenerationSet {
            dim,
            windows: windows.to_vec(),
            generations,
            source: Source::Problem(problem.clone()),
        })
    }

    /// A set given directly by its pieces; with no generations it is the whole cube.
    pub fn from_pieces(dim: usize, generations: Vec<Vec<Piece>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("dimension must be positive".into()));
        }
        let mut out = Vec::with_capacity(generations.len());
        for pieces in generations {
            let mut g = Generation::new(dim);
            for piece in pieces {
                for s in piece.0 {
                    if s.normal.len() != dim {
                        return Err(Error::Precondition(format!(
                            "slab normal has {} entries, expected {dim}",
                            s.normal.len()
                        )));
                    }
                    g.push_slab(&s.normal, s.center, s.half_width);
                }
                g.close_piece();
            }
            out.push(g);
        }
        Ok(GenerationSet {
            dim,
            windows: Vec::new(),
            generations: out,
            source: Source::Pieces,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generation_count(&self) -> usize {
        self.generations.len()
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn piece_counts(&self) -> Vec<usize> {
        self.generations.iter().map(Generation::pieces).collect()
    }

    pub fn theorem_mode(&self) -> bool {
        match &self.source {
            Source::Problem(p) => p.theorem_mode(),
            Source::Pieces => true,
        }
    }

    /// The first `k` generations.
    pub fn truncate(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.generations.truncate(k);
        out.windows.truncate(k);
        out
    }

    /// Membership decided from the inequalities themselves.
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.source {
            Source::Problem(Problem::Linear(p)) => self
                .windows
                .iter()
                .all(|w| linear_window_hit(x, p, *w)),
            Source::Problem(Problem::Squares(sp)) => self
                .windows
                .iter()
                .all(|w| squares_window_hit(x, sp, *w)),
            Source::Pieces => self.contains_by_pieces(x),
        }
    }

    /// Membership decided from the stored pieces.
    pub fn contains_by_pieces(&self, x: &[f64]) -> bool {
        self.generations
            .iter()
            .all(|g| (0..g.pieces()).any(|i| g.piece_contains(i, x)))
    }
}

pub(crate) fn linear_window_hit(x: &[f64], p: &LinearFormsProblem, w: Window) -> bool {
    (w.lo..w.hi).any(|h| {
        let mut hit = false;
        for_each_in_shell(p.n(), h, |a| {
            if !hit && satisfies(x, a, p) {
                hit = true;
            }
        });
        hit
    })
}

pub(crate) fn squares_window_hit(x: &[f64], sp: &SquaresProblem, w: Window) -> bool {
    let top = w.top() as i64;
    (0..=top).any(|a1| {
        (0..=top).any(|a2| {
            let a = [a1, a2];
            w.contains(height(&a)) && satisfies_squares(x, &a, sp)
        })
    })
}

fn linear_generation(p: &LinearFormsProblem, w: Window) -> Result<Generation> {
    let (n, m) = (p.n(), p.m());
    let mut g = Generation::new(n * m);
    let homogeneous = p.b().iter().all(|&b| b == 0.0);
    let mut normal = vec![0.0; n * m];
    let mut err = None;
    for h in w.lo..w.hi {
        for_each_in_shell(n, h, |a| {
            if err.is_some() {
                return;
            }
            let psi = p.psi().value(a);
            if psi <= 0.0 {
                return;
            }
            // With b = 0 the pieces of -a repeat those of a.
            let first = a.iter().copied().find(|&v| v != 0).unwrap_or(0);
            if homogeneous && first < 0 {
                let neg: Vec<i64> = a.iter().map(|v| -v).collect();
                if p.psi().value(&neg) == psi {
                    return;
                }
            }
            let norm = a.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            let shifts = match relevant_shifts(a, p.b(), psi / norm) {
                Ok(s) => s,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            for shift in shifts.iter() {
                for (j, pj) in shift.iter().enumerate() {
                    normal.iter_mut().for_each(|v| *v = 0.0);
                    for i in 0..n {
                        normal[j * n + i] = a[i] as f64;
                    }
                    g.push_slab(&normal, p.b()[j] + *pj as f64, psi);
                }
                g.close_piece();
            }
        });
    }
    match err {
        Some(e) => Err(e),
        None => Ok(g),
    }
}

fn squares_generation(sp: &SquaresProblem, w: Window) -> Generation {
    let mut g = Generation::new(2);
    let top = w.top() as i64;
    for a1 in 0..=top {
        for a2 in 0..=top {
            let h = a1.max(a2) as u64;
            if !w.contains(h) {
                continue;
            }
            let psi = sp.value(h);
            if psi <= 0.0 {
                continue;
            }
            let (aa, bb) = ((a1 * a1) as f64, (a2 * a2) as f64);
            let pmax = (aa + bb + psi).sqrt().floor() as i64;
            for q in 0..=pmax {
                let c = (q * q) as f64;
                if c - psi < aa + bb {
                    g.push_slab(&[aa, bb], c, psi);
                    g.close_piece();
                }
            }
        }
    }
    g
}
