//! Named bundles of cross-module invariants.

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::{json, Value};

use diolab_core::dimfun::{transformed_radius, untransformed_radius};
use diolab_core::estimators::{mc_measure, union_bound, wilson_interval, zero_one_probe};
use diolab_core::geometry::{
    cover_neighborhood, equivalence_check, relevant_shifts, shift_constant, Neighborhood,
    ResonantPlane,
};
use diolab_core::problems::{for_each_in_shell, height};
use diolab_core::rng::uniform_point;
use diolab_core::series::{
    critical_exponent_analytic, critical_exponent_numeric, hausdorff_sum, schmidt_sum, Verdict,
};
use diolab_core::slicing::{regression_corpus, slicing_inequality_check};
use diolab_core::{DimensionFunction, LinearFormsProblem, Problem, Schedule, SquaresProblem};

pub const PRESETS: [&str; 7] = [
    "collapse",
    "equivalence",
    "exponents",
    "union-bounds",
    "covering",
    "transform",
    "slicing",
];

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub preset: String,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

/// Runs a preset, or every preset for `all`.
pub fn check_suite(preset: &str) -> Result<SuiteReport> {
    let names: Vec<&str> = if preset == "all" {
        PRESETS.to_vec()
    } else if PRESETS.contains(&preset) {
        vec![preset]
    } else {
        bail!("unknown preset `{preset}`; known: all, {}", PRESETS.join(", "));
    };
    let mut checks = Vec::new();
    for name in names {
        checks.extend(match name {
            "collapse" => collapse()?,
            "equivalence" => equivalence()?,
            "exponents" => exponents()?,
            "union-bounds" => union_bounds()?,
            "covering" => covering()?,
            "transform" => transform()?,
            "slicing" => slicing()?,
            _ => unreachable!(),
        });
    }
    Ok(SuiteReport {
        preset: preset.to_string(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

/// `(n, m, tau)` with `tau > n/m` over `(2,1), (1,2), (2,2)` and `tau` in `{1.5, 2, 3}`.
pub fn exponent_grid() -> Vec<(usize, usize, f64)> {
    let mut v = Vec::new();
    for (n, m) in [(2, 1), (1, 2), (2, 2)] {
        for tau in [1.5, 2.0, 3.0] {
            if tau > n as f64 / m as f64 {
                v.push((n, m, tau));
            }
        }
    }
    v
}

fn collapse() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (n, m) in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1)] {
        for tau in [1.5, 2.0, 3.0] {
            let p = LinearFormsProblem::power(n, m, tau)?;
            let f = DimensionFunction::power((n * m) as f64)?;
            let a = schmidt_sum(&p, 512)?;
            let b = hausdorff_sum(&p, &f, 512)?;
            let same = a.heights == b.heights
                && a.sums.iter().zip(&b.sums).all(|(x, y)| x.to_bits() == y.to_bits());
            out.push(CheckResult {
                name: format!("collapse n={n} m={m} tau={tau}"),
                pass: same,
                detail: json!({ "schmidt": a.last(), "hausdorff": b.last() }),
            });
        }
    }
    Ok(out)
}

fn equivalence() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (n, m, tau) in exponent_grid() {
        let p = LinearFormsProblem::power(n, m, tau)?;
        let mut x = vec![0.0; n * m];
        let bad = (0..1000u64)
            .filter(|&i| {
                uniform_point(0xE0, i, &mut x);
                !equivalence_check(&x, &p, 50)
            })
            .count();
        out.push(CheckResult {
            name: format!("equivalence n={n} m={m} tau={tau}"),
            pass: bad == 0,
            detail: json!({ "points": 1000, "mismatches": bad, "h_max": 50 }),
        });
    }
    Ok(out)
}

fn exponents() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (n, m, tau) in exponent_grid() {
        let p = LinearFormsProblem::power(n, m, tau)?;
        let analytic = critical_exponent_analytic(&p)?.s_star;
        let closed = ((n - 1) * m) as f64 + (n + m) as f64 / (1.0 + tau);
        let base = ((n - 1) * m) as f64;
        let numeric = critical_exponent_numeric(&p, (base + 0.05, (n * m) as f64), 0.02, 1 << 12)?;
        let diff = (numeric.s_star - analytic).abs();
        out.push(CheckResult {
            name: format!("exponent n={n} m={m} tau={tau}"),
            pass: analytic == closed && diff <= 0.02,
            detail: json!({ "analytic": analytic, "numeric": numeric.s_star, "bracket": numeric.bracket }),
        });
    }
    Ok(out)
}

fn union_bounds() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let p = Problem::Linear(LinearFormsProblem::power(2, 1, 2.5)?);
    let r = zero_one_probe(&p, &Schedule::dyadic(4, 8)?, 20_000, 42)?;
    out.push(CheckResult {
        name: "union bound n=2 m=1 tau=2.5".into(),
        pass: r.dominated && matches!(r.union_series, Verdict::Converges { .. }),
        detail: json!({
            "fractions": r.windows.iter().map(|w| w.fraction).collect::<Vec<_>>(),
            "bounds": r.union_bounds,
        }),
    });
    let sq = Problem::Squares(SquaresProblem::power(3.0)?);
    for w in Schedule::dyadic(2, 6)?.windows() {
        let rep = mc_measure(&sq, w, 20_000, 43)?;
        let bound = union_bound(&sq, w)?;
        let (lo, hi) = wilson_interval(rep.hits, rep.samples);
        out.push(CheckResult {
            name: format!("union bound squares tau=3 {w}"),
            pass: rep.fraction <= bound + 1.5 * (hi - lo),
            detail: json!({ "fraction": rep.fraction, "bound": bound }),
        });
    }
    Ok(out)
}

fn covering() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (n, m) in [(2usize, 1usize), (2, 2)] {
        for tau in [1.5, 3.0] {
            let p = LinearFormsProblem::power(n, m, tau)?;
            let c_shift = shift_constant(n, m, 1.0);
            let (mut worst_cover, mut worst_shift, mut ok) = (0.0f64, 0.0f64, true);
            for h in 1..=30u64 {
                for_each_in_shell(n, h, |a| {
                    let psi = p.psi().value(a);
                    let norm = a.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
                    let delta = psi / norm;
                    let shifts = relevant_shifts(a, p.b(), delta).expect("nonzero a");
                    let count = shifts.count() as f64;
                    let bound = c_shift * (height(a) as f64).powi(m as i32);
                    worst_shift = worst_shift.max(count / bound);
                    ok &= count <= bound;
                    let first = shifts.iter().next();
                    if let Some(pv) = first {
                        let plane = ResonantPlane::linear(a.to_vec(), pv, p.b().to_vec()).expect("plane");
                        let nb = Neighborhood::new(plane, delta).expect("delta");
                        let c = cover_neighborhood(&nb, psi / h as f64, false).expect("cover");
                        worst_cover = worst_cover.max(c.count as f64 / c.bound);
                        ok &= c.certified;
                    }
                });
            }
            out.push(CheckResult {
                name: format!("covering n={n} m={m} tau={tau}"),
                pass: ok,
                detail: json!({ "max_cover_ratio": worst_cover, "max_shift_ratio": worst_shift }),
            });
        }
    }
    Ok(out)
}

fn transform() -> Result<Vec<CheckResult>> {
    let mut identity = true;
    let mut round_trip = 0.0f64;
    let mut x = [0.0; 2];
    for i in 0..2000u64 {
        uniform_point(0x7F, i, &mut x);
        let r = 1e-9 + 0.5 * x[0];
        for m in 1..=4u32 {
            identity &= transformed_radius(r, &DimensionFunction::power(m as f64)?, m)?.to_bits() == r.to_bits();
            let f = DimensionFunction::power(0.2 + x[1] * (m as f64 - 0.2))?;
            let back = untransformed_radius(transformed_radius(r, &f, m)?, &f, m)?;
            round_trip = round_trip.max((back - r).abs() / r);
        }
    }
    Ok(vec![
        CheckResult {
            name: "transform identity for f = r^m".into(),
            pass: identity,
            detail: json!({ "radii": 2000 }),
        },
        CheckResult {
            name: "inflate then deflate".into(),
            pass: round_trip <= 1e-12,
            detail: json!({ "max_relative_error": round_trip }),
        },
    ])
}

fn slicing() -> Result<Vec<CheckResult>> {
    regression_corpus()
        .into_iter()
        .map(|(name, a, f, l)| {
            let c = slicing_inequality_check(&a, &f, l)?;
            Ok(CheckResult {
                name: format!("slicing {name}"),
                pass: c.holds,
                detail: serde_json::to_value(&c)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_presets_pass() {
        for p in ["collapse", "transform", "slicing"] {
            let r = check_suite(p).unwrap();
            assert!(r.pass, "{}", serde_json::to_string_pretty(&r).unwrap());
        }
        assert!(check_suite("nope").is_err());
    }

    #[test]
    fn grid_excludes_full_dimension() {
        assert_eq!(exponent_grid().len(), 7);
    }
}
