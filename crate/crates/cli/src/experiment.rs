//! Experiment configs and their dispatch to the core operations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use diolab_core::config::ProblemConfig;
use diolab_core::estimators::{box_count, zero_one_probe, GenerationSet, Sampling, Trend};
use diolab_core::geometry::{hit_list, max_torus_distance};
use diolab_core::series::{
    classify, corollary_one_sum, corollary_two_sum, critical_exponent_analytic,
    critical_exponent_numeric, hausdorff_sum, schmidt_sum, squares_critical_exponent,
    squares_critical_exponent_numeric, squares_sum, union_bound_sum, Classification,
    ExponentFlag, Verdict,
};
use diolab_core::slicing::{default_slices, slice_to_hausdorff_pipeline};
use diolab_core::windows::parse_range;
use diolab_core::{DimensionFunction, LinearFormsProblem, Problem, Schedule, SquaresProblem};

use crate::output::{write_output, Provenance, Table};
use crate::suite::check_suite;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Schmidt,
    Hausdorff,
    Squares,
    Cor1,
    Cor2,
    Union,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExponentMode {
    Analytic,
    Numeric,
}

fn default_tol() -> f64 {
    0.02
}

fn default_exponent_height() -> u64 {
    1 << 14
}

fn default_slice_count() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Task {
    Sum {
        criterion: Criterion,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<f64>,
        h: u64,
    },
    Exponent {
        mode: ExponentMode,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_exponent_height")]
        h: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bracket: Option<[f64; 2]>,
    },
    Measure {
        windows: String,
        samples: u64,
        #[serde(default)]
        seed: u64,
    },
    Boxdim {
        windows: String,
        scales: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sampling: Option<String>,
        /// Scale indices `a..b` entering the fit.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fit: Option<String>,
    },
    Slice {
        f: String,
        #[serde(default = "default_slice_count")]
        slices: usize,
        windows: String,
        #[serde(default)]
        samples: u64,
        #[serde(default)]
        seed: u64,
    },
    Enumerate {
        x: Vec<f64>,
        h1: u64,
        h2: u64,
    },
    Check {
        preset: String,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Sum { .. } => "sum",
            Task::Exponent { .. } => "exponent",
            Task::Measure { .. } => "measure",
            Task::Boxdim { .. } => "boxdim",
            Task::Slice { .. } => "slice",
            Task::Enumerate { .. } => "enumerate",
            Task::Check { .. } => "check",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Task::Measure { seed, .. } | Task::Slice { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_path: Option<PathBuf>,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    /// Reads TOML, or JSON for `.json` files.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| anyhow!("{e}"))
        } else {
            toml::from_str(&text).map_err(|e| anyhow!("{}", e.to_string().trim_end()))
        };
        parsed.with_context(|| format!("parse error in {}", path.display()))
    }

    pub fn task_seed(&self) -> Option<u64> {
        self.task.seed()
    }

    /// Inlines the problem file and checks every task parameter.
    pub fn resolve(&self, base: Option<&Path>) -> Result<Resolved> {
        let mut config = self.clone();
        let (problem_cfg, problem_base) = match (&self.problem, &self.problem_path) {
            (Some(_), Some(_)) => bail!("give either `problem` or `problem_path`, not both"),
            (Some(p), None) => (Some(p.clone()), base.map(Path::to_path_buf)),
            (None, Some(path)) => {
                let path = join(base, path);
                let cfg = ProblemConfig::load(&path)?;
                (Some(cfg), path.parent().map(Path::to_path_buf))
            }
            (None, None) => (None, None),
        };
        let problem = match &problem_cfg {
            Some(cfg) => {
                let mut cfg = cfg.clone();
                if let Some(t) = &cfg.psi.table_path {
                    cfg.psi.table_path = Some(join(problem_base.as_deref(), t));
                }
                let p = cfg.build(None)?;
                config.problem = Some(cfg);
                Some(p)
            }
            None => None,
        };
        config.problem_path = None;
        if problem.is_none() && !matches!(config.task, Task::Check { .. }) {
            bail!("task `{}` needs a problem", config.task.name());
        }
        validate_task(&config.task)?;
        let mut hashed = config.clone();
        hashed.output = None;
        let canonical = serde_json::to_string(&hashed)?;
        let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        Ok(Resolved {
            config,
            problem,
            hash,
        })
    }
}

fn join(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

fn validate_task(task: &Task) -> Result<()> {
    match task {
        Task::Sum { criterion, f, s, h } => {
            if *h == 0 {
                bail!("task.h: must be at least 1");
            }
            match criterion {
                Criterion::Hausdorff | Criterion::Squares => {
                    let f = f.as_deref().ok_or_else(|| anyhow!("task.f: required for {criterion:?}"))?;
                    f.parse::<DimensionFunction>().context("task.f")?;
                }
                Criterion::Cor1 | Criterion::Cor2 => {
                    s.ok_or_else(|| anyhow!("task.s: required for {criterion:?}"))?;
                }
                _ => {}
            }
        }
        Task::Exponent { tol, bracket, .. } => {
            if !(*tol > 0.0) {
                bail!("task.tol: must be positive");
            }
            if let Some([lo, hi]) = bracket {
                if !(lo < hi) {
                    bail!("task.bracket: need lo < hi");
                }
            }
        }
        Task::Measure { windows, samples, .. } => {
            windows.parse::<Schedule>().context("task.windows")?;
            if *samples == 0 {
                bail!("task.samples: must be at least 1");
            }
        }
        Task::Boxdim {
            windows,
            scales,
            sampling,
            fit,
        } => {
            windows.parse::<Schedule>().context("task.windows")?;
            parse_range(scales).context("task.scales")?;
            if let Some(s) = sampling {
                s.parse::<Sampling>().context("task.sampling")?;
            }
            if let Some(r) = fit {
                parse_range(r).context("task.fit")?;
            }
        }
        Task::Slice { f, slices, windows, .. } => {
            f.parse::<DimensionFunction>().context("task.f")?;
            windows.parse::<Schedule>().context("task.windows")?;
            if *slices == 0 {
                bail!("task.slices: must be at least 1");
            }
        }
        Task::Enumerate { h1, h2, .. } => {
            if h1 > h2 {
                bail!("task.h1 must not exceed task.h2");
            }
        }
        Task::Check { .. } => {}
    }
    Ok(())
}

/// A config with the problem inlined, its built problem, and the hash of both.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub problem: Option<Problem>,
    pub hash: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Inconclusive,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Inconclusive => 2,
        }
    }
}

/// Result of one task before it is written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: Value,
    pub table: Option<Table>,
    pub summary: Value,
    pub status: Status,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub task: String,
    pub wall_time_s: f64,
    pub threads: usize,
    pub status: Status,
    pub summary: Value,
    pub outputs: Vec<PathBuf>,
}

/// Resolves, runs and writes one experiment. Problem paths resolve against `base`,
/// output paths against the working directory.
pub fn run(config: &ExperimentConfig, base: Option<&Path>) -> Result<(RunManifest, Outcome, Provenance)> {
    let start = Instant::now();
    let resolved = config.resolve(base)?;
    let outcome = execute(&resolved)?;
    let provenance = Provenance::new(&resolved)?;
    let mut outputs = Vec::new();
    if let Some(out) = &resolved.config.output {
        write_output(&out.path, out.format, &provenance, &outcome)?;
        outputs.push(out.path.clone());
    }
    let manifest = RunManifest {
        config_hash: resolved.hash.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: resolved.config.task.name().to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        status: outcome.status,
        summary: outcome.summary.clone(),
        outputs,
    };
    Ok((manifest, outcome, provenance))
}

fn linear(problem: &Problem) -> Result<&LinearFormsProblem> {
    match problem {
        Problem::Linear(p) => Ok(p),
        Problem::Squares(_) => bail!("this task needs a linear-forms problem"),
    }
}

fn squares(problem: &Problem) -> Result<&SquaresProblem> {
    match problem {
        Problem::Squares(p) => Ok(p),
        Problem::Linear(_) => bail!("this task needs a squares problem"),
    }
}

fn status_of(v: &Verdict) -> Status {
    match v {
        Verdict::Inconclusive { .. } => Status::Inconclusive,
        _ => Status::Ok,
    }
}

/// Dispatches the task of a resolved config.
pub fn execute(r: &Resolved) -> Result<Outcome> {
    let problem = r.problem.as_ref();
    match &r.config.task {
        Task::Sum { criterion, f, s, h } => {
            let p = problem.expect("checked in resolve");
            let f = f.as_deref().map(str::parse::<DimensionFunction>).transpose()?;
            let series = match criterion {
                Criterion::Schmidt => schmidt_sum(linear(p)?, *h)?,
                Criterion::Hausdorff => hausdorff_sum(linear(p)?, f.as_ref().unwrap(), *h)?,
                Criterion::Squares => squares_sum(squares(p)?, f.as_ref().unwrap(), *h)?,
                Criterion::Cor1 => corollary_one_sum(linear(p)?, s.unwrap(), *h)?,
                Criterion::Cor2 => corollary_two_sum(squares(p)?, s.unwrap(), *h)?,
                Criterion::Union => union_bound_sum(p, *h)?,
            };
            let class = classify(&series).unwrap_or_else(|e| Classification {
                verdict: Verdict::Inconclusive {
                    reason: e.to_string(),
                },
                slope: f64::NAN,
                slope_stderr: f64::NAN,
                log_exponent: None,
                windows_used: 0,
            });
            let table = Table::new(["H", "S_H"]).rows(
                series
                    .heights
                    .iter()
                    .zip(&series.sums)
                    .map(|(h, s)| vec![h.to_string(), s.to_string()]),
            );
            Ok(Outcome {
                status: status_of(&class.verdict),
                summary: json!({ "last": series.last(), "verdict": class.verdict }),
                result: json!({ "series": series, "classification": class }),
                table: Some(table),
            })
        }
        Task::Exponent { mode, tol, h, bracket } => {
            let p = problem.expect("checked in resolve");
            let (result, analytic) = match p {
                Problem::Linear(lp) => {
                    let analytic = critical_exponent_analytic(lp).ok();
                    match mode {
                        ExponentMode::Analytic => (
                            analytic.clone().ok_or_else(|| {
                                anyhow!("analytic exponent needs a power law on all of Z^n")
                            })?,
                            None,
                        ),
                        ExponentMode::Numeric => {
                            let base = ((lp.n() - 1) * lp.m()) as f64;
                            let full = (lp.n() * lp.m()) as f64;
                            let [lo, hi] = bracket.unwrap_or([base + 0.05, full]);
                            (critical_exponent_numeric(lp, (lo, hi), *tol, *h)?, analytic)
                        }
                    }
                }
                Problem::Squares(sp) => {
                    let analytic = sp.tau().map(squares_critical_exponent).transpose()?;
                    match mode {
                        ExponentMode::Analytic => (
                            analytic.clone().ok_or_else(|| {
                                anyhow!("analytic exponent needs a power law psi")
                            })?,
                            None,
                        ),
                        ExponentMode::Numeric => {
                            let [lo, hi] = bracket.unwrap_or([1.05, 2.0]);
                            (squares_critical_exponent_numeric(sp, (lo, hi), *tol, *h)?, analytic)
                        }
                    }
                }
            };
            let status = if result.flag == Some(ExponentFlag::Inconclusive) {
                Status::Inconclusive
            } else {
                Status::Ok
            };
            let cross = analytic.map(|a| {
                json!({
                    "analytic": a.s_star,
                    "agrees": (a.s_star - result.s_star).abs() <= *tol
                        || (result.bracket.0 <= a.s_star && a.s_star <= result.bracket.1),
                })
            });
            Ok(Outcome {
                status,
                summary: json!({ "s_star": result.s_star, "flag": result.flag }),
                result: json!({ "s_star": result.s_star, "exponent": result, "cross_check": cross }),
                table: None,
            })
        }
        Task::Measure {
            windows,
            samples,
            seed,
        } => {
            let p = problem.expect("checked in resolve");
            let schedule: Schedule = windows.parse()?;
            let report = zero_one_probe(p, &schedule, *samples, *seed)?;
            let mut table = Table::new([
                "lo",
                "hi",
                "fraction",
                "ci_lo",
                "ci_hi",
                "union_bound",
                "cumulative_lo",
                "cumulative_fraction",
            ]);
            for ((w, c), b) in report.windows.iter().zip(&report.cumulative).zip(&report.union_bounds) {
                table.push(vec![
                    w.window.lo.to_string(),
                    w.window.hi.to_string(),
                    w.fraction.to_string(),
                    w.wilson_ci.0.to_string(),
                    w.wilson_ci.1.to_string(),
                    b.to_string(),
                    c.window.lo.to_string(),
                    c.fraction.to_string(),
                ]);
            }
            let status = if report.trend == Trend::Inconclusive {
                Status::Inconclusive
            } else {
                Status::Ok
            };
            Ok(Outcome {
                status,
                summary: json!({
                    "trend": report.trend,
                    "final_cumulative": report.cumulative.last().map(|c| c.fraction),
                    "dominated": report.dominated,
                }),
                result: serde_json::to_value(&report)?,
                table: Some(table),
            })
        }
        Task::Boxdim {
            windows,
            scales,
            sampling,
            fit,
        } => {
            let p = problem.expect("checked in resolve");
            let schedule: Schedule = windows.parse()?;
            let set = GenerationSet::new(p, &schedule.windows())?;
            let levels = parse_range(scales)?;
            let sampling = match sampling {
                Some(s) => s.parse()?,
                None => Sampling::default_for(set.dim()),
            };
            let fit_range = fit
                .as_deref()
                .map(parse_range)
                .transpose()?
                .map(|(a, b)| (a as usize, b as usize));
            let report = box_count(&set, levels, sampling, fit_range)?;
            let reference = match p {
                Problem::Squares(sp) => sp.tau().map(|t| (5.0 + t) / (2.0 + t)),
                Problem::Linear(lp) => critical_exponent_analytic(lp).ok().map(|r| r.s_star),
            };
            let table = Table::new(["delta", "N"])
                .rows(
                    report
                        .scales
                        .iter()
                        .zip(&report.counts)
                        .map(|(d, n)| vec![d.to_string(), n.to_string()]),
                )
                .note("slope", report.fit.slope)
                .note("slope_stderr", report.fit.slope_stderr)
                .note("generations", report.generations.len())
                .note("sampling", report.sampling);
            let bias = reference.map(|d| report.fit.slope - d);
            Ok(Outcome {
                status: Status::Ok,
                summary: json!({ "slope": report.fit.slope, "reference": reference }),
                result: json!({
                    "slope": report.fit.slope,
                    "reference_dimension": reference,
                    "finite_generation_bias": bias,
                    "report": report,
                }),
                table: Some(table),
            })
        }
        Task::Slice {
            f,
            slices,
            windows,
            samples,
            seed,
        } => {
            let lp = linear(problem.expect("checked in resolve"))?;
            let f: DimensionFunction = f.parse()?;
            let schedule: Schedule = windows.parse()?;
            let x0 = default_slices(*slices, lp.n(), lp.m());
            let report = slice_to_hausdorff_pipeline(lp, &f, &x0, &schedule, *samples, *seed)?;
            let mut table = Table::new(["slice", "hi", "inflated_union", "deflated_content", "deflated_union"]);
            for (i, s) in report.slices.iter().enumerate() {
                for (k, w) in report.windows.iter().enumerate() {
                    table.push(vec![
                        i.to_string(),
                        w.hi.to_string(),
                        s.inflated_union[k].to_string(),
                        s.deflated_content[k].to_string(),
                        s.deflated_union[k].to_string(),
                    ]);
                }
            }
            let summary = json!({
                "slices_above_0.95": report.slices_above(0.95),
                "slices_content_increasing": report.slices_growing(4.min(report.windows.len())),
                "inflated_series": report.inflated_series,
            });
            Ok(Outcome {
                status: Status::Ok,
                result: json!({ "summary": summary, "report": report }),
                summary,
                table: Some(table),
            })
        }
        Task::Enumerate { x, h1, h2 } => {
            let lp = linear(problem.expect("checked in resolve"))?;
            if x.len() != lp.n() * lp.m() {
                bail!("task.x: expected {} coordinates, got {}", lp.n() * lp.m(), x.len());
            }
            let hits = hit_list(x, lp, *h1, *h2)?;
            let mut header: Vec<String> = (1..=lp.n()).map(|i| format!("a{i}")).collect();
            header.extend(["psi".to_string(), "max_dist".to_string()]);
            let mut table = Table::new(header);
            let mut rows = Vec::new();
            for a in &hits {
                let psi = lp.psi().value(a);
                let d = max_torus_distance(x, a, lp.b());
                let mut row: Vec<String> = a.iter().map(i64::to_string).collect();
                row.extend([psi.to_string(), d.to_string()]);
                table.push(row);
                rows.push(json!({ "a": a, "psi": psi, "max_dist": d }));
            }
            Ok(Outcome {
                status: Status::Ok,
                summary: json!({ "hits": hits.len() }),
                result: json!({ "hits": rows }),
                table: Some(table),
            })
        }
        Task::Check { preset } => {
            let report = check_suite(preset)?;
            Ok(Outcome {
                status: if report.pass { Status::Ok } else { Status::Failed },
                summary: json!({ "pass": report.pass, "checks": report.checks.len() }),
                result: serde_json::to_value(&report)?,
                table: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = parse(
            "[problem]\nn = 2\nm = 1\n[problem.psi]\nlaw = \"power\"\ntau = 3.0\n[task]\nkind = \"sum\"\ncriterion = \"schmidt\"\nh = 64\n[output]\npath = \"a.csv\"\n",
        );
        let mut b = a.clone();
        b.output = None;
        assert_eq!(a.resolve(None).unwrap().hash, b.resolve(None).unwrap().hash);
        let mut c = a.clone();
        c.task = Task::Sum {
            criterion: Criterion::Schmidt,
            f: None,
            s: None,
            h: 65,
        };
        assert_ne!(a.resolve(None).unwrap().hash, c.resolve(None).unwrap().hash);
    }

    #[test]
    fn task_errors_name_the_field() {
        let e = parse(
            "[problem]\nn = 2\nm = 1\n[problem.psi]\nlaw = \"power\"\ntau = 3.0\n[task]\nkind = \"measure\"\nwindows = \"dyadic:4\"\nsamples = 10\n",
        )
        .resolve(None)
        .unwrap_err();
        assert!(format!("{e:#}").contains("task.windows"), "{e:#}");
        let e = toml::from_str::<ExperimentConfig>("[task]\nkind = \"sum\"\ncriterion = \"schmidt\"\nh = 1\nbogus = 2\n")
            .unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = parse("[task]\nkind = \"sum\"\ncriterion = \"schmidt\"\nh = 1\n").resolve(None).unwrap_err();
        assert!(e.to_string().contains("needs a problem"));
    }

    #[test]
    fn zero_psi_sum_converges_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("psi.csv"), "a1,a2,psi\n").unwrap();
        let cfg = parse(
            "[problem]\nn = 2\nm = 1\n[problem.psi]\nlaw = \"table\"\ntable_path = \"psi.csv\"\n[task]\nkind = \"sum\"\ncriterion = \"schmidt\"\nh = 4096\n",
        );
        let (m, out, _) = run(&cfg, Some(dir.path())).unwrap();
        assert_eq!(m.status, Status::Ok);
        assert_eq!(out.result["classification"]["verdict"]["verdict"], "Converges");
        assert_eq!(out.result["classification"]["verdict"]["limit"], 0.0);
        assert!(out.result["series"]["sums"].as_array().unwrap().iter().all(|v| v == 0.0));
    }
}
