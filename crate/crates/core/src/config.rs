//! Problem files in TOML or JSON.
//!
//! ```toml
//! kind = "linear"      # or "squares"
//! n = 2
//! m = 1
//! b = [0.0]
//! [psi]
//! law = "power"        # or "table" with table_path
//! tau = 3.0
//! support = "z1"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{LinearFormsProblem, Problem, PsiSpec, SquaresProblem, Support};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    #[default]
    Linear,
    Squares,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Power,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiConfig {
    pub law: LawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub kind: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    pub psi: PsiConfig,
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Builds the problem; relative table paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Problem> {
        let resolve = |p: &Path| match base {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        };
        match self.kind {
            ProblemKind::Squares => {
                if self.n.is_some() || self.m.is_some() || self.b.is_some() {
                    return Err(Error::Parse("squares problems take no n, m or b".into()));
                }
                if self.psi.support.is_some() {
                    return Err(Error::Parse("psi.support: not used by squares problems".into()));
                }
                let sp = match self.psi.law {
                    LawKind::Power => SquaresProblem::power(self.tau()?)?,
                    LawKind::Table => SquaresProblem::table_from_csv(&resolve(self.table_path()?))?,
                };
                Ok(Problem::Squares(sp))
            }
            ProblemKind::Linear => {
                let n = self.n.ok_or_else(|| Error::Parse("missing field `n`".into()))?;
                let m = self.m.ok_or_else(|| Error::Parse("missing field `m`".into()))?;
                let support: Support = match &self.psi.support {
                    Some(s) => s
                        .parse()
                        .map_err(|e| Error::Parse(format!("psi.support: {e}")))?,
                    None => Support::all(),
                };
                let psi = match self.psi.law {
                    LawKind::Power => PsiSpec::power(self.tau()?, support)?,
                    LawKind::Table => {
                        PsiSpec::table_from_csv(&resolve(self.table_path()?), n, support)?
                    }
                };
                Ok(Problem::Linear(LinearFormsProblem::new(n, m, self.b.clone(), psi)?))
            }
        }
    }

    fn tau(&self) -> Result<f64> {
        self.psi
            .tau
            .ok_or_else(|| Error::Parse("psi.tau: required for the power law".into()))
    }

    fn table_path(&self) -> Result<&Path> {
        self.psi
            .table_path
            .as_deref()
            .ok_or_else(|| Error::Parse("psi.table_path: required for the table law".into()))
    }
}

/// Loads and builds a problem file.
pub fn load_problem(path: &Path) -> Result<(ProblemConfig, Problem)> {
    let cfg = ProblemConfig::load(path)?;
    let problem = cfg.build(path.parent())?;
    Ok((cfg, problem))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_toml() {
        let cfg = ProblemConfig::from_toml(
            "n = 2\nm = 1\nb = [0.25]\n[psi]\nlaw = \"power\"\ntau = 3.0\nsupport = \"z1\"\n",
        )
        .unwrap();
        let Problem::Linear(p) = cfg.build(None).unwrap() else {
            panic!()
        };
        assert_eq!((p.n(), p.m(), p.b()), (2, 1, &[0.25][..]));
        assert_eq!(p.psi().tau(), Some(3.0));
        assert_eq!(p.psi().support().zi_indices(), &[1]);
    }

    #[test]
    fn squares_json() {
        let cfg =
            ProblemConfig::from_json(r#"{"kind":"squares","psi":{"law":"power","tau":3}}"#).unwrap();
        assert!(matches!(cfg.build(None).unwrap(), Problem::Squares(s) if s.tau() == Some(3.0)));
    }

    #[test]
    fn errors_name_the_field() {
        let e = ProblemConfig::from_toml("n = 2\nm = 1\n[psi]\nlaw = \"power\"\ntau = \"x\"\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 5") && msg.contains("tau"), "{msg}");
        let e = ProblemConfig::from_toml("n = 2\n[psi]\nlaw = \"power\"\ntau = 1.0\n")
            .unwrap()
            .build(None)
            .unwrap_err();
        assert!(e.to_string().contains("`m`"));
        let e = ProblemConfig::from_toml("n = 2\nm = 1\nq = 3\n[psi]\nlaw = \"power\"\n").unwrap_err();
        assert!(e.to_string().contains("q"));
    }

    #[test]
    fn round_trip() {
        let cfg = ProblemConfig::from_toml("n = 1\nm = 2\n[psi]\nlaw = \"power\"\ntau = 2.5\n").unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ProblemConfig::from_toml(&text).unwrap(), cfg);
    }
}
