//! Height windows `[lo, hi)` and their textual schedules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Heights `lo <= |a| < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: u64,
    pub hi: u64,
}

impl Window {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if lo == 0 || hi <= lo {
            return Err(Error::Precondition(format!(
                "window [{lo}, {hi}) must satisfy 1 <= lo < hi"
            )));
        }
        Ok(Window { lo, hi })
    }

    pub fn contains(&self, h: u64) -> bool {
        self.lo <= h && h < self.hi
    }

    /// Largest height in the window.
    pub fn top(&self) -> u64 {
        self.hi - 1
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// Consecutive windows given by increasing edges `h_0 < h_1 < ... < h_K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Schedule {
    edges: Vec<u64>,
}

impl Schedule {
    pub fn from_edges(edges: Vec<u64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Precondition("a schedule needs at least two edges".into()));
        }
        if edges[0] == 0 || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition(
                "schedule edges must be positive and strictly increasing".into(),
            ));
        }
        Ok(Schedule { edges })
    }

    /// Windows `[2^k, 2^{k+1})` for `k = a .. b-1`.
    pub fn dyadic(a: u32, b: u32) -> Result<Self> {
        if b <= a || b > 62 {
            return Err(Error::Precondition(format!("bad dyadic range {a}..{b}")));
        }
        Self::from_edges((a..=b).map(|k| 1u64 << k).collect())
    }

    pub fn edges(&self) -> &[u64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn windows(&self) -> Vec<Window> {
        self.edges
            .windows(2)
            .map(|w| Window { lo: w[0], hi: w[1] })
            .collect()
    }

    /// `[h_0, h_{k+1})` for each `k`.
    pub fn cumulative(&self) -> Vec<Window> {
        self.edges[1..]
            .iter()
            .map(|&hi| Window {
                lo: self.edges[0],
                hi,
            })
            .collect()
    }

    pub fn max_height(&self) -> u64 {
        *self.edges.last().unwrap() - 1
    }
}

impl FromStr for Schedule {
    type Err = Error;

    /// `dyadic:a..b` or `edges:h0,h1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(r) = s.strip_prefix("dyadic:") {
            let (a, b) = r
                .split_once("..")
                .ok_or_else(|| Error::Parse(format!("expected dyadic:a..b, got `{s}`")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad exponent `{t}` in `{s}`")))
            };
            return Self::dyadic(parse(a)?, parse(b)?);
        }
        if let Some(r) = s.strip_prefix("edges:") {
            let edges = r
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad edge `{t}` in `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::from_edges(edges);
        }
        Err(Error::Parse(format!(
            "unknown window schedule `{s}` (expected dyadic:a..b or edges:...)"
        )))
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e: Vec<String> = self.edges.iter().map(u64::to_string).collect();
        write!(f, "edges:{}", e.join(","))
    }
}

/// Parse `a..b` into an inclusive integer range.
pub fn parse_range(s: &str) -> Result<(u32, u32)> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("expected a..b, got `{s}`")))?;
    let p = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| Error::Parse(format!("bad integer `{t}`")))
    };
    let (a, b) = (p(a)?, p(b)?);
    if b < a {
        return Err(Error::Parse(format!("empty range `{s}`")));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_schedule() {
        let s: Schedule = "dyadic:4..12".parse().unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s.windows()[0], Window { lo: 16, hi: 32 });
        assert_eq!(s.cumulative()[7], Window { lo: 16, hi: 4096 });
        assert_eq!(s.max_height(), 4095);
        assert_eq!(s.to_string().parse::<Schedule>().unwrap(), s);
    }

    #[test]
    fn edge_schedule_and_errors() {
        let s: Schedule = "edges:2, 4,16,64".parse().unwrap();
        assert_eq!(s.windows()[1], Window { lo: 4, hi: 16 });
        assert!("edges:4,4".parse::<Schedule>().is_err());
        assert!("edges:0,4".parse::<Schedule>().is_err());
        assert!("dyadic:5..5".parse::<Schedule>().is_err());
        assert!("linear:1..3".parse::<Schedule>().is_err());
        assert_eq!(parse_range("6..12").unwrap(), (6, 12));
        assert!(parse_range("12..6").is_err());
    }
}
