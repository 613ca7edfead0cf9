//! Problem files: structured text (TOML) describing either an interval
//! problem with its boundary condition or a half-line problem.
//!
//! Interval problems:
//!
//! ```toml
//! a = 0.0
//! b = 1.0
//! p = "1"            # optional, default "1"
//! q = "cos(x)"       # optional, default "0"
//! r = "1"            # optional, default "1"
//!
//! [bc]
//! type = "separated" # separated | coupled | floquet | krein
//! alpha = 0.0        # separated
//! beta = 0.0
//! # phase = 0.0      # coupled / floquet
//! # R = [1.0, 0.0, 0.0, 1.0]   # coupled, row-major
//! ```
//!
//! Half-line problems:
//!
//! ```toml
//! halfline = true
//! q = "-2*exp(-4*(x-1)^2)"
//! x_max = 8.0        # optional when the tail declaration implies one
//! lambda1 = 1.0      # optional, default 1.0
//! alpha = 0.0        # or alpha1 = ..., alpha2 = ...
//!
//! [tail]             # optional, default compact support
//! type = "exponential"
//! amplitude = 1.0
//! rate = 2.0
//! ```

use crate::error::{Error, Result};
use crate::halfline::{HalfLineProblem, TailModel};
use crate::problem::{BcSpec, SLProblem};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    halfline: Option<bool>,
    a: Option<f64>,
    b: Option<f64>,
    p: Option<String>,
    q: Option<String>,
    r: Option<String>,
    bc: Option<RawBc>,
    x_max: Option<f64>,
    lambda1: Option<f64>,
    alpha: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    tail: Option<TailModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBc {
    #[serde(rename = "type")]
    kind: String,
    alpha: Option<f64>,
    beta: Option<f64>,
    phase: Option<f64>,
    #[serde(rename = "R")]
    r: Option<[f64; 4]>,
}

/// A parsed problem file.
#[derive(Debug, Clone)]
pub enum ProblemFile {
    Interval {
        prob: SLProblem,
        bc: BcSpec,
    },
    HalfLine {
        prob: HalfLineProblem,
        alpha: Option<f64>,
        alpha1: Option<f64>,
        alpha2: Option<f64>,
    },
}

impl ProblemFile {
    pub fn interval(&self) -> Result<(&SLProblem, &BcSpec)> {
        match self {
            ProblemFile::Interval { prob, bc } => Ok((prob, bc)),
            ProblemFile::HalfLine { .. } => Err(Error::ProblemFile(
                "expected an interval problem, found `halfline = true`".into(),
            )),
        }
    }

    pub fn half_line(&self) -> Result<&HalfLineProblem> {
        match self {
            ProblemFile::HalfLine { prob, .. } => Ok(prob),
            ProblemFile::Interval { .. } => Err(Error::ProblemFile(
                "expected a half-line problem (`halfline = true`)".into(),
            )),
        }
    }
}

/// Parse a problem description from TOML text.
pub fn parse_problem_str(text: &str) -> Result<ProblemFile> {
    let raw: RawFile =
        toml::from_str(text).map_err(|e| Error::ProblemFile(format!("TOML error: {e}")))?;
    if raw.halfline == Some(true) {
        let q = raw
            .q
            .ok_or_else(|| Error::ProblemFile("half-line problems need `q`".into()))?;
        let tail = raw.tail.unwrap_or(TailModel::Compact);
        let x_max = match (raw.x_max, tail.default_x_max()) {
            (Some(x), _) => x,
            (None, Some(x)) => x,
            (None, None) => {
                return Err(Error::ProblemFile(
                    "compact-support declarations need an explicit `x_max`".into(),
                ))
            }
        };
        let lambda1 = raw.lambda1.unwrap_or(1.0);
        let prob = HalfLineProblem::parse(&q, x_max, lambda1, tail)?;
        if raw.a.is_some() || raw.b.is_some() || raw.bc.is_some() {
            return Err(Error::ProblemFile(
                "interval keys a/b/bc are not valid in a half-line problem".into(),
            ));
        }
        Ok(ProblemFile::HalfLine {
            prob,
            alpha: raw.alpha,
            alpha1: raw.alpha1,
            alpha2: raw.alpha2,
        })
    } else {
        let a = raw.a.ok_or_else(|| Error::ProblemFile("missing `a`".into()))?;
        let b = raw.b.ok_or_else(|| Error::ProblemFile("missing `b`".into()))?;
        let p = raw.p.as_deref().unwrap_or("1");
        let q = raw.q.as_deref().unwrap_or("0");
        let r = raw.r.as_deref().unwrap_or("1");
        let prob = SLProblem::parse(a, b, p, q, r)?;
        let rbc = raw
            .bc
            .ok_or_else(|| Error::ProblemFile("missing `[bc]` table".into()))?;
        let bc = match rbc.kind.as_str() {
            "separated" => BcSpec::Separated {
                alpha: rbc.alpha.unwrap_or(0.0),
                beta: rbc.beta.unwrap_or(0.0),
            },
            "coupled" => {
                let m = rbc.r.ok_or_else(|| {
                    Error::ProblemFile("coupled conditions need `bc.R` (row-major 4 reals)".into())
                })?;
                BcSpec::Coupled {
                    phase: rbc.phase.unwrap_or(0.0),
                    r: [[m[0], m[1]], [m[2], m[3]]],
                }
            }
            "floquet" => BcSpec::Floquet {
                phase: rbc.phase.unwrap_or(0.0),
            },
            "krein" => BcSpec::Krein,
            other => {
                return Err(Error::ProblemFile(format!(
                    "unknown bc.type `{other}` (expected separated, coupled, floquet, or krein)"
                )))
            }
        };
        Ok(ProblemFile::Interval { prob, bc })
    }
}

/// Load and parse a problem file from disk.
pub fn load_problem(path: &std::path::Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ProblemFile(format!("{}: {e}", path.display())))?;
    parse_problem_str(&text)
}
