//! The full description of one run. It is embedded in every output file and
//! is enough to reproduce that file.

use std::path::PathBuf;

use pushasep::RateVector;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    Forward,
    Reversed,
}

pub const PROCESSES: &[&str] = &["pushasep-wall", "zdagger", "x-array", "gt-pushblock", "lpp-field", "seq-chain"];
pub const QUANTITIES: &[&str] = &["pmf", "sup-cdf", "transition", "field-pmf", "schur", "sp-schur"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub command: String,
    pub target: String,
    /// Rate literals as given (decimals or fractions).
    pub rates: Vec<String>,
    pub n: usize,
    pub seed: u64,
    pub replicas: usize,
    pub horizon: Option<f64>,
    pub burn_in: Option<f64>,
    pub direction: Dir,
    pub init: Option<Vec<i64>>,
    pub trajectory: bool,
    pub sup: bool,
    pub eta: Option<(i64, i64)>,
    pub max: Option<i64>,
    pub x: Option<Vec<i64>>,
    pub t: Option<f64>,
    /// Truncation override: mass allowed outside enumerated windows.
    pub tail: Option<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// A spec validation failure naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid --{}: {}", self.field, self.message)
    }
}

fn err(field: &'static str, message: impl Into<String>) -> SpecError {
    SpecError { field, message: message.into() }
}

pub fn parse_list(field: &'static str, s: &str) -> Result<Vec<i64>, SpecError> {
    s.split(',')
        .map(|p| p.trim().parse::<i64>().map_err(|e| err(field, format!("'{p}': {e}"))))
        .collect()
}

/// `a..b` (inclusive) or a single integer.
pub fn parse_range(field: &'static str, s: &str) -> Result<(i64, i64), SpecError> {
    let p = |x: &str| x.trim().parse::<i64>().map_err(|e| err(field, format!("'{x}': {e}")));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (p(a)?, p(b.trim_start_matches('='))?),
        None => {
            let a = p(s)?;
            (a, a)
        }
    };
    if a > b {
        return Err(err(field, format!("empty range {a}..{b}")));
    }
    Ok((a, b))
}

impl RunSpec {
    pub fn rate_vector(&self) -> Result<RateVector, SpecError> {
        RateVector::parse(&self.rates.join(",")).map_err(|e| err("v", e.to_string()))
    }

    /// Checks every field that does not need a computation to validate.
    pub fn validate(&self) -> Result<(), SpecError> {
        let v = self.rate_vector()?;
        if self.n != v.n() {
            return Err(err("n", format!("n = {} but {} rates were given", self.n, v.n())));
        }
        if self.replicas == 0 {
            return Err(err("replicas", "must be at least 1"));
        }
        for (name, val) in [("horizon", self.horizon), ("burn-in", self.burn_in), ("t", self.t)] {
            if let Some(x) = val {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(err(name, format!("{x} must be finite and nonnegative")));
                }
            }
        }
        if let Some(tail) = self.tail {
            if !(tail > 0.0 && tail < 1.0) {
                return Err(err("tail", format!("{tail} must lie in (0,1)")));
            }
        }
        match self.command.as_str() {
            "simulate" => {
                if !PROCESSES.contains(&self.target.as_str()) {
                    return Err(err("process", format!("'{}' is not one of {}", self.target, PROCESSES.join(", "))));
                }
                if let Some(init) = &self.init {
                    let want = match self.target.as_str() {
                        "x-array" => self.n * (self.n + 1) / 2,
                        _ => self.n,
                    };
                    if init.len() != want {
                        return Err(err("init", format!("expected {want} values, got {}", init.len())));
                    }
                }
                if self.sup && self.target != "zdagger" {
                    return Err(err("sup", "only applies to zdagger"));
                }
            }
            "exact" => {
                if !QUANTITIES.contains(&self.target.as_str()) {
                    return Err(err("quantity", format!("'{}' is not one of {}", self.target, QUANTITIES.join(", "))));
                }
                let needs_x = matches!(self.target.as_str(), "schur" | "sp-schur" | "transition");
                if needs_x {
                    match &self.x {
                        None => return Err(err("x", "required for this quantity")),
                        Some(x) if x.len() != self.n => {
                            return Err(err("x", format!("expected {} values, got {}", self.n, x.len())))
                        }
                        _ => {}
                    }
                }
                if self.target == "transition" && self.t.is_none() {
                    return Err(err("t", "required for transition"));
                }
                if self.target == "sup-cdf" && self.eta.is_none() {
                    return Err(err("eta", "required for sup-cdf"));
                }
            }
            "verify" => {
                if !pushasep::verify::SUITES.contains(&self.target.as_str()) {
                    return Err(err(
                        "suite",
                        format!("'{}' is not one of {}", self.target, pushasep::verify::SUITES.join(", ")),
                    ));
                }
            }
            other => return Err(err("command", format!("unknown command '{other}'"))),
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("runspec serializes")
    }
}
