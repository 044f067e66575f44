//! The data model: designs, hypothesis rates, operating characteristics,
//! and per-trial outcomes, with validation of the parameter ranges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::real17;

/// A two-stage design. Stage 1 enrolls `n1` patients assessed at follow-up
/// `t1`; at least `r1` successes are required to continue. Stage 2 enrolls
/// `n2` more patients, and the null hypothesis is rejected when the total
/// number of successes at follow-up `t2` reaches `r2`.
///
/// The follow-up times are planning metadata only; they never enter a
/// probability computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub n1: u64,
    pub n2: u64,
    pub r1: u64,
    pub r2: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
}

impl Design {
    pub const CSV_HEADER: &'static str = "n1,n2,r1,r2,t1,t2";

    /// Builds and validates a design without follow-up times.
    pub fn new(n1: u64, n2: u64, r1: u64, r2: u64) -> Result<Self> {
        Design {
            n1,
            n2,
            r1,
            r2,
            t1: None,
            t2: None,
        }
        .validate()
    }

    /// Attaches follow-up times, revalidating their ordering.
    pub fn with_followup(mut self, t1: f64, t2: f64) -> Result<Self> {
        self.t1 = Some(t1);
        self.t2 = Some(t2);
        self.validate()
    }

    /// Returns the design unchanged iff every invariant holds, otherwise an
    /// error naming the first violated constraint.
    pub fn validate(self) -> Result<Self> {
        if self.r1 > self.n1 {
            return Err(Error::Validation("r1 exceeds n1".into()));
        }
        if self.r2 > self.n1 + self.n2 {
            return Err(Error::Validation("r2 exceeds n1 + n2".into()));
        }
        for (name, t) in [("t1", self.t1), ("t2", self.t2)] {
            if let Some(t) = t {
                if !t.is_finite() || t < 0.0 {
                    return Err(Error::Validation(format!(
                        "{name} must be a finite non-negative time, got {t}"
                    )));
                }
            }
        }
        if let (Some(t1), Some(t2)) = (self.t1, self.t2) {
            if t1 > t2 {
                return Err(Error::Validation("t1 exceeds t2".into()));
            }
        }
        Ok(self)
    }

    /// Total enrollment when the trial runs to completion.
    pub fn total_n(&self) -> u64 {
        self.n1 + self.n2
    }

    pub fn to_csv_row(&self) -> String {
        let t1 = self.t1.map(real17).unwrap_or_default();
        let t2 = self.t2.map(real17).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.n1, self.n2, self.r1, self.r2, t1, t2
        )
    }

    /// Parses a row in the `Design::CSV_HEADER` column order. Empty t1/t2
    /// fields mean the follow-up times are unset.
    pub fn from_csv_row(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row.trim_end_matches(['\r', '\n']).split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Validation(format!(
                "design row must have 6 fields, got {}",
                fields.len()
            )));
        }
        let int = |s: &str, name: &str| -> Result<u64> {
            s.trim().parse().map_err(|_| {
                Error::Validation(format!("{name} is not a non-negative integer: {s:?}"))
            })
        };
        let opt_real = |s: &str, name: &str| -> Result<Option<f64>> {
            let s = s.trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::Validation(format!("{name} is not a real number: {s:?}")))
        };
        Design {
            n1: int(fields[0], "n1")?,
            n2: int(fields[1], "n2")?,
            r1: int(fields[2], "r1")?,
            r2: int(fields[3], "r2")?,
            t1: opt_real(fields[4], "t1")?,
            t2: opt_real(fields[5], "t2")?,
        }
        .validate()
    }
}

/// A hypothesis point: success probability `p1` at the Stage-1 follow-up and
/// `p2` at the longer Stage-2 follow-up. Because the efficacy event is nested
/// inside the safety event, 0 <= p2 <= p1 <= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub p1: f64,
    pub p2: f64,
}

impl Rates {
    pub const CSV_HEADER: &'static str = "p1,p2";

    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        Rates { p1, p2 }.validate()
    }

    /// Returns the rates unchanged iff 0 <= p2 <= p1 <= 1.
    pub fn validate(self) -> Result<Self> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!(
                    "{name} must be a probability in [0, 1], got {p}"
                )));
            }
        }
        if self.p2 > self.p1 {
            return Err(Error::Validation("p2 exceeds p1".into()));
        }
        Ok(self)
    }

    /// The conditional probability that a Stage-1 success is still a success
    /// at the Stage-2 follow-up. Defined as 0 when p1 = 0 (the conditioning
    /// event then has probability zero).
    pub fn conditional_ratio(&self) -> f64 {
        if self.p1 == 0.0 {
            0.0
        } else {
            self.p2 / self.p1
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!("{},{}", real17(self.p1), real17(self.p2))
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row.trim_end_matches(['\r', '\n']).split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Validation(format!(
                "rates row must have 2 fields, got {}",
                fields.len()
            )));
        }
        let real = |s: &str, name: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Validation(format!("{name} is not a real number: {s:?}")))
        };
        Rates {
            p1: real(fields[0], "p1")?,
            p2: real(fields[1], "p2")?,
        }
        .validate()
    }
}

/// Exact operating characteristics of a (design, rates) pair.
///
/// `reject_prob` is the exact significance level when the rates are the null
/// hypothesis and the power otherwise. `ess_bound` is the upper bound
/// n1 + n2 (1 - Pr[early stop]) on the expected sample size, and
/// `power_bound` = 1 - Pr[early stop] bounds the rejection probability
/// because early termination precludes rejecting the null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub reject_prob: f64,
    pub early_stop_prob: f64,
    pub ess_bound: f64,
    pub power_bound: f64,
}

/// One realized trial: Stage-1 successes at t1, how many of them remained
/// successes at t2, Stage-2 successes, and the resulting decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub x1: u64,
    pub x12: u64,
    pub x2: u64,
    pub continued: bool,
    pub rejected: bool,
}
