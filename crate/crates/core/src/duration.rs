//! Distribution of the smallest number of Stage-1 patients needed to reach
//! the continue/terminate decision.
//!
//! In a Bernoulli(p) sequence, let Y be the first index at which either s
//! successes or t failures have accumulated. Y has support on
//! min(s, t) <= y <= s + t - 1, and its pmf is the sum of two disjoint
//! negative-binomial branches: the s-th success landing at trial y, or the
//! t-th failure landing at trial y, each restricted to the support.
//!
//! A design maps onto this with p = p1, s = r1, and t = n1 - r1 + 1: the
//! trial continues as soon as r1 successes are in hand and stops as soon as
//! n1 - r1 + 1 failures make r1 successes unreachable.

use crate::design::Design;
use crate::error::{Error, Result};
use crate::prob::nbinom_term;
use crate::report::{csv_document, fmt6};

/// The decision-time distribution for required successes `s`, required
/// failures `t`, and per-patient success probability `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1DurationDistribution {
    pub s: u64,
    pub t: u64,
    pub p: f64,
    support_min: u64,
    probs: Vec<f64>,
}

impl Stage1DurationDistribution {
    /// Inclusive support bounds.
    pub fn support(&self) -> (u64, u64) {
        (
            self.support_min,
            self.support_min + self.probs.len() as u64 - 1,
        )
    }

    /// Pr[Y = y]; zero outside the support.
    pub fn pmf(&self, y: u64) -> f64 {
        if y < self.support_min {
            return 0.0;
        }
        self.probs
            .get((y - self.support_min) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// (y, Pr[Y = y]) over the support in increasing y.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &q)| (self.support_min + i as u64, q))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(y, q)| y as f64 * q).sum()
    }

    pub fn sd(&self) -> f64 {
        let mean = self.mean();
        self.iter()
            .map(|(y, q)| (y as f64 - mean).powi(2) * q)
            .sum::<f64>()
            .sqrt()
    }

    /// CSV rows `y,probability` followed by trailing `mean` and `sd` records.
    pub fn to_csv(&self) -> String {
        let rows = self.iter().map(|(y, q)| format!("{y},{}", fmt6(q))).chain([
            format!("mean,{}", fmt6(self.mean())),
            format!("sd,{}", fmt6(self.sd())),
        ]);
        csv_document("y,probability", rows)
    }
}

/// Builds the decision-time pmf. At p = 1 the distribution is a point mass
/// at s (every patient succeeds); at p = 0 a point mass at t.
pub fn duration_pmf(s: u64, t: u64, p: f64) -> Result<Stage1DurationDistribution> {
    if s < 1 || t < 1 {
        return Err(Error::Domain(format!(
            "s and t must be at least 1, got s={s} t={t}"
        )));
    }
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "p must be a probability in [0, 1], got {p}"
        )));
    }
    if p == 1.0 {
        return Ok(Stage1DurationDistribution {
            s,
            t,
            p,
            support_min: s,
            probs: vec![1.0],
        });
    }
    if p == 0.0 {
        return Ok(Stage1DurationDistribution {
            s,
            t,
            p,
            support_min: t,
            probs: vec![1.0],
        });
    }
    let lo = s.min(t);
    let hi = s + t - 1;
    let mut probs = Vec::with_capacity((hi - lo + 1) as usize);
    for y in lo..=hi {
        let mut q = 0.0;
        if y >= s {
            // decision closed by the s-th success at trial y
            q += nbinom_term(s, y - s, p)?;
        }
        if y >= t {
            // decision closed by the t-th failure at trial y; swapping the
            // roles of success and failure makes this the same waiting-time
            // term with probability 1 - p
            q += nbinom_term(t, y - t, 1.0 - p)?;
        }
        probs.push(q);
    }
    Ok(Stage1DurationDistribution {
        s,
        t,
        p,
        support_min: lo,
        probs,
    })
}

/// Mean and standard deviation of the decision time.
pub fn duration_moments(s: u64, t: u64, p: f64) -> Result<(f64, f64)> {
    let dist = duration_pmf(s, t, p)?;
    Ok((dist.mean(), dist.sd()))
}

/// Maps a design onto the decision-time distribution (s = r1,
/// t = n1 - r1 + 1, p = p1) and returns its moments. Designs with r1 = 0
/// never stop early, so no decision variable exists.
pub fn design_duration(design: &Design, p1: f64) -> Result<(f64, f64)> {
    design.validate()?;
    if design.r1 == 0 {
        return Err(Error::Domain(
            "not applicable: r1 = 0 means the trial always continues, so there is no Stage-1 decision to wait for".into(),
        ));
    }
    duration_moments(design.r1, design.n1 - design.r1 + 1, p1)
}

/// The design's decision-time distribution itself, for pmf reports.
pub fn design_duration_pmf(design: &Design, p1: f64) -> Result<Stage1DurationDistribution> {
    design.validate()?;
    if design.r1 == 0 {
        return Err(Error::Domain(
            "not applicable: r1 = 0 means the trial always continues, so there is no Stage-1 decision to wait for".into(),
        ));
    }
    duration_pmf(design.r1, design.n1 - design.r1 + 1, p1)
}
