//! Exact operating characteristics: rejection probability, early-termination
//! probability, the expected-sample-size bound, the power bound, and the
//! grid evaluations behind power curves and surfaces.
//!
//! The rejection probability conditions on the Stage-1 success count and
//! convolves the carried-over successes with the Stage-2 count:
//!
//! ```text
//! Pr[reject] = sum_{x1 = max(r1, r2-n2)}^{n1} Pr[X1 = x1]
//!              * sum_{x12 = max(0, r2-n2)}^{x1} Pr[X12 = x12 | x1] Pr[X2 >= r2 - x12]
//! ```
//!
//! with X1 ~ Binomial(n1, p1), X12 | x1 ~ Binomial(x1, p2/p1), and
//! X2 ~ Binomial(n2, p2). Rejection requires X1 >= r1 and X12 + X2 >= r2.

use serde::Serialize;

use crate::design::{Design, OperatingCharacteristics, Rates};
use crate::error::{Error, Result};
use crate::prob::{binom_cdf_lt, binom_pmf, binom_pmf_table, binom_tail_ge, binom_tail_table};
use crate::report::{csv_document, fmt6};

/// Pr[X1 < r1]: the trial stops after Stage 1.
pub fn early_stop_prob(design: &Design, p1: f64) -> Result<f64> {
    design.validate()?;
    binom_cdf_lt(design.n1, design.r1, p1)
}

/// Upper bound n1 + n2 (1 - Pr[early stop]) on the expected number enrolled.
pub fn ess_bound(design: &Design, p1: f64) -> Result<f64> {
    Ok(design.n1 as f64 + design.n2 as f64 * (1.0 - early_stop_prob(design, p1)?))
}

/// Upper bound on the rejection probability: 1 - Pr[early stop], since the
/// null hypothesis cannot be rejected once the trial has terminated early.
pub fn power_bound(design: &Design, p1: f64) -> Result<f64> {
    Ok(1.0 - early_stop_prob(design, p1)?)
}

/// Exact probability of rejecting the null hypothesis at the given rates.
pub fn reject_prob(design: &Design, rates: &Rates) -> Result<f64> {
    design.validate()?;
    rates.validate()?;
    let (n1, n2, r1, r2) = (design.n1, design.n2, design.r1, design.r2);
    let ratio = rates.conditional_ratio();

    let x1_lo = r1.max(r2.saturating_sub(n2));
    let x12_lo = r2.saturating_sub(n2);

    // Pr[X2 >= r2 - x12] depends on x12 alone; hoist it out of the x1 loop.
    let tails: Vec<f64> = (x12_lo..=n1)
        .map(|x12| binom_tail_ge(n2, r2 as i64 - x12 as i64, rates.p2))
        .collect::<Result<_>>()?;

    let mut total = 0.0;
    for x1 in x1_lo..=n1 {
        let px1 = binom_pmf(n1, x1, rates.p1)?;
        if px1 == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for x12 in x12_lo..=x1 {
            inner += binom_pmf(x1, x12, ratio)? * tails[(x12 - x12_lo) as usize];
        }
        total += px1 * inner;
    }
    Ok(total)
}

/// All four characteristics of a (design, rates) pair; the early-stopping
/// quantities are evaluated at the pair's p1.
pub fn operating_characteristics(
    design: &Design,
    rates: &Rates,
) -> Result<OperatingCharacteristics> {
    let early = early_stop_prob(design, rates.p1)?;
    Ok(OperatingCharacteristics {
        reject_prob: reject_prob(design, rates)?,
        early_stop_prob: early,
        ess_bound: design.n1 as f64 + design.n2 as f64 * (1.0 - early),
        power_bound: 1.0 - early,
    })
}

/// Cached per-(n1, n2, rates) tables so a design-space sweep can evaluate
/// many (r1, r2) cutoffs without recomputing any pmf.
pub(crate) struct SliceTables {
    n1: u64,
    n2: u64,
    pmf1: Vec<f64>,
    /// cond[x1][x12] = Pr[X12 = x12 | X1 = x1]
    cond: Vec<Vec<f64>>,
    /// tail2[r] = Pr[X2 >= r] for r = 0..=n2+1
    tail2: Vec<f64>,
    /// cdf1[r] = Pr[X1 < r] for r = 0..=n1+1
    cdf1: Vec<f64>,
}

impl SliceTables {
    pub(crate) fn new(n1: u64, n2: u64, rates: &Rates) -> Result<Self> {
        rates.validate()?;
        let ratio = rates.conditional_ratio();
        let pmf1 = binom_pmf_table(n1, rates.p1)?;
        let cond = (0..=n1)
            .map(|x1| binom_pmf_table(x1, ratio))
            .collect::<Result<Vec<_>>>()?;
        let tail2 = binom_tail_table(n2, rates.p2)?;
        let tail1 = binom_tail_table(n1, rates.p1)?;
        let cdf1 = tail1.iter().map(|t| 1.0 - t).collect();
        Ok(SliceTables {
            n1,
            n2,
            pmf1,
            cond,
            tail2,
            cdf1,
        })
    }

    pub(crate) fn early_stop(&self, r1: u64) -> f64 {
        self.cdf1[r1 as usize]
    }

    pub(crate) fn reject(&self, r1: u64, r2: u64) -> f64 {
        let x1_lo = r1.max(r2.saturating_sub(self.n2));
        let x12_lo = r2.saturating_sub(self.n2);
        let mut total = 0.0;
        for x1 in x1_lo..=self.n1 {
            let px1 = self.pmf1[x1 as usize];
            if px1 == 0.0 {
                continue;
            }
            let cond = &self.cond[x1 as usize];
            let mut inner = 0.0;
            for x12 in x12_lo..=x1 {
                let need = r2.saturating_sub(x12);
                let tail = if need > self.n2 {
                    0.0
                } else {
                    self.tail2[need as usize]
                };
                inner += cond[x12 as usize] * tail;
            }
            total += px1 * inner;
        }
        total
    }

    pub(crate) fn characteristics(&self, r1: u64, r2: u64) -> OperatingCharacteristics {
        let early = self.early_stop(r1);
        OperatingCharacteristics {
            reject_prob: self.reject(r1, r2),
            early_stop_prob: early,
            ess_bound: self.n1 as f64 + self.n2 as f64 * (1.0 - early),
            power_bound: 1.0 - early,
        }
    }
}

/// Rejection probability as a function of p2 for a fixed safety rate p1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCurve {
    pub fixed_p1: f64,
    /// (p2, reject_prob), strictly increasing in p2.
    pub points: Vec<(f64, f64)>,
}

impl PowerCurve {
    pub fn to_csv(&self) -> String {
        csv_document(
            "p2,reject_prob",
            self.points
                .iter()
                .map(|(p2, r)| format!("{},{}", fmt6(*p2), fmt6(*r))),
        )
    }
}

/// Early-termination probability as a function of p1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EarlyStopCurve {
    pub points: Vec<(f64, f64)>,
}

impl EarlyStopCurve {
    pub fn to_csv(&self) -> String {
        csv_document(
            "p1,early_stop_prob",
            self.points
                .iter()
                .map(|(p1, e)| format!("{},{}", fmt6(*p1), fmt6(*e))),
        )
    }
}

/// Rejection probability over a (p1, p2) grid; cells with p2 > p1 are absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSurface {
    pub p1_grid: Vec<f64>,
    pub p2_grid: Vec<f64>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl PowerSurface {
    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        for (i, &p1) in self.p1_grid.iter().enumerate() {
            for (j, &p2) in self.p2_grid.iter().enumerate() {
                if let Some(r) = self.cells[i][j] {
                    rows.push(format!("{},{},{}", fmt6(p1), fmt6(p2), fmt6(r)));
                }
            }
        }
        csv_document("p1,p2,reject_prob", rows)
    }
}

fn check_grid(grid: &[f64], name: &str, max: f64) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &g in grid {
        if !g.is_finite() || !(0.0..=1.0).contains(&g) {
            return Err(Error::Domain(format!(
                "{name} grid values must be probabilities in [0, 1], got {g}"
            )));
        }
        if g > max {
            return Err(Error::Domain(format!(
                "{name} grid value {g} exceeds the fixed p1 = {max}"
            )));
        }
        if g <= prev {
            return Err(Error::Domain(format!(
                "{name} grid must be strictly increasing"
            )));
        }
        prev = g;
    }
    Ok(())
}

/// Evaluates the rejection probability at each p2 in the grid, holding the
/// safety rate fixed. Every grid value must satisfy p2 <= p1.
pub fn power_curve(design: &Design, p1: f64, p2_grid: &[f64]) -> Result<PowerCurve> {
    design.validate()?;
    check_grid(p2_grid, "p2", p1)?;
    let points = p2_grid
        .iter()
        .map(|&p2| Ok((p2, reject_prob(design, &Rates { p1, p2 })?)))
        .collect::<Result<_>>()?;
    Ok(PowerCurve {
        fixed_p1: p1,
        points,
    })
}

/// Evaluates the early-termination probability at each p1 in the grid.
pub fn early_stop_curve(design: &Design, p1_grid: &[f64]) -> Result<EarlyStopCurve> {
    design.validate()?;
    check_grid(p1_grid, "p1", 1.0)?;
    let points = p1_grid
        .iter()
        .map(|&p1| Ok((p1, early_stop_prob(design, p1)?)))
        .collect::<Result<_>>()?;
    Ok(EarlyStopCurve { points })
}

/// Evaluates the rejection probability at every grid pair with p2 <= p1.
pub fn power_surface(design: &Design, p1_grid: &[f64], p2_grid: &[f64]) -> Result<PowerSurface> {
    design.validate()?;
    check_grid(p1_grid, "p1", 1.0)?;
    check_grid(p2_grid, "p2", 1.0)?;
    let mut cells = Vec::with_capacity(p1_grid.len());
    for &p1 in p1_grid {
        let mut row = Vec::with_capacity(p2_grid.len());
        for &p2 in p2_grid {
            if p2 > p1 {
                row.push(None);
            } else {
                row.push(Some(reject_prob(design, &Rates { p1, p2 })?));
            }
        }
        cells.push(row);
    }
    Ok(PowerSurface {
        p1_grid: p1_grid.to_vec(),
        p2_grid: p2_grid.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design_e() -> Design {
        Design::new(5, 31, 3, 11).unwrap()
    }

    #[test]
    fn early_stop_matches_printed_values() {
        assert!((early_stop_prob(&design_e(), 0.8).unwrap() - 0.058).abs() < 0.0005);
        let c = Design::new(32, 4, 29, 0).unwrap();
        assert!((early_stop_prob(&c, 0.8).unwrap() - 0.907).abs() < 0.0005);
        let no_stop = Design::new(10, 10, 0, 5).unwrap();
        assert_eq!(early_stop_prob(&no_stop, 0.8).unwrap(), 0.0);
    }

    #[test]
    fn reject_prob_reproduces_design_e() {
        let d = design_e();
        let alpha = reject_prob(&d, &Rates::new(0.8, 0.2).unwrap()).unwrap();
        assert!((alpha - 0.0858).abs() < 0.0005);
        assert!((alpha - 0.08576912640213544).abs() < 1e-12);
        let power = reject_prob(&d, &Rates::new(0.8, 0.4).unwrap()).unwrap();
        assert!((power - 0.861).abs() < 0.0005);
    }

    #[test]
    fn reject_prob_marginal_collapse() {
        // with r1 = 0 every Stage-1 patient is an independent Bernoulli(p2)
        // success at t2, so the design is a single Binomial(n1+n2, p2) test
        let d = Design::new(17, 19, 0, 11).unwrap();
        let r = reject_prob(&d, &Rates::new(0.8, 0.2).unwrap()).unwrap();
        assert!((r - 0.08891278153876336).abs() < 1e-10);
    }

    #[test]
    fn reject_prob_zero_cases() {
        let d = Design::new(5, 5, 2, 4).unwrap();
        assert_eq!(
            reject_prob(&d, &Rates::new(0.8, 0.0).unwrap()).unwrap(),
            0.0
        );
        // r2 beyond what the continuing patients can attain
        let d = Design::new(5, 31, 3, 36).unwrap();
        let r = reject_prob(&d, &Rates::new(0.8, 0.2).unwrap()).unwrap();
        assert!(r > 0.0 && r < 1e-20);
    }

    #[test]
    fn ess_bound_examples() {
        assert!((ess_bound(&design_e(), 0.8).unwrap() - 34.20).abs() < 0.005);
        let b = Design::new(9, 27, 9, 7).unwrap();
        assert!((ess_bound(&b, 0.8).unwrap() - 12.62).abs() < 0.005);
        let no_stop = Design::new(10, 10, 0, 5).unwrap();
        assert_eq!(ess_bound(&no_stop, 0.8).unwrap(), 20.0);
    }

    #[test]
    fn power_bound_examples() {
        let a = Design::new(31, 5, 28, 5).unwrap();
        assert!((power_bound(&a, 0.8).unwrap() - 0.107).abs() < 0.0005);
        let c = Design::new(32, 4, 29, 0).unwrap();
        assert!((power_bound(&c, 0.8).unwrap() - 0.093).abs() < 0.0005);
        let no_stop = Design::new(10, 10, 0, 5).unwrap();
        assert_eq!(power_bound(&no_stop, 0.8).unwrap(), 1.0);
    }

    #[test]
    fn power_curve_examples() {
        let curve = power_curve(&design_e(), 0.8, &[0.2, 0.4]).unwrap();
        assert!((curve.points[0].1 - 0.0858).abs() < 0.0005);
        assert!((curve.points[1].1 - 0.861).abs() < 0.0005);

        let x = Design::new(0, 36, 0, 11).unwrap();
        let curve = power_curve(&x, 0.8, &[0.4]).unwrap();
        assert!((curve.points[0].1 - 0.910).abs() < 0.0005);

        let zero = power_curve(&design_e(), 0.8, &[0.0]).unwrap();
        assert_eq!(zero.points[0].1, 0.0);
    }

    #[test]
    fn power_curve_rejects_bad_grid() {
        assert!(power_curve(&design_e(), 0.8, &[0.2, 0.9]).is_err());
        assert!(power_curve(&design_e(), 0.8, &[0.4, 0.2]).is_err());
    }

    #[test]
    fn early_stop_curve_endpoints() {
        let curve = early_stop_curve(&design_e(), &[0.0, 0.8, 1.0]).unwrap();
        assert_eq!(curve.points[0].1, 1.0);
        assert!((curve.points[1].1 - 0.058).abs() < 0.0005);
        assert_eq!(curve.points[2].1, 0.0);
    }

    #[test]
    fn power_surface_design_f() {
        let f = Design::new(8, 28, 5, 11).unwrap();
        let s = power_surface(&f, &[0.4, 0.8], &[0.0, 0.2, 0.4, 0.8]).unwrap();
        // null point and the alternative
        assert!((s.cells[1][1].unwrap() - 0.0862).abs() < 0.0005);
        assert!((s.cells[1][2].unwrap() - 0.863).abs() < 0.0005);
        // r2 >= 1 makes p2 = 0 hopeless
        assert_eq!(s.cells[0][0].unwrap(), 0.0);
        assert_eq!(s.cells[1][0].unwrap(), 0.0);
        // the diagonal p2 = p1 is present, anything above it absent
        assert!(s.cells[0][2].is_some());
        assert!(s.cells[0][3].is_none());
    }

    #[test]
    fn slice_tables_agree_with_direct_path() {
        let rates = Rates::new(0.8, 0.2).unwrap();
        let tables = SliceTables::new(9, 27, &rates).unwrap();
        for r1 in 0..=9u64 {
            for r2 in 0..=36u64 {
                let d = Design::new(9, 27, r1, r2).unwrap();
                let direct = reject_prob(&d, &rates).unwrap();
                assert!(
                    (tables.reject(r1, r2) - direct).abs() < 1e-12,
                    "mismatch at r1={r1} r2={r2}"
                );
                let early = early_stop_prob(&d, rates.p1).unwrap();
                assert!((tables.early_stop(r1) - early).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_design_always_rejects() {
        let d = Design::new(0, 0, 0, 0).unwrap();
        assert_eq!(
            reject_prob(&d, &Rates::new(0.8, 0.2).unwrap()).unwrap(),
            1.0
        );
    }
}
