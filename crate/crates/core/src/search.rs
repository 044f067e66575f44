//! Exhaustive enumeration of (n1, n2, r1, r2) designs under a patient budget
//! and selection among the significance-feasible ones, plus the classical
//! single-criterion two-stage search recovered at p1 = p2.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{Design, OperatingCharacteristics, Rates};
use crate::error::{Error, Result};
use crate::oc::SliceTables;
use crate::report::{csv_document, fmt6};

/// Whether the budget is an exact total n1 + n2 or a maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BudgetMode {
    ExactTotal,
    UpToTotal,
}

/// Selection criterion applied to the feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criterion {
    /// Largest exact significance not exceeding the target.
    HighestAlpha,
    /// Smallest expected-sample-size bound under the null.
    Optimal,
    /// Largest early-termination probability under the null, restricted to
    /// designs that spend most of the significance budget (exact alpha
    /// within the alpha window) and whose continuation rule tolerates at
    /// least one Stage-1 failure (r1 < n1). Without the restriction the
    /// criterion degenerates to all-or-nothing designs (r1 = n1, r2 = 0)
    /// whose termination probability approaches 1 while their significance
    /// collapses toward 0.
    MinimaxEarlyStop,
    /// Equal stage sizes n1 = n2, then largest exact significance.
    Balanced,
    /// The windowed filter: exact alpha within the alpha window, early
    /// termination inside the early-stop window, and n1 at most half of n2.
    Suggested,
}

/// Windows used by the `Suggested` filter (and the alpha window also by
/// `MinimaxEarlyStop`). The alpha window is inclusive, the early-stop window
/// exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuggestedFilter {
    pub alpha_window: (f64, f64),
    pub early_stop_window: (f64, f64),
    /// Enforce n1 <= n2 / 2.
    pub stage1_cap: bool,
}

impl Default for SuggestedFilter {
    fn default() -> Self {
        SuggestedFilter {
            alpha_window: (0.085, 0.1),
            early_stop_window: (0.05, 0.2),
            stage1_cap: true,
        }
    }
}

/// A full search specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSpec {
    pub total_n: u64,
    pub budget_mode: BudgetMode,
    pub alpha_target: f64,
    pub null_rates: Rates,
    pub alt_rates: Rates,
    pub criterion: Criterion,
    pub suggested_filter: SuggestedFilter,
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha_target.is_finite() || self.alpha_target <= 0.0 || self.alpha_target >= 1.0 {
            return Err(Error::Validation(format!(
                "alpha_target must lie strictly between 0 and 1, got {}",
                self.alpha_target
            )));
        }
        self.null_rates.validate()?;
        self.alt_rates.validate()?;
        if self.alt_rates.p1 < self.null_rates.p1 || self.alt_rates.p2 < self.null_rates.p2 {
            return Err(Error::Validation(
                "alt_rates must dominate null_rates componentwise".into(),
            ));
        }
        let (lo, hi) = self.suggested_filter.alpha_window;
        if !(lo > 0.0 && lo <= hi && hi <= self.alpha_target) {
            return Err(Error::Validation(format!(
                "alpha_window [{lo}, {hi}] must lie inside (0, alpha_target]"
            )));
        }
        let (elo, ehi) = self.suggested_filter.early_stop_window;
        if !(0.0..=1.0).contains(&elo) || !(0.0..=1.0).contains(&ehi) || elo >= ehi {
            return Err(Error::Validation(format!(
                "early_stop_window ({elo}, {ehi}) must be an ordered subinterval of [0, 1]"
            )));
        }
        Ok(())
    }
}

/// A design annotated with its operating characteristics under the null and
/// alternative rates, plus the value of the criterion that selected it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedDesign {
    pub design: Design,
    pub oc_null: OperatingCharacteristics,
    pub oc_alt: OperatingCharacteristics,
    pub criterion_value: f64,
}

/// Feasibility uses an additive guard so double rounding cannot flip a
/// design sitting exactly at the cap.
pub const ALPHA_GUARD: f64 = 1e-12;

fn lex_key(d: &Design) -> (u64, u64, u64, u64) {
    (d.n1, d.r1, d.r2, d.n2)
}

/// Every design within the budget whose exact significance does not exceed
/// the target, annotated with null and alternative characteristics, sorted
/// lexicographically by (n1, r1, r2, n2).
pub fn enumerate_feasible(spec: &SearchSpec) -> Result<Vec<RankedDesign>> {
    spec.validate()?;
    let splits: Vec<(u64, u64)> = match spec.budget_mode {
        BudgetMode::ExactTotal => (0..=spec.total_n)
            .map(|n1| (n1, spec.total_n - n1))
            .collect(),
        BudgetMode::UpToTotal => (0..=spec.total_n)
            .flat_map(|n1| (0..=spec.total_n - n1).map(move |n2| (n1, n2)))
            .collect(),
    };

    let mut out: Vec<RankedDesign> = splits
        .into_par_iter()
        .map(|(n1, n2)| enumerate_slice(spec, n1, n2))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    // slices are parallel over (n1, n2); merge into the canonical order
    out.sort_by_key(|rd| lex_key(&rd.design));
    Ok(out)
}

fn enumerate_slice(spec: &SearchSpec, n1: u64, n2: u64) -> Result<Vec<RankedDesign>> {
    let null = SliceTables::new(n1, n2, &spec.null_rates)?;
    let alt = SliceTables::new(n1, n2, &spec.alt_rates)?;
    let cap = spec.alpha_target + ALPHA_GUARD;
    let mut out = Vec::new();
    for r1 in 0..=n1 {
        // alpha is nonincreasing in r2, so the feasible r2 form a suffix;
        // binary-search its start instead of scanning all of them
        let mut lo = 0u64;
        let mut hi = n1 + n2 + 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if null.reject(r1, mid) <= cap {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        for r2 in lo..=(n1 + n2) {
            let oc_null = null.characteristics(r1, r2);
            let oc_alt = alt.characteristics(r1, r2);
            out.push(RankedDesign {
                design: Design {
                    n1,
                    n2,
                    r1,
                    r2,
                    t1: None,
                    t2: None,
                },
                oc_null,
                oc_alt,
                criterion_value: oc_null.reject_prob,
            });
        }
    }
    Ok(out)
}

fn argbest<F>(candidates: &[RankedDesign], value: F, maximize: bool) -> Vec<RankedDesign>
where
    F: Fn(&RankedDesign) -> f64,
{
    let mut best: Option<f64> = None;
    for rd in candidates {
        let v = value(rd);
        best = Some(match best {
            None => v,
            Some(b) if (maximize && v > b) || (!maximize && v < b) => v,
            Some(b) => b,
        });
    }
    let Some(best) = best else {
        return Vec::new();
    };
    // candidates are already in lexicographic order; exact ties all reported
    candidates
        .iter()
        .filter(|rd| value(rd) == best)
        .map(|rd| {
            let mut rd = *rd;
            rd.criterion_value = best;
            rd
        })
        .collect()
}

/// Applies the spec's criterion to a feasible candidate list. Ties on the
/// criterion value are all reported, in the lexicographic order of
/// `enumerate_feasible`; the first entry is the designated selection.
pub fn select(spec: &SearchSpec, candidates: &[RankedDesign]) -> Result<Vec<RankedDesign>> {
    spec.validate()?;
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let (alo, ahi) = spec.suggested_filter.alpha_window;
    let in_alpha_window = |rd: &&RankedDesign| -> bool {
        rd.oc_null.reject_prob >= alo && rd.oc_null.reject_prob <= ahi
    };
    Ok(match spec.criterion {
        Criterion::HighestAlpha => argbest(candidates, |rd| rd.oc_null.reject_prob, true),
        Criterion::Optimal => argbest(candidates, |rd| rd.oc_null.ess_bound, false),
        Criterion::MinimaxEarlyStop => {
            let windowed: Vec<RankedDesign> = candidates
                .iter()
                .filter(in_alpha_window)
                .filter(|rd| rd.design.r1 < rd.design.n1)
                .copied()
                .collect();
            argbest(&windowed, |rd| rd.oc_null.early_stop_prob, true)
        }
        Criterion::Balanced => {
            let balanced: Vec<RankedDesign> = candidates
                .iter()
                .filter(|rd| rd.design.n1 == rd.design.n2)
                .copied()
                .collect();
            argbest(&balanced, |rd| rd.oc_null.reject_prob, true)
        }
        Criterion::Suggested => {
            let (elo, ehi) = spec.suggested_filter.early_stop_window;
            candidates
                .iter()
                .filter(in_alpha_window)
                .filter(|rd| {
                    let e = rd.oc_null.early_stop_prob;
                    e > elo && e < ehi
                })
                .filter(|rd| !spec.suggested_filter.stage1_cap || 2 * rd.design.n1 <= rd.design.n2)
                .copied()
                .collect()
        }
    })
}

/// Enumerates and selects in one step.
pub fn search(spec: &SearchSpec) -> Result<Vec<RankedDesign>> {
    let candidates = enumerate_feasible(spec)?;
    select(spec, &candidates)
}

/// The no-early-stopping reference design: among candidates with r1 = 0 the
/// one with the largest exact significance. All budget splits of such a
/// design share the same marginal binomial test, so their alphas agree only
/// up to rounding noise; near-ties within the alpha guard resolve to the
/// lexicographically first, the pure single-stage split n1 = 0.
pub fn no_early_stopping_reference(candidates: &[RankedDesign]) -> Option<RankedDesign> {
    let max = candidates
        .iter()
        .filter(|rd| rd.design.r1 == 0)
        .map(|rd| rd.oc_null.reject_prob)
        .fold(f64::NEG_INFINITY, f64::max);
    candidates
        .iter()
        .filter(|rd| rd.design.r1 == 0 && rd.oc_null.reject_prob >= max - ALPHA_GUARD)
        .map(|rd| RankedDesign {
            criterion_value: rd.oc_null.reject_prob,
            ..*rd
        })
        .next()
}

/// CSV emission for ranked designs. `labels` supplies the first column.
pub fn ranked_to_csv<'a, I>(rows: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a RankedDesign)>,
{
    csv_document(
        "label,n1,n2,r1,r2,exact_alpha,ess_bound,early_stop_prob,power_alt",
        rows.into_iter().map(|(label, rd)| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                label,
                rd.design.n1,
                rd.design.n2,
                rd.design.r1,
                rd.design.r2,
                fmt6(rd.oc_null.reject_prob),
                fmt6(rd.oc_null.ess_bound),
                fmt6(rd.oc_null.early_stop_prob),
                fmt6(rd.oc_alt.reject_prob),
            )
        }),
    )
}

/// A classical same-criteria two-stage design, described both by this
/// crate's thresholds (continue iff X1 >= r1, reject iff the total success
/// count reaches r2) and by the conventional stop-if-at-most bounds (stop
/// iff X1 <= simon_r1, accept iff total <= simon_r2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimonDesign {
    pub ranked: RankedDesign,
    pub simon_r1: i64,
    pub simon_r2: i64,
}

/// Searches the classical designs recovered at p1 = p2: `optimal` minimizes
/// the expected sample size under the null and `minimax` minimizes the total
/// sample size (breaking ties by expected size). Both must hold exact
/// significance at most `alpha_target` and power at least `power_target`.
pub fn simon_designs(
    p0: f64,
    pa: f64,
    alpha_target: f64,
    power_target: f64,
    n_max: u64,
) -> Result<(SimonDesign, SimonDesign)> {
    for (name, p) in [("p0", p0), ("pa", pa)] {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::Validation(format!(
                "{name} must be a probability in [0, 1], got {p}"
            )));
        }
    }
    if p0 >= pa {
        return Err(Error::Validation("p0 must be strictly below pa".into()));
    }
    if !alpha_target.is_finite() || alpha_target <= 0.0 || alpha_target > 1.0 {
        return Err(Error::Validation(format!(
            "alpha_target must lie in (0, 1], got {alpha_target}"
        )));
    }
    if !power_target.is_finite() || !(0.0..=1.0).contains(&power_target) {
        return Err(Error::Validation(format!(
            "power_target must lie in [0, 1], got {power_target}"
        )));
    }
    if n_max < 1 {
        return Err(Error::Validation("n_max must be at least 1".into()));
    }

    let null = Rates { p1: p0, p2: p0 };
    let alt = Rates { p1: pa, p2: pa };
    let cap = alpha_target + ALPHA_GUARD;

    // (n, n1) slices are independent; collect qualifying designs per slice
    let slices: Vec<(u64, u64)> = (1..=n_max)
        .flat_map(|n| (1..=n).map(move |n1| (n, n1)))
        .collect();
    let qualifying: Vec<RankedDesign> = slices
        .into_par_iter()
        .map(|(n, n1)| -> Result<Vec<RankedDesign>> {
            let n2 = n - n1;
            let nt = SliceTables::new(n1, n2, &null)?;
            let at = SliceTables::new(n1, n2, &alt)?;
            let mut out = Vec::new();
            for r1 in 1..=n1 {
                // minimal feasible r2 maximizes power for this (n1, n2, r1)
                let mut lo = 0u64;
                let mut hi = n + 1;
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if nt.reject(r1, mid) <= cap {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                if lo > n {
                    continue;
                }
                let r2 = lo;
                let oc_alt = at.characteristics(r1, r2);
                if oc_alt.reject_prob + ALPHA_GUARD < power_target {
                    continue;
                }
                let oc_null = nt.characteristics(r1, r2);
                out.push(RankedDesign {
                    design: Design {
                        n1,
                        n2,
                        r1,
                        r2,
                        t1: None,
                        t2: None,
                    },
                    oc_null,
                    oc_alt,
                    criterion_value: oc_null.ess_bound,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    if qualifying.is_empty() {
        return Err(Error::Infeasible(format!(
            "no design with at most {n_max} patients meets alpha <= {alpha_target} and power >= {power_target}"
        )));
    }

    let optimal = qualifying
        .iter()
        .min_by(|a, b| {
            (a.oc_null.ess_bound, lex_key(&a.design))
                .partial_cmp(&(b.oc_null.ess_bound, lex_key(&b.design)))
                .expect("expected sample sizes are finite")
        })
        .copied()
        .map(|mut rd| {
            rd.criterion_value = rd.oc_null.ess_bound;
            rd
        })
        .expect("non-empty");

    let minimax = qualifying
        .iter()
        .min_by(|a, b| {
            (a.design.total_n(), a.oc_null.ess_bound, lex_key(&a.design))
                .partial_cmp(&(b.design.total_n(), b.oc_null.ess_bound, lex_key(&b.design)))
                .expect("expected sample sizes are finite")
        })
        .copied()
        .map(|mut rd| {
            rd.criterion_value = rd.design.total_n() as f64;
            rd
        })
        .expect("non-empty");

    let wrap = |rd: RankedDesign| SimonDesign {
        ranked: rd,
        simon_r1: rd.design.r1 as i64 - 1,
        simon_r2: rd.design.r2 as i64 - 1,
    };
    Ok((wrap(optimal), wrap(minimax)))
}
