//! Regenerates the reference design catalog: the selected designs for the
//! 36-patient configuration (alpha .1, null rates (.8, .2), alternative
//! p2 = .4) and the Stage-1 decision-time moments of the suggested designs.
//!
//! Catalog rows: A highest significance, B lowest expected sample size,
//! C highest early-termination probability, D balanced, E-H the windowed
//! suggested designs, X the no-early-stopping binomial reference, and Y/Z
//! the classical same-criteria optimal and minimax designs at p0 = .2,
//! pa = .4, power .9. Rows Y and Z also carry the conventional
//! stop-if-at-most bounds (simon_r1, simon_r2) alongside this crate's
//! continue/reject thresholds.

use twostage::design::Rates;
use twostage::report::fmt6;
use twostage::search::{
    enumerate_feasible, no_early_stopping_reference, select, simon_designs, BudgetMode, Criterion,
    RankedDesign, SearchSpec, SuggestedFilter,
};

use crate::AppError;

pub struct TableRow {
    pub label: &'static str,
    pub ranked: RankedDesign,
    pub simon_bounds: Option<(i64, i64)>,
}

pub struct DurationRow {
    pub label: &'static str,
    pub n1: u64,
    pub r1: u64,
    pub mean: f64,
    pub sd: f64,
}

pub struct Catalog {
    pub designs: Vec<TableRow>,
    pub durations: Vec<DurationRow>,
}

const NULL_P1: f64 = 0.8;
const SIMON_N_MAX: u64 = 45;

fn catalog_spec(criterion: Criterion) -> SearchSpec {
    SearchSpec {
        total_n: 36,
        budget_mode: BudgetMode::ExactTotal,
        alpha_target: 0.1,
        null_rates: Rates {
            p1: NULL_P1,
            p2: 0.2,
        },
        alt_rates: Rates {
            p1: NULL_P1,
            p2: 0.4,
        },
        criterion,
        suggested_filter: SuggestedFilter::default(),
    }
}

pub fn generate() -> Result<Catalog, AppError> {
    let candidates = enumerate_feasible(&catalog_spec(Criterion::HighestAlpha))?;
    let first = |criterion: Criterion| -> Result<RankedDesign, AppError> {
        let picked = select(&catalog_spec(criterion), &candidates)?;
        picked.first().copied().ok_or_else(|| {
            AppError::Lib(twostage::Error::Infeasible(format!(
                "criterion {criterion:?} selected no design"
            )))
        })
    };

    let mut designs = vec![
        TableRow {
            label: "A",
            ranked: first(Criterion::HighestAlpha)?,
            simon_bounds: None,
        },
        TableRow {
            label: "B",
            ranked: first(Criterion::Optimal)?,
            simon_bounds: None,
        },
        TableRow {
            label: "C",
            ranked: first(Criterion::MinimaxEarlyStop)?,
            simon_bounds: None,
        },
        TableRow {
            label: "D",
            ranked: first(Criterion::Balanced)?,
            simon_bounds: None,
        },
    ];
    let suggested = select(&catalog_spec(Criterion::Suggested), &candidates)?;
    let suggested_labels = ["E", "F", "G", "H"];
    if suggested.len() != suggested_labels.len() {
        return Err(AppError::Lib(twostage::Error::Infeasible(format!(
            "expected {} suggested designs, found {}",
            suggested_labels.len(),
            suggested.len()
        ))));
    }
    for (label, ranked) in suggested_labels.into_iter().zip(suggested.iter().copied()) {
        designs.push(TableRow {
            label,
            ranked,
            simon_bounds: None,
        });
    }
    let x = no_early_stopping_reference(&candidates).ok_or_else(|| {
        AppError::Lib(twostage::Error::Infeasible(
            "no feasible design without early stopping".into(),
        ))
    })?;
    designs.push(TableRow {
        label: "X",
        ranked: x,
        simon_bounds: None,
    });

    let (optimal, minimax) = simon_designs(0.2, 0.4, 0.1, 0.9, SIMON_N_MAX)?;
    designs.push(TableRow {
        label: "Y",
        ranked: optimal.ranked,
        simon_bounds: Some((optimal.simon_r1, optimal.simon_r2)),
    });
    designs.push(TableRow {
        label: "Z",
        ranked: minimax.ranked,
        simon_bounds: Some((minimax.simon_r1, minimax.simon_r2)),
    });

    let mut durations = Vec::new();
    for (label, ranked) in suggested_labels.into_iter().zip(suggested.iter()) {
        let (mean, sd) = twostage::duration::design_duration(&ranked.design, NULL_P1)?;
        durations.push(DurationRow {
            label,
            n1: ranked.design.n1,
            r1: ranked.design.r1,
            mean,
            sd,
        });
    }

    Ok(Catalog { designs, durations })
}

impl Catalog {
    /// Two CSV blocks separated by a blank line: the design catalog, then
    /// the Stage-1 decision-time moments.
    pub fn to_csv(&self) -> String {
        let mut s = twostage::search::ranked_to_csv(
            self.designs.iter().map(|row| (row.label, &row.ranked)),
        );
        s.push('\n');
        s.push_str("label,n1,r1,mean,sd\n");
        for row in &self.durations {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                row.label,
                row.n1,
                row.r1,
                fmt6(row.mean),
                fmt6(row.sd)
            ));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let designs: Vec<serde_json::Value> = self
            .designs
            .iter()
            .map(|row| {
                let d = &row.ranked.design;
                let mut v = serde_json::json!({
                    "label": row.label,
                    "n1": d.n1,
                    "n2": d.n2,
                    "r1": d.r1,
                    "r2": d.r2,
                    "exact_alpha": row.ranked.oc_null.reject_prob,
                    "ess_bound": row.ranked.oc_null.ess_bound,
                    "early_stop_prob": row.ranked.oc_null.early_stop_prob,
                    "power_alt": row.ranked.oc_alt.reject_prob,
                });
                if let Some((r1, r2)) = row.simon_bounds {
                    v["simon_r1"] = r1.into();
                    v["simon_r2"] = r2.into();
                }
                v
            })
            .collect();
        let durations: Vec<serde_json::Value> = self
            .durations
            .iter()
            .map(|row| {
                serde_json::json!({
                    "label": row.label,
                    "n1": row.n1,
                    "r1": row.r1,
                    "mean": row.mean,
                    "sd": row.sd,
                })
            })
            .collect();
        serde_json::json!({ "table2": designs, "table3": durations })
    }
}
