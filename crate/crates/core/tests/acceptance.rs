//! Acceptance suite. One test per criterion; each prints a single PASS line
//! once every assertion in it has held.
//!
//! Expected values marked "printed" are the reference design catalog figures
//! (significance, expected-sample-size bound, early-stopping probability,
//! power) for the 36-patient configuration with null rates (.8, .2) and
//! alternative p2 = .4, plus the classical same-criteria rows at
//! p0 = .2, pa = .4.

use std::time::Instant;

use twostage::design::{Design, Rates};
use twostage::duration::{design_duration, duration_pmf};
use twostage::oc;
use twostage::search::{
    enumerate_feasible, no_early_stopping_reference, select, simon_designs, BudgetMode, Criterion,
    RankedDesign, SearchSpec, SuggestedFilter,
};
use twostage::sim::{simulate, SimConfig};

fn table2_spec(criterion: Criterion) -> SearchSpec {
    SearchSpec {
        total_n: 36,
        budget_mode: BudgetMode::ExactTotal,
        alpha_target: 0.1,
        null_rates: Rates::new(0.8, 0.2).unwrap(),
        alt_rates: Rates::new(0.8, 0.4).unwrap(),
        criterion,
        suggested_filter: SuggestedFilter::default(),
    }
}

struct PrintedRow {
    label: &'static str,
    params: (u64, u64, u64, u64),
    alpha: f64,
    ess: f64,
    early_stop: f64,
    power: f64,
}

const TABLE2: [PrintedRow; 9] = [
    PrintedRow {
        label: "A",
        params: (31, 5, 28, 5),
        alpha: 0.09997,
        ess: 31.54,
        early_stop: 0.893,
        power: 0.107,
    },
    PrintedRow {
        label: "B",
        params: (9, 27, 9, 7),
        alpha: 0.0898,
        ess: 12.62,
        early_stop: 0.866,
        power: 0.134,
    },
    PrintedRow {
        label: "C",
        params: (32, 4, 29, 0),
        alpha: 0.0931,
        ess: 32.37,
        early_stop: 0.907,
        power: 0.093,
    },
    PrintedRow {
        label: "D",
        params: (18, 18, 17, 0),
        alpha: 0.0991,
        ess: 19.78,
        early_stop: 0.901,
        power: 0.099,
    },
    PrintedRow {
        label: "E",
        params: (5, 31, 3, 11),
        alpha: 0.0858,
        ess: 34.20,
        early_stop: 0.058,
        power: 0.861,
    },
    PrintedRow {
        label: "F",
        params: (8, 28, 5, 11),
        alpha: 0.0862,
        ess: 34.42,
        early_stop: 0.056,
        power: 0.863,
    },
    PrintedRow {
        label: "G",
        params: (11, 25, 7, 11),
        alpha: 0.0868,
        ess: 34.74,
        early_stop: 0.050,
        power: 0.869,
    },
    PrintedRow {
        label: "H",
        params: (12, 24, 8, 11),
        alpha: 0.0858,
        ess: 34.26,
        early_stop: 0.073,
        power: 0.851,
    },
    PrintedRow {
        label: "X",
        params: (0, 36, 0, 11),
        alpha: 0.0889,
        ess: 36.0,
        early_stop: 0.0,
        power: 0.910,
    },
];

fn assert_row(row: &PrintedRow, rd: &RankedDesign) {
    let d = rd.design;
    assert_eq!(
        (d.n1, d.n2, d.r1, d.r2),
        row.params,
        "row {}: wrong design parameters",
        row.label
    );
    let checks = [
        ("alpha", rd.oc_null.reject_prob, row.alpha, 0.0005),
        ("ess", rd.oc_null.ess_bound, row.ess, 0.005),
        (
            "early stop",
            rd.oc_null.early_stop_prob,
            row.early_stop,
            0.0005,
        ),
        ("power", rd.oc_alt.reject_prob, row.power, 0.0005),
    ];
    for (name, got, want, tol) in checks {
        assert!(
            (got - want).abs() < tol,
            "row {}: {name} = {got}, printed value {want} (tolerance {tol})",
            row.label
        );
    }
}

#[test]
fn criterion_1_table2_reproduction() {
    let start = Instant::now();

    let candidates = enumerate_feasible(&table2_spec(Criterion::HighestAlpha)).unwrap();
    let by_label = |label: &str| -> Vec<RankedDesign> {
        match label {
            "A" => select(&table2_spec(Criterion::HighestAlpha), &candidates).unwrap(),
            "B" => select(&table2_spec(Criterion::Optimal), &candidates).unwrap(),
            "C" => select(&table2_spec(Criterion::MinimaxEarlyStop), &candidates).unwrap(),
            "D" => select(&table2_spec(Criterion::Balanced), &candidates).unwrap(),
            _ => unreachable!(),
        }
    };

    for row in &TABLE2[..4] {
        let picked = by_label(row.label);
        assert!(
            !picked.is_empty(),
            "row {}: selection came back empty",
            row.label
        );
        assert_row(row, &picked[0]);
    }

    let suggested = select(&table2_spec(Criterion::Suggested), &candidates).unwrap();
    assert_eq!(
        suggested.len(),
        4,
        "the suggested filter must leave exactly E-H"
    );
    for (row, rd) in TABLE2[4..8].iter().zip(&suggested) {
        assert_row(row, rd);
    }

    // row X: the no-early-stopping single-binomial design
    let x_row = &TABLE2[8];
    let x = no_early_stopping_reference(&candidates).expect("an r1 = 0 design must be feasible");
    assert_row(x_row, &x);

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "took {elapsed:?}, budget is 10 s"
    );
    println!("ACCEPTANCE criterion 1 (table 2 rows A-H, X reproduced): PASS ({elapsed:?})");
}

#[test]
fn criterion_2_table3_reproduction() {
    let start = Instant::now();
    let rows = [
        ("E", Design::new(5, 31, 3, 11).unwrap(), 3.63, 0.73),
        ("F", Design::new(8, 28, 5, 11).unwrap(), 6.11, 1.00),
        ("G", Design::new(11, 25, 7, 11).unwrap(), 8.60, 1.23),
        ("H", Design::new(12, 24, 8, 11).unwrap(), 9.76, 1.26),
    ];
    for (label, design, want_mean, want_sd) in rows {
        let (mean, sd) = design_duration(&design, 0.8).unwrap();
        assert!(
            (mean - want_mean).abs() < 0.005,
            "row {label}: mean {mean} vs {want_mean}"
        );
        assert!(
            (sd - want_sd).abs() < 0.005,
            "row {label}: sd {sd} vs {want_sd}"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_millis() < 1000,
        "took {elapsed:?}, budget is milliseconds"
    );
    println!("ACCEPTANCE criterion 2 (table 3 stage-1 duration moments): PASS ({elapsed:?})");
}

#[test]
fn criterion_3_simon_rows() {
    let (optimal, minimax) = simon_designs(0.2, 0.4, 0.1, 0.9, 45).unwrap();

    // row Y: n1 = 17, continue iff X1 >= 4 (conventional stop bound 3),
    // 37 patients total. The catalog's printed n2 = 10 contradicts the
    // printed expected size 26.02 (which requires n2 = 20) and is treated
    // as a typo; the n2 below is the consistent value.
    let y = &optimal;
    let d = y.ranked.design;
    assert_eq!((d.n1, d.n2, d.r1, d.r2), (17, 20, 4, 11));
    assert_eq!((y.simon_r1, y.simon_r2), (3, 10));
    assert!((y.ranked.oc_null.reject_prob - 0.0948).abs() < 0.001);
    assert!((y.ranked.oc_null.early_stop_prob - 0.549).abs() < 0.001);
    assert!((y.ranked.oc_alt.reject_prob - 0.903).abs() < 0.001);
    // expected size printed to two decimals; compared at that precision
    assert!((y.ranked.oc_null.ess_bound - 26.02).abs() < 0.005);

    // row Z: printed n2 = 15 is likewise inconsistent with 28.26 (needs 17)
    let z = &minimax;
    let d = z.ranked.design;
    assert_eq!((d.n1, d.n2, d.r1, d.r2), (19, 17, 4, 11));
    assert_eq!((z.simon_r1, z.simon_r2), (3, 10));
    assert!((z.ranked.oc_null.reject_prob - 0.0861).abs() < 0.001);
    assert!((z.ranked.oc_null.early_stop_prob - 0.455).abs() < 0.001);
    assert!((z.ranked.oc_alt.reject_prob - 0.902).abs() < 0.001);
    assert!((z.ranked.oc_null.ess_bound - 28.26).abs() < 0.005);

    println!("ACCEPTANCE criterion 3 (simon optimal/minimax rows): PASS");
}

// ---------------------------------------------------------------------------
// Independent brute-force oracle: exact integer binomial coefficients and
// plain powers, summed over the full outcome cube with the decision rules
// applied as conditions rather than summation limits.

fn choose_exact(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as f64
}

fn pmf_exact(n: u64, k: u64, p: f64) -> f64 {
    choose_exact(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn reject_brute_force(design: &Design, rates: &Rates) -> f64 {
    let (n1, n2, r1, r2) = (design.n1, design.n2, design.r1, design.r2);
    let ratio = rates.conditional_ratio();
    let mut total = 0.0;
    for x1 in 0..=n1 {
        if x1 < r1 {
            continue;
        }
        let p_x1 = pmf_exact(n1, x1, rates.p1);
        for x12 in 0..=x1 {
            let p_x12 = pmf_exact(x1, x12, ratio);
            for x2 in 0..=n2 {
                if x12 + x2 >= r2 {
                    total += p_x1 * p_x12 * pmf_exact(n2, x2, rates.p2);
                }
            }
        }
    }
    total
}

#[test]
fn criterion_4_oracle_equivalence() {
    // every design with both stages at most 8, over all ordered rate pairs
    // from a 5-point grid
    let grid = [0.0, 0.2, 0.5, 0.8, 1.0];
    let mut cases = 0u64;
    for n1 in 0..=8 {
        for n2 in 0..=8 {
            for r1 in 0..=n1 {
                for r2 in 0..=(n1 + n2) {
                    let design = Design::new(n1, n2, r1, r2).unwrap();
                    for &p1 in &grid {
                        for &p2 in &grid {
                            if p2 > p1 {
                                continue;
                            }
                            let rates = Rates::new(p1, p2).unwrap();
                            let exact = oc::reject_prob(&design, &rates).unwrap();
                            let brute = reject_brute_force(&design, &rates);
                            assert!(
                                (exact - brute).abs() < 1e-10,
                                "engine {exact} vs brute force {brute} for \
                                 ({n1},{n2},{r1},{r2}) at ({p1},{p2})"
                            );
                            cases += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(cases >= 10_000, "only {cases} brute-force cases run");
    println!("ACCEPTANCE criterion 4a (brute-force equivalence, {cases} cases): PASS");

    // Monte Carlo battery: the catalog designs under both hypotheses,
    // 10^6 replicates each, every estimate within 4 standard errors
    let designs = [
        Design::new(31, 5, 28, 5).unwrap(),
        Design::new(9, 27, 9, 7).unwrap(),
        Design::new(32, 4, 29, 0).unwrap(),
        Design::new(18, 18, 17, 0).unwrap(),
        Design::new(5, 31, 3, 11).unwrap(),
        Design::new(8, 28, 5, 11).unwrap(),
        Design::new(11, 25, 7, 11).unwrap(),
        Design::new(12, 24, 8, 11).unwrap(),
        Design::new(0, 36, 0, 11).unwrap(),
        Design::new(17, 20, 4, 11).unwrap(),
        Design::new(19, 17, 4, 11).unwrap(),
    ];
    let rate_pairs = [Rates::new(0.8, 0.2).unwrap(), Rates::new(0.8, 0.4).unwrap()];

    let mut configs = 0u64;
    for (i, design) in designs.iter().enumerate() {
        for rates in rate_pairs {
            let config = SimConfig {
                replicates: 1_000_000,
                seed: 0x5eed_0000 + configs,
                design: *design,
                rates,
            };
            let report = simulate(&config).unwrap();
            let within = |name: &str, est: f64, se: f64, exact: f64| {
                assert!(
                    (est - exact).abs() <= 4.0 * se,
                    "config {i} {rates:?}: {name} estimate {est} vs exact {exact} (se {se})"
                );
            };
            // binomial proportions are judged against the standard error of
            // the known exact value, which stays meaningful for rare events
            let prop_se = |exact: f64| (exact * (1.0 - exact) / config.replicates as f64).sqrt();
            let exact_reject = oc::reject_prob(design, &rates).unwrap();
            within(
                "reject",
                report.est_reject_prob.value,
                prop_se(exact_reject),
                exact_reject,
            );
            let exact_early = oc::early_stop_prob(design, rates.p1).unwrap();
            within(
                "early stop",
                report.est_early_stop_prob.value,
                prop_se(exact_early),
                exact_early,
            );
            // every continuation enrolls the full n1 + n2, so the bound is
            // the exact expected enrollment, and enrollment is binary with
            // exact standard error n2 sqrt(e (1 - e) / R)
            within(
                "ess",
                report.est_ess.value,
                design.n2 as f64 * prop_se(exact_early),
                oc::ess_bound(design, rates.p1).unwrap(),
            );
            if design.r1 >= 1 {
                let (mean, _) = design_duration(design, rates.p1).unwrap();
                let se = report.est_stage1_decision_count.sd / (config.replicates as f64).sqrt();
                within(
                    "decision count",
                    report.est_stage1_decision_count.mean,
                    se,
                    mean,
                );
            }
            configs += 1;
        }
    }
    assert!(configs >= 20);
    println!("ACCEPTANCE criterion 4b (Monte Carlo battery, {configs} configs x 1e6): PASS");
}

#[test]
fn criterion_5_invariant_suite() {
    // probability normalization at 1e-12, including the stress scale
    for &n in &[0u64, 1, 2, 5, 17, 36, 100, 1000, 10_000] {
        for &p in &[0.0, 0.001, 0.2, 0.5, 0.8, 0.999, 1.0] {
            let total: f64 = (0..=n)
                .map(|k| twostage::prob::binom_pmf(n, k, p).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n} p={p}: sum={total}");
        }
    }

    // cdf / tail complementarity
    for &n in &[0u64, 1, 7, 36, 200] {
        for r in 0..=n + 1 {
            for &p in &[0.0, 0.2, 0.5, 0.8, 1.0] {
                let lower = twostage::prob::binom_cdf_lt(n, r, p).unwrap();
                let upper = twostage::prob::binom_tail_ge(n, r as i64, p).unwrap();
                assert!((lower + upper - 1.0).abs() < 1e-12);
            }
        }
    }

    // rejection never exceeds the continuation probability (power bound)
    let bound_designs = [
        Design::new(5, 31, 3, 11).unwrap(),
        Design::new(31, 5, 28, 5).unwrap(),
        Design::new(18, 18, 17, 0).unwrap(),
        Design::new(6, 3, 2, 4).unwrap(),
    ];
    for design in &bound_designs {
        for i in 0..=10 {
            let p1 = i as f64 / 10.0;
            for j in 0..=i {
                let p2 = j as f64 / 10.0;
                let rates = Rates::new(p1, p2).unwrap();
                let reject = oc::reject_prob(design, &rates).unwrap();
                let bound = oc::power_bound(design, p1).unwrap();
                assert!(reject <= bound + 1e-12, "{design:?} at ({p1},{p2})");
            }
        }
    }

    // power nondecreasing in p2 at step .05, early stopping nonincreasing in p1
    for design in &bound_designs {
        let p1 = 0.8;
        let mut prev = -1.0;
        for j in 0..=16 {
            let p2 = j as f64 * 0.05;
            let r = oc::reject_prob(design, &Rates::new(p1, p2).unwrap()).unwrap();
            assert!(r >= prev - 1e-12, "power dipped at p2={p2} for {design:?}");
            prev = r;
        }
        if design.r1 >= 1 {
            let mut prev = 2.0;
            for i in 0..=20 {
                let p1 = i as f64 * 0.05;
                let e = oc::early_stop_prob(design, p1).unwrap();
                assert!(
                    e <= prev + 1e-12,
                    "early stop rose at p1={p1} for {design:?}"
                );
                prev = e;
            }
        }
    }

    // r1 = 0 collapses to a single binomial test on n1 + n2 patients,
    // for any p1 >= p2 including p1 != 1
    for (n1, n2, r2) in [(17u64, 19u64, 11u64), (5, 5, 3), (0, 36, 11), (10, 0, 4)] {
        let design = Design::new(n1, n2, 0, r2).unwrap();
        for &p1 in &[0.3, 0.8, 1.0] {
            for &p2 in &[0.0, 0.2, 0.3] {
                if p2 > p1 {
                    continue;
                }
                let r = oc::reject_prob(&design, &Rates::new(p1, p2).unwrap()).unwrap();
                let marginal = twostage::prob::binom_tail_ge(n1 + n2, r2 as i64, p2).unwrap();
                assert!(
                    (r - marginal).abs() < 1e-10,
                    "collapse failed for ({n1},{n2},0,{r2}) at ({p1},{p2})"
                );
            }
        }
    }

    // same-criteria special case p1 = p2 = p: the general engine equals the
    // direct double sum Pr[X1 >= r1 and X1 + X2 >= r2]
    let simon_double_sum = |design: &Design, p: f64| -> f64 {
        let mut total = 0.0;
        for x1 in design.r1..=design.n1 {
            let px1 = pmf_exact(design.n1, x1, p);
            for x2 in 0..=design.n2 {
                if x1 + x2 >= design.r2 {
                    total += px1 * pmf_exact(design.n2, x2, p);
                }
            }
        }
        total
    };
    let simon_designs_to_check = [
        Design::new(17, 20, 4, 11).unwrap(),
        Design::new(19, 17, 4, 11).unwrap(),
        Design::new(9, 8, 3, 7).unwrap(),
        Design::new(4, 4, 2, 5).unwrap(),
    ];
    for design in &simon_designs_to_check {
        for &p in &[0.0, 0.2, 0.4, 0.9, 1.0] {
            let general = oc::reject_prob(design, &Rates::new(p, p).unwrap()).unwrap();
            let direct = simon_double_sum(design, p);
            assert!(
                (general - direct).abs() < 1e-10,
                "{design:?} at p={p}: general {general} vs double sum {direct}"
            );
        }
    }

    // stage-1 duration support, normalization, and success/failure symmetry
    for s in 1u64..=12 {
        for t in 1u64..=12 {
            for &p in &[0.0, 0.2, 0.5, 0.8, 1.0] {
                let d = duration_pmf(s, t, p).unwrap();
                if p > 0.0 && p < 1.0 {
                    assert_eq!(d.support(), (s.min(t), s + t - 1));
                }
                let total: f64 = d.iter().map(|(_, q)| q).sum();
                assert!((total - 1.0).abs() < 1e-12);
                let swapped = duration_pmf(t, s, 1.0 - p).unwrap();
                let (lo, hi) = d.support();
                assert_eq!((lo, hi), swapped.support());
                for y in lo..=hi {
                    assert!((d.pmf(y) - swapped.pmf(y)).abs() < 1e-12);
                }
            }
        }
    }

    println!("ACCEPTANCE criterion 5 (invariant suite): PASS");
}
