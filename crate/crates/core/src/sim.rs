//! Monte Carlo simulation of complete trials, used as an independent check
//! on every exact quantity.
//!
//! Reproducibility: the generator is ChaCha12 (rand_chacha 0.3). A report is
//! fully determined by the 64-bit seed; replicate i draws from the stream
//! obtained by keying the generator with `seed` and setting the ChaCha
//! stream counter to i. Replicates can therefore run on any number of
//! threads in any order and accumulate into integer tallies, so reports are
//! bit-identical across platforms and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::design::{Design, Rates, TrialOutcome};
use crate::error::{Error, Result};
use crate::prob::binom_pmf_table;

/// What to simulate and how many times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub replicates: u64,
    pub seed: u64,
    pub design: Design,
    pub rates: Rates,
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Sample moments of the Stage-1 decision index (the first patient count at
/// which continue/stop is settled; 0 when r1 = 0 and no decision is needed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecisionCountEstimate {
    pub mean: f64,
    pub sd: f64,
}

/// Estimated operating characteristics from simulated trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub replicates: u64,
    pub seed: u64,
    pub est_reject_prob: Estimate,
    pub est_early_stop_prob: Estimate,
    pub est_ess: Estimate,
    pub est_stage1_decision_count: DecisionCountEstimate,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    rejects: u64,
    early_stops: u64,
    enrolled: u64,
    enrolled_sq: u128,
    decision: u64,
    decision_sq: u128,
}

impl Tally {
    fn add(self, other: Tally) -> Tally {
        Tally {
            rejects: self.rejects + other.rejects,
            early_stops: self.early_stops + other.early_stops,
            enrolled: self.enrolled + other.enrolled,
            enrolled_sq: self.enrolled_sq + other.enrolled_sq,
            decision: self.decision + other.decision,
            decision_sq: self.decision_sq + other.decision_sq,
        }
    }
}

/// Inversion sampler for a small binomial: walk the cached pmf until the
/// cumulative mass passes a uniform draw.
struct BinomialInversion {
    pmf: Vec<f64>,
}

impl BinomialInversion {
    fn new(n: u64, p: f64) -> Result<Self> {
        Ok(BinomialInversion {
            pmf: binom_pmf_table(n, p)?,
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        for (k, q) in self.pmf.iter().enumerate() {
            cum += q;
            if u < cum {
                return k as u64;
            }
        }
        self.pmf.len() as u64 - 1
    }
}

struct TrialSampler {
    design: Design,
    rates: Rates,
    /// failures that settle early termination (n1 - r1 + 1), when r1 >= 1
    failures_to_stop: u64,
    /// conditional t2-success samplers, indexed by the Stage-1 success count
    carryover: Vec<BinomialInversion>,
    stage2: BinomialInversion,
}

impl TrialSampler {
    fn new(design: &Design, rates: &Rates) -> Result<Self> {
        let ratio = rates.conditional_ratio();
        let carryover = (0..=design.n1)
            .map(|x1| BinomialInversion::new(x1, ratio))
            .collect::<Result<_>>()?;
        Ok(TrialSampler {
            design: *design,
            rates: *rates,
            failures_to_stop: design.n1 - design.r1 + 1,
            carryover,
            stage2: BinomialInversion::new(design.n2, rates.p2)?,
        })
    }

    /// One complete trial plus the Stage-1 decision index taken from the
    /// same Bernoulli sequence that produced x1.
    fn run<R: Rng>(&self, rng: &mut R) -> (TrialOutcome, u64) {
        let d = &self.design;
        let mut successes = 0u64;
        let mut failures = 0u64;
        let mut decision_at = if d.r1 == 0 { Some(0) } else { None };
        for i in 1..=d.n1 {
            if rng.gen::<f64>() < self.rates.p1 {
                successes += 1;
            } else {
                failures += 1;
            }
            if decision_at.is_none() && (successes == d.r1 || failures == self.failures_to_stop) {
                decision_at = Some(i);
            }
        }
        let x1 = successes;
        let continued = x1 >= d.r1;
        let (x12, x2) = if continued {
            (
                self.carryover[x1 as usize].sample(rng),
                self.stage2.sample(rng),
            )
        } else {
            (0, 0)
        };
        let outcome = TrialOutcome {
            x1,
            x12,
            x2,
            continued,
            rejected: continued && x12 + x2 >= d.r2,
        };
        (outcome, decision_at.unwrap_or(0))
    }
}

fn replicate_tally(sampler: &TrialSampler, seed: u64, index: u64) -> Tally {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let (outcome, decision) = sampler.run(&mut rng);
    let enrolled = if outcome.continued {
        sampler.design.n1 + sampler.design.n2
    } else {
        sampler.design.n1
    };
    Tally {
        rejects: outcome.rejected as u64,
        early_stops: !outcome.continued as u64,
        enrolled,
        enrolled_sq: (enrolled as u128) * (enrolled as u128),
        decision,
        decision_sq: (decision as u128) * (decision as u128),
    }
}

fn proportion_estimate(count: u64, reps: u64) -> Estimate {
    let r = reps as f64;
    let p = count as f64 / r;
    Estimate {
        value: p,
        std_error: (p * (1.0 - p) / r).sqrt(),
    }
}

fn mean_sd(sum: u64, sum_sq: u128, reps: u64) -> (f64, f64) {
    let r = reps as f64;
    let mean = sum as f64 / r;
    if reps < 2 {
        return (mean, 0.0);
    }
    let var = (sum_sq as f64 - r * mean * mean) / (r - 1.0);
    (mean, var.max(0.0).sqrt())
}

/// Runs the simulation. Identical config and seed produce a bit-identical
/// report regardless of available parallelism.
pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    if config.replicates < 1 {
        return Err(Error::Validation("replicates must be at least 1".into()));
    }
    let design = config.design.validate()?;
    let rates = config.rates.validate()?;
    let sampler = TrialSampler::new(&design, &rates)?;

    let total = (0..config.replicates)
        .into_par_iter()
        .fold(Tally::default, |acc, i| {
            acc.add(replicate_tally(&sampler, config.seed, i))
        })
        .reduce(Tally::default, Tally::add);

    let reps = config.replicates;
    let (ess_mean, ess_sd) = mean_sd(total.enrolled, total.enrolled_sq, reps);
    let (dec_mean, dec_sd) = mean_sd(total.decision, total.decision_sq, reps);
    Ok(SimReport {
        replicates: reps,
        seed: config.seed,
        est_reject_prob: proportion_estimate(total.rejects, reps),
        est_early_stop_prob: proportion_estimate(total.early_stops, reps),
        est_ess: Estimate {
            value: ess_mean,
            std_error: ess_sd / (reps as f64).sqrt(),
        },
        est_stage1_decision_count: DecisionCountEstimate {
            mean: dec_mean,
            sd: dec_sd,
        },
    })
}
