//! Perfect sampling from the Gibbs measure by monotone coupling from the
//! past, and the annealed/quenched comparison experiments built on it.
//!
//! The doubling scheme runs the chains from all-plus and all-minus over
//! `(-2^k, 0]` for `k = 0, 1, 2, ...` until they coalesce at time 0; the
//! coalesced configuration is exactly Gibbs-distributed. Correctness hinges
//! on reusing the identical randomness for overlapping intervals across
//! doubling levels — here that reuse is structural, because update events
//! are derived from substreams keyed on `(seed, vertex, unit time block)`
//! with absolute block indices.

use crate::dynamics::{
    evolve_events, sample_updates, Rule, SpinConfig, UpdateSequence,
};
use crate::error::{Error, Result};
use crate::fourier::RuleTable;
use crate::graphs::Graph;
use crate::observables::Estimate;
use crate::rng;
use rayon::prelude::*;

/// Depth cap: no coalescence within `2^MAX_EPOCH` time units is an error.
pub const MAX_EPOCH: u32 = 20;

/// A Gibbs sample together with the doubling depth that produced it.
#[derive(Debug, Clone)]
pub struct PerfectSample {
    pub config: SpinConfig,
    /// Number of doublings used; the coupling ran from `-2^epochs`.
    pub epochs: u32,
}

fn run_epoch(
    graph: &Graph,
    beta: f64,
    seq: &UpdateSequence,
    rule: Rule<'_>,
) -> (SpinConfig, SpinConfig) {
    let mut plus = SpinConfig::all_plus(graph.n());
    let mut minus = SpinConfig::all_minus(graph.n());
    evolve_events(graph, beta, &mut plus, &seq.events, rule);
    evolve_events(graph, beta, &mut minus, &seq.events, rule);
    (plus, minus)
}

fn perfect_sample_impl(
    graph: &Graph,
    beta: f64,
    seed: u64,
    table: Option<&RuleTable>,
    reuse_randomness: bool,
    max_epoch: u32,
) -> Result<PerfectSample> {
    let rule = match table {
        Some(t) => Rule::Generalized(t),
        None => Rule::HeatBath,
    };
    for k in 0..=max_epoch {
        let depth = (1u64 << k) as f64;
        // With reuse, absolute block indices make every earlier interval's
        // randomness a prefix of the longer one. The non-reusing variant
        // below deliberately breaks this for bias-detection tests.
        let epoch_seed = if reuse_randomness {
            seed
        } else {
            rng::mix(seed, &[0x4652_4553, k as u64])
        };
        let seq = sample_updates(graph, -depth, 0.0, epoch_seed, table)?;
        let (plus, minus) = run_epoch(graph, beta, &seq, rule);
        if plus == minus {
            return Ok(PerfectSample {
                config: plus,
                epochs: k,
            });
        }
    }
    Err(Error::NoCoalescence { max_epoch })
}

/// Draw one exact Gibbs sample under heat-bath dynamics.
pub fn perfect_sample(graph: &Graph, beta: f64, seed: u64) -> Result<PerfectSample> {
    perfect_sample_impl(graph, beta, seed, None, true, MAX_EPOCH)
}

/// Like [`perfect_sample`] with an explicit doubling-depth cap.
pub fn perfect_sample_with_cap(
    graph: &Graph,
    beta: f64,
    seed: u64,
    max_epoch: u32,
) -> Result<PerfectSample> {
    perfect_sample_impl(graph, beta, seed, None, true, max_epoch)
}

/// Draw one exact Gibbs sample under the generalized update rule.
pub fn perfect_sample_generalized(
    graph: &Graph,
    beta: f64,
    seed: u64,
    table: &RuleTable,
) -> Result<PerfectSample> {
    perfect_sample_impl(graph, beta, seed, Some(table), true, MAX_EPOCH)
}

/// Deliberately broken variant that draws fresh randomness at every doubling
/// level instead of reusing the past. Its output is biased in general,
/// though the bias can be small on fast-mixing instances.
pub fn biased_sample_fresh_randomness(
    graph: &Graph,
    beta: f64,
    seed: u64,
) -> Result<PerfectSample> {
    perfect_sample_impl(graph, beta, seed, None, false, MAX_EPOCH)
}

/// Deliberately broken variant that violates randomness reuse the other
/// common way: the update buffer grows at the recent end (old randomness is
/// reused for the wrong, older interval), which makes the scheme a forward
/// coupling that returns the first coalesced configuration. Strongly biased;
/// exists so test suites can verify that reuse violations are detectable.
pub fn biased_sample_forward_coupling(
    graph: &Graph,
    beta: f64,
    seed: u64,
) -> Result<PerfectSample> {
    let n = graph.n();
    let mut plus = SpinConfig::all_plus(n);
    let mut minus = SpinConfig::all_minus(n);
    for k in 0..=MAX_EPOCH {
        let t0 = if k == 0 { 0.0 } else { (1u64 << (k - 1)) as f64 };
        let t1 = (1u64 << k) as f64;
        let seq = sample_updates(graph, t0, t1, seed, None)?;
        for event in &seq.events {
            evolve_events(graph, beta, &mut plus, std::slice::from_ref(event), Rule::HeatBath);
            evolve_events(graph, beta, &mut minus, std::slice::from_ref(event), Rule::HeatBath);
            if plus == minus {
                return Ok(PerfectSample {
                    config: plus,
                    epochs: k,
                });
            }
        }
    }
    Err(Error::NoCoalescence {
        max_epoch: MAX_EPOCH,
    })
}

/// One replica of the annealed comparison: `X` starts uniform at time 0,
/// `Y` is stationary via coupling from the past, both evolve through the
/// identical updates on `(0, t]`.
#[derive(Debug, Clone, Copy)]
pub struct AnnealedPoint {
    pub t: f64,
    /// Probability that the two configurations differ anywhere at `t`.
    pub any_disagree: Estimate,
    /// Expected fraction of vertices in disagreement at `t`.
    pub site_disagree: Estimate,
    pub replicas: usize,
}

/// Compare the uniformly started chain against the stationary chain under
/// shared updates.
pub fn annealed_compare(
    graph: &Graph,
    beta: f64,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<AnnealedPoint> {
    if replicas < 2 {
        return Err(Error::Parameter("need at least 2 replicas".into()));
    }
    if t < 0.0 {
        return Err(Error::Parameter("time must be nonnegative".into()));
    }
    let n = graph.n();
    let results: Vec<(bool, f64)> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<(bool, f64)> {
            let rseed = rng::replica_seed(seed, r as u64);
            let stationary = perfect_sample(graph, beta, rseed)?;
            let mut y = stationary.config;
            let mut x = SpinConfig::uniform(n, &mut rng::stream(rseed, &[0x554e_4946]));
            if t > 0.0 {
                let seq = sample_updates(graph, 0.0, t, rseed, None)?;
                evolve_events(graph, beta, &mut x, &seq.events, Rule::HeatBath);
                evolve_events(graph, beta, &mut y, &seq.events, Rule::HeatBath);
            }
            let differing = (0..n as u32).filter(|&v| x.get(v) != y.get(v)).count();
            Ok((differing > 0, differing as f64 / n as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let r = replicas as f64;
    let p_any = results.iter().filter(|x| x.0).count() as f64 / r;
    let frac_mean = results.iter().map(|x| x.1).sum::<f64>() / r;
    let frac_var = results
        .iter()
        .map(|x| (x.1 - frac_mean).powi(2))
        .sum::<f64>()
        / (r - 1.0);
    Ok(AnnealedPoint {
        t,
        any_disagree: Estimate {
            value: p_any,
            se: (p_any * (1.0 - p_any) / r).sqrt(),
        },
        site_disagree: Estimate {
            value: frac_mean,
            se: (frac_var / r).sqrt(),
        },
        replicas,
    })
}

/// Monte Carlo estimate of the overlap `sum_u x0(u) X_t(u)` from the fixed
/// start `x0`, with its standard error.
pub fn quenched_statistic(
    graph: &Graph,
    beta: f64,
    t: f64,
    x0: &SpinConfig,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    if replicas < 2 {
        return Err(Error::Parameter("need at least 2 replicas".into()));
    }
    if x0.len() != graph.n() {
        return Err(Error::Shape("start configuration has wrong length".into()));
    }
    if t < 0.0 {
        return Err(Error::Parameter("time must be nonnegative".into()));
    }
    let n = graph.n();
    let overlaps: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let rseed = rng::replica_seed(rng::mix(seed, &[0x5155]), r as u64);
            let mut cfg = x0.clone();
            if t > 0.0 {
                let seq = sample_updates(graph, 0.0, t, rseed, None).expect("valid interval");
                evolve_events(graph, beta, &mut cfg, &seq.events, Rule::HeatBath);
            }
            (0..n as u32)
                .map(|v| x0.get(v) as f64 * cfg.get(v) as f64)
                .sum::<f64>()
        })
        .collect();
    let r = replicas as f64;
    let mean = overlaps.iter().sum::<f64>() / r;
    let var = overlaps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(Estimate {
        value: mean,
        se: (var / r).sqrt(),
    })
}
