//! Magnetization profiles, the cutoff location, exact small-system
//! distributions, and total-variation bound estimators.
//!
//! The cutoff location `t_m` is the first time the sum of squared
//! magnetizations `sum_v m_t(v)^2` drops to 1, with `m_t(v)` the expected
//! spin at `v` started from all-plus. The sum of squares is estimated
//! unbiasedly from products across independent replica pairs, so no
//! plug-in bias correction is needed when locating the crossing.

use crate::cftp;
use crate::dynamics::{
    evolve_events, sample_updates, Rule, SpinConfig,
};
use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::rng;
use rand::Rng;
use rayon::prelude::*;
use std::collections::HashMap;

/// Largest vertex count for exact distribution computations.
pub const EXACT_N_CAP: usize = 12;

/// Largest vertex count for exact Gibbs enumeration (sampling, partition
/// function); beyond this stationary samples come from coupling from the past.
pub const ENUM_N_CAP: usize = 20;

/// Per-vertex Monte Carlo magnetization estimates on a time grid.
#[derive(Debug, Clone)]
pub struct MagnetizationProfile {
    pub grid: Vec<f64>,
    /// `m_hat[i][v]`: estimate of `m_{grid[i]}(v)`.
    pub m_hat: Vec<Vec<f64>>,
    /// Standard error of each `m_hat` entry.
    pub stderr: Vec<Vec<f64>>,
    /// Unbiased estimate of `sum_v m_t(v)^2` per grid time, from products
    /// across disjoint replica pairs.
    pub sum_sq: Vec<f64>,
    pub sum_sq_se: Vec<f64>,
    pub replicas: usize,
    pub beta: f64,
    pub seed: u64,
    /// Whether the per-replica observable is the antithetic difference
    /// `(X^+ - X^-)/2` under the monotone coupling instead of `X^+` alone.
    pub antithetic: bool,
}

impl MagnetizationProfile {
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        self.grid
            .iter()
            .position(|&g| (g - t).abs() < 1e-9)
            .ok_or_else(|| Error::Parameter(format!("time {t} not on the profile grid")))
    }
}

/// Monte Carlo magnetization profile from the all-plus start, one update
/// sequence per replica evaluated at every grid time (common random numbers).
pub fn magnetization_profile(
    graph: &Graph,
    beta: f64,
    grid: &[f64],
    replicas: usize,
    seed: u64,
    antithetic: bool,
) -> Result<MagnetizationProfile> {
    if replicas < 2 {
        return Err(Error::Parameter("profile needs at least 2 replicas".into()));
    }
    if grid.is_empty() || grid[0] < 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "grid must be strictly increasing and start at t >= 0".into(),
        ));
    }
    let n = graph.n();
    let t_end = *grid.last().unwrap();
    let values: Vec<Vec<Vec<f64>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let rseed = rng::replica_seed(seed, r as u64);
            let seq = if t_end > 0.0 {
                Some(sample_updates(graph, 0.0, t_end, rseed, None).expect("valid interval"))
            } else {
                None
            };
            let mut plus = SpinConfig::all_plus(n);
            let mut minus = SpinConfig::all_minus(n);
            let mut prev = 0.0f64;
            let mut rows = Vec::with_capacity(grid.len());
            for &t in grid {
                if let Some(seq) = &seq {
                    let events = seq.events_between(prev, t);
                    evolve_events(graph, beta, &mut plus, events, Rule::HeatBath);
                    if antithetic {
                        evolve_events(graph, beta, &mut minus, events, Rule::HeatBath);
                    }
                }
                prev = t;
                let row: Vec<f64> = (0..n as u32)
                    .map(|v| {
                        if antithetic {
                            (plus.get(v) as f64 - minus.get(v) as f64) / 2.0
                        } else {
                            plus.get(v) as f64
                        }
                    })
                    .collect();
                rows.push(row);
            }
            rows
        })
        .collect();

    let mut m_hat = vec![vec![0.0; n]; grid.len()];
    let mut stderr = vec![vec![0.0; n]; grid.len()];
    for (i, _) in grid.iter().enumerate() {
        for v in 0..n {
            let mean = values.iter().map(|r| r[i][v]).sum::<f64>() / replicas as f64;
            let var = values
                .iter()
                .map(|r| (r[i][v] - mean).powi(2))
                .sum::<f64>()
                / (replicas as f64 - 1.0);
            m_hat[i][v] = mean;
            stderr[i][v] = (var / replicas as f64).sqrt();
        }
    }

    let pairs = replicas / 2;
    let mut sum_sq = vec![0.0; grid.len()];
    let mut sum_sq_se = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let products: Vec<f64> = (0..pairs)
            .map(|p| {
                (0..n)
                    .map(|v| values[2 * p][i][v] * values[2 * p + 1][i][v])
                    .sum::<f64>()
            })
            .collect();
        let mean = products.iter().sum::<f64>() / pairs as f64;
        sum_sq[i] = mean;
        if pairs > 1 {
            let var = products.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                / (pairs as f64 - 1.0);
            sum_sq_se[i] = (var / pairs as f64).sqrt();
        }
    }

    Ok(MagnetizationProfile {
        grid: grid.to_vec(),
        m_hat,
        stderr,
        sum_sq,
        sum_sq_se,
        replicas,
        beta,
        seed,
        antithetic,
    })
}

/// Estimated cutoff location with a delta-method standard error.
#[derive(Debug, Clone, Copy)]
pub struct TmEstimate {
    pub t_m: f64,
    pub sigma: f64,
}

/// Locate the first crossing of `sum_v m_t(v)^2` below 1, refined by
/// log-linear interpolation (the sum decays geometrically). Returns the
/// first grid point when the sum starts at or below 1 (degenerate case).
pub fn locate_t_m(profile: &MagnetizationProfile) -> Result<TmEstimate> {
    let s = &profile.sum_sq;
    if s[0] <= 1.0 {
        return Ok(TmEstimate {
            t_m: profile.grid[0],
            sigma: 0.0,
        });
    }
    let cross = match s.iter().position(|&x| x <= 1.0) {
        Some(i) => i,
        None => {
            return Err(Error::GridTooShort(format!(
                "sum of squared magnetizations stays above 1: ends at {} (t = {})",
                s[s.len() - 1],
                profile.grid[profile.grid.len() - 1]
            )))
        }
    };
    let (ta, tb) = (profile.grid[cross - 1], profile.grid[cross]);
    let (sa, sb) = (s[cross - 1], s[cross]);
    let (ea, eb) = (profile.sum_sq_se[cross - 1], profile.sum_sq_se[cross]);
    if sb <= 0.0 {
        // noise drove the estimate nonpositive; fall back to linear
        let t_m = ta + (tb - ta) * (sa - 1.0) / (sa - sb);
        let slope = (sa - sb) / (tb - ta);
        let sigma = (ea.powi(2) + eb.powi(2)).sqrt() / slope.abs();
        return Ok(TmEstimate { t_m, sigma });
    }
    let (la, lb) = (sa.ln(), sb.ln());
    let t_m = ta + (tb - ta) * la / (la - lb);
    // delta method through the log-interpolation
    let dla = (tb - ta) * (-lb) / (la - lb).powi(2);
    let dlb = (tb - ta) * la / (la - lb).powi(2);
    let sigma = ((dla * ea / sa).powi(2) + (dlb * eb / sb).powi(2)).sqrt();
    Ok(TmEstimate { t_m, sigma })
}

/// Exact distribution over the `2^n` spin configurations.
#[derive(Debug, Clone)]
pub struct DistributionTable {
    pub n: usize,
    /// Indexed by configuration bitmask (bit v set = spin at v is plus).
    pub probs: Vec<f64>,
}

impl DistributionTable {
    /// Per-vertex expected spins.
    pub fn marginal_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.n];
        for (s, &p) in self.probs.iter().enumerate() {
            for (v, mean) in means.iter_mut().enumerate() {
                *mean += p * if s >> v & 1 == 1 { 1.0 } else { -1.0 };
            }
        }
        means
    }
}

fn heat_bath_flip_rate(beta: f64, spin: i8, neighbor_sum: i32) -> f64 {
    1.0 / (1.0 + (2.0 * beta * spin as f64 * neighbor_sum as f64).exp())
}

/// Exact law of the heat-bath dynamics at time `t` from `x0`, by
/// uniformization of the generator with truncation error below 1e-12.
pub fn exact_evolve(graph: &Graph, beta: f64, x0: &SpinConfig, t: f64) -> Result<DistributionTable> {
    let n = graph.n();
    if n > EXACT_N_CAP {
        return Err(Error::Size(format!(
            "exact evolution handles n <= {EXACT_N_CAP}, got {n}"
        )));
    }
    if x0.len() != n {
        return Err(Error::Shape("start configuration has wrong length".into()));
    }
    if t < 0.0 {
        return Err(Error::Parameter("time must be nonnegative".into()));
    }
    let states = 1usize << n;
    // flip rates per (state, vertex)
    let mut rates = vec![0.0f64; states * n];
    let mut exit = vec![0.0f64; states];
    for s in 0..states {
        for v in 0..n {
            let spin: i8 = if s >> v & 1 == 1 { 1 } else { -1 };
            let nbr_sum: i32 = graph
                .neighbors(v as u32)
                .iter()
                .map(|&w| if s >> w & 1 == 1 { 1 } else { -1 })
                .sum();
            let c = heat_bath_flip_rate(beta, spin, nbr_sum);
            rates[s * n + v] = c;
            exit[s] += c;
        }
    }
    let lambda = n as f64;
    let lt = lambda * t;
    let mut current = vec![0.0f64; states];
    current[x0.index()] = 1.0;
    let mut out = vec![0.0f64; states];
    let mut log_w = -lt;
    let mut cum = 0.0f64;
    let mut k = 0usize;
    loop {
        let w = log_w.exp();
        if w > 0.0 {
            for (o, &c) in out.iter_mut().zip(current.iter()) {
                *o += w * c;
            }
            cum += w;
        }
        if cum >= 1.0 - 1e-13 {
            break;
        }
        // one step of P = I + Q/lambda
        let mut next = vec![0.0f64; states];
        for s in 0..states {
            let p = current[s];
            if p == 0.0 {
                continue;
            }
            next[s] += p * (1.0 - exit[s] / lambda);
            for v in 0..n {
                next[s ^ (1 << v)] += p * rates[s * n + v] / lambda;
            }
        }
        current = next;
        k += 1;
        log_w += lt.ln() - (k as f64).ln();
        if lt == 0.0 {
            break;
        }
    }
    Ok(DistributionTable { n, probs: out })
}

/// The Gibbs measure `pi(sigma) ~ exp(beta sum_{uv in E} sigma_u sigma_v)`
/// by direct enumeration.
pub fn gibbs_distribution(graph: &Graph, beta: f64) -> Result<DistributionTable> {
    let n = graph.n();
    if n > ENUM_N_CAP {
        return Err(Error::Size(format!(
            "Gibbs enumeration handles n <= {ENUM_N_CAP}, got {n}"
        )));
    }
    let states = 1usize << n;
    let edges = graph.edges();
    let mut weights = vec![0.0f64; states];
    let mut total = 0.0;
    for (s, w) in weights.iter_mut().enumerate() {
        let mut energy = 0.0;
        for &(u, v) in &edges {
            let su = if s >> u & 1 == 1 { 1.0 } else { -1.0 };
            let sv = if s >> v & 1 == 1 { 1.0 } else { -1.0 };
            energy += su * sv;
        }
        *w = (beta * energy).exp();
        total += *w;
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(DistributionTable { n, probs: weights })
}

/// Total-variation distance (half the L1 distance).
pub fn tv_distance(p: &DistributionTable, q: &DistributionTable) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::Shape("distributions on different state spaces".into()));
    }
    Ok(0.5
        * p.probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// `(tv, l2_sq)` where `l2_sq = sum p^2/q - 1` is the squared L2(q) distance.
/// The L2 part requires `q` to have full support.
pub fn exact_distances(p: &DistributionTable, q: &DistributionTable) -> Result<(f64, f64)> {
    let tv = tv_distance(p, q)?;
    if q.probs.iter().any(|&x| x == 0.0) {
        return Err(Error::Metric(
            "L2 distance undefined: reference measure has zero entries".into(),
        ));
    }
    let l2_sq = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| a * a / b)
        .sum::<f64>()
        - 1.0;
    Ok((tv, l2_sq))
}

/// Draw exact Gibbs samples by CDF inversion (n <= [`ENUM_N_CAP`]).
pub fn sample_gibbs_exact(
    graph: &Graph,
    beta: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SpinConfig>> {
    let pi = gibbs_distribution(graph, beta)?;
    let mut cdf = pi.probs.clone();
    for i in 1..cdf.len() {
        cdf[i] += cdf[i - 1];
    }
    let mut rng = rng::stream(seed, &[0x4749_4242]);
    Ok((0..count)
        .map(|_| {
            let x: f64 = rng.gen();
            let idx = cdf.partition_point(|&c| c <= x).min(cdf.len() - 1);
            SpinConfig::from_index(graph.n(), idx)
        })
        .collect())
}

/// A one-sided estimate with a standard-error-style half width.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Lower bound on `d_TV(P_+(X_t in .), pi)` from the distinguishing statistic
/// `f(sigma) = sum_v m_t(v) sigma(v)`: compares the probability that `f`
/// exceeds two thirds of its expected value under the dynamics against the
/// same probability under stationarity. Stationary samples come from exact
/// enumeration when feasible and from coupling from the past otherwise.
pub fn tv_lower_bound(
    graph: &Graph,
    beta: f64,
    t: f64,
    profile: &MagnetizationProfile,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    if replicas < 2 {
        return Err(Error::Parameter("need at least 2 replicas".into()));
    }
    let idx = profile.grid_index(t)?;
    let weights = &profile.m_hat[idx];
    let ey: f64 = profile.sum_sq[idx];
    let threshold = 2.0 / 3.0 * ey;
    let n = graph.n();

    let score = |cfg: &SpinConfig| -> f64 {
        (0..n as u32).map(|v| weights[v as usize] * cfg.get(v) as f64).sum()
    };

    let plus_hits: usize = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let rseed = rng::replica_seed(rng::mix(seed, &[0x504c]), r as u64);
            let mut cfg = SpinConfig::all_plus(n);
            if t > 0.0 {
                let seq = sample_updates(graph, 0.0, t, rseed, None).expect("valid interval");
                evolve_events(graph, beta, &mut cfg, &seq.events, Rule::HeatBath);
            }
            usize::from(score(&cfg) >= threshold)
        })
        .sum();

    let stationary: Vec<SpinConfig> = if n <= ENUM_N_CAP {
        sample_gibbs_exact(graph, beta, replicas, rng::mix(seed, &[0x5354]))?
    } else {
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let rseed = rng::replica_seed(rng::mix(seed, &[0x5354]), r as u64);
                cftp::perfect_sample(graph, beta, rseed).map(|s| s.config)
            })
            .collect::<Result<Vec<_>>>()?
    };
    let stat_hits = stationary.iter().filter(|cfg| score(cfg) >= threshold).count();

    let p1 = plus_hits as f64 / replicas as f64;
    let p2 = stat_hits as f64 / replicas as f64;
    let se = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / replicas as f64).sqrt();
    Ok(Estimate {
        value: (p1 - p2).max(0.0),
        se,
    })
}

/// Upper bound on the worst-case coupling distance: the probability that the
/// chains from all-plus and all-minus, driven by the same updates, still
/// disagree somewhere at time `t`. Monotonicity makes the two extreme starts
/// sufficient.
pub fn coupling_tv_upper(
    graph: &Graph,
    beta: f64,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    if replicas < 2 {
        return Err(Error::Parameter("need at least 2 replicas".into()));
    }
    if t < 0.0 {
        return Err(Error::Parameter("time must be nonnegative".into()));
    }
    let n = graph.n();
    let disagreements: usize = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let rseed = rng::replica_seed(rng::mix(seed, &[0x4355]), r as u64);
            let mut plus = SpinConfig::all_plus(n);
            let mut minus = SpinConfig::all_minus(n);
            if t > 0.0 {
                let seq = sample_updates(graph, 0.0, t, rseed, None).expect("valid interval");
                evolve_events(graph, beta, &mut plus, &seq.events, Rule::HeatBath);
                evolve_events(graph, beta, &mut minus, &seq.events, Rule::HeatBath);
            }
            usize::from(plus != minus)
        })
        .sum();
    let p = disagreements as f64 / replicas as f64;
    Ok(Estimate {
        value: p,
        se: (p * (1.0 - p) / replicas as f64).sqrt(),
    })
}

/// Estimate of `sum_u Cov(X_t(u), X_t(v))` from a fixed start, with a
/// jackknife standard error. The sum over `u` of covariances equals the
/// covariance of `X_t(v)` with the total magnetization.
pub fn correlation_sum(
    graph: &Graph,
    beta: f64,
    t: f64,
    v: u32,
    replicas: usize,
    seed: u64,
    start: &SpinConfig,
) -> Result<Estimate> {
    if replicas < 3 {
        return Err(Error::Parameter("need at least 3 replicas".into()));
    }
    if v as usize >= graph.n() {
        return Err(Error::Parameter(format!("vertex {v} out of range")));
    }
    let n = graph.n();
    let samples: Vec<(f64, f64)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let rseed = rng::replica_seed(rng::mix(seed, &[0x434f]), r as u64);
            let mut cfg = start.clone();
            if t > 0.0 {
                let seq = sample_updates(graph, 0.0, t, rseed, None).expect("valid interval");
                evolve_events(graph, beta, &mut cfg, &seq.events, Rule::HeatBath);
            }
            let a = cfg.get(v) as f64;
            let b: f64 = (0..n as u32).map(|u| cfg.get(u) as f64).sum();
            (a, b)
        })
        .collect();
    let r = replicas as f64;
    let sa: f64 = samples.iter().map(|s| s.0).sum();
    let sb: f64 = samples.iter().map(|s| s.1).sum();
    let sab: f64 = samples.iter().map(|s| s.0 * s.1).sum();
    let cov = (sab - sa * sb / r) / (r - 1.0);
    // leave-one-out covariances in O(replicas)
    let mut jack = Vec::with_capacity(replicas);
    for &(a, b) in &samples {
        let c = ((sab - a * b) - (sa - a) * (sb - b) / (r - 1.0)) / (r - 2.0);
        jack.push(c);
    }
    let jmean = jack.iter().sum::<f64>() / r;
    let jvar = jack.iter().map(|x| (x - jmean).powi(2)).sum::<f64>() * (r - 1.0) / r;
    Ok(Estimate {
        value: cov,
        se: jvar.sqrt(),
    })
}

/// U-statistic estimate of `E[2^{|R cap R'|}] - 1` over unordered pairs of
/// the given vertex-set samples, with a projection-based standard error.
/// Identical sets are grouped so the pair sum costs only `O(M^2)` in the
/// number of distinct sets.
pub fn mp_exponential_moment(samples: &[Vec<u32>]) -> Result<Estimate> {
    let count = samples.len();
    if count < 2 {
        return Err(Error::SampleSize(format!(
            "need at least 2 red-set samples, got {count}"
        )));
    }
    let mut freq: HashMap<Vec<u32>, f64> = HashMap::new();
    for s in samples {
        let mut key = s.clone();
        key.sort_unstable();
        key.dedup();
        *freq.entry(key).or_insert(0.0) += 1.0;
    }
    let keys: Vec<&Vec<u32>> = freq.keys().collect();
    let counts: Vec<f64> = keys.iter().map(|k| freq[*k]).collect();

    let intersection_size = |a: &[u32], b: &[u32]| -> usize {
        let (mut i, mut j, mut c) = (0usize, 0usize, 0usize);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    c += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        c
    };

    let nn = count as f64;
    // row sums over ordered pairs including self-pairs, then remove diagonal
    let mut row: Vec<f64> = vec![0.0; keys.len()];
    for (i, a) in keys.iter().enumerate() {
        for (j, b) in keys.iter().enumerate() {
            row[i] += counts[j] * 2f64.powi(intersection_size(a, b) as i32);
        }
    }
    let diag: Vec<f64> = keys.iter().map(|a| 2f64.powi(a.len() as i32)).collect();
    let total: f64 = row
        .iter()
        .zip(&counts)
        .map(|(r, c)| c * r)
        .sum::<f64>()
        - diag.iter().zip(&counts).map(|(d, c)| c * d).sum::<f64>();
    let u = total / (nn * (nn - 1.0));

    // Hajek projection: g_i = mean over j != i of the kernel
    let g: Vec<f64> = row
        .iter()
        .zip(&diag)
        .map(|(r, d)| (r - d) / (nn - 1.0))
        .collect();
    let gmean: f64 = g.iter().zip(&counts).map(|(x, c)| x * c).sum::<f64>() / nn;
    let gvar: f64 = g
        .iter()
        .zip(&counts)
        .map(|(x, c)| c * (x - gmean).powi(2))
        .sum::<f64>()
        / (nn - 1.0);
    let se = (4.0 * gvar / nn).sqrt();
    Ok(Estimate { value: u - 1.0, se })
}
