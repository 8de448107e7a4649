//! Lazy space-time cluster exploration and the dominating branching process.
//!
//! The slab between times 0 and `t_star` is organized in "pieces": each
//! vertex timeline is cut at its own updates below the final unit interval
//! (inside `(t_star - 1, t_star]` modified histories never delete, so no
//! cuts there). A history entering a piece always covers it from the piece
//! bottom, which makes piece-level connectivity exactly the trace
//! intersection relation used by the histories module. The cluster of a
//! point is the union of the point's own strand development and the traces
//! of every root whose history flows into a touched piece; those roots are
//! found by a backward search over exposure events, generating update blocks
//! only where the exploration actually looks.

use crate::dynamics::{theta, BlockSource, Rule, UpdateEvent};
use crate::error::{Error, Result};
use crate::fourier::{d0_constant, RuleTable};
use crate::graphs::Graph;
use crate::histories::{
    coalescence_time, exposed_vertices, merge_segments, Development, HistoryMode, HistoryTrace,
    SpaceTimeCluster,
};
use crate::observables::Estimate;
use crate::rng;
use rand::Rng;
use rayon::prelude::*;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

/// Lazily cached per-vertex update events on `(0, t_star]`, plus the piece
/// structure they induce.
struct Slab<'a> {
    graph: &'a Graph,
    source: BlockSource<'a>,
    rule: Rule<'a>,
    th: f64,
    t_star: f64,
    events: HashMap<u32, Vec<UpdateEvent>>,
    stars: HashMap<u32, UpdateEvent>,
    /// piece boundaries per vertex: update times at or below t_star - 1
    cuts: HashMap<u32, Vec<f64>>,
}

impl<'a> Slab<'a> {
    fn new(graph: &'a Graph, beta: f64, seed: u64, rule: Rule<'a>, t_star: f64) -> Self {
        let table = match rule {
            Rule::Generalized(t) => Some(t),
            _ => None,
        };
        Slab {
            graph,
            source: BlockSource { seed, table },
            rule,
            th: theta(beta, graph.d_max()),
            t_star,
            events: HashMap::new(),
            stars: HashMap::new(),
            cuts: HashMap::new(),
        }
    }

    fn vertex_events(&mut self, v: u32) -> &[UpdateEvent] {
        if !self.events.contains_key(&v) {
            let mut evs = Vec::new();
            for k in 0..=(self.t_star.floor() as i64) {
                for ev in self.source.block_events(self.graph, v, k) {
                    if ev.time > 0.0 && ev.time <= self.t_star {
                        evs.push(ev);
                    }
                }
            }
            self.events.insert(v, evs);
        }
        &self.events[&v]
    }

    fn star(&mut self, v: u32) -> &UpdateEvent {
        if !self.stars.contains_key(&v) {
            let ev = self.source.star_event(self.graph, v, self.t_star);
            self.stars.insert(v, ev);
        }
        &self.stars[&v]
    }

    fn vertex_cuts(&mut self, v: u32) -> &[f64] {
        if !self.cuts.contains_key(&v) {
            let window_floor = self.t_star - 1.0;
            let cuts: Vec<f64> = self
                .vertex_events(v)
                .iter()
                .map(|e| e.time)
                .filter(|&t| t <= window_floor)
                .collect();
            self.cuts.insert(v, cuts);
        }
        &self.cuts[&v]
    }

    /// `(bottom, top)` of the piece of vertex `v` containing time `t`;
    /// the top piece extends to `t_star`.
    fn piece_of(&mut self, v: u32, t: f64) -> (f64, f64) {
        let t_star = self.t_star;
        let cuts = self.vertex_cuts(v);
        let idx = cuts.partition_point(|&c| c <= t);
        let bottom = if idx == 0 { 0.0 } else { cuts[idx - 1] };
        let top = if idx == cuts.len() { t_star } else { cuts[idx] };
        (bottom, top)
    }

    fn exposes(&mut self, event_vertex: u32, event: &UpdateEvent, target: u32) -> bool {
        match self.rule {
            Rule::HeatBath => !crate::dynamics::is_oblivious(event.u, self.th),
            Rule::Generalized(_) => match &event.subset {
                Some(subset) => {
                    match self.graph.local_index(event_vertex, target) {
                        Some(local) => subset.binary_search(&(local as u8)).is_ok(),
                        None => false,
                    }
                }
                None => false,
            },
            Rule::Metropolis => unreachable!("rejected at entry"),
        }
    }

    /// All roots whose histories cover the piece `(v, bottom)`: top pieces
    /// with a directed exposure path into it. Backward search over entry
    /// events with a visited set (entry chains can revisit pieces through
    /// the final unit interval).
    fn roots_covering(&mut self, v: u32, bottom: f64) -> BTreeSet<u32> {
        let mut roots = BTreeSet::new();
        let mut visited: HashSet<(u32, u64)> = HashSet::new();
        let mut stack = vec![(v, bottom)];
        while let Some((pv, pbottom)) = stack.pop() {
            if !visited.insert((pv, pbottom.to_bits())) {
                continue;
            }
            let (_, ptop) = self.piece_of(pv, pbottom);
            if ptop == self.t_star {
                roots.insert(pv);
            }
            for j in self.graph.neighbors(pv).to_vec() {
                let entries: Vec<UpdateEvent> = self
                    .vertex_events(j)
                    .iter()
                    .filter(|e| e.time > pbottom && e.time <= ptop)
                    .cloned()
                    .collect();
                for event in entries {
                    if self.exposes(j, &event, pv) {
                        let (jb, _) = self.piece_of(j, event.time);
                        stack.push((j, jb));
                    }
                }
                if ptop == self.t_star {
                    let star = self.star(j).clone();
                    if self.exposes(j, &star, pv) {
                        let (jb, _) = self.piece_of(j, self.t_star);
                        stack.push((j, jb));
                    }
                }
            }
        }
        roots
    }

    /// Develop a modified-mode trace lazily: seed at `(root, from)`, apply
    /// the extra update when seeded at `t_star`, then sweep events downward
    /// pulling vertex streams on demand.
    fn develop_trace(&mut self, beta: f64, root: u32, from: f64) -> HistoryTrace {
        let _ = beta;
        let mut dev = Development::new(self.graph, HistoryMode::Modified, self.t_star);
        dev.enter(root, from);
        if from == self.t_star {
            let star = self.star(root).clone();
            if let Some(exposed) = exposed_vertices(self.graph, &star, self.rule, self.th) {
                for w in exposed {
                    dev.enter(w, self.t_star);
                }
            }
        }

        #[derive(PartialEq)]
        struct Pending(UpdateEvent);
        impl Eq for Pending {}
        impl PartialOrd for Pending {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Pending {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                self.0
                    .time
                    .partial_cmp(&other.0.time)
                    .unwrap()
                    .then(self.0.vertex.cmp(&other.0.vertex))
            }
        }

        let rule = self.rule;
        let th = self.th;
        let mut heap: BinaryHeap<Pending> = BinaryHeap::new();
        let mut expanded: HashSet<u32> = HashSet::new();
        let active: Vec<u32> = dev.active.keys().copied().collect();
        for v in active {
            expanded.insert(v);
            // strictly below the seed time: when seeded at a piece top, the
            // cut event at exactly `from` belongs to the piece above
            for ev in self.vertex_events(v).to_vec() {
                if ev.time < from {
                    heap.push(Pending(ev));
                }
            }
        }
        while let Some(Pending(event)) = heap.pop() {
            let time = event.time;
            if !dev.process(&event, rule, th) {
                break;
            }
            let unexpanded: Vec<u32> = dev
                .active
                .keys()
                .copied()
                .filter(|v| !expanded.contains(v))
                .collect();
            for v in unexpanded {
                expanded.insert(v);
                for ev in self.vertex_events(v).to_vec() {
                    if ev.time < time {
                        heap.push(Pending(ev));
                    }
                }
            }
        }
        dev.close_all(0.0);
        dev.finish(root)
    }
}

/// Explore the space-time cluster of the point `(w0, t0)` under modified
/// history semantics, generating updates only where the exploration touches.
/// The cluster consists of the point's own strand (the full piece containing
/// it, developed downward) together with the traces of all roots whose
/// histories intersect it, closed transitively.
pub fn explore_space_time_cluster(
    graph: &Graph,
    beta: f64,
    w0: u32,
    t0: f64,
    t_star: f64,
    seed: u64,
    rule: Rule<'_>,
) -> Result<SpaceTimeCluster> {
    if matches!(rule, Rule::Metropolis) {
        return Err(Error::UnsupportedRule(
            "exploration is defined for the monotone rules only".into(),
        ));
    }
    if let Rule::Generalized(table) = rule {
        if table.d < graph.d_max() {
            return Err(Error::Config(format!(
                "rule table covers degrees up to {}, graph has d_max {}",
                table.d,
                graph.d_max()
            )));
        }
    }
    if w0 as usize >= graph.n() {
        return Err(Error::Parameter(format!("vertex {w0} out of range")));
    }
    if !(0.0 < t0 && t0 <= t_star) {
        return Err(Error::Parameter(format!(
            "need 0 < t0 <= t_star, got t0={t0}, t_star={t_star}"
        )));
    }
    let mut slab = Slab::new(graph, beta, seed, rule, t_star);

    // the point's own strand: develop from the top of its piece
    let (_, top0) = slab.piece_of(w0, t0);
    let seed_trace = slab.develop_trace(beta, w0, top0);

    let mut members: BTreeSet<u32> = BTreeSet::new();
    let mut traces: Vec<HistoryTrace> = Vec::new();
    let mut segments = seed_trace.segments.clone();
    traces.push(seed_trace);

    let mut processed: HashSet<(u32, u64)> = HashSet::new();
    loop {
        let mut new_roots: BTreeSet<u32> = BTreeSet::new();
        let pieces: Vec<(u32, f64)> = traces
            .iter()
            .flat_map(|t| t.segments.iter().map(|s| (s.vertex, s.begin)))
            .collect();
        for (v, begin) in pieces {
            if !processed.insert((v, begin.to_bits())) {
                continue;
            }
            for root in slab.roots_covering(v, begin) {
                if !members.contains(&root) {
                    new_roots.insert(root);
                }
            }
        }
        if new_roots.is_empty() {
            break;
        }
        for root in new_roots {
            members.insert(root);
            let trace = slab.develop_trace(beta, root, t_star);
            segments.extend_from_slice(&trace.segments);
            traces.push(trace);
        }
    }

    let segments = merge_segments(segments);
    let mut length = 0.0;
    let mut support = HashSet::new();
    let mut at_zero = HashSet::new();
    for s in &segments {
        length += s.end - s.begin;
        support.insert(s.vertex);
        if s.begin <= 0.0 && s.end > 0.0 {
            at_zero.insert(s.vertex);
        }
    }
    let members: Vec<u32> = members.into_iter().collect();
    let mut cluster = SpaceTimeCluster {
        members,
        segments,
        classification: None,
        tau_hat: None,
        length,
        support: support.len(),
        survives_to_zero: !at_zero.is_empty(),
        branches_at_zero: at_zero.len(),
        mode: HistoryMode::Modified,
        t_star,
    };
    if !cluster.members.is_empty() {
        cluster.tau_hat = Some(coalescence_time(&cluster)?);
    }
    Ok(cluster)
}

/// Summary of one explored cluster.
#[derive(Debug, Clone, Copy)]
pub struct ClusterSample {
    pub length: f64,
    pub support: usize,
    pub tau_hat: Option<f64>,
    pub members: usize,
}

/// Parameters of the exponential-moment experiment.
#[derive(Debug, Clone, Copy)]
pub struct ExpMomentParams {
    pub eta: f64,
    pub lambda: f64,
    pub w0: u32,
    pub t0: f64,
    pub t_star: f64,
    pub samples: usize,
}

/// Heavy-tail-aware report of `E[exp(eta L + lambda |H|)]`.
#[derive(Debug, Clone)]
pub struct ExpMomentReport {
    pub moment: Estimate,
    /// `log` of the empirical moment.
    pub log_moment: f64,
    /// 50/90/99 percent quantiles of the cluster length.
    pub length_quantiles: [f64; 3],
    /// 50/90/99 percent quantiles of the support size.
    pub support_quantiles: [f64; 3],
    pub samples: Vec<ClusterSample>,
}

fn quantiles(sorted: &[f64]) -> [f64; 3] {
    let pick = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
    [pick(0.5), pick(0.9), pick(0.99)]
}

/// Sample i.i.d. clusters at a fixed space-time point and estimate the
/// exponential moment `E[exp(eta L + lambda |H|)]`, reporting quantiles and
/// the log-moment alongside (the mean of a heavy-tailed exponential is
/// noisy on its own).
pub fn exp_moment_estimate(
    graph: &Graph,
    beta: f64,
    params: ExpMomentParams,
    seed: u64,
    table: Option<&RuleTable>,
) -> Result<ExpMomentReport> {
    if !(params.eta > 0.0 && params.eta < 1.0) {
        return Err(Error::Parameter(format!("eta={} outside (0,1)", params.eta)));
    }
    if params.lambda <= 0.0 {
        return Err(Error::Parameter(format!("lambda={} must be positive", params.lambda)));
    }
    if params.samples < 2 {
        return Err(Error::Parameter("need at least 2 samples".into()));
    }
    let rule = match table {
        Some(t) => Rule::Generalized(t),
        None => Rule::HeatBath,
    };
    let samples: Vec<ClusterSample> = (0..params.samples)
        .into_par_iter()
        .map(|i| -> Result<ClusterSample> {
            let s = rng::replica_seed(seed, i as u64);
            let cluster = explore_space_time_cluster(
                graph,
                beta,
                params.w0,
                params.t0,
                params.t_star,
                s,
                rule,
            )?;
            Ok(ClusterSample {
                length: cluster.length,
                support: cluster.support,
                tau_hat: cluster.tau_hat,
                members: cluster.members.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let values: Vec<f64> = samples
        .iter()
        .map(|s| (params.eta * s.length + params.lambda * s.support as f64).exp())
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut lengths: Vec<f64> = samples.iter().map(|s| s.length).collect();
    let mut supports: Vec<f64> = samples.iter().map(|s| s.support as f64).collect();
    lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    supports.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ExpMomentReport {
        moment: Estimate {
            value: mean,
            se: (var / n).sqrt(),
        },
        log_moment: mean.ln(),
        length_quantiles: quantiles(&lengths),
        support_quantiles: quantiles(&supports),
        samples,
    })
}

/// Parameters of the dominating branching process.
#[derive(Debug, Clone, Copy)]
pub struct DominatingParams {
    pub d: usize,
    pub beta: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub lambda: f64,
    pub samples: usize,
    /// Iteration cap per run; a run that exhausts it is reported censored.
    pub max_iterations: usize,
}

impl DominatingParams {
    pub fn new(d: usize, beta: f64, epsilon: f64, eta: f64, lambda: f64, samples: usize) -> Self {
        DominatingParams {
            d,
            beta,
            epsilon,
            eta,
            lambda,
            samples,
            max_iterations: 10_000,
        }
    }
}

/// One run of the dominating chain.
#[derive(Debug, Clone, Copy)]
pub struct DominatingRun {
    /// Total vertices discovered (`Y` at exhaustion).
    pub y: f64,
    /// Total explored time-length (`Z` at exhaustion).
    pub z: f64,
    pub iterations: usize,
    pub censored: bool,
}

/// Sample statistics of the dominating chain.
#[derive(Debug, Clone)]
pub struct DominatingStats {
    pub runs: Vec<DominatingRun>,
    /// Empirical `E exp(lambda Y + eta Z)`; present only when the moment
    /// feasibility condition holds and no run was censored.
    pub moment: Option<Estimate>,
    /// Empirical mean branch length `W` (expected `1 + 2/(1-epsilon)`).
    pub mean_w: Estimate,
    pub censored: usize,
    pub d0: f64,
}

/// The moment-feasibility condition `12 D0 beta d e^lambda < 1 - 2 epsilon - eta`
/// under which the exponential moment of the dominating chain is finite.
/// Returns the slack.
pub fn check_moment_feasibility(
    d: usize,
    beta: f64,
    epsilon: f64,
    eta: f64,
    lambda: f64,
) -> Result<f64> {
    let d0 = d0_constant();
    let lhs = 12.0 * d0 * beta * d as f64 * lambda.exp();
    let rhs = 1.0 - 2.0 * epsilon - eta;
    if rhs <= 0.0 {
        return Err(Error::Infeasible(format!(
            "need 1 - 2 epsilon - eta > 0, got {rhs}"
        )));
    }
    if lhs >= rhs {
        return Err(Error::Infeasible(format!(
            "moment feasibility violated: 12 D0 beta d e^lambda = {lhs} >= 1 - 2 epsilon - eta = {rhs}"
        )));
    }
    Ok(rhs - lhs)
}

fn sample_poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 30.0 {
        let limit = (-lambda).exp();
        let mut product: f64 = rng.gen();
        let mut count = 0u64;
        while product > limit {
            product *= rng.gen::<f64>();
            count += 1;
        }
        count
    } else {
        // split recursively; lambda here stays small in practice
        sample_poisson(rng, lambda / 2.0) + sample_poisson(rng, lambda - lambda / 2.0)
    }
}

fn exp1<R: Rng>(rng: &mut R) -> f64 {
    -(-rng.gen::<f64>()).ln_1p()
}

/// Sample the geometric-tail offspring law `P(j) = c q^j` for `j >= 1`,
/// `P(0) = 1 - sum`.
fn sample_geometric_tail<R: Rng>(rng: &mut R, c: f64, q: f64) -> u64 {
    let mut x: f64 = rng.gen();
    let rest: f64 = c * q / (1.0 - q);
    if x < 1.0 - rest {
        return 0;
    }
    x -= 1.0 - rest;
    let mut j = 1u64;
    let mut p = c * q;
    loop {
        if x < p {
            return j;
        }
        x -= p;
        p *= q;
        j += 1;
    }
}

/// Simulate the branching process that dominates cluster exploration: each
/// iteration explores one pending branch whose length is `W ~ 1 + Gamma(2,
/// 1-epsilon)`; along it, `k` new vertices appear at rate `2 D0 (3 beta d)^k`
/// per unit length for each `k <= d`, and the extra update at the designated
/// time contributes geometric-tail offspring. The run ends when no branches
/// remain.
pub fn dominating_process(params: DominatingParams, seed: u64) -> Result<DominatingStats> {
    let DominatingParams {
        d,
        beta,
        epsilon,
        eta,
        lambda,
        samples,
        max_iterations,
    } = params;
    if d == 0 {
        return Err(Error::Parameter("need d >= 1".into()));
    }
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon={epsilon} outside (0,1)")));
    }
    if !(0.0 < eta && eta < 1.0) {
        return Err(Error::Parameter(format!("eta={eta} outside (0,1)")));
    }
    if lambda <= 0.0 {
        return Err(Error::Parameter(format!("lambda={lambda} must be positive")));
    }
    if samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let d0 = d0_constant();
    let q_hat0 = 2.0 * beta * d as f64;
    let q_hatk = 3.0 * beta * d as f64;
    if q_hat0 > 0.0 && d0 * q_hat0 / (1.0 - q_hat0) > 1.0 {
        return Err(Error::Parameter(format!(
            "beta d = {} too large: the extra-update offspring law is not a distribution",
            beta * d as f64
        )));
    }
    if q_hatk > 0.0 && (d0 / d as f64) * q_hatk / (1.0 - q_hatk) > 1.0 {
        return Err(Error::Parameter(format!(
            "beta d = {} too large: the neighbor offspring law is not a distribution",
            beta * d as f64
        )));
    }
    let feasible = check_moment_feasibility(d, beta, epsilon, eta, lambda).is_ok();

    let runs: Vec<DominatingRun> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(rng::replica_seed(seed, i as u64), &[0x444f_4d49]);
            let mut pending = 1u64;
            let mut y = 1.0f64;
            let mut z = 0.0f64;
            let mut iterations = 0usize;
            let mut censored = false;
            while pending > 0 {
                if iterations >= max_iterations {
                    censored = true;
                    break;
                }
                iterations += 1;
                pending -= 1;
                let w = 1.0 + (exp1(&mut rng) + exp1(&mut rng)) / (1.0 - epsilon);
                z += w;
                let mut offspring = 0u64;
                for k in 1..=d {
                    let rate = 2.0 * d0 * (3.0 * beta * d as f64).powi(k as i32) * w;
                    offspring += k as u64 * sample_poisson(&mut rng, rate);
                }
                offspring += sample_geometric_tail(&mut rng, d0, q_hat0);
                for _ in 1..=d {
                    offspring += sample_geometric_tail(&mut rng, d0 / d as f64, q_hatk);
                }
                y += offspring as f64;
                pending += offspring;
            }
            DominatingRun {
                y,
                z,
                iterations,
                censored,
            }
        })
        .collect();

    let censored = runs.iter().filter(|r| r.censored).count();
    let w_means: Vec<f64> = runs
        .iter()
        .filter(|r| r.iterations > 0)
        .map(|r| r.z / r.iterations as f64)
        .collect();
    let wn = w_means.len() as f64;
    let w_mean = w_means.iter().sum::<f64>() / wn;
    let w_var = w_means.iter().map(|x| (x - w_mean).powi(2)).sum::<f64>() / (wn - 1.0);

    let moment = if feasible && censored == 0 {
        let vals: Vec<f64> = runs
            .iter()
            .map(|r| (lambda * r.y + eta * r.z).exp())
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(Estimate {
            value: mean,
            se: (var / n).sqrt(),
        })
    } else {
        None
    };

    Ok(DominatingStats {
        runs,
        moment,
        mean_w: Estimate {
            value: w_mean,
            se: (w_var / wn).sqrt(),
        },
        censored,
        d0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::sample_updates;
    use crate::graphs::{generate_graph, GraphKind};
    use crate::histories::{build_clusters, develop_history};

    #[test]
    fn beta_zero_cluster_is_single_piece() {
        let g = generate_graph(GraphKind::Cycle(8), 0).unwrap();
        let t_star = 6.0;
        for seed in 0..100u64 {
            let seed = rng::mix(31, &[seed]);
            let t0 = 2.3;
            let cluster =
                explore_space_time_cluster(&g, 0.0, 3, t0, t_star, seed, Rule::HeatBath).unwrap();
            assert_eq!(cluster.support, 1);
            // the strand spans the piece of (3, t0): between the neighboring
            // updates of vertex 3 (window updates are no-ops at beta = 0 but
            // do not cut)
            let seq = sample_updates(&g, 0.0, t_star, seed, None).unwrap();
            let times: Vec<f64> = seq
                .vertex_events(3)
                .iter()
                .map(|&i| seq.events[i as usize].time)
                .collect();
            let below = times
                .iter()
                .copied()
                .filter(|&t| t <= t0 && t <= t_star - 1.0)
                .fold(0.0f64, f64::max);
            let above = times
                .iter()
                .copied()
                .filter(|&t| t > t0 && t <= t_star - 1.0)
                .fold(t_star, f64::min);
            assert!((cluster.length - (above - below)).abs() < 1e-12);
        }
    }

    #[test]
    fn root_anchored_exploration_matches_full_development() {
        let g = generate_graph(GraphKind::Cycle(16), 0).unwrap();
        let beta = 0.1;
        let t_star = 5.0;
        for i in 0..500u64 {
            let seed = rng::mix(32, &[i]);
            let w0 = (i % 16) as u32;
            let lazy =
                explore_space_time_cluster(&g, beta, w0, t_star, t_star, seed, Rule::HeatBath)
                    .unwrap();
            // eager oracle: develop every root against the full sequence
            let seq = sample_updates(&g, 0.0, t_star, seed, None).unwrap();
            let traces: Vec<_> = (0..16u32)
                .map(|v| {
                    develop_history(
                        &g,
                        beta,
                        &seq,
                        v,
                        t_star,
                        HistoryMode::Modified,
                        Rule::HeatBath,
                    )
                    .unwrap()
                })
                .collect();
            let clusters = build_clusters(&g, &traces).unwrap();
            let expected = clusters
                .iter()
                .find(|c| c.members.contains(&w0))
                .expect("every root is in a cluster");
            assert_eq!(lazy.members, expected.members, "seed {i}");
            assert_eq!(lazy.segments.len(), expected.segments.len(), "seed {i}");
            for (a, b) in lazy.segments.iter().zip(&expected.segments) {
                assert_eq!(a.vertex, b.vertex);
                assert!((a.begin - b.begin).abs() < 1e-15, "seed {i}");
                assert!((a.end - b.end).abs() < 1e-15, "seed {i}");
            }
            assert_eq!(lazy.tau_hat, expected.tau_hat);
            assert!((lazy.length - expected.length).abs() < 1e-9);
            assert_eq!(lazy.support, expected.support);
        }
    }

    #[test]
    fn generalized_rule_exploration_matches_full_development() {
        let g = generate_graph(GraphKind::Cycle(10), 0).unwrap();
        let beta = 0.08;
        let table = crate::fourier::build_rule_table(beta, 2, 0.3, 1e-14).unwrap();
        let t_star = 4.0;
        for i in 0..200u64 {
            let seed = rng::mix(33, &[i]);
            let w0 = (i % 10) as u32;
            let rule = Rule::Generalized(&table);
            let lazy =
                explore_space_time_cluster(&g, beta, w0, t_star, t_star, seed, rule).unwrap();
            let seq = sample_updates(&g, 0.0, t_star, seed, Some(&table)).unwrap();
            let traces: Vec<_> = (0..10u32)
                .map(|v| {
                    develop_history(&g, beta, &seq, v, t_star, HistoryMode::Modified, rule)
                        .unwrap()
                })
                .collect();
            let clusters = build_clusters(&g, &traces).unwrap();
            let expected = clusters.iter().find(|c| c.members.contains(&w0)).unwrap();
            assert_eq!(lazy.members, expected.members, "seed {i}");
            assert!((lazy.length - expected.length).abs() < 1e-9, "seed {i}");
        }
    }

    #[test]
    fn midpoint_exploration_is_consistent() {
        // the cluster of an interior point contains its piece and agrees
        // with the root-anchored cluster whenever a root covers the point
        let g = generate_graph(GraphKind::Cycle(12), 0).unwrap();
        let beta = 0.12;
        let t_star = 5.0;
        for i in 0..300u64 {
            let seed = rng::mix(34, &[i]);
            let w0 = (i % 12) as u32;
            let t0 = 0.5 + (i % 9) as f64 * 0.5;
            let cluster =
                explore_space_time_cluster(&g, beta, w0, t0, t_star, seed, Rule::HeatBath)
                    .unwrap();
            // the point itself is covered
            assert!(
                cluster
                    .segments
                    .iter()
                    .any(|s| s.vertex == w0 && s.begin <= t0 && t0 <= s.end),
                "seed {i}: point not covered"
            );
            // the point's strand can bridge several root clusters, so each
            // member's full root-anchored cluster must be contained here
            for &m in &cluster.members {
                let root_cluster =
                    explore_space_time_cluster(&g, beta, m, t_star, t_star, seed, Rule::HeatBath)
                        .unwrap();
                assert!(
                    root_cluster
                        .members
                        .iter()
                        .all(|r| cluster.members.contains(r)),
                    "seed {i}: root cluster of {m} not contained"
                );
            }
        }
    }

    #[test]
    fn exp_moment_beta_zero_closed_form() {
        // at beta=0 the cluster is the bare piece: L = down + up with
        // independent unit-exponential cut distances truncated at the floor
        // and cap; support is 1, so exp(lambda) factors out
        let g = generate_graph(GraphKind::Cycle(6), 0).unwrap();
        let t_star = 9.0;
        let t0 = 4.0;
        let eta = 0.5;
        let lambda = 2f64.ln();
        let report = exp_moment_estimate(
            &g,
            0.0,
            ExpMomentParams {
                eta,
                lambda,
                w0: 2,
                t0,
                t_star,
                samples: 60_000,
            },
            99,
            None,
        )
        .unwrap();
        // E e^{eta D}: D = min(t0, Exp(1)) => 2 - e^{-t0/2}; upward distance
        // is capped at the window floor t_star - 1 (no cuts above it), after
        // which the strand always runs to t_star:
        // U = min(E, cap) + 1{E >= cap} * 1 where cap = t_star - 1 - t0
        let down = 2.0 - (-t0 / 2.0).exp();
        let cap = t_star - 1.0 - t0;
        // E e^{eta U}: integral of e^{s/2} e^{-s} over [0,cap) plus the atom
        // at cap with mass e^{-cap} lifted by the final unit interval
        let up = 2.0 - 2.0 * (-cap / 2.0).exp() + (-cap).exp() * ((cap + 1.0) * eta).exp();
        let expect = 2.0 * down * up;
        assert!(
            (report.moment.value - expect).abs() < 4.0 * report.moment.se,
            "moment {} +- {} vs {expect}",
            report.moment.value,
            report.moment.se
        );
        assert!(report.samples.iter().all(|s| s.support == 1));
    }

    #[test]
    fn exp_moment_tail_decays_and_grows_with_beta() {
        let g = generate_graph(GraphKind::Cycle(32), 0).unwrap();
        let t_star = 6.0;
        let params = |samples| ExpMomentParams {
            eta: 0.5,
            lambda: 2f64.ln(),
            w0: 0,
            t0: t_star,
            t_star,
            samples,
        };
        let lo = exp_moment_estimate(&g, 0.02, params(20_000), 7, None).unwrap();
        let hi = exp_moment_estimate(&g, 0.05, params(20_000), 7, None).unwrap();
        assert!(
            hi.moment.value > lo.moment.value,
            "moment should increase with beta: {} vs {}",
            lo.moment.value,
            hi.moment.value
        );
        // geometric tail of the support size
        let mut tail = vec![0usize; 12];
        for s in &lo.samples {
            for (k, slot) in tail.iter_mut().enumerate() {
                if s.support >= k + 1 {
                    *slot += 1;
                }
            }
        }
        let n = lo.samples.len() as f64;
        let logp: Vec<(f64, f64)> = tail
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 10)
            .map(|(k, &c)| ((k + 1) as f64, (c as f64 / n).ln()))
            .collect();
        assert!(logp.len() >= 3, "need a few tail points");
        // least-squares slope must be clearly negative
        let m = logp.len() as f64;
        let sx: f64 = logp.iter().map(|p| p.0).sum();
        let sy: f64 = logp.iter().map(|p| p.1).sum();
        let sxx: f64 = logp.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = logp.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!(slope < -0.5, "tail slope {slope} not negative enough");
    }

    #[test]
    fn dominating_process_basics() {
        // beta = 0: no offspring at all; Y = 1, Z = W_1 ~ 1 + Gamma(2, 1-eps)
        let eps = 0.25;
        let stats = dominating_process(
            DominatingParams::new(3, 0.0, eps, 0.5, 2f64.ln(), 40_000),
            5,
        )
        .unwrap();
        assert!(stats.runs.iter().all(|r| r.y == 1.0 && r.iterations == 1));
        let expect_w = 1.0 + 2.0 / (1.0 - eps);
        assert!(
            (stats.mean_w.value - expect_w).abs() < 3.5 * stats.mean_w.se,
            "mean W {} vs {expect_w}",
            stats.mean_w.value
        );
        assert_eq!(stats.censored, 0);
        // subcritical small-beta chain dies with geometric tail of tau
        let stats = dominating_process(
            DominatingParams::new(3, 0.0005, eps, 0.5, 0.05, 20_000),
            6,
        )
        .unwrap();
        assert_eq!(stats.censored, 0);
        let max_iter = stats.runs.iter().map(|r| r.iterations).max().unwrap();
        assert!(max_iter < 200, "subcritical runs stay small, max {max_iter}");
        // geometric tail of the exhaustion iteration count
        let n = stats.runs.len() as f64;
        let points: Vec<(f64, f64)> = (1..=6)
            .filter_map(|k| {
                let c = stats.runs.iter().filter(|r| r.iterations >= k).count();
                (c >= 10).then(|| (k as f64, (c as f64 / n).ln()))
            })
            .collect();
        assert!(points.len() >= 3);
        let m = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!(slope < -1.0, "iteration tail slope {slope} not geometric");
    }

    #[test]
    fn dominating_moment_gating() {
        // moment present only under the feasibility condition
        assert!(check_moment_feasibility(3, 0.0001, 0.1, 0.5, 0.05).is_ok());
        assert!(check_moment_feasibility(3, 0.08, 0.25, 0.5, 1.0).is_err());
        let ok = dominating_process(
            DominatingParams::new(3, 0.0001, 0.1, 0.5, 0.05, 2_000),
            7,
        )
        .unwrap();
        assert!(ok.moment.is_some());
        let infeasible = dominating_process(
            DominatingParams::new(3, 0.02, 0.25, 0.5, 1.0, 2_000),
            7,
        )
        .unwrap();
        assert!(infeasible.moment.is_none());
    }

    #[test]
    fn pathwise_tau_length_inequality() {
        let g = generate_graph(GraphKind::Cycle(16), 0).unwrap();
        for i in 0..2000u64 {
            let cluster = explore_space_time_cluster(
                &g,
                0.05,
                (i % 16) as u32,
                6.0,
                6.0,
                rng::mix(35, &[i]),
                Rule::HeatBath,
            )
            .unwrap();
            let tau = cluster.tau_hat.unwrap();
            assert!(
                tau <= cluster.length / 2.0 + 1.0 + 1e-12,
                "tau {tau} vs L/2+1 = {}",
                cluster.length / 2.0 + 1.0
            );
        }
    }
}
