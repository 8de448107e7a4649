//! Backward update histories and space-time percolation clusters.
//!
//! The history of a vertex `v` rooted at time `t_star` is developed by
//! scanning updates in reverse chronological order. An update of a history
//! member either deletes it (oblivious update, or empty exposed subset) or
//! replaces it by the exposed neighbors. Histories of different roots that
//! meet at a common (vertex, time) belong to one cluster; clusters are
//! classified red (final spins depend on the initial configuration), blue
//! (singleton whose history dies before time zero) or green (the rest).
//!
//! Three development modes:
//! - standard: floor at time 0;
//! - modified: every vertex gets an extra update at `t_star` and nothing is
//!   deleted during `(t_star - 1, t_star]`;
//! - annealed: standard rules with the floor pushed to minus infinity — the
//!   update stream is extended lazily backward until the history dies.

use crate::dynamics::{
    evolve_events, is_oblivious, theta, BlockSource, Rule, SpinConfig, UpdateEvent,
    UpdateSequence,
};
use crate::error::{Error, Result};
use crate::graphs::Graph;
use std::collections::{BinaryHeap, HashMap, HashSet};

/// How far backward annealed development may run, as a multiple of `t_star`.
pub const ANNEALED_DEPTH_FACTOR: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryMode {
    Standard,
    Modified,
    Annealed,
}

/// A maximal membership interval of one vertex in a history: the vertex
/// belongs to the history for `begin <= t < end`. The root's seed segment is
/// conceptually closed at `t_star`; it is stored half-open like the rest,
/// which only differs on a probability-zero set of times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub vertex: u32,
    pub begin: f64,
    pub end: f64,
}

/// Piecewise-constant set-valued path of one root's backward history.
#[derive(Debug, Clone)]
pub struct HistoryTrace {
    pub root: u32,
    pub t_star: f64,
    pub mode: HistoryMode,
    /// Sorted by (vertex, begin); segments of a fixed vertex are disjoint.
    pub segments: Vec<Segment>,
    /// Number of update events that acted on the history.
    pub events_consumed: usize,
    /// Time at which the history became empty, if it died above the floor.
    pub died_at: Option<f64>,
}

impl HistoryTrace {
    /// Vertices in the history at time `t`.
    pub fn members_at(&self, t: f64) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .segments
            .iter()
            .filter(|s| {
                (s.begin <= t && t < s.end)
                    || (t == s.end && s.end == self.t_star && s.vertex == self.root)
            })
            .map(|s| s.vertex)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether the history is nonempty at time 0 (the standard floor).
    pub fn survives_to_zero(&self) -> bool {
        self.segments.iter().any(|s| s.begin <= 0.0 && s.end > 0.0)
    }
}

/// Cluster classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterClass {
    Red,
    Blue,
    Green,
}

impl ClusterClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClusterClass::Red => "red",
            ClusterClass::Blue => "blue",
            ClusterClass::Green => "green",
        }
    }
}

/// A connected set of history branches in the space-time slab.
#[derive(Debug, Clone)]
pub struct SpaceTimeCluster {
    /// Root vertices whose histories form the cluster, sorted.
    pub members: Vec<u32>,
    /// Union of the member traces, per-vertex merged, sorted by (vertex, begin).
    pub segments: Vec<Segment>,
    pub classification: Option<ClusterClass>,
    /// Coalescence time; computed for modified-mode clusters.
    pub tau_hat: Option<f64>,
    /// Total time-length of the cluster in the slab.
    pub length: f64,
    /// Number of distinct vertices the cluster ever visits.
    pub support: usize,
    pub survives_to_zero: bool,
    /// Distinct vertices present at time 0.
    pub branches_at_zero: usize,
    pub mode: HistoryMode,
    pub t_star: f64,
}

impl SpaceTimeCluster {
    /// Recompute `(length, support, survives_to_zero, branches_at_zero)`
    /// from the raw segments.
    pub fn measures(&self) -> (f64, usize, bool, usize) {
        measures_from_segments(&self.segments)
    }

    /// Distinct vertices present at time `t` (counting the root tops at
    /// `t == t_star`).
    pub fn strand_count_at(&self, t: f64) -> usize {
        if t == self.t_star {
            return self.members.len();
        }
        self.segments
            .iter()
            .filter(|s| s.begin <= t && t < s.end)
            .map(|s| s.vertex)
            .collect::<HashSet<_>>()
            .len()
    }
}

fn measures_from_segments(segments: &[Segment]) -> (f64, usize, bool, usize) {
    let mut length = 0.0;
    let mut support = HashSet::new();
    let mut at_zero = HashSet::new();
    for s in segments {
        length += s.end - s.begin;
        support.insert(s.vertex);
        if s.begin <= 0.0 && s.end > 0.0 {
            at_zero.insert(s.vertex);
        }
    }
    (length, support.len(), !at_zero.is_empty(), at_zero.len())
}

/// Exposed neighbor set of an event under the given rule: `None` means the
/// update deletes its vertex from the history (oblivious / empty subset).
pub(crate) fn exposed_vertices(
    graph: &Graph,
    event: &UpdateEvent,
    rule: Rule<'_>,
    th: f64,
) -> Option<Vec<u32>> {
    match rule {
        Rule::HeatBath => {
            if is_oblivious(event.u, th) {
                None
            } else {
                Some(graph.neighbors(event.vertex).to_vec())
            }
        }
        Rule::Generalized(_) => {
            let subset = event
                .subset
                .as_ref()
                .expect("generalized history requires events with subsets");
            if subset.is_empty() {
                None
            } else {
                let neighbors = graph.neighbors(event.vertex);
                Some(subset.iter().map(|&i| neighbors[i as usize]).collect())
            }
        }
        Rule::Metropolis => unreachable!("checked before development"),
    }
}

pub(crate) struct Development<'g> {
    graph: &'g Graph,
    mode: HistoryMode,
    t_star: f64,
    /// vertex -> entry time of its open segment
    pub(crate) active: HashMap<u32, f64>,
    segments: Vec<Segment>,
    events_consumed: usize,
    died_at: Option<f64>,
}

impl<'g> Development<'g> {
    pub(crate) fn new(graph: &'g Graph, mode: HistoryMode, t_star: f64) -> Self {
        Development {
            graph,
            mode,
            t_star,
            active: HashMap::new(),
            segments: Vec::new(),
            events_consumed: 0,
            died_at: None,
        }
    }

    pub(crate) fn enter(&mut self, vertex: u32, time: f64) {
        self.active.entry(vertex).or_insert(time);
    }

    pub(crate) fn close(&mut self, vertex: u32, time: f64) {
        if let Some(entry) = self.active.remove(&vertex) {
            if entry > time {
                self.segments.push(Segment {
                    vertex,
                    begin: time,
                    end: entry,
                });
            }
        }
    }

    pub(crate) fn in_window(&self, time: f64) -> bool {
        self.mode == HistoryMode::Modified && time > self.t_star - 1.0
    }

    /// Process one update against the current history. Returns true if the
    /// history is still nonempty.
    pub(crate) fn process(&mut self, event: &UpdateEvent, rule: Rule<'_>, th: f64) -> bool {
        let j = event.vertex;
        if !self.active.contains_key(&j) {
            return true;
        }
        self.events_consumed += 1;
        let exposed = exposed_vertices(self.graph, event, rule, th);
        let window = self.in_window(event.time);
        match exposed {
            None => {
                if !window {
                    self.close(j, event.time);
                }
            }
            Some(exposed) => {
                if !window {
                    self.close(j, event.time);
                }
                for w in exposed {
                    self.enter(w, event.time);
                }
            }
        }
        if self.active.is_empty() {
            self.died_at = Some(event.time);
            return false;
        }
        true
    }

    pub(crate) fn close_all(&mut self, floor: f64) {
        let open: Vec<u32> = self.active.keys().copied().collect();
        for v in open {
            self.close(v, floor);
        }
    }

    pub(crate) fn finish(mut self, root: u32) -> HistoryTrace {
        self.segments.sort_by(|a, b| {
            a.vertex
                .cmp(&b.vertex)
                .then(a.begin.partial_cmp(&b.begin).unwrap())
        });
        HistoryTrace {
            root,
            t_star: self.t_star,
            mode: self.mode,
            segments: self.segments,
            events_consumed: self.events_consumed,
            died_at: self.died_at,
        }
    }

    pub(crate) fn snapshot(&self, root: u32) -> HistoryTrace {
        let mut segments = self.segments.clone();
        segments.sort_by(|a, b| {
            a.vertex
                .cmp(&b.vertex)
                .then(a.begin.partial_cmp(&b.begin).unwrap())
        });
        HistoryTrace {
            root,
            t_star: self.t_star,
            mode: self.mode,
            segments,
            events_consumed: self.events_consumed,
            died_at: self.died_at,
        }
    }
}

fn check_history_inputs(
    graph: &Graph,
    updates: &UpdateSequence,
    root: u32,
    t_star: f64,
    rule: Rule<'_>,
) -> Result<()> {
    if matches!(rule, Rule::Metropolis) {
        return Err(Error::UnsupportedRule(
            "histories are defined for the monotone rules only".into(),
        ));
    }
    if rule.sequence_mode() != updates.mode {
        return Err(Error::Config(
            "update sequence mode does not match the history rule".into(),
        ));
    }
    if root as usize >= graph.n() {
        return Err(Error::Parameter(format!("root {root} out of range")));
    }
    if updates.t0 != 0.0 {
        return Err(Error::Parameter(
            "history development expects an update sequence starting at time 0".into(),
        ));
    }
    if !(t_star > 0.0 && t_star <= updates.t1) {
        return Err(Error::Parameter(format!(
            "t_star = {t_star} outside (0, {}]",
            updates.t1
        )));
    }
    Ok(())
}

/// Develop the backward update history of `root` from `t_star`.
///
/// In annealed mode the update stream is extended lazily below time 0 from
/// the sequence's seed until the history dies; if it has not died after
/// [`ANNEALED_DEPTH_FACTOR`] times `t_star` time units the development is
/// aborted with a history-overflow error carrying the partial trace.
pub fn develop_history(
    graph: &Graph,
    beta: f64,
    updates: &UpdateSequence,
    root: u32,
    t_star: f64,
    mode: HistoryMode,
    rule: Rule<'_>,
) -> Result<HistoryTrace> {
    check_history_inputs(graph, updates, root, t_star, rule)?;
    let th = theta(beta, graph.d_max());
    let mut dev = Development::new(graph, mode, t_star);
    dev.enter(root, t_star);

    let source = BlockSource {
        seed: updates.seed,
        table: match rule {
            Rule::Generalized(table) => Some(table),
            _ => None,
        },
    };

    if mode == HistoryMode::Modified {
        // the root's extra update at t_star; extra updates of other vertices
        // cannot act since the history is exactly {root} there
        let star = source.star_event(graph, root, t_star);
        dev.events_consumed += 1;
        if let Some(exposed) = exposed_vertices(graph, &star, rule, th) {
            for w in exposed {
                dev.enter(w, t_star);
            }
        }
    }

    let upper = updates.events.partition_point(|e| e.time <= t_star);
    let mut alive = true;
    for event in updates.events[..upper].iter().rev() {
        alive = dev.process(event, rule, th);
        if !alive {
            break;
        }
    }

    if alive {
        match mode {
            HistoryMode::Standard | HistoryMode::Modified => dev.close_all(0.0),
            HistoryMode::Annealed => {
                let floor_min = t_star - ANNEALED_DEPTH_FACTOR * t_star;
                extend_below_zero(graph, &source, &mut dev, rule, th, floor_min, root)?;
            }
        }
    }
    Ok(dev.finish(root))
}

/// Reverse-time sweep over lazily generated blocks below time 0, block by
/// block, expanding vertex streams on demand as the history grows.
fn extend_below_zero(
    graph: &Graph,
    source: &BlockSource<'_>,
    dev: &mut Development<'_>,
    rule: Rule<'_>,
    th: f64,
    floor_min: f64,
    root: u32,
) -> Result<()> {
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
            // max-heap by (time, vertex)
            self.0
                .time
                .partial_cmp(&other.0.time)
                .unwrap()
                .then(self.0.vertex.cmp(&other.0.vertex))
        }
    }

    let mut block: i64 = -1;
    loop {
        if ((block + 1) as f64) < floor_min {
            let floor = (block + 1) as f64;
            dev.close_all(floor);
            return Err(Error::HistoryOverflow {
                floor,
                partial: Box::new(dev.snapshot(root)),
            });
        }
        let mut heap: BinaryHeap<Pending> = BinaryHeap::new();
        let mut expanded: HashSet<u32> = HashSet::new();
        for &v in dev.active.keys() {
            expanded.insert(v);
        }
        for &v in expanded.iter().collect::<Vec<_>>() {
            for ev in source.block_events(graph, v, block) {
                heap.push(Pending(ev));
            }
        }
        while let Some(Pending(event)) = heap.pop() {
            let time = event.time;
            if !dev.process(&event, rule, th) {
                return Ok(());
            }
            // newly entered vertices need their remaining events of this block
            let unexpanded: Vec<u32> = dev
                .active
                .keys()
                .copied()
                .filter(|v| !expanded.contains(v))
                .collect();
            for v in unexpanded {
                expanded.insert(v);
                for ev in source.block_events(graph, v, block) {
                    if ev.time < time {
                        heap.push(Pending(ev));
                    }
                }
            }
        }
        block -= 1;
    }
}

/// Union-find with path halving.
pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    pub(crate) fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb as usize] = ra;
        }
    }
}

/// Merge per-vertex overlapping segments into maximal disjoint intervals.
pub(crate) fn merge_segments(mut segments: Vec<Segment>) -> Vec<Segment> {
    segments.sort_by(|a, b| {
        a.vertex
            .cmp(&b.vertex)
            .then(a.begin.partial_cmp(&b.begin).unwrap())
    });
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    for s in segments {
        match out.last_mut() {
            Some(last) if last.vertex == s.vertex && s.begin <= last.end => {
                last.end = last.end.max(s.end);
            }
            _ => out.push(s),
        }
    }
    out
}

/// Partition the roots into clusters: two roots join when their traces share
/// a (vertex, overlapping time interval) pair. Expects one trace per vertex,
/// all developed against the same update sequence, mode and target time.
pub fn build_clusters(graph: &Graph, traces: &[HistoryTrace]) -> Result<Vec<SpaceTimeCluster>> {
    if traces.len() != graph.n() {
        return Err(Error::Shape(format!(
            "need one trace per vertex: {} traces for {} vertices",
            traces.len(),
            graph.n()
        )));
    }
    let mode = traces[0].mode;
    let t_star = traces[0].t_star;
    for (i, tr) in traces.iter().enumerate() {
        if tr.root as usize != i {
            return Err(Error::Shape(format!(
                "trace {i} has root {}, expected {i}",
                tr.root
            )));
        }
        if tr.mode != mode || tr.t_star != t_star {
            return Err(Error::Mode(
                "traces developed under mismatched modes or target times".into(),
            ));
        }
    }

    // per-vertex registry of (begin, end, root)
    let mut registry: Vec<Vec<(f64, f64, u32)>> = vec![Vec::new(); graph.n()];
    for tr in traces {
        for s in &tr.segments {
            registry[s.vertex as usize].push((s.begin, s.end, tr.root));
        }
    }
    let mut uf = UnionFind::new(graph.n());
    for list in &mut registry {
        list.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut rep = 0u32;
        let mut cur_end = f64::NEG_INFINITY;
        for &(begin, end, root) in list.iter() {
            if begin < cur_end {
                uf.union(rep, root);
                cur_end = cur_end.max(end);
            } else {
                rep = root;
                cur_end = end;
            }
        }
    }

    let mut groups: HashMap<u32, Vec<u32>> = HashMap::new();
    for v in 0..graph.n() as u32 {
        groups.entry(uf.find(v)).or_default().push(v);
    }
    let mut clusters: Vec<SpaceTimeCluster> = groups
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            let mut segments = Vec::new();
            for &m in &members {
                segments.extend_from_slice(&traces[m as usize].segments);
            }
            let segments = merge_segments(segments);
            let (length, support, survives_to_zero, branches_at_zero) =
                measures_from_segments(&segments);
            SpaceTimeCluster {
                members,
                segments,
                classification: None,
                tau_hat: None,
                length,
                support,
                survives_to_zero,
                branches_at_zero,
                mode,
                t_star,
            }
        })
        .collect();
    clusters.sort_by_key(|c| c.members[0]);
    if mode == HistoryMode::Modified {
        for cluster in &mut clusters {
            cluster.tau_hat = Some(coalescence_time(cluster)?);
        }
    }
    Ok(clusters)
}

/// Classify standard or modified clusters. Red is decided operationally by
/// the grand coupling: a cluster is red iff the chains started from all-plus
/// and all-minus (driven by the shared update sequence) disagree somewhere on
/// its members at `t_star`. By monotonicity this is equivalent to
/// nonconstancy over all initial states. Blue requires a singleton whose
/// history dies before time zero; everything else is green.
pub fn classify_clusters(
    clusters: &mut [SpaceTimeCluster],
    graph: &Graph,
    beta: f64,
    updates: &UpdateSequence,
    rule: Rule<'_>,
) -> Result<()> {
    if !rule.is_monotone() {
        return Err(Error::UnsupportedRule(
            "classification requires a monotone rule".into(),
        ));
    }
    if rule.sequence_mode() != updates.mode {
        return Err(Error::Config(
            "update sequence mode does not match the rule".into(),
        ));
    }
    if clusters.iter().any(|c| c.mode == HistoryMode::Annealed) {
        return Err(Error::Mode(
            "annealed clusters are classified by annealed_classify".into(),
        ));
    }
    let t_star = match clusters.first() {
        Some(c) => c.t_star,
        None => return Ok(()),
    };
    let mut plus = SpinConfig::all_plus(graph.n());
    let mut minus = SpinConfig::all_minus(graph.n());
    let events = updates.events_between(0.0, t_star);
    evolve_events(graph, beta, &mut plus, events, rule);
    evolve_events(graph, beta, &mut minus, events, rule);
    for cluster in clusters.iter_mut() {
        let red = cluster.members.iter().any(|&m| plus.get(m) != minus.get(m));
        let class = if red {
            ClusterClass::Red
        } else if cluster.members.len() == 1 && !cluster.survives_to_zero {
            ClusterClass::Blue
        } else {
            ClusterClass::Green
        };
        cluster.classification = Some(class);
    }
    Ok(())
}

/// Coalescence time of a modified-mode cluster: the smallest `t >= 1` at
/// which the union history at time `t_star - t` is a single vertex, capped
/// at `t_star`. Equal to 1 exactly when the cluster is a singleton.
pub fn coalescence_time(cluster: &SpaceTimeCluster) -> Result<f64> {
    if cluster.mode != HistoryMode::Modified {
        return Err(Error::Mode(
            "coalescence time is defined for modified-mode clusters".into(),
        ));
    }
    let t_star = cluster.t_star;
    if t_star <= 1.0 {
        return Ok(t_star);
    }
    let limit = t_star - 1.0;
    // sweep the distinct-vertex count over the union segments (per-vertex
    // merged, so each open segment counts its vertex once)
    let mut bounds: Vec<(f64, i32)> = Vec::with_capacity(cluster.segments.len() * 2);
    for s in &cluster.segments {
        bounds.push((s.begin, 1));
        bounds.push((s.end, -1));
    }
    bounds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
    let mut best: Option<f64> = None;
    let mut count = 0i32;
    let mut i = 0usize;
    while i < bounds.len() {
        let t = bounds[i].0;
        while i < bounds.len() && bounds[i].0 == t {
            count += bounds[i].1;
            i += 1;
        }
        if t > limit {
            break;
        }
        if count == 1 {
            let piece_end = if i < bounds.len() { bounds[i].0 } else { t };
            let top = piece_end.min(limit);
            best = Some(best.map_or(top, |b: f64| b.max(top)));
        }
    }
    Ok(match best {
        Some(s) if s >= limit => 1.0,
        Some(s) => t_star - s,
        None => t_star,
    })
}

/// Classify annealed clusters developed on `(-infinity, t_star]`: red when at
/// least two strands persist at every time in `[0, t_star]`, blue as in the
/// standard taxonomy, green otherwise.
pub fn annealed_classify(clusters: &mut [SpaceTimeCluster]) -> Result<()> {
    for cluster in clusters.iter_mut() {
        if cluster.mode != HistoryMode::Annealed {
            return Err(Error::Mode(
                "annealed_classify expects annealed-mode clusters".into(),
            ));
        }
        let class = if cluster.members.len() >= 2
            && min_strands_on(cluster, 0.0, cluster.t_star) >= 2
        {
            ClusterClass::Red
        } else if cluster.members.len() == 1 && !cluster.survives_to_zero {
            ClusterClass::Blue
        } else {
            ClusterClass::Green
        };
        cluster.classification = Some(class);
    }
    Ok(())
}

/// Minimum distinct-vertex count of the union history over `[lo, hi)`.
fn min_strands_on(cluster: &SpaceTimeCluster, lo: f64, hi: f64) -> usize {
    let mut count = cluster
        .segments
        .iter()
        .filter(|s| s.begin <= lo && s.end > lo)
        .count() as i32;
    let mut min = count;
    let mut bounds: Vec<(f64, i32)> = Vec::new();
    for s in &cluster.segments {
        if s.begin > lo && s.begin < hi {
            bounds.push((s.begin, 1));
        }
        if s.end > lo && s.end < hi {
            bounds.push((s.end, -1));
        }
    }
    bounds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
    let mut i = 0usize;
    while i < bounds.len() {
        let t = bounds[i].0;
        while i < bounds.len() && bounds[i].0 == t {
            count += bounds[i].1;
            i += 1;
        }
        min = min.min(count);
    }
    min.max(0) as usize
}
