//! Continuous-time Glauber dynamics driven by explicit update sequences.
//!
//! Each vertex carries a rate-one Poisson clock. An update event consists of
//! the vertex, the event time, a uniform variate `u`, and (in generalized
//! mode) the exposed neighbor subset. Given an update sequence the evolution
//! is a deterministic function of the initial configuration, which is what
//! makes grand couplings, backward histories and coupling from the past all
//! consistent with one another.
//!
//! Randomness is organized in unit-time blocks: the events of vertex `v` in
//! `[k, k+1)` come from a substream keyed on `(seed, v, k)`. Regenerating a
//! block always yields the same events, so lazy consumers (history
//! exploration, coupling from the past) see exactly the sequences produced
//! here.

use crate::error::{Error, Result};
use crate::fourier::{heat_bath_plus, RuleTable};
use crate::graphs::Graph;
use crate::rng;
use rand::Rng;
use std::io::{Read, Write};

const BLOCK_SALT: u64 = 0x424c_4f43;
const STAR_SALT: u64 = 0x5354_4152;

/// A +-1 spin assignment on the vertices of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Shape("spins must be +-1".into()));
        }
        Ok(SpinConfig { spins })
    }

    pub fn all_plus(n: usize) -> Self {
        SpinConfig { spins: vec![1; n] }
    }

    pub fn all_minus(n: usize) -> Self {
        SpinConfig { spins: vec![-1; n] }
    }

    pub fn uniform<R: Rng>(n: usize, rng: &mut R) -> Self {
        SpinConfig {
            spins: (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn get(&self, v: u32) -> i8 {
        self.spins[v as usize]
    }

    pub fn set(&mut self, v: u32, s: i8) {
        self.spins[v as usize] = s;
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Pointwise partial order.
    pub fn dominates(&self, other: &SpinConfig) -> bool {
        self.spins
            .iter()
            .zip(&other.spins)
            .all(|(a, b)| a >= b)
    }

    /// Bitmask index of the configuration (plus = 1), for state enumeration.
    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &s)| acc | (usize::from(s == 1) << i))
    }

    pub fn from_index(n: usize, idx: usize) -> Self {
        SpinConfig {
            spins: (0..n).map(|i| if idx >> i & 1 == 1 { 1 } else { -1 }).collect(),
        }
    }
}

/// One Poisson clock ring.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateEvent {
    pub vertex: u32,
    pub time: f64,
    pub u: f64,
    /// Exposed local neighbor indices; `None` in plain mode.
    pub subset: Option<Vec<u8>>,
}

/// Whether events carry exposed subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceMode {
    Plain,
    Generalized,
}

/// Update rule applied when an event fires.
#[derive(Debug, Clone, Copy)]
pub enum Rule<'a> {
    HeatBath,
    Metropolis,
    Generalized(&'a RuleTable),
}

impl Rule<'_> {
    /// Heat-bath and the generalized rule preserve the coordinatewise order
    /// under shared updates; Metropolis does not.
    pub fn is_monotone(&self) -> bool {
        !matches!(self, Rule::Metropolis)
    }

    pub fn sequence_mode(&self) -> SequenceMode {
        match self {
            Rule::Generalized(_) => SequenceMode::Generalized,
            _ => SequenceMode::Plain,
        }
    }
}

/// Oblivious threshold `theta = 1 - tanh(beta d)`: an update with `u < theta`
/// resolves to a fair coin independent of the neighbors.
pub fn theta(beta: f64, d: usize) -> f64 {
    1.0 - (beta * d as f64).tanh()
}

/// Shared comparator for the oblivious region, used by forward evolution and
/// backward history development alike.
#[inline]
pub fn is_oblivious(u: f64, theta: f64) -> bool {
    u < theta
}

/// Probability driving a single update: the plus-probability
/// `f(beta S) = e^{beta S} / (e^{beta S} + e^{-beta S})` for heat-bath (and
/// for the generalized rule, whose marginal law is the same), or the flip
/// acceptance `min(exp(-2 beta sigma S), 1)` for Metropolis.
pub fn update_prob(rule: Rule<'_>, beta: f64, current_spin: i8, neighbor_sum: i32) -> f64 {
    match rule {
        Rule::HeatBath | Rule::Generalized(_) => heat_bath_plus(beta * neighbor_sum as f64),
        Rule::Metropolis => {
            (-2.0 * beta * current_spin as f64 * neighbor_sum as f64).exp().min(1.0)
        }
    }
}

/// Deterministic generator of per-vertex, per-unit-block update events.
#[derive(Debug, Clone, Copy)]
pub struct BlockSource<'a> {
    pub seed: u64,
    pub table: Option<&'a RuleTable>,
}

impl<'a> BlockSource<'a> {
    pub fn plain(seed: u64) -> Self {
        BlockSource { seed, table: None }
    }

    pub fn generalized(seed: u64, table: &'a RuleTable) -> Self {
        BlockSource {
            seed,
            table: Some(table),
        }
    }

    pub fn mode(&self) -> SequenceMode {
        if self.table.is_some() {
            SequenceMode::Generalized
        } else {
            SequenceMode::Plain
        }
    }

    /// Events of `vertex` in the block `[k, k+1)`, in increasing time order.
    pub fn block_events(&self, graph: &Graph, vertex: u32, block: i64) -> Vec<UpdateEvent> {
        let mut rng = rng::stream(self.seed, &[BLOCK_SALT, vertex as u64, block as u64]);
        let mut events = Vec::new();
        let mut t = block as f64;
        loop {
            let mut e = exp1(&mut rng);
            while e == 0.0 {
                e = exp1(&mut rng);
            }
            t += e;
            if t >= (block + 1) as f64 {
                break;
            }
            let u: f64 = rng.gen();
            let subset = self.table.map(|table| {
                table
                    .sample_update_support(graph.degree(vertex), &mut rng)
                    .expect("table covers all degrees present")
            });
            events.push(UpdateEvent {
                vertex,
                time: t,
                u,
                subset,
            });
        }
        events
    }

    /// The extra update granted to every vertex at the designated time in
    /// modified histories. Keyed on the time bits so distinct target times
    /// have independent extra updates.
    pub fn star_event(&self, graph: &Graph, vertex: u32, t_star: f64) -> UpdateEvent {
        let mut rng = rng::stream(
            self.seed,
            &[STAR_SALT, vertex as u64, t_star.to_bits()],
        );
        let u: f64 = rng.gen();
        let subset = self.table.map(|table| {
            table
                .sample_update_support(graph.degree(vertex), &mut rng)
                .expect("table covers all degrees present")
        });
        UpdateEvent {
            vertex,
            time: t_star,
            u,
            subset,
        }
    }
}

#[inline]
fn exp1<R: Rng>(rng: &mut R) -> f64 {
    -(-rng.gen::<f64>()).ln_1p()
}

/// Time-ordered update events on an interval, reproducible from
/// `(graph, t0, t1, seed, mode)`.
#[derive(Debug, Clone)]
pub struct UpdateSequence {
    pub events: Vec<UpdateEvent>,
    pub t0: f64,
    pub t1: f64,
    pub seed: u64,
    pub mode: SequenceMode,
    per_vertex: Vec<Vec<u32>>,
}

impl UpdateSequence {
    fn build_index(n: usize, events: &[UpdateEvent]) -> Vec<Vec<u32>> {
        let mut per_vertex = vec![Vec::new(); n];
        for (i, ev) in events.iter().enumerate() {
            per_vertex[ev.vertex as usize].push(i as u32);
        }
        per_vertex
    }

    /// Event indices of one vertex, in time order.
    pub fn vertex_events(&self, v: u32) -> &[u32] {
        &self.per_vertex[v as usize]
    }

    /// Contiguous slice of events with `a < time <= b`.
    pub fn events_between(&self, a: f64, b: f64) -> &[UpdateEvent] {
        let lo = self.events.partition_point(|e| e.time <= a);
        let hi = self.events.partition_point(|e| e.time <= b);
        &self.events[lo..hi]
    }
}

/// Sample the update sequence of the whole graph on `(t0, t1]`. Per-vertex
/// event times form a rate-one Poisson process; `u` variates are i.i.d.
/// uniform; in generalized mode each event carries a subset drawn from the
/// rule table at the vertex's degree.
pub fn sample_updates(
    graph: &Graph,
    t0: f64,
    t1: f64,
    seed: u64,
    source_table: Option<&RuleTable>,
) -> Result<UpdateSequence> {
    if !(t0 < t1) {
        return Err(Error::Parameter(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    if let Some(table) = source_table {
        if table.d < graph.d_max() {
            return Err(Error::Config(format!(
                "rule table covers degrees up to {}, graph has d_max {}",
                table.d,
                graph.d_max()
            )));
        }
    }
    let source = BlockSource {
        seed,
        table: source_table,
    };
    let first = t0.floor() as i64;
    let last = t1.floor() as i64;
    let mut events = Vec::new();
    for v in 0..graph.n() as u32 {
        for k in first..=last {
            for ev in source.block_events(graph, v, k) {
                if ev.time > t0 && ev.time <= t1 {
                    events.push(ev);
                }
            }
        }
    }
    // Cross-vertex simultaneity has probability zero; the (time, vertex)
    // order makes the merged sequence total and reproducible either way.
    events.sort_by(|a, b| {
        a.time
            .partial_cmp(&b.time)
            .unwrap()
            .then(a.vertex.cmp(&b.vertex))
    });
    let per_vertex = UpdateSequence::build_index(graph.n(), &events);
    Ok(UpdateSequence {
        events,
        t0,
        t1,
        seed,
        mode: source.mode(),
        per_vertex,
    })
}

/// Resolve a single event against a configuration.
pub(crate) fn apply_event(
    graph: &Graph,
    beta: f64,
    config: &mut SpinConfig,
    event: &UpdateEvent,
    rule: Rule<'_>,
) {
    let v = event.vertex;
    match rule {
        Rule::HeatBath => {
            let th = theta(beta, graph.d_max());
            let new = if is_oblivious(event.u, th) {
                if event.u < th / 2.0 {
                    1
                } else {
                    -1
                }
            } else {
                let s: i32 = graph.neighbors(v).iter().map(|&w| config.get(w) as i32).sum();
                let residual = (event.u - th) / (1.0 - th);
                let threshold = (heat_bath_plus(beta * s as f64) - th / 2.0) / (1.0 - th);
                if residual < threshold {
                    1
                } else {
                    -1
                }
            };
            config.set(v, new);
        }
        Rule::Metropolis => {
            let s: i32 = graph.neighbors(v).iter().map(|&w| config.get(w) as i32).sum();
            let cur = config.get(v);
            let accept = update_prob(rule, beta, cur, s);
            if event.u < accept {
                config.set(v, -cur);
            }
        }
        Rule::Generalized(table) => {
            let subset = event
                .subset
                .as_ref()
                .expect("generalized rule requires events with subsets");
            let neighbors = graph.neighbors(v);
            let spins: Vec<i8> = subset.iter().map(|&i| config.get(neighbors[i as usize])).collect();
            let p = table
                .plus_probability(neighbors.len(), &spins)
                .expect("table covers all degrees present");
            config.set(v, if event.u < p { 1 } else { -1 });
        }
    }
}

fn check_compat(graph: &Graph, x0: &SpinConfig, updates: &UpdateSequence, rule: Rule<'_>) -> Result<()> {
    if x0.len() != graph.n() {
        return Err(Error::Shape(format!(
            "config has {} spins, graph has {} vertices",
            x0.len(),
            graph.n()
        )));
    }
    if rule.sequence_mode() != updates.mode {
        return Err(Error::Config(
            "update sequence mode does not match the rule (generalized rule needs subsets)".into(),
        ));
    }
    Ok(())
}

/// Deterministic forward evolution: apply every event of `updates` in time
/// order. Identical inputs give identical outputs.
pub fn evolve(
    graph: &Graph,
    beta: f64,
    x0: &SpinConfig,
    updates: &UpdateSequence,
    rule: Rule<'_>,
) -> Result<SpinConfig> {
    check_compat(graph, x0, updates, rule)?;
    let mut config = x0.clone();
    for event in &updates.events {
        apply_event(graph, beta, &mut config, event, rule);
    }
    Ok(config)
}

/// Advance a configuration through an explicit slice of events (used to
/// evaluate one sequence at many grid times with common random numbers).
pub fn evolve_events(
    graph: &Graph,
    beta: f64,
    config: &mut SpinConfig,
    events: &[UpdateEvent],
    rule: Rule<'_>,
) {
    for event in events {
        apply_event(graph, beta, config, event, rule);
    }
}

/// Run several chains from different starts through the identical update
/// sequence. Requires a monotone rule; the outputs then preserve the
/// coordinatewise order of the starts.
pub fn grand_coupling_evolve(
    graph: &Graph,
    beta: f64,
    starts: &[SpinConfig],
    updates: &UpdateSequence,
    rule: Rule<'_>,
) -> Result<Vec<SpinConfig>> {
    if !rule.is_monotone() {
        return Err(Error::UnsupportedRule(
            "grand coupling requires a monotone rule (heat-bath or generalized)".into(),
        ));
    }
    starts
        .iter()
        .map(|x0| evolve(graph, beta, x0, updates, rule))
        .collect()
}

const MAGIC: &[u8; 4] = b"UPSQ";
const FORMAT_VERSION: u8 = 1;
const NO_SUBSET: u8 = 0xff;

/// Serialize to the binary record stream: header, then per event
/// `vertex: u32, time: f64, u: f64, subset marker` (0xff for plain mode,
/// otherwise length byte followed by the local indices). Little-endian.
pub fn write_updates<W: Write>(seq: &UpdateSequence, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[FORMAT_VERSION])?;
    w.write_all(&[match seq.mode {
        SequenceMode::Plain => 0u8,
        SequenceMode::Generalized => 1u8,
    }])?;
    w.write_all(&seq.seed.to_le_bytes())?;
    w.write_all(&seq.t0.to_le_bytes())?;
    w.write_all(&seq.t1.to_le_bytes())?;
    w.write_all(&(seq.events.len() as u64).to_le_bytes())?;
    for ev in &seq.events {
        w.write_all(&ev.vertex.to_le_bytes())?;
        w.write_all(&ev.time.to_le_bytes())?;
        w.write_all(&ev.u.to_le_bytes())?;
        match &ev.subset {
            None => w.write_all(&[NO_SUBSET])?,
            Some(subset) => {
                if subset.len() >= NO_SUBSET as usize {
                    return Err(Error::Shape("subset too large to serialize".into()));
                }
                w.write_all(&[subset.len() as u8])?;
                w.write_all(subset)?;
            }
        }
    }
    Ok(())
}

/// Deserialize a binary record stream produced by [`write_updates`].
/// `n` is the vertex count of the graph the sequence belongs to.
pub fn read_updates<R: Read>(r: &mut R, n: usize) -> Result<UpdateSequence> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse {
            line: 0,
            msg: "bad magic in update stream".into(),
        });
    }
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    if byte[0] != FORMAT_VERSION {
        return Err(Error::Parse {
            line: 0,
            msg: format!("unsupported update stream version {}", byte[0]),
        });
    }
    r.read_exact(&mut byte)?;
    let mode = match byte[0] {
        0 => SequenceMode::Plain,
        1 => SequenceMode::Generalized,
        m => {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unknown sequence mode {m}"),
            })
        }
    };
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let seed = u64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf)?;
    let t0 = f64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf)?;
    let t1 = f64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf)?;
    let count = u64::from_le_bytes(u64buf) as usize;
    let mut events = Vec::with_capacity(count);
    let mut u32buf = [0u8; 4];
    for _ in 0..count {
        r.read_exact(&mut u32buf)?;
        let vertex = u32::from_le_bytes(u32buf);
        if vertex as usize >= n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("event vertex {vertex} out of range"),
            });
        }
        r.read_exact(&mut u64buf)?;
        let time = f64::from_le_bytes(u64buf);
        r.read_exact(&mut u64buf)?;
        let u = f64::from_le_bytes(u64buf);
        r.read_exact(&mut byte)?;
        let subset = if byte[0] == NO_SUBSET {
            None
        } else {
            let mut subset = vec![0u8; byte[0] as usize];
            r.read_exact(&mut subset)?;
            Some(subset)
        };
        events.push(UpdateEvent {
            vertex,
            time,
            u,
            subset,
        });
    }
    let per_vertex = UpdateSequence::build_index(n, &events);
    Ok(UpdateSequence {
        events,
        t0,
        t1,
        seed,
        mode,
        per_vertex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{generate_graph, GraphKind};
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn single_vertex() -> Graph {
        Graph::from_edges(1, &[]).unwrap()
    }

    #[test]
    fn poisson_event_count_single_vertex() {
        let g = single_vertex();
        let mut total = 0usize;
        let draws = 100_000;
        for i in 0..draws {
            let seq = sample_updates(&g, 0.0, 2.0, rng::mix(5, &[i]), None).unwrap();
            total += seq.events.len();
        }
        let mean = total as f64 / draws as f64;
        assert!((mean - 2.0).abs() < 0.02, "empirical mean {mean}");
    }

    #[test]
    fn poisson_superposition_many_vertices() {
        let g = generate_graph(GraphKind::Cycle(100), 0).unwrap();
        let mut total = 0usize;
        let draws = 2_000;
        for i in 0..draws {
            let seq = sample_updates(&g, 0.0, 1.0, rng::mix(6, &[i]), None).unwrap();
            total += seq.events.len();
        }
        let mean = total as f64 / draws as f64;
        assert!((mean - 100.0).abs() < 1.0, "expected ~100 events, got {mean}");
    }

    #[test]
    fn vanishing_interval_rarely_fires() {
        let g = single_vertex();
        let mut any = 0;
        for i in 0..10_000 {
            let seq = sample_updates(&g, 1.0, 1.0 + 1e-6, rng::mix(7, &[i]), None).unwrap();
            any += usize::from(!seq.events.is_empty());
        }
        assert!(any <= 2, "P(event in eps-interval) ~ eps, saw {any}");
    }

    #[test]
    fn sequences_are_deterministic_and_sorted() {
        let g = generate_graph(GraphKind::Cycle(8), 0).unwrap();
        let a = sample_updates(&g, 0.0, 5.0, 99, None).unwrap();
        let b = sample_updates(&g, 0.0, 5.0, 99, None).unwrap();
        assert_eq!(a.events, b.events);
        assert!(a
            .events
            .windows(2)
            .all(|w| (w[0].time, w[0].vertex) < (w[1].time, w[1].vertex)));
        assert!(a.events.iter().all(|e| e.time > 0.0 && e.time <= 5.0));
        assert!(a.events.iter().all(|e| (0.0..1.0).contains(&e.u)));
    }

    #[test]
    fn subinterval_events_agree_with_blocks() {
        // Events on (1.3, 3.7] are exactly the full-interval events restricted.
        let g = generate_graph(GraphKind::Cycle(5), 0).unwrap();
        let full = sample_updates(&g, 0.0, 5.0, 123, None).unwrap();
        let part = sample_updates(&g, 1.3, 3.7, 123, None).unwrap();
        let expected: Vec<_> = full
            .events
            .iter()
            .filter(|e| e.time > 1.3 && e.time <= 3.7)
            .cloned()
            .collect();
        assert_eq!(part.events, expected);
    }

    #[test]
    fn update_prob_values() {
        assert_abs_diff_eq!(update_prob(Rule::HeatBath, 0.7, 1, 0), 0.5);
        assert_abs_diff_eq!(
            update_prob(Rule::HeatBath, 0.1, -1, 3),
            (1.0 + 0.3f64.tanh()) / 2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(update_prob(Rule::HeatBath, 0.1, 1, 3), 0.645656, epsilon = 1e-6);
        // flip lowers energy -> acceptance 1
        assert_abs_diff_eq!(update_prob(Rule::Metropolis, 0.1, -1, 2), 1.0);
        assert_abs_diff_eq!(
            update_prob(Rule::Metropolis, 0.1, 1, 2),
            (-0.4f64).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn oblivious_region_has_heat_bath_marginal() {
        // The plus-decision set in u is [0, th/2) union [th, th + f - th/2);
        // its measure must equal f(beta S) for every |S| <= d. Recover the
        // boundaries from the actual decision via apply_event on a star whose
        // leaves pin the neighbor sum.
        for &beta in &[0.05, 0.1, 0.2] {
            let d = 4usize;
            let mut edges = Vec::new();
            for leaf in 1..=d as u32 {
                edges.push((0, leaf));
            }
            let g = Graph::from_edges(d + 1, &edges).unwrap();
            let th = theta(beta, g.d_max());
            for s in (-(d as i32)..=(d as i32)).step_by(2) {
                let plus_leaves = ((d as i32 + s) / 2) as usize;
                let mut cfg = SpinConfig::all_minus(d + 1);
                for leaf in 1..=plus_leaves as u32 {
                    cfg.set(leaf, 1);
                }
                let decide = |u: f64| {
                    let mut c = cfg.clone();
                    apply_event(
                        &g,
                        beta,
                        &mut c,
                        &UpdateEvent {
                            vertex: 0,
                            time: 0.5,
                            u,
                            subset: None,
                        },
                        Rule::HeatBath,
                    );
                    c.get(0) == 1
                };
                // bisection for the two decision boundaries
                let bisect = |mut lo: f64, mut hi: f64| {
                    for _ in 0..64 {
                        let mid = 0.5 * (lo + hi);
                        if decide(mid) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    0.5 * (lo + hi)
                };
                let f = heat_bath_plus(beta * s as f64);
                let b1 = bisect(0.0, th * (1.0 - 1e-12));
                assert_abs_diff_eq!(b1, th / 2.0, epsilon = 1e-12);
                let upper = if !decide(th) {
                    th
                } else if decide(1.0 - 1e-12) {
                    1.0
                } else {
                    bisect(th, 1.0 - 1e-12)
                };
                let measure = b1 + (upper - th);
                assert_abs_diff_eq!(measure, f, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn empty_sequence_is_identity() {
        let g = generate_graph(GraphKind::Cycle(6), 0).unwrap();
        let seq = UpdateSequence {
            events: Vec::new(),
            t0: 0.0,
            t1: 1.0,
            seed: 0,
            mode: SequenceMode::Plain,
            per_vertex: vec![Vec::new(); 6],
        };
        let x0 = SpinConfig::from_index(6, 0b101010);
        let out = evolve(&g, 0.3, &x0, &seq, Rule::HeatBath).unwrap();
        assert_eq!(out, x0);
    }

    #[test]
    fn beta_zero_reduces_to_lazy_walk() {
        // fresh coin on every update; untouched vertices keep x0
        let g = generate_graph(GraphKind::Cycle(16), 0).unwrap();
        let x0 = SpinConfig::all_plus(16);
        let t = 1.5;
        let mut keep = vec![0usize; 16];
        let reps = 40_000;
        for i in 0..reps {
            let seq = sample_updates(&g, 0.0, t, rng::mix(21, &[i]), None).unwrap();
            let out = evolve(&g, 0.0, &x0, &seq, Rule::HeatBath).unwrap();
            for v in 0..16u32 {
                // never-updated vertices must equal x0 exactly
                if seq.vertex_events(v).is_empty() {
                    assert_eq!(out.get(v), x0.get(v));
                }
                keep[v as usize] += usize::from(out.get(v) == x0.get(v));
            }
        }
        let expect = (1.0 + (-t).exp()) / 2.0;
        for v in 0..16 {
            let p = keep[v] as f64 / reps as f64;
            assert!((p - expect).abs() < 0.01, "v={v}: {p} vs {expect}");
        }
    }

    #[test]
    fn evolve_is_deterministic() {
        let g = generate_graph(GraphKind::Cycle(10), 0).unwrap();
        let seq = sample_updates(&g, 0.0, 4.0, 7, None).unwrap();
        let x0 = SpinConfig::from_index(10, 0b1100110011);
        let a = evolve(&g, 0.2, &x0, &seq, Rule::HeatBath).unwrap();
        let b = evolve(&g, 0.2, &x0, &seq, Rule::HeatBath).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grand_coupling_monotone_heat_bath() {
        let g = generate_graph(GraphKind::Cycle(8), 0).unwrap();
        for i in 0..10_000u64 {
            let seq = sample_updates(&g, 0.0, 10.0, rng::mix(33, &[i]), None).unwrap();
            let outs = grand_coupling_evolve(
                &g,
                0.1,
                &[SpinConfig::all_plus(8), SpinConfig::all_minus(8)],
                &seq,
                Rule::HeatBath,
            )
            .unwrap();
            assert!(outs[0].dominates(&outs[1]), "monotonicity violated at seed {i}");
        }
    }

    #[test]
    fn grand_coupling_beta_zero_coalesces_updated_vertices() {
        let g = generate_graph(GraphKind::Cycle(8), 0).unwrap();
        let seq = sample_updates(&g, 0.0, 3.0, 5, None).unwrap();
        let outs = grand_coupling_evolve(
            &g,
            0.0,
            &[SpinConfig::all_plus(8), SpinConfig::all_minus(8)],
            &seq,
            Rule::HeatBath,
        )
        .unwrap();
        for v in 0..8u32 {
            if !seq.vertex_events(v).is_empty() {
                assert_eq!(outs[0].get(v), outs[1].get(v));
            }
        }
        // identical starts give identical outputs
        let x = SpinConfig::from_index(8, 0b10110100);
        let outs = grand_coupling_evolve(&g, 0.1, &[x.clone(), x.clone()], &seq, Rule::HeatBath)
            .unwrap();
        assert_eq!(outs[0], outs[1]);
    }

    #[test]
    fn metropolis_rejected_by_coupling() {
        let g = generate_graph(GraphKind::Cycle(8), 0).unwrap();
        let seq = sample_updates(&g, 0.0, 1.0, 5, None).unwrap();
        let err = grand_coupling_evolve(
            &g,
            0.1,
            &[SpinConfig::all_plus(8)],
            &seq,
            Rule::Metropolis,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnsupportedRule(_)));
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let g = generate_graph(GraphKind::Cycle(4), 0).unwrap();
        let table = crate::fourier::build_rule_table(0.05, 2, 0.3, 1e-14).unwrap();
        let plain = sample_updates(&g, 0.0, 1.0, 5, None).unwrap();
        let err = evolve(
            &g,
            0.05,
            &SpinConfig::all_plus(4),
            &plain,
            Rule::Generalized(&table),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn generalized_sequence_and_evolution() {
        let g = generate_graph(GraphKind::Cycle(6), 0).unwrap();
        let table = crate::fourier::build_rule_table(0.05, 2, 0.3, 1e-14).unwrap();
        let seq = sample_updates(&g, 0.0, 5.0, 11, Some(&table)).unwrap();
        assert_eq!(seq.mode, SequenceMode::Generalized);
        assert!(seq.events.iter().all(|e| e.subset.is_some()));
        let out = evolve(
            &g,
            0.05,
            &SpinConfig::all_plus(6),
            &seq,
            Rule::Generalized(&table),
        )
        .unwrap();
        assert_eq!(out.len(), 6);
        // monotone under shared updates
        let outs = grand_coupling_evolve(
            &g,
            0.05,
            &[SpinConfig::all_plus(6), SpinConfig::all_minus(6)],
            &seq,
            Rule::Generalized(&table),
        )
        .unwrap();
        assert!(outs[0].dominates(&outs[1]));
    }

    #[test]
    fn serialization_roundtrip() {
        let g = generate_graph(GraphKind::Cycle(6), 0).unwrap();
        let table = crate::fourier::build_rule_table(0.05, 2, 0.3, 1e-14).unwrap();
        for table_opt in [None, Some(&table)] {
            let seq = sample_updates(&g, 0.0, 3.0, 17, table_opt).unwrap();
            let mut buf = Vec::new();
            write_updates(&seq, &mut buf).unwrap();
            let back = read_updates(&mut buf.as_slice(), 6).unwrap();
            assert_eq!(back.events, seq.events);
            assert_eq!(back.mode, seq.mode);
            assert_eq!(back.seed, seq.seed);
        }
    }
}
