//! Config-driven experiment runner.
//!
//! Experiments are described by a flat `key = value` text config and write
//! CSV outputs plus a `manifest.txt` into the output directory. The manifest
//! is itself a valid config holding every resolved parameter (including the
//! seed and the graph seed), so re-running from it reproduces each output
//! file byte for byte, regardless of thread count.

use crate::cftp;
use crate::dynamics::{sample_updates, Rule};
use crate::error::{Error, Result};
use crate::explorer;
use crate::fourier;
use crate::graphs::{generate_graph, Graph, GraphKind};
use crate::histories::{
    annealed_classify, build_clusters, classify_clusters, develop_history, ClusterClass,
    HistoryMode, SpaceTimeCluster,
};
use crate::observables;
use crate::rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Flat `key = value` configuration; `#` starts a comment line.
#[derive(Debug, Clone, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { map })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn opt(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Config(format!("key `{key}` is not a number")))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Config(format!("key `{key}` is not an integer")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Config(format!("key `{key}` is not an integer")))
    }

    pub fn opt_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.opt(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("key `{key}` is not a number"))),
            None => Ok(default),
        }
    }

    pub fn opt_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.opt(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("key `{key}` is not an integer"))),
            None => Ok(default),
        }
    }

    fn manifest(&self) -> String {
        let mut out = format!(
            "# infoperc {} run manifest; re-run with --config to reproduce outputs\n",
            env!("CARGO_PKG_VERSION")
        );
        for (k, v) in &self.map {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}

/// Parse a graph family spec like `cycle(64)`, `torus(2,10)`,
/// `binary_tree(4)`, `hypercube(6)`, `random_regular(256,3)` or
/// `erdos_renyi(50,0.5)`.
pub fn parse_graph_kind(spec: &str) -> Result<GraphKind> {
    let spec = spec.trim();
    let (name, rest) = spec
        .split_once('(')
        .ok_or_else(|| Error::Config(format!("bad graph spec `{spec}`")))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| Error::Config(format!("bad graph spec `{spec}`")))?;
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    let usize_arg = |i: usize| -> Result<usize> {
        parts
            .get(i)
            .ok_or_else(|| Error::Config(format!("graph spec `{spec}` missing argument {i}")))?
            .parse()
            .map_err(|_| Error::Config(format!("graph spec `{spec}`: bad integer")))
    };
    match name.trim() {
        "cycle" => Ok(GraphKind::Cycle(usize_arg(0)?)),
        "torus" => Ok(GraphKind::Torus {
            dim: usize_arg(0)?,
            side: usize_arg(1)?,
        }),
        "binary_tree" => Ok(GraphKind::BinaryTree { depth: usize_arg(0)? }),
        "hypercube" => Ok(GraphKind::Hypercube { dim: usize_arg(0)? }),
        "random_regular" => Ok(GraphKind::RandomRegular {
            n: usize_arg(0)?,
            d: usize_arg(1)?,
        }),
        "erdos_renyi" => {
            let p: f64 = parts
                .get(1)
                .ok_or_else(|| Error::Config(format!("graph spec `{spec}` missing p")))?
                .parse()
                .map_err(|_| Error::Config(format!("graph spec `{spec}`: bad p")))?;
            Ok(GraphKind::ErdosRenyi { n: usize_arg(0)?, p })
        }
        other => Err(Error::Config(format!("unknown graph family `{other}`"))),
    }
}

/// Parse a time grid: either `start:step:end` or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("bad grid `{spec}`: want start:step:end")));
        }
        let start: f64 = parts[0].parse().map_err(|_| Error::Config("bad grid start".into()))?;
        let step: f64 = parts[1].parse().map_err(|_| Error::Config("bad grid step".into()))?;
        let end: f64 = parts[2].parse().map_err(|_| Error::Config("bad grid end".into()))?;
        if step <= 0.0 || end < start {
            return Err(Error::Config(format!("bad grid `{spec}`")));
        }
        let mut grid = Vec::new();
        let mut i = 0usize;
        loop {
            let t = start + step * i as f64;
            if t > end + 1e-12 {
                break;
            }
            grid.push(t);
            i += 1;
        }
        Ok(grid)
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad grid entry `{s}`")))
            })
            .collect()
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

fn resolve_graph(config: &mut Config) -> Result<Graph> {
    let kind = parse_graph_kind(config.get("graph")?)?;
    let graph_seed = match config.opt("graph_seed") {
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config("key `graph_seed` is not an integer".into()))?,
        None => {
            let derived = rng::mix(config.get_u64("seed")?, &[0x4752_4150]);
            config.set("graph_seed", derived);
            derived
        }
    };
    generate_graph(kind, graph_seed)
}

/// Execute the experiment described by the config, writing outputs and the
/// manifest into `out_dir`. `seed` and `threads` override config keys.
pub fn run(
    config: &Config,
    out_dir: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<()> {
    let mut config = config.clone();
    if let Some(s) = seed {
        config.set("seed", s);
    }
    if config.opt("seed").is_none() {
        config.set("seed", 1u64);
    }
    std::fs::create_dir_all(out_dir)?;
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_inner(&mut config, out_dir))
        }
        None => run_inner(&mut config, out_dir),
    }
}

fn run_inner(config: &mut Config, out_dir: &Path) -> Result<()> {
    let kind = config.get("kind")?.to_string();
    match kind.as_str() {
        "magnetization" => run_magnetization(config, out_dir),
        "tmix-profile" => run_tmix_profile(config, out_dir),
        "clusters" => run_clusters(config, out_dir),
        "verify-fourier" => run_verify_fourier(config, out_dir),
        "cftp-sample" => run_cftp_sample(config, out_dir),
        "annealed" => run_annealed(config, out_dir),
        "quenched" => run_quenched(config, out_dir),
        "explore" => run_explore(config, out_dir),
        other => Err(Error::Config(format!("unknown experiment kind `{other}`"))),
    }
}

fn profile_csv(profile: &observables::MagnetizationProfile) -> String {
    let mut out = String::from("t,v,m_hat,stderr\n");
    for (i, &t) in profile.grid.iter().enumerate() {
        for v in 0..profile.m_hat[i].len() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(t),
                v,
                fmt_f64(profile.m_hat[i][v]),
                fmt_f64(profile.stderr[i][v])
            )
            .unwrap();
        }
    }
    out
}

fn sumsq_csv(profile: &observables::MagnetizationProfile) -> String {
    let mut out = String::from("t,sum_sq,se\n");
    for (i, &t) in profile.grid.iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(t),
            fmt_f64(profile.sum_sq[i]),
            fmt_f64(profile.sum_sq_se[i])
        )
        .unwrap();
    }
    out
}

fn tm_report(profile: &observables::MagnetizationProfile) -> String {
    match observables::locate_t_m(profile) {
        Ok(est) => format!("t_m,sigma\n{},{}\n", fmt_f64(est.t_m), fmt_f64(est.sigma)),
        Err(e) => format!("t_m,sigma\n# not located: {e}\n"),
    }
}

fn run_magnetization(config: &mut Config, out_dir: &Path) -> Result<()> {
    let graph = resolve_graph(config)?;
    let beta = config.get_f64("beta")?;
    let grid = parse_grid(config.get("grid")?)?;
    let replicas = config.get_usize("replicas")?;
    let antithetic = config.opt("antithetic").map(|v| v == "true").unwrap_or(false);
    config.set("antithetic", antithetic);
    let seed = config.get_u64("seed")?;
    let profile =
        observables::magnetization_profile(&graph, beta, &grid, replicas, seed, antithetic)?;
    write_file(out_dir, "profile.csv", &profile_csv(&profile))?;
    write_file(out_dir, "sumsq.csv", &sumsq_csv(&profile))?;
    write_file(out_dir, "tm.csv", &tm_report(&profile))?;
    write_file(out_dir, "manifest.txt", &config.manifest())?;
    Ok(())
}

fn run_tmix_profile(config: &mut Config, out_dir: &Path) -> Result<()> {
    let graph = resolve_graph(config)?;
    let beta = config.get_f64("beta")?;
    let grid = parse_grid(config.get("grid")?)?;
    let replicas = config.get_usize("replicas")?;
    let bound_replicas = config.opt_usize("bound_replicas", replicas)?;
    config.set("bound_replicas", bound_replicas);
    let antithetic = config.opt("antithetic").map(|v| v == "true").unwrap_or(true);
    config.set("antithetic", antithetic);
    let seed = config.get_u64("seed")?;
    let profile =
        observables::magnetization_profile(&graph, beta, &grid, replicas, seed, antithetic)?;
    write_file(out_dir, "profile.csv", &profile_csv(&profile))?;
    write_file(out_dir, "sumsq.csv", &sumsq_csv(&profile))?;
    write_file(out_dir, "tm.csv", &tm_report(&profile))?;

    let mut distances = String::from("t,tv_lower,lower_se,tv_upper,upper_se,exact_tv\n");
    let exact_feasible = graph.n() <= observables::EXACT_N_CAP;
    for &t in &grid {
        let lower = observables::tv_lower_bound(
            &graph,
            beta,
            t,
            &profile,
            bound_replicas,
            rng::mix(seed, &[0x4c4f, t.to_bits()]),
        )?;
        let upper = observables::coupling_tv_upper(
            &graph,
            beta,
            t,
            bound_replicas,
            rng::mix(seed, &[0x5550, t.to_bits()]),
        )?;
        let exact = if exact_feasible {
            let dist = observables::exact_evolve(
                &graph,
                beta,
                &crate::dynamics::SpinConfig::all_plus(graph.n()),
                t,
            )?;
            let pi = observables::gibbs_distribution(&graph, beta)?;
            fmt_f64(observables::tv_distance(&dist, &pi)?)
        } else {
            String::new()
        };
        writeln!(
            distances,
            "{},{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(lower.value),
            fmt_f64(lower.se),
            fmt_f64(upper.value),
            fmt_f64(upper.se),
            exact
        )
        .unwrap();
    }
    write_file(out_dir, "distances.csv", &distances)?;
    write_file(out_dir, "manifest.txt", &config.manifest())?;
    Ok(())
}

/// CSV dump of classified clusters.
pub fn clusters_csv(clusters: &[SpaceTimeCluster]) -> String {
    let mut out = String::from(
        "cluster_id,class,members,tau_hat,length_L,support_size,survives_to_zero,branches_at_zero\n",
    );
    for (id, c) in clusters.iter().enumerate() {
        let members = c
            .members
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            id,
            c.classification.map(|c| c.as_str()).unwrap_or("unclassified"),
            members,
            c.tau_hat.map(fmt_f64).unwrap_or_default(),
            fmt_f64(c.length),
            c.support,
            c.survives_to_zero,
            c.branches_at_zero
        )
        .unwrap();
    }
    out
}

/// CSV dump of the cluster segments (for rendering and re-analysis).
pub fn segments_csv(clusters: &[SpaceTimeCluster]) -> String {
    let mut out = String::from("cluster_id,vertex,t_begin,t_end\n");
    for (id, c) in clusters.iter().enumerate() {
        for s in &c.segments {
            writeln!(out, "{},{},{},{}", id, s.vertex, fmt_f64(s.begin), fmt_f64(s.end)).unwrap();
        }
    }
    out
}

/// Layout of the vertex axis in cluster renderings.
#[derive(Debug, Clone, Copy)]
pub enum Layout {
    /// Vertices laid out by id.
    Linear,
    /// Row-major unrolling of a grid with the given side; rows are separated
    /// by a one-column gap.
    Grid { side: usize },
}

/// Render classified clusters as a static SVG: time on the vertical axis
/// (zero at the bottom), vertices on the horizontal axis, one colored
/// vertical line per segment.
pub fn render_clusters(clusters: &[SpaceTimeCluster], layout: Layout) -> Result<String> {
    let n = clusters
        .iter()
        .flat_map(|c| c.members.iter().copied().chain(c.segments.iter().map(|s| s.vertex)))
        .max()
        .map(|v| v as usize + 1)
        .unwrap_or(0);
    let xpos = |v: u32| -> Result<usize> {
        match layout {
            Layout::Linear => Ok(v as usize),
            Layout::Grid { side } => {
                if side == 0 || n % side != 0 {
                    return Err(Error::Layout(format!(
                        "grid side {side} incompatible with {n} vertices"
                    )));
                }
                Ok((v as usize % side) + (v as usize / side) * (side + 1))
            }
        }
    };
    let max_x = (0..n as u32).map(|v| xpos(v)).collect::<Result<Vec<_>>>()?;
    let width_slots = max_x.iter().copied().max().unwrap_or(0) + 1;
    let t_star = clusters.first().map(|c| c.t_star).unwrap_or(1.0);
    let t_floor = clusters
        .iter()
        .flat_map(|c| c.segments.iter().map(|s| s.begin))
        .fold(0.0f64, f64::min);

    let x_scale = 12.0;
    let y_scale = 40.0;
    let margin = 30.0;
    let width = margin * 2.0 + width_slots as f64 * x_scale;
    let height = margin * 2.0 + (t_star - t_floor) * y_scale;
    let x_of = |v: u32| margin + (xpos(v).unwrap() as f64 + 0.5) * x_scale;
    let y_of = |t: f64| margin + (t_star - t) * y_scale;

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    // frame and time-zero axis
    writeln!(
        svg,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\"/>",
        margin / 2.0,
        margin / 2.0,
        width - margin,
        height - margin
    )
    .unwrap();
    if t_floor < 0.0 {
        writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#bbb\" stroke-dasharray=\"4\"/>",
            margin / 2.0,
            y_of(0.0),
            width - margin / 2.0,
            y_of(0.0)
        )
        .unwrap();
    }
    for c in clusters {
        let color = match c.classification {
            Some(ClusterClass::Red) => "#d62728",
            Some(ClusterClass::Blue) => "#1f77b4",
            Some(ClusterClass::Green) => "#2ca02c",
            None => "#999999",
        };
        for s in &c.segments {
            writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"3\"/>",
                x_of(s.vertex),
                y_of(s.end),
                x_of(s.vertex),
                y_of(s.begin),
                color
            )
            .unwrap();
        }
    }
    writeln!(svg, "</svg>").unwrap();
    Ok(svg)
}

fn run_clusters(config: &mut Config, out_dir: &Path) -> Result<()> {
    let graph = resolve_graph(config)?;
    let beta = config.get_f64("beta")?;
    let t_star = config.get_f64("t_star")?;
    let seed = config.get_u64("seed")?;
    let mode = match config.opt("mode").unwrap_or("standard") {
        "standard" => HistoryMode::Standard,
        "modified" => HistoryMode::Modified,
        "annealed" => HistoryMode::Annealed,
        other => return Err(Error::Config(format!("unknown history mode `{other}`"))),
    };
    config.set(
        "mode",
        match mode {
            HistoryMode::Standard => "standard",
            HistoryMode::Modified => "modified",
            HistoryMode::Annealed => "annealed",
        },
    );
    let rule_name = config.opt("rule").unwrap_or("heat-bath").to_string();
    config.set("rule", &rule_name);
    let table;
    let rule = match rule_name.as_str() {
        "heat-bath" => Rule::HeatBath,
        "generalized" => {
            let epsilon = config.opt_f64("epsilon", 0.25)?;
            config.set("epsilon", epsilon);
            table = fourier::build_rule_table(beta, graph.d_max(), epsilon, 1e-14)?;
            Rule::Generalized(&table)
        }
        other => return Err(Error::Config(format!("unknown rule `{other}`"))),
    };
    let source_table = match rule {
        Rule::Generalized(t) => Some(t),
        _ => None,
    };
    let seq = sample_updates(&graph, 0.0, t_star, seed, source_table)?;
    let traces: Vec<_> = (0..graph.n() as u32)
        .map(|v| develop_history(&graph, beta, &seq, v, t_star, mode, rule))
        .collect::<Result<Vec<_>>>()?;
    let mut clusters = build_clusters(&graph, &traces)?;
    if mode == HistoryMode::Annealed {
        annealed_classify(&mut clusters)?;
    } else {
        classify_clusters(&mut clusters, &graph, beta, &seq, rule)?;
    }
    let layout = match config.opt("layout").unwrap_or("linear") {
        "linear" => Layout::Linear,
        spec => {
            if let Some(rest) = spec.strip_prefix("grid(") {
                let side: usize = rest
                    .strip_suffix(')')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad layout `{spec}`")))?;
                Layout::Grid { side }
            } else {
                return Err(Error::Config(format!("unknown layout `{spec}`")));
            }
        }
    };
    write_file(out_dir, "clusters.csv", &clusters_csv(&clusters))?;
    write_file(out_dir, "segments.csv", &segments_csv(&clusters))?;
    write_file(out_dir, "clusters.svg", &render_clusters(&clusters, layout)?)?;
    write_file(out_dir, "manifest.txt", &config.manifest())?;
    Ok(())
}

fn run_verify_fourier(config: &mut Config, out_dir: &Path) -> Result<()> {
    let beta = config.get_f64("beta")?;
    let d = config.get_usize("d")?;
    let epsilon = config.opt_f64("epsilon", 0.25)?;
    config.set("epsilon", epsilon);
    let tol = config.opt_f64("tol", 1e-14)?;
    config.set("tol", tol);
    let table = fourier::build_rule_table(beta, d, epsilon, tol)?;
    let mut csv = String::from("r,k,p,bound,slack\n");
    for r in 1..=d {
        let rule = table.degree_rule(r)?;
        for k in 0..=r {
            let binom = (0..k.min(r - k)).fold(1.0, |acc, i| acc * (r - i) as f64 / (i + 1) as f64);
            let bound = table.d0 * (2.0 * beta * r as f64).powi(k as i32);
            let slack = bound - binom * rule.p[k];
            writeln!(
                csv,
                "{},{},{},{},{}",
                r,
                k,
                fmt_f64(rule.p[k]),
                fmt_f64(bound),
                fmt_f64(slack)
            )
            .unwrap();
        }
    }
    write_file(out_dir, "fourier.csv", &csv)?;
    let mut dev = String::from("r,max_coupling_deviation,series_tail_bound\n");
    let mut max_dev = 0.0f64;
    for r in 1..=d {
        let deviation = fourier::coupling_identity_check(&table, r)?;
        max_dev = max_dev.max(deviation);
        writeln!(
            dev,
            "{},{},{}",
            r,
            fmt_f64(deviation),
            fmt_f64(table.degree_rule(r)?.tail_bound)
        )
        .unwrap();
    }
    write_file(out_dir, "deviations.csv", &dev)?;
    write_file(
        out_dir,
        "summary.txt",
        &format!(
            "l_max = {}\nB = {}\nD0 = {}\nmax coupling deviation = {}\n",
            table.l_max,
            fmt_f64(table.b_sum),
            fmt_f64(table.d0),
            fmt_f64(max_dev)
        ),
    )?;
    write_file(out_dir, "manifest.txt", &config.manifest())?;
    Ok(())
}

fn run_cftp_sample(config: &mut Config, out_dir: &Path) -> Result<()> {
    let graph = resolve_graph(config)?;
    let beta = config.get_f64("beta")?;
    let samples = config.get_usize("samples")?;
    let seed = config.get_u64("seed")?;
    use rayon::prelude::*;
    let results: Vec<cftp::PerfectSample> = (0..samples)
        .into_par_iter()
        .map(|i| cftp::perfect_sample(&graph, beta, rng::replica_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("sample,coalescence_depth\n");
    for (i, s) in results.iter().enumerate() {
        writeln!(csv, "{},{}", i, 1u64 << s.epochs).unwrap();
    }
    write_file(out_dir, "samples.csv", &csv)?;
    write_file(out_dir, "manifest.txt", &config.manifest())?;
    Ok(())
}

fn run_annealed(config: &mut Config, out_dir: &Path) -> Result<()> {
    let graph = resolve_graph(config)?;
    let beta = config.get_f64("beta")?;
    let grid = parse_grid(config.get("grid")?)?;
    let replicas = config.get_usize("replicas")?;
    let seed = config.get_u64("seed")?;
    let mut csv = String::from("t,any_disagree,any_se,site_disagree,site_se\n");
    for &t in &grid {
        let point =
            cftp::annealed_compare(&graph, beta, t, replicas, rng::mix(seed, &[t.to_bits()]))?;
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(point.any_disagree.value),
            fmt_f64(point.any_disagree.se),
            fmt_f64(point.site_disagree.value),
            fmt_f64(point.site_disagree.se)
        )
        .unwrap();
    }
    write_file(out_dir, "annealed.csv", &csv)?;
    write_file(out_dir, "manifest.txt", &config.manifest())?;
    Ok(())
}

fn run_quenched(config: &mut Config, out_dir: &Path) -> Result<()> {
    let graph = resolve_graph(config)?;
    let beta = config.get_f64("beta")?;
    let grid = parse_grid(config.get("grid")?)?;
    let replicas = config.get_usize("replicas")?;
    let seed = config.get_u64("seed")?;
    let x0 = crate::dynamics::SpinConfig::uniform(
        graph.n(),
        &mut rng::stream(seed, &[0x5830_5345]),
    );
    let mut csv = String::from("t,overlap_mean,se\n");
    for &t in &grid {
        let est = cftp::quenched_statistic(
            &graph,
            beta,
            t,
            &x0,
            replicas,
            rng::mix(seed, &[t.to_bits()]),
        )?;
        writeln!(csv, "{},{},{}", fmt_f64(t), fmt_f64(est.value), fmt_f64(est.se)).unwrap();
    }
    write_file(out_dir, "quenched.csv", &csv)?;
    write_file(out_dir, "manifest.txt", &config.manifest())?;
    Ok(())
}

fn run_explore(config: &mut Config, out_dir: &Path) -> Result<()> {
    let graph = resolve_graph(config)?;
    let beta = config.get_f64("beta")?;
    let eta = config.get_f64("eta")?;
    let lambda = config.get_f64("lambda")?;
    let t_star = config.get_f64("t_star")?;
    let t0 = config.opt_f64("t0", t_star)?;
    config.set("t0", fmt_f64(t0));
    let w0 = config.opt_usize("w0", 0)? as u32;
    config.set("w0", w0);
    let samples = config.get_usize("samples")?;
    let dom_epsilon = config.opt_f64("dom_epsilon", 0.25)?;
    config.set("dom_epsilon", dom_epsilon);
    let seed = config.get_u64("seed")?;

    let report = explorer::exp_moment_estimate(
        &graph,
        beta,
        explorer::ExpMomentParams {
            eta,
            lambda,
            w0,
            t0,
            t_star,
            samples,
        },
        seed,
        None,
    )?;
    let mut csv = String::from("sample,length,support,tau_hat,members\n");
    for (i, s) in report.samples.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{},{}",
            i,
            fmt_f64(s.length),
            s.support,
            s.tau_hat.map(fmt_f64).unwrap_or_default(),
            s.members
        )
        .unwrap();
    }
    write_file(out_dir, "explore_samples.csv", &csv)?;

    let dom = explorer::dominating_process(
        explorer::DominatingParams {
            d: graph.d_max(),
            beta,
            epsilon: dom_epsilon,
            eta,
            lambda,
            samples,
            max_iterations: 10_000,
        },
        rng::mix(seed, &[0x444f_4d]),
    )?;
    let mut dcsv = String::from("sample,y,z,iterations,censored\n");
    for (i, r) in dom.runs.iter().enumerate() {
        writeln!(
            dcsv,
            "{},{},{},{},{}",
            i,
            fmt_f64(r.y),
            fmt_f64(r.z),
            r.iterations,
            r.censored
        )
        .unwrap();
    }
    write_file(out_dir, "dominating_samples.csv", &dcsv)?;

    let feasibility = match explorer::check_moment_feasibility(
        graph.d_max(),
        beta,
        dom_epsilon,
        eta,
        lambda,
    ) {
        Ok(slack) => format!("feasible, slack {}", fmt_f64(slack)),
        Err(e) => format!("infeasible ({e})"),
    };
    let dom_moment = match &dom.moment {
        Some(est) => format!("{} (se {})", fmt_f64(est.value), fmt_f64(est.se)),
        None => "not estimated (infeasible or censored)".to_string(),
    };
    write_file(
        out_dir,
        "summary.txt",
        &format!(
            "explorer moment = {} (se {})\nlog moment = {}\nlength quantiles (50/90/99) = {} {} {}\nsupport quantiles (50/90/99) = {} {} {}\ndominating moment = {}\ndominating mean W = {} (se {}, expected {})\ndominating censored runs = {}\nmoment feasibility: {}\n",
            fmt_f64(report.moment.value),
            fmt_f64(report.moment.se),
            fmt_f64(report.log_moment),
            fmt_f64(report.length_quantiles[0]),
            fmt_f64(report.length_quantiles[1]),
            fmt_f64(report.length_quantiles[2]),
            fmt_f64(report.support_quantiles[0]),
            fmt_f64(report.support_quantiles[1]),
            fmt_f64(report.support_quantiles[2]),
            dom_moment,
            fmt_f64(dom.mean_w.value),
            fmt_f64(dom.mean_w.se),
            fmt_f64(1.0 + 2.0 / (1.0 - dom_epsilon)),
            dom.censored,
            feasibility
        ),
    )?;
    write_file(out_dir, "manifest.txt", &config.manifest())?;
    Ok(())
}
