//! Backward histories, red/blue/green classification, and an SVG rendering
//! of the space-time clusters (written to clusters.svg).
//!
//! ```bash
//! cargo run --release -p infoperc --example clusters_svg
//! ```

use infoperc::cli::{clusters_csv, render_clusters, Layout};
use infoperc::dynamics::{sample_updates, Rule};
use infoperc::graphs::{generate_graph, GraphKind};
use infoperc::histories::{build_clusters, classify_clusters, develop_history, HistoryMode};

fn main() {
    let g = generate_graph(GraphKind::Cycle(100), 0).unwrap();
    let beta = 0.1;
    let t_star = 6.0;
    let seed = 5;

    let seq = sample_updates(&g, 0.0, t_star, seed, None).unwrap();
    let traces: Vec<_> = (0..g.n() as u32)
        .map(|v| {
            develop_history(&g, beta, &seq, v, t_star, HistoryMode::Standard, Rule::HeatBath)
                .unwrap()
        })
        .collect();
    let mut clusters = build_clusters(&g, &traces).unwrap();
    classify_clusters(&mut clusters, &g, beta, &seq, Rule::HeatBath).unwrap();

    let mut counts = std::collections::BTreeMap::new();
    for c in &clusters {
        *counts.entry(c.classification.unwrap().as_str()).or_insert(0usize) += 1;
    }
    println!("clusters on cycle(100), beta = {beta}, t_star = {t_star}: {counts:?}");
    println!("\n{}", clusters_csv(&clusters));

    let svg = render_clusters(&clusters, Layout::Linear).unwrap();
    std::fs::write("clusters.svg", &svg).unwrap();
    println!("wrote clusters.svg ({} bytes)", svg.len());
}
