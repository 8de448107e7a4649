//! Magnetization profile and the cutoff location: the first time the sum of
//! squared magnetizations drops to 1.
//!
//! ```bash
//! cargo run --release -p infoperc --example magnetization_tm
//! ```

use infoperc::graphs::{generate_graph, GraphKind};
use infoperc::observables::{locate_t_m, magnetization_profile};

fn main() {
    let n = 64;
    let g = generate_graph(GraphKind::Cycle(n), 0).unwrap();
    let beta = 0.05;
    let grid: Vec<f64> = (0..=24).map(|i| i as f64 * 0.25).collect();
    let profile = magnetization_profile(&g, beta, &grid, 20_000, 11, true).unwrap();

    println!("t, sum of squared magnetizations (se)");
    for (i, &t) in profile.grid.iter().enumerate() {
        println!(
            "  {t:5.2}  {:10.4} ({:.4})",
            profile.sum_sq[i], profile.sum_sq_se[i]
        );
    }

    let est = locate_t_m(&profile).unwrap();
    println!(
        "\nt_m = {:.4} +- {:.4}; half log n = {:.4} (beta = 0 value)",
        est.t_m,
        est.sigma,
        0.5 * (n as f64).ln()
    );
}
