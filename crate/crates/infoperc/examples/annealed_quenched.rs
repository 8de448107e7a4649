//! The effect of the initial state: the uniformly started chain coupled to a
//! stationary chain (annealed), and the overlap statistic from a fixed
//! random start (quenched).
//!
//! ```bash
//! cargo run --release -p infoperc --example annealed_quenched
//! ```

use infoperc::cftp::{annealed_compare, quenched_statistic};
use infoperc::dynamics::SpinConfig;
use infoperc::graphs::{generate_graph, GraphKind};

fn main() {
    let n = 64;
    let g = generate_graph(GraphKind::RandomRegular { n, d: 3 }, 9).unwrap();
    let beta = 0.05;
    let half_log_n = 0.5 * (n as f64).ln();

    println!("annealed comparison on random_regular({n},3), beta = {beta}:");
    println!("t, P(X_t != Y_t) (se), per-site disagreement (se)");
    for i in 0..=8 {
        let t = i as f64 * 0.5;
        let point = annealed_compare(&g, beta, t, 4000, 100 + i as u64).unwrap();
        println!(
            "  {t:4.2}  {:.4} ({:.4})  {:.4} ({:.4})",
            point.any_disagree.value,
            point.any_disagree.se,
            point.site_disagree.value,
            point.site_disagree.se
        );
    }

    let mut rng = <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(77);
    let x0 = SpinConfig::uniform(n, &mut rng);
    println!("\nquenched overlap sum_u x0(u) X_t(u) from a fixed uniform start:");
    println!("t, overlap (se), n e^-t");
    for i in 0..=8 {
        let t = i as f64 * 0.5;
        let est = quenched_statistic(&g, beta, t, &x0, 4000, 200 + i as u64).unwrap();
        println!(
            "  {t:4.2}  {:8.2} ({:.2})  {:8.2}",
            est.value,
            est.se,
            n as f64 * (-t).exp()
        );
    }
    println!("\nhalf log n = {half_log_n:.3} for scale");
}
