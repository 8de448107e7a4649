//! Graph generators, degree statistics, and edge-list round trips.
//!
//! ```bash
//! cargo run --release -p infoperc --example graphs_io
//! ```

use infoperc::graphs::{generate_graph, load_edge_list, save_edge_list, GraphKind};

fn main() {
    let families = [
        ("cycle(8)", GraphKind::Cycle(8)),
        ("torus(2,4)", GraphKind::Torus { dim: 2, side: 4 }),
        ("binary_tree(3)", GraphKind::BinaryTree { depth: 3 }),
        ("hypercube(4)", GraphKind::Hypercube { dim: 4 }),
        ("random_regular(16,3)", GraphKind::RandomRegular { n: 16, d: 3 }),
        ("erdos_renyi(16,0.3)", GraphKind::ErdosRenyi { n: 16, p: 0.3 }),
    ];
    for (name, kind) in families {
        let g = generate_graph(kind, 7).unwrap();
        let (d_max, hist) = g.degree_stats();
        println!("{name}: n = {}, d_max = {d_max}, degree histogram {hist:?}", g.n());
    }

    // canonical edge-list text round-trips exactly
    let g = generate_graph(GraphKind::RandomRegular { n: 10, d: 3 }, 7).unwrap();
    let text = save_edge_list(&g);
    let back = load_edge_list(&text).unwrap();
    assert_eq!(back, g);
    println!("\nrandom_regular(10,3) edge list:\n{text}");
}
