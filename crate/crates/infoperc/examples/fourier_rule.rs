//! The generalized update rule: subset probabilities and the coupling
//! identity with the heat-bath function.
//!
//! ```bash
//! cargo run --release -p infoperc --example fourier_rule
//! ```

use infoperc::fourier::{build_rule_table, coupling_identity_check, series_coeffs};

fn main() {
    let b = series_coeffs(9).unwrap();
    println!("series coefficients of (tanh(x)+1)/2:");
    for (l, c) in b.iter().enumerate() {
        println!("  B_{l} = {c}");
    }

    let beta = 0.01;
    let d = 4;
    let table = build_rule_table(beta, d, 0.25, 1e-14).unwrap();
    println!(
        "\nrule table at beta = {beta}, d = {d}: l_max = {}, B = {:.6}, D0 = {:.6}",
        table.l_max, table.b_sum, table.d0
    );
    for r in 1..=d {
        let rule = table.degree_rule(r).unwrap();
        print!("  r = {r}: p = [");
        for (k, p) in rule.p.iter().enumerate() {
            if k > 0 {
                print!(", ");
            }
            print!("{p:.3e}");
        }
        println!("]");
    }

    println!("\ncoupling identity E_A[Phi_A(sigma_A)] = f(beta * sum sigma):");
    for r in 1..=d {
        let dev = coupling_identity_check(&table, r).unwrap();
        println!("  r = {r}: max deviation over all 2^{r} inputs = {dev:.3e}");
    }
}
