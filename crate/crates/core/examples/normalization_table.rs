//! Kendall distance distribution under the uniform measure and the
//! triangular kernel normalization for a few sizes and bandwidths.
//!
//! cargo run --example normalization_table

use rankdens::{mahonian_distribution, triangular_normalization, KernelMode};

fn main() -> rankdens::Result<()> {
    for n in [3, 4, 5] {
        let g = mahonian_distribution(n)?;
        let counts: Vec<String> = g.counts().iter().map(|c| format!("{c}")).collect();
        println!("n={n} inversions: [{}] mean {}", counts.join(" "), g.mean());
    }

    println!("\n n    h   exact C     modified C");
    for (n, h) in [(3, 2.0), (3, 3.0), (4, 4.0), (4, 6.0), (5, 10.0)] {
        let exact = triangular_normalization(n, h, KernelMode::ExactSupport)?;
        let modified = triangular_normalization(n, h, KernelMode::Modified)?;
        println!("{n:>2} {h:>4}   {:>9.4}   {:>10.4}", exact.c(), modified.c());
    }

    // large n stays in log space
    let big = triangular_normalization(1000, 499_500.0, KernelMode::Modified)?;
    println!("\nn=1000 at the default bandwidth: ln C = {:.3}", big.ln_c());
    Ok(())
}
