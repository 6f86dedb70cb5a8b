//! Ratings file to per-user tied rankings, then the pairwise preference
//! matrix over the most rated items and the items ordered by r(i), the mean
//! of their row. Uses a synthetic file shaped like MovieLens 100k; pass a
//! real `u.data` path as the first argument to use that instead.
//!
//! cargo run --release --example ratings_pairs [-- path/to/u.data]

use rankdens::cli::{fast_scorer, fit_model, pair_matrix};
use rankdens::ingest::{build_rankings, load_ratings, parse_ratings, select_items, select_users, FormatDescriptor, UserSelection};
use rankdens::oracle::{synthesize_ratings, RatingsConfig};
use rankdens::KernelMode;

fn main() -> rankdens::Result<()> {
    let format = FormatDescriptor::ml100k();
    let table = match std::env::args().nth(1) {
        Some(path) => load_ratings(path, &format)?,
        None => parse_ratings(&synthesize_ratings(&RatingsConfig::ml100k_shape(1))?.0, &format)?,
    };
    println!(
        "{} ratings, {} malformed lines, {} duplicates",
        table.ratings.len(),
        table.malformed,
        table.duplicates
    );

    let items = select_items(&table, 53);
    let users = select_users(&table, &items, UserSelection::TopByCoverage(2000));
    let set = build_rankings(&table, &items, &users)?;
    let sizes: Vec<usize> = set.rankings.iter().map(|r| r.num_ranked()).collect();
    println!(
        "{} users over {} items, {:.1} ranked items per user on average",
        set.rankings.len(),
        items.len(),
        sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
    );
    println!("first user: {}", set.rankings[0]);

    // 5-fold held-out likelihood over a grid of multiples of n(n-1)/2
    let model = fit_model(set.unlevelled(), "auto", KernelMode::Modified, 0)?;
    println!("bandwidth {} (n(n-1)/2 = {})", model.bandwidth(), n_items(items.len()));
    let scorer = fast_scorer(&model)?;
    let m = pair_matrix(scorer.as_ref())?;
    let n = m.len();
    let r: Vec<f64> = m.iter().map(|row| row.iter().sum::<f64>() / n as f64).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));

    println!("\nhighest r(i):");
    for &i in &order[..5] {
        println!("  item {:>5}  r = {:.4}", set.universe.label(i), r[i]);
    }
    println!("lowest r(i):");
    for &i in &order[n - 5..] {
        println!("  item {:>5}  r = {:.4}", set.universe.label(i), r[i]);
    }
    let (a, b) = (order[0], order[n - 1]);
    println!(
        "\np({} before {}) = {:.4}, reverse {:.4}",
        set.universe.label(a),
        set.universe.label(b),
        m[a][b],
        m[b][a]
    );
    Ok(())
}

fn n_items(n: usize) -> usize {
    n * (n - 1) / 2
}
