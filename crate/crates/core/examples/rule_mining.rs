//! Association rules between precedence events. Mutual information rules
//! over the top 12 items of a synthetic ratings file, top-2 lift scores, and
//! the affinity graph thresholded on mean two-way lift.
//!
//! cargo run --release --example rule_mining

use rankdens::cli::{fast_scorer, fit_model};
use rankdens::ingest::{build_rankings, parse_ratings, select_items, select_users, FormatDescriptor, UserSelection};
use rankdens::oracle::{synthesize_ratings, RatingsConfig};
use rankdens::rules::{
    affinity_from_table, joint_pair_table, mine_mi_rules, mutual_information, rule_category_agreement, LiftMode,
    LiftTable,
};
use rankdens::KernelMode;

fn main() -> rankdens::Result<()> {
    let (text, genres) = synthesize_ratings(&RatingsConfig {
        users: 600,
        items: 200,
        ratings: 24_000,
        min_per_user: 20,
        genres: 3,
        seed: 5,
    })?;
    let table = parse_ratings(&text, &FormatDescriptor::ml100k())?;
    let items = select_items(&table, 12);
    let users = select_users(&table, &items, UserSelection::MinCount(3));
    let set = build_rankings(&table, &items, &users)?;
    let u = &set.universe;
    let genre = |i: usize| u.label(i).parse::<usize>().ok().map(|id| format!("g{}", genres[id - 1]));

    let model = fit_model(set.unlevelled(), "auto", KernelMode::Modified, 0)?;
    println!("{} users, bandwidth {:.1}", set.rankings.len(), model.bandwidth());
    let scorer = fast_scorer(&model)?;
    let all: Vec<usize> = (0..u.size()).collect();

    let t = joint_pair_table(scorer.as_ref(), 0, 1, 2, 3)?;
    println!(
        "joint table for ({0} before {1}) x ({2} before {3}): {4:.4?}, MI {5:.6}",
        u.label(0),
        u.label(1),
        u.label(2),
        u.label(3),
        t.cells,
        mutual_information(&t)
    );

    let rules = mine_mi_rules(scorer.as_ref(), &all, 8, false)?;
    println!("\ntop rules by mutual information:");
    for r in &rules {
        println!("  {:<16} MI {:.3e}", r.describe(u), r.score);
    }
    if let Some(share) = rule_category_agreement(&rules, genre) {
        println!("share of rules within one genre: {share:.2}");
    }

    let lift = LiftTable::build(scorer.as_ref(), &all, LiftMode::Top2)?;
    println!("\nlargest top-2 lifts:");
    for (i, j, l) in lift.top(5) {
        println!("  {} then {}: {l:.4}", u.label(i), u.label(j));
    }
    let bottom = LiftTable::build(scorer.as_ref(), &all, LiftMode::TopBottom)?;
    let (i, j, l) = bottom.top(1)[0];
    println!("largest top/bottom lift: {} first, {} last: {l:.4}", u.label(i), u.label(j));

    // an exchangeable model puts every lift at s/(s-1)
    let base = all.len() as f64 / (all.len() as f64 - 1.0);
    let threshold = base + 0.006;
    let graph = affinity_from_table(&lift, threshold);
    println!("\naffinity graph at {threshold:.4}: {} nodes, {} edges", graph.nodes().len(), graph.edges.len());
    print!("{}", graph.to_csv(u));
    Ok(())
}
