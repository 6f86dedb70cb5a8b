//! Rank prediction for withheld items. The first part scores fixed
//! predictions for a single user; the second predicts levels on synthetic
//! ratings by minimizing posterior loss under L0, L1 and the asymmetric loss.
//!
//! cargo run --release --example rank_prediction

use rankdens::cli::fast_scorer;
use rankdens::ingest::{build_rankings, parse_ratings, select_items, select_users, split, FormatDescriptor, UserSelection};
use rankdens::oracle::{synthesize_ratings, RatingsConfig};
use rankdens::recommend::{
    evaluate_prediction, level_posterior, predict_level, HeldOutUser, KernelPredictor, LossMatrix,
    PredictionSplit,
};
use rankdens::{Item, ItemUniverse, KernelModel, TiedRanking};

fn main() -> rankdens::Result<()> {
    // six tie groups; the top group gets level 6 so that |level difference|
    // equals |rank difference|
    let labels = ["3", "4", "5", "6", "10", "11", "12", "23", "40", "50", "60", "100", "101"];
    let u = ItemUniverse::with_labels(labels)?;
    let groups = ["3", "4,5,6", "10,11,12", "23", "40,50,60", "100,101"]
        .iter()
        .map(|g| g.split(',').map(|l| u.resolve(l)).collect::<rankdens::Result<Vec<Item>>>())
        .collect::<rankdens::Result<Vec<_>>>()?;
    let full = TiedRanking::with_levels(&u, groups, vec![6, 5, 4, 3, 2, 1])?;
    let (four, eleven) = (u.resolve("4")?, u.resolve("11")?);
    let observed = full.retain(|i| i != four && i != eleven).expect("items remain");
    println!("user: {full}\nobserved: {observed}");

    let single = PredictionSplit {
        users: vec![HeldOutUser {
            user: "example".into(),
            observed,
            held_out: vec![(four, 5), (eleven, 4)],
        }],
        seed: 0,
    };
    // rank 1 for item 4 and rank 4 for item 11
    let forced = |_: &HeldOutUser, item: Item| Ok(if item == four { 6 } else { 3 });
    let l1 = LossMatrix::absolute(1, 6)?;
    let report = evaluate_prediction(&forced, &single, &l1)?;
    for o in &report.outcomes {
        println!("item {}: predicted rank {}, true rank {}, L1 loss {}", u.label(o.item), 7 - o.predicted, 7 - o.truth, o.loss);
    }

    // synthetic ratings, 40 most rated items
    let (text, _) = synthesize_ratings(&RatingsConfig {
        users: 400,
        items: 300,
        ratings: 20_000,
        min_per_user: 20,
        genres: 4,
        seed: 7,
    })?;
    let table = parse_ratings(&text, &FormatDescriptor::ml100k())?;
    let items = select_items(&table, 40);
    let users = select_users(&table, &items, UserSelection::MinCount(5));
    let set = build_rankings(&table, &items, &users)?;
    let s = split(&set, 11, 0.3, 0.5)?;
    let model = KernelModel::fit_default(s.train.clone())?;
    let scorer = fast_scorer(&model)?;
    println!("\n{} training users, {} test users", s.train.len(), s.prediction.users.len());

    let first = &s.prediction.users[0];
    let (item, truth) = first.held_out[0];
    let post = level_posterior(scorer.as_ref(), &first.observed, item, 1, 5)?;
    println!("posterior for item {} (true level {truth}): {:.3?}", set.universe.label(item), post.probs);

    for name in ["l0", "l1", "le"] {
        let loss = LossMatrix::builtin(name, 1, 5)?;
        let predictor = KernelPredictor {
            scorer: scorer.as_ref(),
            loss: &loss,
        };
        let kernel = evaluate_prediction(&predictor, &s.prediction, &loss)?;
        let constant = (1..=5)
            .map(|l| evaluate_prediction(&move |_: &HeldOutUser, _: Item| Ok(l), &s.prediction, &loss).map(|r| r.mean_loss))
            .collect::<rankdens::Result<Vec<_>>>()?;
        let best_constant = constant.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "{name}: kernel {:.4}, best constant {:.4}, predicted level here {}",
            kernel.mean_loss,
            best_constant,
            predict_level(&post, &loss)?
        );
    }
    Ok(())
}
