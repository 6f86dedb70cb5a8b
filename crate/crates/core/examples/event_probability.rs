//! Fit the kernel estimator to a handful of partial rankings and query event,
//! conditional and conjunction probabilities. Saves the model as JSON and
//! reloads it.
//!
//! cargo run --example event_probability

use rankdens::estimator::{conditional_prob, empirical_prob, ModelArchive};
use rankdens::{EventScorer, ItemUniverse, KernelMode, KernelModel, TiedRanking};

fn main() -> rankdens::Result<()> {
    let u = ItemUniverse::with_labels(["alien", "brazil", "casablanca", "dune", "eraserhead"])?;
    let data = [
        "alien | brazil | dune",
        "alien,brazil | casablanca",
        "casablanca | alien",
        "alien | dune,eraserhead",
        "brazil | alien | casablanca | dune | eraserhead",
        "dune | brazil",
    ];
    let training = data
        .iter()
        .map(|t| TiedRanking::parse(t, &u))
        .collect::<rankdens::Result<Vec<_>>>()?;

    let model = KernelModel::fit(training.clone(), 10.0, KernelMode::Modified)?;
    let exact = KernelModel::fit(training.clone(), 4.0, KernelMode::ExactSupport)?;

    for text in ["alien | brazil", "alien | dune", "eraserhead | alien", "alien | brazil | casablanca"] {
        let e = TiedRanking::parse(text, &u)?;
        println!(
            "{text:<30} modified {:.4}  exact(h=4) {:.4}  empirical {:.4}",
            model.event_prob(&e)?.value,
            exact.event_prob(&e)?.value,
            empirical_prob(&training, &e)?
        );
    }

    let top = TiedRanking::parse("alien | brazil | casablanca", &u)?;
    let given = TiedRanking::parse("alien | casablanca", &u)?;
    println!("p({top} given {given}) = {:.4}", conditional_prob(&model, &top, &given)?);

    let a = u.resolve("alien")?;
    let d = u.resolve("dune")?;
    let e = u.resolve("eraserhead")?;
    println!(
        "p(alien before dune and alien before eraserhead) = {:.4}",
        model.conjunction_prob(&[(a, d), (a, e)])?
    );

    // the same events through the aggregated pair summary
    let summary = model.summarize(&[a, d, e])?;
    let ad = TiedRanking::chain(&u, &[a, d])?;
    println!(
        "summary over 3 items agrees: {:.12} vs {:.12}",
        EventScorer::event_prob(&summary, &ad)?,
        EventScorer::event_prob(&model, &ad)?
    );

    let path = std::env::temp_dir().join("rankdens-example-model.json");
    ModelArchive::save(&model, &path)?;
    let back = ModelArchive::load(&path)?;
    println!("reloaded from {}: p(alien before dune) = {:.4}", path.display(), back.event_prob(&ad)?.value);
    Ok(())
}
