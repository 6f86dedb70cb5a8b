//! Preference probabilities implied by a single tied, incomplete ranking
//! under the uniform measure on its consistent permutations, and the expected
//! Kendall distance between two such rankings.
//!
//! cargo run --example censored_pairs

use rankdens::oracle::{brute_expected_kendall, brute_pair_pref};
use rankdens::{expected_kendall, pair_pref_prob, ItemUniverse, TiedRanking};

fn main() -> rankdens::Result<()> {
    let u = ItemUniverse::with_labels(["a", "b", "c", "d", "e", "f"])?;
    let s = TiedRanking::parse("a | b,c | d", &u)?;
    println!("S = {s}, {} consistent orders of 720", s.log_consistent_count().exp().round());

    let [a, b, c, e] = ["a", "b", "c", "e"].map(|l| u.resolve(l).unwrap());
    for (i, j) in [(a, b), (b, c), (a, e), (e, a)] {
        println!(
            "p({} before {}) = {:.6}  (enumerated {:.6})",
            u.label(i),
            u.label(j),
            pair_pref_prob(&s, i, j)?,
            brute_pair_pref(&s, i, j)?
        );
    }

    let r = TiedRanking::parse("f | a,e", &u)?;
    println!(
        "E[T(S, R)] for R = {r}: {:.6}  (enumerated {:.6})",
        expected_kendall(&s, &r)?,
        brute_expected_kendall(&s, &r)?
    );
    Ok(())
}
