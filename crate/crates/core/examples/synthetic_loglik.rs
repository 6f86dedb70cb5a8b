//! Held-out log-likelihood of the kernel estimator, the empirical measure
//! and a fitted Mallows model on censored rankings drawn from a two-component
//! Mallows mixture. Each test user contributes the log-probability of their
//! full latent order.
//!
//! cargo run --release --example synthetic_loglik [-- m reps]

use rankdens::estimator::{mallows_fit, select_bandwidth, test_loglikelihood, EmpiricalMeasure};
use rankdens::oracle::{synthesize, SynthConfig};
use rankdens::{KernelMode, KernelModel, Permutation, TiedRanking};

fn main() -> rankdens::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let m = args.next().unwrap_or(200);
    let reps = args.next().unwrap_or(5);
    let test_size = 1000;

    println!(" n     kernel  empirical    mallows   mean h");
    for n in 3..=5 {
        let mut sums = [0.0; 3];
        let mut h_sum = 0.0;
        for rep in 0..reps as u64 {
            let mut config = SynthConfig::two_component(n, m + test_size, 1.0, 100 + rep);
            config.observe_prob = 0.9;
            config.tie_prob = 0.1;
            let data = synthesize(&config)?;
            let train = data.observed[..m].to_vec();
            let test = data.latent[m..]
                .iter()
                .map(|p| p.to_ranking(&data.universe))
                .collect::<rankdens::Result<Vec<_>>>()?;
            let subset: Vec<usize> = (0..n).collect();

            let grid: Vec<f64> = (1..=n * (n - 1) / 2 + 1).map(|h| h as f64).collect();
            let h = select_bandwidth(&train, &grid, KernelMode::ExactSupport, 5, rep)?.bandwidth;
            h_sum += h;
            let kernel = KernelModel::fit(train.clone(), h, KernelMode::ExactSupport)?;
            sums[0] += test_loglikelihood(&kernel, &test, &subset)?.mean;
            sums[1] += test_loglikelihood(&EmpiricalMeasure::new(train.clone())?, &test, &subset)?.mean;

            // Mallows is fit to the fully ranked training users only
            let full: Vec<Permutation> = train
                .iter()
                .filter(|r| r.is_full())
                .map(|r: &TiedRanking| Permutation::from_order(r.groups().iter().map(|g| g[0]).collect()))
                .collect::<rankdens::Result<Vec<_>>>()?;
            sums[2] += test_loglikelihood(&mallows_fit(&data.universe, &full)?, &test, &subset)?.mean;
        }
        let k = reps as f64;
        println!(
            "{n:>2} {:>10.4} {:>10.4} {:>10.4} {:>8.2}",
            sums[0] / k,
            sums[1] / k,
            sums[2] / k,
            h_sum / k
        );
    }
    Ok(())
}
