//! Inverse-CDF sampling from a piecewise-linear type model: draw types,
//! then compare the empirical level shares and valuation quantiles with
//! the model they came from.
//!
//! Run with: cargo run --release --example sample_types

use flex_auction::dist::ConsumerTypeModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let model = ConsumerTypeModel::linear_ramp_family(
        0,
        0.0,
        2.0,
        &[-0.6, 0.4],
        vec![0.3, 0.7],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;

    let mut by_level = vec![Vec::new(), Vec::new()];
    for _ in 0..n {
        let (theta, level) = model.sample(&mut rng);
        by_level[level - 1].push(theta);
    }
    for (idx, draws) in by_level.iter_mut().enumerate() {
        let level = idx + 1;
        let share = draws.len() as f64 / n as f64;
        println!(
            "level {level}: share {share:.4} (mass {:.4})",
            model.level_mass()[idx]
        );
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for q in [0.25, 0.5, 0.75] {
            let empirical = draws[(q * draws.len() as f64) as usize];
            let implied = model.cdf(level, empirical).unwrap();
            println!("  q{:.0}: value {empirical:.4}, model CDF there {implied:.4}", q * 100.0);
        }
        assert!((share - model.level_mass()[idx]).abs() < 0.01);
    }
    println!("empirical shares and quantiles match the model");
}
