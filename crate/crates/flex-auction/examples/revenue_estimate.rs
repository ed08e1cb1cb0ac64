//! Estimate expected revenue under truthful play and confirm it matches
//! the expected virtual surplus of the winners, the identity behind the
//! allocation objective. The single-consumer economy has a closed form:
//! a uniform [0,1] bidder facing reserve 1/2 yields revenue 1/4.
//!
//! Run with: cargo run --release --example revenue_estimate

use flex_auction::verify::estimate_revenue;
use flex_auction::verify::fixtures::{iid_uniform_economy, single_uniform_economy};

fn main() {
    let trials = 200_000;

    let (structure, models) = single_uniform_economy();
    let single = estimate_revenue(&models, &structure, trials, 11).unwrap();
    println!(
        "single uniform consumer: revenue {:.5} +- {:.5} (closed form 0.25)",
        single.revenue_mean, single.revenue_stderr
    );
    assert!((single.revenue_mean - 0.25).abs() < 3.0 * single.revenue_stderr);

    let (structure, models) = iid_uniform_economy(3);
    let multi = estimate_revenue(&models, &structure, trials, 11).unwrap();
    println!(
        "three iid consumers:     revenue {:.5} +- {:.5}, virtual surplus {:.5} +- {:.5}",
        multi.revenue_mean, multi.revenue_stderr, multi.surplus_mean, multi.surplus_stderr
    );
    let z = multi.diff_mean / multi.diff_stderr;
    println!("paired difference z-score: {z:+.2}");
    assert!(z.abs() <= 3.0);
    println!("revenue equals expected virtual surplus within sampling error");
}
