//! Three routes to the same payment: the threshold rule the auction
//! charges, the critical bid found by probing the allocation, and the
//! step-function integral of the win indicator.
//!
//! Run with: cargo run --release --example critical_bids

use flex_auction::dist::ConsumerTypeModel;
use flex_auction::flex::FlexibilityStructure;
use flex_auction::mechanism::{critical_bid, run_auction, TypeProfile};
use flex_auction::oracle::payment_by_integral;

fn main() {
    // Two goods in nested tiers, three consumers across the two levels.
    let structure = FlexibilityStructure::new(vec![1, 1]).unwrap();
    let models: Vec<ConsumerTypeModel> =
        (0..3).map(|i| ConsumerTypeModel::uniform(i, 2, 0.0, 1.0).unwrap()).collect();
    let profile = TypeProfile::new(vec![0.95, 0.8, 0.7], vec![1, 2, 2]).unwrap();

    let outcome = run_auction(&models, &structure, &profile).unwrap();
    println!("winners: {:?}", outcome.winners());
    for consumer in 0..profile.len() {
        let charged = outcome.payments[consumer];
        let bid = critical_bid(&models, &structure, &profile, consumer).unwrap();
        let integral = payment_by_integral(&models, &structure, &profile, consumer).unwrap();
        println!(
            "consumer {consumer}: charged {charged:.6}, critical bid {}, integral {integral:.6}",
            if bid.attainable { format!("{:.6}", bid.theta) } else { "unattainable".into() },
        );
        if outcome.won(consumer) {
            assert!((charged - bid.theta).abs() < 1e-8);
            assert!((charged - integral).abs() < 1e-8);
        } else {
            assert_eq!(charged, 0.0);
            assert_eq!(integral, 0.0);
        }
    }
    println!("threshold payments equal critical bids and integral payments");
}
