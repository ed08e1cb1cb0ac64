//! Build a few consumer type models and validate the distributional
//! assumptions the auction relies on: the generalized monotone hazard
//! rate order and a negative virtual valuation at the bottom of the
//! support.
//!
//! Run with: cargo run --example validate_models

use flex_auction::dist::{ConsumerTypeModel, PiecewiseLinearDensity};

fn inspect(name: &str, model: &ConsumerTypeModel) {
    let hazard = model.validate_hazard(512).unwrap();
    let reserve_ok = model.validate_negative_reserve();
    println!("{name}:");
    println!("  weak hazard order: {}", if hazard.weak_ok { "ok" } else { "VIOLATED" });
    println!("  strict hazard order: {}", if hazard.strict_ok { "ok" } else { "violated" });
    if let Some(v) = &hazard.worst_violation {
        println!(
        "  worst pair: level {} at {:.3} vs level {} at {:.3}, magnitude {:.3e}",
            v.level, v.theta, v.other_level, v.other_theta, v.magnitude
        );
    }
    println!("  negative reserve per level: {reserve_ok:?}");
    for level in 1..=model.k() {
        match model.reserve_price(level) {
            Ok(r) => println!("  reserve price, level {level}: {r:.6}"),
            Err(e) => println!("  reserve price, level {level}: {e}"),
        }
    }
    println!();
}

fn main() {
    // Identical uniform valuations at both levels: the weak hazard order
    // holds with equality everywhere, so the strict form fails.
    let uniform = ConsumerTypeModel::uniform(0, 2, 0.0, 1.0).unwrap();
    inspect("uniform [0,1], identical levels", &uniform);

    // Strictly hazard-ordered linear ramps: more flexible levels are
    // stochastically cheaper.
    let ramps =
        ConsumerTypeModel::linear_ramp_family(1, 0.0, 1.0, &[-0.5, 0.0, 0.5], vec![0.4, 0.3, 0.3])
            .unwrap();
    inspect("linear ramps, strictly ordered", &ramps);

    // The triangular density f(x) = 2x: reserve price lands at 1/sqrt(3).
    let triangle = PiecewiseLinearDensity::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
    let triangular =
        ConsumerTypeModel::new(2, (0.0, 1.0), vec![1.0], vec![triangle]).unwrap();
    inspect("triangular f(x) = 2x", &triangular);

    // A support bounded away from zero can put the whole support above the
    // reserve, which breaks the negative-reserve assumption.
    let shifted = ConsumerTypeModel::uniform(3, 1, 3.0, 4.0).unwrap();
    inspect("uniform [3,4] (assumption violated)", &shifted);
}
