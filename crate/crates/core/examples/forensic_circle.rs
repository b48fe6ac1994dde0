//! Trains on an expanding circle, then runs the surrogate backwards in time
//! and compares the recovered front with the exact shrinking circle.
//!
//! cargo run --example forensic_circle -- [iterations] [learning_rate] [final_learning_rate]

use std::path::Path;

use firepinn::geometry::{compare_series, AnalyticField, AreaNormalization};
use firepinn::grid::Grid2;
use firepinn::pinn::{self, TrainingConfig};
use firepinn::scenario::load_scenario;

fn main() -> firepinn::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().and_then(|a| a.parse().ok()).unwrap_or(4800);
    let mut config = TrainingConfig { iterations, ..TrainingConfig::default() };
    if let Some(lr) = args.next().and_then(|a| a.parse().ok()) {
        config.learning_rate = lr;
    }
    if let Some(lr) = args.next().and_then(|a| a.parse().ok()) {
        config.final_learning_rate = Some(lr);
    }

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/circle.scn");
    let scenario = load_scenario(&std::fs::read_to_string(path).expect("circle.scn"))?;
    let s = scenario.fuel.r0 * scenario.scaling.spread_factor();
    let r0 = scenario.ignition.cones[0].h;

    let solution = pinn::train(&scenario, &config)?;
    println!("final loss {:.3e}", solution.final_loss().unwrap_or(f64::NAN));

    let d = scenario.domain;
    let grid = Grid2::spanning(d.x_min, d.x_max, d.y_min, d.y_max, 201, 201)?;
    let exact = AnalyticField(move |t: f64, x: f64, y: f64| x.hypot(y) - (r0 + s * t));
    let times = [-r0 / (2.0 * s), -r0 / (4.0 * s), 0.0, d.t_max];
    let series = compare_series(&exact, &solution, &times, &grid)?;
    let norm = series.normalized(AreaNormalization::Sqrt);
    for ((t, rec), n) in times.iter().zip(&series.records).zip(norm) {
        let (_, outside) = pinn::extrapolate(&solution, *t, &grid)?;
        println!(
            "t = {t:6.2} ({outside:.2} outside)  exact radius {:.3}  d_H {:?}  d_H/sqrt(area) {:?}",
            r0 + s * t,
            rec.d_h,
            n
        );
    }
    Ok(())
}
