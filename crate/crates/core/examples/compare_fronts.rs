//! Trains a short surrogate on Isom Creek, solves the same scenario with the
//! reference solver and prints fireline distances at five times.
//!
//! cargo run --release --example compare_fronts -- [iterations]

use std::path::Path;

use firepinn::classical;
use firepinn::geometry::{compare_series, AreaNormalization};
use firepinn::grid::Grid2;
use firepinn::io;
use firepinn::pinn::{self, TrainingConfig};
use firepinn::scenario::load_scenario;

fn main() -> firepinn::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let sc = load_scenario(&io::read_text(&root.join("data/isom_creek.scn"))?)?;
    let d = sc.domain;

    let solution = pinn::train(&sc, &TrainingConfig { iterations, ..TrainingConfig::default() })?;
    let grid = Grid2::spanning(d.x_min, d.x_max, d.y_min, d.y_max, 201, 201)?;
    let times: Vec<f64> = (0..5).map(|k| (d.t_min + (d.t_max - d.t_min) * k as f64 / 4.0).min(d.t_max)).collect();
    let stack = classical::solve(&sc, &grid, &times)?;

    // classical run is the reference (A)
    let series = compare_series(&stack, &solution, &times, &grid)?;
    let sqrt = series.normalized(AreaNormalization::Sqrt);
    let plain = series.normalized(AreaNormalization::Plain);
    println!("{:>8} {:>10} {:>10} {:>12} {:>12} {:>12}", "t", "d_H", "/sqrt(A)", "/A", "area A", "area B");
    for ((r, s), p) in series.records.iter().zip(sqrt).zip(plain) {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
        println!(
            "{:8.0} {:>10} {:>10} {:>12} {:12.4e} {:12.4e}",
            r.t,
            show(r.d_h),
            show(s),
            show(p),
            r.area_a,
            r.area_b
        );
    }
    Ok(())
}
