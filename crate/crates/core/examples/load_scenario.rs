//! Loads a scenario file and prints its scaled box and a few spread rates.
//!
//! cargo run --example load_scenario -- [path.scn]

use std::path::PathBuf;

use firepinn::scenario::load_scenario;
use firepinn::spread::{normal_spread, SpreadInputs};

fn main() -> firepinn::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/isom_creek.scn"));
    let sc = load_scenario(&firepinn::io::read_text(&path)?)?;

    println!("hash {}", sc.hash());
    println!("scaled box [t, x, y] = {:?}", sc.scaled_box());
    println!("S~ = S * {:.4}, aspect {:.4}", sc.scaling.spread_factor(), sc.scaling.aspect());

    let d = sc.domain;
    let (x, y) = (0.5 * (d.x_min + d.x_max), 0.5 * (d.y_min + d.y_max));
    let inputs = SpreadInputs::at(&sc, d.t_min, x, y);
    println!("at the centre: wind {:?}, slope {:?}", inputs.wind, inputs.slope);
    for deg in (0..360).step_by(45) {
        let a = (deg as f64).to_radians();
        let s = normal_spread(&sc.fuel, &inputs, [a.cos(), a.sin()]);
        println!("  front facing {deg:3} deg: S = {s:.4} m/s");
    }
    Ok(())
}
