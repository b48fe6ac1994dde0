//! Reference solver on an expanding circle with unit spread rate,
//! checked against the exact radius `1 + t`.
//!
//! cargo run --example simulate_circle -- [nodes per axis]

use firepinn::classical::{integrate, UniformSpread};
use firepinn::geometry::{extract_fireline, fireline_area};
use firepinn::grid::{Grid2, ScalarField2};

fn main() -> firepinn::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(201);
    let grid = Grid2::spanning(-4.0, 4.0, -4.0, 4.0, n, n)?;
    let psi0 = ScalarField2::from_fn(grid, |x, y| x.hypot(y) - 1.0);
    let times = [0.5, 1.0, 2.0];
    let (fields, steps) = integrate(psi0, 0.0, &times, &UniformSpread(1.0), 0.0, |_, _| {})?;
    println!("{steps} Heun steps on {n}x{n}, dx = {:.4}", grid.dx);
    for (f, t) in fields.iter().zip(times) {
        let line = extract_fireline(f, 0.0, t);
        let area = fireline_area(&line)?;
        let radius = (area / std::f64::consts::PI).sqrt();
        println!("t = {t}: equivalent radius {radius:.5}, exact {:.5}", 1.0 + t);
    }
    Ok(())
}
