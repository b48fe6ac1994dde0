//! Times training iterations and reference-solver steps on One Fire.
//!
//! cargo run --release --example bench_solver -- [iterations] [nodes per axis]

use std::path::Path;
use std::time::Instant;

use firepinn::classical;
use firepinn::grid::Grid2;
use firepinn::io;
use firepinn::pinn::{self, TrainingConfig};
use firepinn::scenario::load_scenario;

fn main() -> firepinn::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let n = args.next().and_then(|a| a.parse().ok()).unwrap_or(201);
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let sc = load_scenario(&io::read_text(&root.join("data/one_fire.scn"))?)?;
    let d = sc.domain;

    let start = Instant::now();
    let solution = pinn::train(&sc, &TrainingConfig { iterations, ..TrainingConfig::default() })?;
    let t = start.elapsed().as_secs_f64();
    println!("training: {iterations} iterations in {t:.2} s ({:.1} ms each), loss {:.3e}", 1e3 * t / iterations as f64, solution.final_loss().unwrap_or(f64::NAN));

    let grid = Grid2::spanning(d.x_min, d.x_max, d.y_min, d.y_max, n, n)?;
    let start = Instant::now();
    let stack = classical::solve(&sc, &grid, &[d.t_min, d.t_max])?;
    let t = start.elapsed().as_secs_f64();
    println!("reference solve on {n}x{n}: {} steps in {t:.3} s ({:.2} ms each)", stack.steps, 1e3 * t / stack.steps.max(1) as f64);
    println!("{} rayon threads", rayon::current_num_threads());
    Ok(())
}
