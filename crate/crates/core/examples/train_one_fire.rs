//! Trains the level-set surrogate on the One Fire scenario and writes the
//! solution and loss history to `out/one_fire/`.
//!
//! cargo run --release --example train_one_fire -- [iterations]

use std::path::Path;

use firepinn::io;
use firepinn::pinn::{self, TrainingConfig};
use firepinn::scenario::load_scenario;

fn main() -> firepinn::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4800);
    let config = TrainingConfig { iterations, ..TrainingConfig::default() };
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let sc = load_scenario(&io::read_text(&root.join("data/one_fire.scn"))?)?;

    let every = (iterations / 10).max(1);
    let solution = pinn::train_with_progress(&sc, &config, |k, loss| {
        if k % every == 0 {
            println!("{k:5}  {loss:.4e}");
        }
    })?;
    println!("final loss {:.4e}", solution.final_loss().unwrap_or(f64::NAN));

    let out = Path::new("out/one_fire");
    io::save_solution(&out.join("solution.json"), &solution)?;
    io::write_text(&out.join("loss.csv"), &io::loss_csv(&solution.loss_history))?;
    println!("wrote {}", out.display());
    Ok(())
}
