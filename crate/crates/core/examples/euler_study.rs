//! Short Euler-system convergence study. Pass a TOML file with an
//! `[euler]` table to override the defaults.
//!
//! cargo run --release --example euler_study -- [config.toml] [iterations]

use firepinn::euler::{self, EulerConfig};

fn main() -> firepinn::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = match args.next() {
        Some(p) if p.ends_with(".toml") => euler::parse_euler_config(&firepinn::io::read_text(std::path::Path::new(&p))?)?,
        Some(n) => EulerConfig { iterations: n.parse().unwrap_or(300), ..EulerConfig::default() },
        None => EulerConfig { iterations: 300, ..EulerConfig::default() },
    };
    if let Some(n) = args.next().and_then(|a| a.parse().ok()) {
        config.iterations = n;
    }

    // the resting atmosphere is an exact solution
    let c = &config.constants;
    let pt = euler::hydrostatic_point(&config.base, c, 0.5);
    println!("hydrostatic residuals at eta = 0.5: {:?}", euler::residuals(&pt, c, config.moist)?);

    let every = (config.iterations / 10).max(1);
    let (unknowns, report) = euler::convergence_study(&config, |k, loss| {
        if k % every == 0 {
            println!("{k:5}  {loss:.4e}");
        }
    })?;
    println!(
        "mean loss {:.3e} -> {:.3e} ({:.1}x, {})",
        report.initial_mean,
        report.final_mean,
        report.reduction,
        if report.converged { "converged" } else { "not converged" }
    );
    let p = [0.5, 0.5, 0.5, 0.5];
    let r = unknowns.normalized_residuals(p)?;
    for (name, v) in euler::RESIDUAL_NAMES.iter().zip(r) {
        println!("  {name:>10}: {v:+.3e}");
    }
    Ok(())
}
