//! Fireline extraction and Hausdorff distance between two offset ellipses.

use firepinn::geometry::{extract_fireline, fireline_area, hausdorff, region_area};
use firepinn::grid::{Grid2, ScalarField2};

fn main() -> firepinn::Result<()> {
    let grid = Grid2::spanning(-3.0, 3.0, -3.0, 3.0, 241, 241)?;
    let a = ScalarField2::from_fn(grid, |x, y| (x / 2.0).hypot(y) - 1.0);
    let b = ScalarField2::from_fn(grid, |x, y| ((x - 0.3) / 2.0).hypot(y) - 1.0);
    let la = extract_fireline(&a, 0.0, 0.0);
    let lb = extract_fireline(&b, 0.0, 0.0);

    println!("A: {} loop(s), perimeter {:.4}, polygon area {:.4}, cell area {:.4}", la.loops.len(), la.perimeter(), fireline_area(&la)?, region_area(&a, 0.0));
    println!("exact ellipse area {:.4}", 2.0 * std::f64::consts::PI);
    let d = hausdorff(&la, &lb, grid.dx / 2.0)?;
    println!("Hausdorff distance {d:.4} (a shift of 0.3 along the major axis)");
    Ok(())
}
