use std::path::Path;

use firepinn::classical;
use firepinn::geometry::{compare_series, AreaNormalization};
use firepinn::grid::Grid2;
use firepinn::io;
use firepinn::pinn::{self, TrainingConfig};
use firepinn::scenario::{load_scenario, ScenarioConfig};

fn data(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name);
    load_scenario(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bundled_scenarios_load() {
    for name in ["one_fire.scn", "isom_creek.scn", "circle.scn"] {
        let sc = data(name);
        let [[t0, t1], [x0, x1], [y0, y1]] = sc.scaled_box();
        assert!(t1 > t0 && x1 > x0 && y1 > y0, "{name}");
    }
    let isom = data("isom_creek.scn");
    assert!(isom.terrain.z.degree == 4);
    let g = isom.terrain.gradient(4850.0, 4850.0);
    assert!(g.iter().all(|v| v.is_finite()));
}

#[test]
fn frozen_front_keeps_the_initial_state() {
    let mut sc = data("circle.scn");
    sc.fuel.r0 = 0.0;
    // shallow cone with its apex in a corner: no kink in the interior
    let cone = &mut sc.ignition.cones[0];
    (cone.x0, cone.y0, cone.a, cone.b, cone.h) = (-5.0, -5.0, 0.1, 0.1, 0.5);
    let config = TrainingConfig { iterations: 2000, ..TrainingConfig::default() };
    let sol = pinn::train(&sc, &config).unwrap();
    let d = sc.domain;
    let grid = Grid2::spanning(d.x_min, d.x_max, d.y_min, d.y_max, 50, 50).unwrap();
    for t in [d.t_min, d.t_max] {
        let f = pinn::evaluate(&sol, t, &grid).unwrap();
        let worst = grid
            .nodes()
            .zip(&f.values)
            .map(|((x, y), v)| (v - sc.initial_levelset_at(x, y)).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.05, "t = {t}: sup mismatch {worst}");
    }
}

#[test]
fn classical_circle_matches_exact_radius() {
    let sc = data("circle.scn");
    let d = sc.domain;
    let grid = Grid2::spanning(d.x_min, d.x_max, d.y_min, d.y_max, 201, 201).unwrap();
    let times = [0.0, 2.0, 4.0];
    let stack = classical::solve(&sc, &grid, &times).unwrap();
    let (r0, s) = (sc.ignition.cones[0].h, sc.fuel.r0);
    let exact = firepinn::geometry::AnalyticField(move |t: f64, x: f64, y: f64| x.hypot(y) - (r0 + s * t));
    let series = compare_series(&exact, &stack, &times, &grid).unwrap();
    for r in &series.records {
        assert!(r.d_h.unwrap() <= 2.0 * grid.dx, "{r:?}");
    }
    // ignition time of a node on the ring of radius 2.5 is near 2
    let i = grid.nx / 2 + 50;
    let t_i = stack.ignition_time[grid.index(i, grid.ny / 2)];
    assert!((t_i - 2.0).abs() < 0.15, "{t_i}");
}

#[test]
fn snapshot_files_round_trip_through_compare() {
    let sc = data("circle.scn");
    let d = sc.domain;
    let grid = Grid2::spanning(d.x_min, d.x_max, d.y_min, d.y_max, 61, 61).unwrap();
    let times = [1.0, 3.0];
    let stack = classical::solve(&sc, &grid, &times).unwrap();
    let dir = tempfile::tempdir().unwrap();
    io::write_stack(dir.path(), &stack).unwrap();
    let back = io::read_stack(dir.path()).unwrap();
    let series = compare_series(&stack, &back, &times, &back.grid).unwrap();
    assert!(series.normalized(AreaNormalization::Sqrt).iter().all(|v| *v == Some(0.0)));
}

#[test]
fn solution_file_round_trip_is_bitwise() {
    let sc = data("isom_creek.scn");
    let config = TrainingConfig { iterations: 20, interior_batch: 128, boundary_batch: 32, ..TrainingConfig::default() };
    let sol = pinn::train(&sc, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    io::save_solution(&p, &sol).unwrap();
    let back = io::load_solution(&p).unwrap();
    let d = sc.domain;
    let grid = Grid2::spanning(d.x_min, d.x_max, d.y_min, d.y_max, 17, 13).unwrap();
    let a = pinn::evaluate(&sol, 1234.5, &grid).unwrap();
    let b = pinn::evaluate(&back, 1234.5, &grid).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(back.scenario_hash, sc.hash());
}

#[test]
fn training_is_reproducible() {
    let sc = data("one_fire.scn");
    let config = TrainingConfig { iterations: 40, interior_batch: 256, boundary_batch: 64, seed: 5, ..TrainingConfig::default() };
    let a = pinn::train(&sc, &config).unwrap();
    let b = pinn::train(&sc, &config).unwrap();
    assert_eq!(a.loss_history, b.loss_history);
    let c = pinn::train(&sc, &TrainingConfig { seed: 6, ..config }).unwrap();
    assert_ne!(a.loss_history, c.loss_history);
}
