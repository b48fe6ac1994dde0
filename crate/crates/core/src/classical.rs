//! Finite-difference reference solver for `ψ_t + S̃‖∇ψ‖ = 0`.
//!
//! Space: Godunov upwind gradient magnitude for outward motion (`S̃ ≥ 0`),
//! one-sided differences on the border, optional five-point Laplacian
//! smoothing. Time: Heun's predictor–corrector with
//! `dt = 0.5·min(dx, dy)/max S̃`, shortened to land on every output time.
//!
//! The solver works in isotropic scaled coordinates: time scaled by the
//! scenario's `f_t`, both space axes scaled by `f_x`. In those units the
//! spread rate is `S̃ = S·f_x/f_t`, the same quantity the network sees.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid2, ScalarField2};
use crate::scenario::ScenarioConfig;
use crate::spread::{normal_spread, SpreadInputs};

const CFL: f64 = 0.5;

/// Upwind `‖∇ψ‖` at node `(i, j)`:
/// `√(max(D⁻ˣ,0)² + min(D⁺ˣ,0)² + max(D⁻ʸ,0)² + min(D⁺ʸ,0)²)`.
pub fn godunov_grad_mag(psi: &ScalarField2, i: usize, j: usize) -> f64 {
    let g = &psi.grid;
    let c = psi.at(i, j);
    let (dmx, dpx) = one_sided(
        (i > 0).then(|| psi.at(i - 1, j)),
        c,
        (i + 1 < g.nx).then(|| psi.at(i + 1, j)),
        g.dx,
    );
    let (dmy, dpy) = one_sided(
        (j > 0).then(|| psi.at(i, j - 1)),
        c,
        (j + 1 < g.ny).then(|| psi.at(i, j + 1)),
        g.dy,
    );
    (dmx.max(0.0).powi(2) + dpx.min(0.0).powi(2) + dmy.max(0.0).powi(2) + dpy.min(0.0).powi(2))
        .sqrt()
}

/// Backward and forward differences; at a border the missing one is
/// replaced by the available one.
#[inline]
fn one_sided(lo: Option<f64>, c: f64, hi: Option<f64>, h: f64) -> (f64, f64) {
    match (lo, hi) {
        (Some(l), Some(r)) => ((c - l) / h, (r - c) / h),
        (None, Some(r)) => ((r - c) / h, (r - c) / h),
        (Some(l), None) => ((c - l) / h, (c - l) / h),
        (None, None) => (0.0, 0.0),
    }
}

fn laplacian(psi: &ScalarField2, i: usize, j: usize) -> f64 {
    let g = &psi.grid;
    let c = psi.at(i, j);
    let (dmx, dpx) = one_sided(
        (i > 0).then(|| psi.at(i - 1, j)),
        c,
        (i + 1 < g.nx).then(|| psi.at(i + 1, j)),
        g.dx,
    );
    let (dmy, dpy) = one_sided(
        (j > 0).then(|| psi.at(i, j - 1)),
        c,
        (j + 1 < g.ny).then(|| psi.at(i, j + 1)),
        g.dy,
    );
    (dpx - dmx) / g.dx + (dpy - dmy) / g.dy
}

/// Scaled spread rate `S̃ ≥ 0` on every node of the level-set grid.
pub trait SpreadProvider: Sync {
    fn spread(&self, psi: &ScalarField2, t: f64) -> Vec<f64>;
}

/// The same `S̃` everywhere.
#[derive(Clone, Copy, Debug)]
pub struct UniformSpread(pub f64);

impl SpreadProvider for UniformSpread {
    fn spread(&self, psi: &ScalarField2, _t: f64) -> Vec<f64> {
        vec![self.0; psi.values.len()]
    }
}

/// Scenario spread rate; the front normal comes from central differences of ψ.
pub struct ScenarioSpread<'a> {
    scenario: &'a ScenarioConfig,
    physical: Grid2,
    // cached when wind does not depend on time
    inputs: Option<Vec<SpreadInputs>>,
    calm_flat: bool,
}

impl<'a> ScenarioSpread<'a> {
    pub fn new(scenario: &'a ScenarioConfig, physical: Grid2) -> Self {
        let steady = scenario.wind.u.len() <= 1 && scenario.wind.v.len() <= 1;
        let inputs = steady.then(|| {
            physical
                .nodes()
                .map(|(x, y)| SpreadInputs::at(scenario, scenario.domain.t_min, x, y))
                .collect::<Vec<_>>()
        });
        let calm_flat = inputs
            .as_ref()
            .is_some_and(|v| v.iter().all(SpreadInputs::is_uniform_zero));
        Self {
            scenario,
            physical,
            inputs,
            calm_flat,
        }
    }
}

impl SpreadProvider for ScenarioSpread<'_> {
    fn spread(&self, psi: &ScalarField2, t: f64) -> Vec<f64> {
        let factor = self.scenario.scaling.spread_factor();
        let fuel = &self.scenario.fuel;
        if self.calm_flat {
            return vec![fuel.r0 * factor; psi.values.len()];
        }
        let t_phys = self.scenario.scaling.t.unscale(t);
        let g = psi.grid;
        let phys = self.physical;
        (0..g.ny)
            .into_par_iter()
            .flat_map_iter(|j| {
                (0..g.nx).map(move |i| {
                    let (dmx, dpx) = one_sided(
                        (i > 0).then(|| psi.at(i - 1, j)),
                        psi.at(i, j),
                        (i + 1 < g.nx).then(|| psi.at(i + 1, j)),
                        g.dx,
                    );
                    let (dmy, dpy) = one_sided(
                        (j > 0).then(|| psi.at(i, j - 1)),
                        psi.at(i, j),
                        (j + 1 < g.ny).then(|| psi.at(i, j + 1)),
                        g.dy,
                    );
                    let grad = [0.5 * (dmx + dpx), 0.5 * (dmy + dpy)];
                    let inputs = match &self.inputs {
                        Some(v) => v[g.index(i, j)],
                        None => SpreadInputs::at(self.scenario, t_phys, phys.x(i), phys.y(j)),
                    };
                    normal_spread(fuel, &inputs, grad) * factor
                })
            })
            .collect()
    }
}

/// Right-hand side `F(ψ) = −S̃·‖∇ψ‖_upwind + ε·Δψ`.
fn rhs(psi: &ScalarField2, spread: &[f64], viscosity: f64) -> Vec<f64> {
    let g = psi.grid;
    (0..g.ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..g.nx).map(move |i| {
                let mut f = -spread[g.index(i, j)] * godunov_grad_mag(psi, i, j);
                if viscosity > 0.0 {
                    f += viscosity * laplacian(psi, i, j);
                }
                f
            })
        })
        .collect()
}

fn stable_dt(grid: &Grid2, max_spread: f64, viscosity: f64) -> f64 {
    let mut dt = f64::INFINITY;
    if max_spread > 0.0 {
        dt = CFL * grid.dx.min(grid.dy) / max_spread;
    }
    if viscosity > 0.0 {
        dt = dt.min(0.25 / (viscosity * (grid.dx.powi(-2) + grid.dy.powi(-2))));
    }
    dt
}

fn check_cfl(grid: &Grid2, dt: f64, max_spread: f64, viscosity: f64) -> Result<()> {
    let adv = dt * max_spread * (1.0 / grid.dx + 1.0 / grid.dy);
    let diff = dt * 2.0 * viscosity * (grid.dx.powi(-2) + grid.dy.powi(-2));
    if adv > 1.0 + 1e-12 || diff > 1.0 + 1e-12 {
        let limit = dt / adv.max(diff);
        return Err(Error::Cfl { dt, limit });
    }
    Ok(())
}

/// One Heun step of size `dt` starting at time `t`.
pub fn heun_step(
    psi: &ScalarField2,
    dt: f64,
    t: f64,
    provider: &dyn SpreadProvider,
    viscosity: f64,
) -> Result<ScalarField2> {
    let s1 = provider.spread(psi, t);
    let max1 = s1.iter().copied().fold(0.0, f64::max);
    check_cfl(&psi.grid, dt, max1, viscosity)?;
    Ok(heun_with_first_stage(psi, dt, t, provider, viscosity, &s1))
}

fn heun_with_first_stage(
    psi: &ScalarField2,
    dt: f64,
    t: f64,
    provider: &dyn SpreadProvider,
    viscosity: f64,
    s1: &[f64],
) -> ScalarField2 {
    let f1 = rhs(psi, s1, viscosity);
    let predictor = ScalarField2 {
        grid: psi.grid,
        values: psi.values.iter().zip(&f1).map(|(p, f)| p + dt * f).collect(),
    };
    let s2 = provider.spread(&predictor, t + dt);
    let f2 = rhs(&predictor, &s2, viscosity);
    ScalarField2 {
        grid: psi.grid,
        values: psi
            .values
            .iter()
            .zip(f1.iter().zip(&f2))
            .map(|(p, (a, b))| p + dt * ((a + b) / 2.0))
            .collect(),
    }
}

/// Integrates from `t0` and returns the field at each of `out_times`
/// (strictly increasing, `≥ t0`). `on_step` sees every accepted step.
pub fn integrate(
    psi0: ScalarField2,
    t0: f64,
    out_times: &[f64],
    provider: &dyn SpreadProvider,
    viscosity: f64,
    mut on_step: impl FnMut(f64, &ScalarField2),
) -> Result<(Vec<ScalarField2>, usize)> {
    psi0.grid.validate()?;
    if !psi0.is_finite() {
        return Err(Error::NonFinite {
            what: "initial level set".into(),
            point: vec![t0],
        });
    }
    let mut psi = psi0;
    let mut t = t0;
    let mut steps = 0;
    let mut out = Vec::with_capacity(out_times.len());
    for &target in out_times {
        if target < t {
            return Err(Error::validation("output times must be increasing and not before the start"));
        }
        while t < target {
            let s1 = provider.spread(&psi, t);
            let max1 = s1.iter().copied().fold(0.0, f64::max);
            let dt_stable = stable_dt(&psi.grid, max1, viscosity);
            if dt_stable.is_infinite() {
                // frozen front
                t = target;
                break;
            }
            let remaining = target - t;
            let (dt, landing) = if dt_stable >= remaining {
                (remaining, true)
            } else {
                (dt_stable, false)
            };
            psi = heun_with_first_stage(&psi, dt, t, provider, viscosity, &s1);
            t = if landing { target } else { t + dt };
            steps += 1;
            if !psi.is_finite() {
                return Err(Error::NonFinite {
                    what: "level-set field".into(),
                    point: vec![t],
                });
            }
            on_step(t, &psi);
        }
        out.push(psi.clone());
    }
    Ok((out, steps))
}

/// Snapshots of a classical solve in physical coordinates.
///
/// `ignition_time` holds, per node, the physical time at the end of the
/// first step where `ψ ≤ 0` (the start time for initially burning nodes),
/// NaN if the node never ignited.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldStack {
    pub grid: Grid2,
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub ignition_time: Vec<f64>,
    pub steps: usize,
}

impl FieldStack {
    pub fn new(grid: Grid2, times: Vec<f64>, fields: Vec<Vec<f64>>, ignition_time: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("snapshot times must be strictly increasing"));
        }
        if fields.len() != times.len() || fields.iter().any(|f| f.len() != grid.len()) {
            return Err(Error::validation("snapshot fields do not match the grid"));
        }
        if ignition_time.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: ignition_time.len(),
            });
        }
        Ok(Self {
            grid,
            times,
            fields,
            ignition_time,
            steps: 0,
        })
    }

    pub fn snapshot(&self, k: usize) -> ScalarField2 {
        ScalarField2 {
            grid: self.grid,
            values: self.fields[k].clone(),
        }
    }

    /// Index of the snapshot at time `t` (relative tolerance 1e-9).
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let span = self.times.last().map_or(1.0, |l| l.abs().max(1.0));
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * span)
    }
}

/// Solves the scenario on a physical grid and records snapshots at the
/// requested physical times.
pub fn solve(scenario: &ScenarioConfig, grid: &Grid2, times: &[f64]) -> Result<FieldStack> {
    scenario.validate()?;
    grid.validate()?;
    if times.is_empty() {
        return Err(Error::validation("at least one output time is required"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("output times must be strictly increasing"));
    }
    let d = &scenario.domain;
    if let Some(t) = times.iter().find(|t| !d.contains_time(**t)) {
        return Err(Error::validation(format!(
            "output time {t} outside the domain [{}, {}]",
            d.t_min, d.t_max
        )));
    }

    let s = &scenario.scaling;
    let hat = Grid2::new(
        grid.nx,
        grid.ny,
        s.x.scale(grid.x0),
        (grid.y0 - s.y.offset) * s.x.factor,
        grid.dx * s.x.factor,
        grid.dy * s.x.factor,
    )?;
    let psi0 = ScalarField2 {
        grid: hat,
        values: grid
            .nodes()
            .map(|(x, y)| scenario.initial_levelset_at(x, y))
            .collect(),
    };
    let mut ignition: Vec<f64> = psi0
        .values
        .iter()
        .map(|&v| if v <= 0.0 { d.t_min } else { f64::NAN })
        .collect();

    let provider = ScenarioSpread::new(scenario, *grid);
    let hat_times: Vec<f64> = times.iter().map(|&t| s.t.scale(t)).collect();
    let (fields, steps) = integrate(
        psi0,
        s.t.scale(d.t_min),
        &hat_times,
        &provider,
        scenario.viscosity_eps,
        |t_hat, psi| {
            let t_phys = s.t.unscale(t_hat);
            for (ti, &v) in ignition.iter_mut().zip(&psi.values) {
                if ti.is_nan() && v <= 0.0 {
                    *ti = t_phys;
                }
            }
        },
    )?;

    Ok(FieldStack {
        grid: *grid,
        times: times.to_vec(),
        fields: fields.into_iter().map(|f| f.values).collect(),
        ignition_time: ignition,
        steps,
    })
}

/// Remaining fuel fraction: 1 before ignition (or never ignited), then
/// `exp(−(t − t_i)/Tf)`.
pub fn fuel_fraction(t: f64, t_ignition: f64, burn_time: f64) -> f64 {
    if t_ignition.is_nan() || t < t_ignition {
        1.0
    } else {
        (-(t - t_ignition) / burn_time).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Cone, Domain3, FuelParameters, IgnitionShape, ScalingTransform, TerrainModel, WindModel};

    fn unit_grid(n: usize) -> Grid2 {
        Grid2::new(n, n, 0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn godunov_linear_ramp_and_constant() {
        let ramp = ScalarField2::from_fn(unit_grid(5), |x, _| x);
        assert_eq!(godunov_grad_mag(&ramp, 2, 2), 1.0);
        assert_eq!(godunov_grad_mag(&ramp, 0, 2), 1.0);
        assert_eq!(godunov_grad_mag(&ramp, 4, 4), 1.0);
        let flat = ScalarField2::from_fn(unit_grid(5), |_, _| 3.0);
        assert_eq!(godunov_grad_mag(&flat, 2, 2), 0.0);
    }

    #[test]
    fn godunov_rejects_both_sides_at_a_valley_kink() {
        let g = Grid2::new(5, 5, -2.0, -2.0, 1.0, 1.0).unwrap();
        let v = ScalarField2::from_fn(g, |x, _| x.abs());
        assert_eq!(godunov_grad_mag(&v, 2, 2), 0.0);
    }

    #[test]
    fn zero_spread_leaves_field_unchanged() {
        let psi = ScalarField2::from_fn(unit_grid(7), |x, y| (x * x + y).sin());
        let next = heun_step(&psi, 0.1, 0.0, &UniformSpread(0.0), 0.0).unwrap();
        assert_eq!(next, psi);
    }

    #[test]
    fn linear_field_drops_by_dt_times_speed() {
        let psi = ScalarField2::from_fn(unit_grid(9), |x, _| x);
        let (dt, s) = (0.25, 0.7);
        let next = heun_step(&psi, dt, 0.0, &UniformSpread(s), 0.0).unwrap();
        for j in 1..8 {
            for i in 1..8 {
                assert!((next.at(i, j) - (psi.at(i, j) - dt * s)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn heun_step_is_pointwise_nonincreasing() {
        let psi = ScalarField2::from_fn(unit_grid(12), |x, y| ((x - 5.0).powi(2) + (y - 4.0).powi(2)).sqrt() - 2.0 + (x * y).sin());
        let next = heun_step(&psi, 0.2, 0.0, &UniformSpread(1.3), 0.0).unwrap();
        assert!(next.values.iter().zip(&psi.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn cfl_violation_is_reported() {
        let psi = ScalarField2::from_fn(unit_grid(5), |x, _| x);
        assert!(matches!(
            heun_step(&psi, 2.0, 0.0, &UniformSpread(1.0), 0.0),
            Err(Error::Cfl { .. })
        ));
    }

    fn circle_scenario(r0: f64) -> ScenarioConfig {
        ScenarioConfig {
            domain: Domain3 { t_min: 0.0, t_max: 3.0, x_min: -4.0, x_max: 4.0, y_min: -4.0, y_max: 4.0 },
            scaling: ScalingTransform::identity(),
            fuel: FuelParameters { r0, wind_coeff: 0.0, wind_exp: 1.0, wind_cap: 1.0, slope_coeff: 0.0, burn_time: 1.0, category: 0 },
            wind: WindModel::calm(),
            terrain: TerrainModel::flat(),
            ignition: IgnitionShape::single(Cone { x0: 0.0, y0: 0.0, a: 1.0, b: 1.0, h: 1.0 }),
            viscosity_eps: 0.0,
        }
    }

    #[test]
    fn frozen_front_keeps_initial_field() {
        let sc = circle_scenario(0.0);
        let grid = Grid2::spanning(-4.0, 4.0, -4.0, 4.0, 41, 41).unwrap();
        let stack = solve(&sc, &grid, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(stack.fields[0], stack.fields[1]);
        assert_eq!(stack.fields[0], stack.fields[2]);
        assert_eq!(stack.steps, 0);
    }

    #[test]
    fn expanding_circle_radius_on_axis() {
        let sc = circle_scenario(1.0);
        let grid = Grid2::spanning(-4.0, 4.0, -4.0, 4.0, 161, 161).unwrap();
        let stack = solve(&sc, &grid, &[1.0]).unwrap();
        // zero crossing along +x axis through the centre row
        let j = 80;
        let f = stack.snapshot(0);
        let i = (80..160).find(|&i| f.at(i, j) <= 0.0 && f.at(i + 1, j) > 0.0).unwrap();
        let (a, b) = (f.at(i, j), f.at(i + 1, j));
        let x = grid.x(i) + grid.dx * a / (a - b);
        assert!((x - 2.0).abs() < 2.0 * grid.dx, "{x}");
    }

    #[test]
    fn ignition_times_are_monotone_in_radius() {
        let sc = circle_scenario(1.0);
        let grid = Grid2::spanning(-4.0, 4.0, -4.0, 4.0, 81, 81).unwrap();
        let stack = solve(&sc, &grid, &[2.0]).unwrap();
        let centre = stack.ignition_time[grid.index(40, 40)];
        assert_eq!(centre, 0.0);
        let ring = stack.ignition_time[grid.index(60, 40)]; // r = 2
        assert!((ring - 1.0).abs() < 0.15, "{ring}");
        assert!(stack.ignition_time[grid.index(0, 0)].is_nan());
    }

    #[test]
    fn output_time_outside_domain_is_rejected() {
        let sc = circle_scenario(1.0);
        let grid = Grid2::spanning(-4.0, 4.0, -4.0, 4.0, 21, 21).unwrap();
        assert!(matches!(solve(&sc, &grid, &[5.0]), Err(Error::Validation(_))));
        assert!(solve(&sc, &grid, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn fuel_fraction_cases() {
        assert_eq!(fuel_fraction(3.0, 3.0, 10.0), 1.0);
        assert!((fuel_fraction(13.0, 3.0, 10.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(fuel_fraction(100.0, f64::NAN, 10.0), 1.0);
        assert_eq!(fuel_fraction(1.0, 3.0, 10.0), 1.0);
    }
}
