//! Physics-informed training of the level-set surrogate `û(t̂, x̃, ỹ)`.
//!
//! Inputs are the scenario's scaled coordinates. With per-axis factors the
//! level-set equation becomes
//! `û_t + S̃·√(û_x² + (κ·û_y)² + ε_n²) = 0`, where `S̃ = S·f_x/f_t` and
//! `κ = f_y/f_x`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ad::{Real, Tape};
use crate::error::{Error, Result};
use crate::grid::{Grid2, ScalarField2};
use crate::net::{grad_wrt_params, Activation, DenseNet, Jet, JetAdjoint, JetSpec, PointObjective};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::scenario::{initial_levelset, Domain3, ScalingTransform, ScenarioConfig};
use crate::spread::{normal_spread, SpreadInputs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Stratified,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// When set, the rate decays geometrically to this value at the last step.
    pub final_learning_rate: Option<f64>,
    pub interior_batch: usize,
    pub boundary_batch: usize,
    pub pde_weight: f64,
    pub bc_weight: f64,
    pub grad_eps: f64,
    pub seed: u64,
    pub sampling: Sampling,
    /// `[dt, dx, dy]` in scaled units for grid sampling.
    pub mesh_spacing: [f64; 3],
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            iterations: 4800,
            learning_rate: 0.1,
            final_learning_rate: Some(1e-4),
            interior_batch: 4096,
            boundary_batch: 1024,
            pde_weight: 1.0,
            bc_weight: 10.0,
            grad_eps: 1e-8,
            seed: 0,
            sampling: Sampling::Stratified,
            mesh_spacing: [0.17, 0.02, 0.02],
            layer_sizes: vec![3, 16, 1],
            activation: Activation::Tanh,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::validation("iterations must be positive"));
        }
        if self.interior_batch == 0 || self.boundary_batch == 0 {
            return Err(Error::validation("batch sizes must be positive"));
        }
        if !(self.pde_weight > 0.0 && self.bc_weight > 0.0) {
            return Err(Error::validation("loss weights must be positive"));
        }
        if !(self.learning_rate > 0.0) || self.final_learning_rate.is_some_and(|l| !(l > 0.0)) {
            return Err(Error::validation("learning rates must be positive"));
        }
        if !(self.grad_eps >= 0.0) {
            return Err(Error::validation("gradient regulariser must be non-negative"));
        }
        if self.mesh_spacing.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::validation("mesh spacings must be positive"));
        }
        if self.layer_sizes.first() != Some(&3) || self.layer_sizes.last() != Some(&1) {
            return Err(Error::validation("the level-set network maps 3 inputs to 1 output"));
        }
        Ok(())
    }

    /// Learning rate used at step `k` (0-based).
    pub fn learning_rate_at(&self, k: usize) -> f64 {
        match self.final_learning_rate {
            Some(end) if self.iterations > 1 => {
                let s = k as f64 / (self.iterations - 1) as f64;
                self.learning_rate * (end / self.learning_rate).powf(s)
            }
            _ => self.learning_rate,
        }
    }
}

/// Spread rate in scaled units, `S̃ = S·f_x/f_t`, evaluated at scaled points.
pub struct ScaledSpreadField<'a> {
    scenario: &'a ScenarioConfig,
    factor: f64,
    aspect: f64,
    uniform: bool,
}

impl<'a> ScaledSpreadField<'a> {
    pub fn new(scenario: &'a ScenarioConfig) -> Self {
        let uniform = scenario.wind.u.iter().chain(&scenario.wind.v).all(|p| p.coeffs.iter().all(|c| *c == 0.0))
            && scenario.terrain.z.coeffs.iter().skip(1).all(|c| *c == 0.0);
        Self {
            scenario,
            factor: scenario.scaling.spread_factor(),
            aspect: scenario.scaling.aspect(),
            uniform,
        }
    }

    pub fn aspect(&self) -> f64 {
        self.aspect
    }

    /// `S̃` at scaled point `p` for a front whose scaled gradient is
    /// `(û_x, û_y)`.
    pub fn rate<T: Real>(&self, p: &[f64], ux: T, uy: T) -> T {
        let fuel = &self.scenario.fuel;
        if self.uniform {
            return ux.constant(fuel.r0 * self.factor);
        }
        let [t, x, y] = self.scenario.scaling.unscale_point([p[0], p[1], p[2]]);
        let inputs = SpreadInputs::at(self.scenario, t, x, y);
        if inputs.is_uniform_zero() {
            return ux.constant(fuel.r0 * self.factor);
        }
        // physical gradient direction
        normal_spread(fuel, &inputs, [ux, uy * self.aspect]) * self.factor
    }
}

fn residual<T: Real>(field: &ScaledSpreadField, p: &[f64], ut: T, ux: T, uy: T, eps: f64) -> T {
    let s = field.rate(p, ux, uy);
    let k = field.aspect;
    let mag = (ux.square() + (uy * k).square() + eps * eps).sqrt();
    ut + s * mag
}

/// `r = û_t + S̃·√(û_x² + (κû_y)² + ε_n²)` at a scaled point.
pub fn pde_residual(net: &DenseNet, point: &[f64], scenario: &ScenarioConfig, grad_eps: f64) -> Result<f64> {
    let jet = net.jet(point, &JetSpec::first_order())?;
    let field = ScaledSpreadField::new(scenario);
    let r = residual(&field, point, jet.d(0, 0), jet.d(0, 1), jet.d(0, 2), grad_eps);
    if !r.is_finite() {
        return Err(Error::NonFinite {
            what: "PDE residual".into(),
            point: point.to_vec(),
        });
    }
    Ok(r)
}

struct PdeTerm<'a> {
    spec: JetSpec,
    field: ScaledSpreadField<'a>,
    weight: f64,
    eps: f64,
}

impl PointObjective for PdeTerm<'_> {
    fn jet_spec(&self) -> &JetSpec {
        &self.spec
    }

    fn term(&self, p: &[f64], jet: &Jet) -> Result<(f64, JetAdjoint)> {
        let (ut, ux, uy) = (jet.d(0, 0), jet.d(0, 1), jet.d(0, 2));
        let mut adj = JetAdjoint::zeros_like(jet);
        if self.field.uniform {
            let s = self.field.scenario.fuel.r0 * self.field.factor;
            let k2 = self.field.aspect * self.field.aspect;
            let mag = (ux * ux + k2 * uy * uy + self.eps * self.eps).sqrt();
            let r = ut + s * mag;
            let c = 2.0 * self.weight * r;
            adj.grad[0] = c;
            adj.grad[1] = c * s * ux / mag;
            adj.grad[2] = c * s * k2 * uy / mag;
            return Ok((self.weight * r * r, adj));
        }
        let tape = Tape::new();
        let (vt, vx, vy) = (tape.var(ut), tape.var(ux), tape.var(uy));
        let r = residual(&self.field, p, vt, vx, vy, self.eps);
        let loss = r.square() * self.weight;
        let g = tape.gradient(&loss);
        for (slot, v) in [vt, vx, vy].iter().enumerate() {
            adj.grad[slot] = v.id().map_or(0.0, |i| g[i]);
        }
        Ok((loss.value(), adj))
    }
}

struct BoundaryTerm<'a> {
    spec: JetSpec,
    scenario: &'a ScenarioConfig,
    weight: f64,
}

impl PointObjective for BoundaryTerm<'_> {
    fn jet_spec(&self) -> &JetSpec {
        &self.spec
    }

    fn term(&self, p: &[f64], jet: &Jet) -> Result<(f64, JetAdjoint)> {
        let diff = jet.value[0] - initial_levelset(&self.scenario.ignition, p[1], p[2]);
        let mut adj = JetAdjoint::zeros_like(jet);
        adj.value[0] = 2.0 * self.weight * diff;
        Ok((self.weight * diff * diff, adj))
    }
}

/// Total loss and its parameter gradient on the given batches (flat,
/// stride 3, scaled coordinates).
pub fn loss_and_gradient(
    net: &DenseNet,
    scenario: &ScenarioConfig,
    config: &TrainingConfig,
    interior: &[f64],
    boundary: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if interior.is_empty() || boundary.is_empty() {
        return Err(Error::EmptySet);
    }
    let pde = PdeTerm {
        spec: JetSpec::first_order(),
        field: ScaledSpreadField::new(scenario),
        weight: config.pde_weight / (interior.len() / 3) as f64,
        eps: config.grad_eps,
    };
    let bc = BoundaryTerm {
        spec: JetSpec::first_order(),
        scenario,
        weight: config.bc_weight / (boundary.len() / 3) as f64,
    };
    let (lp, mut grad) = grad_wrt_params(net, &pde, interior)?;
    let (lb, gb) = grad_wrt_params(net, &bc, boundary)?;
    grad.iter_mut().zip(&gb).for_each(|(a, b)| *a += b);
    Ok((lp + lb, grad))
}

/// `w_p·mean(r²) + w_b·mean((û(t₀,x,y) − ψ₀)²)`.
pub fn total_loss(
    net: &DenseNet,
    scenario: &ScenarioConfig,
    config: &TrainingConfig,
    interior: &[f64],
    boundary: &[f64],
) -> Result<f64> {
    loss_and_gradient(net, scenario, config, interior, boundary).map(|(l, _)| l)
}

/// Interior and initial-time training points, flat with stride 3.
#[derive(Clone, Debug, PartialEq)]
pub struct Batches {
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

/// Largest even `m` with `m^dims ≤ n` (at least 2).
fn strata_per_axis(n: usize, dims: u32) -> usize {
    let mut m: usize = 2;
    while (m + 2).pow(dims) <= n {
        m += 2;
    }
    m
}

/// Cells of an `m^dims` lattice ordered so that consecutive runs of
/// `2^dims` cells visit every half-axis orthant once.
fn interleaved_cells(m: usize, dims: usize) -> Vec<Vec<usize>> {
    let half = m / 2;
    let sub = half.pow(dims as u32);
    let mut cells = Vec::with_capacity(sub << dims);
    for c in 0..sub {
        for orthant in 0..(1usize << dims) {
            let mut rem = c;
            let idx = (0..dims)
                .map(|d| {
                    let local = rem % half;
                    rem /= half;
                    local + if orthant >> d & 1 == 1 { half } else { 0 }
                })
                .collect();
            cells.push(idx);
        }
    }
    cells
}

fn stratified(n: usize, bounds: &[[f64; 2]], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let dims = bounds.len();
    let m = strata_per_axis(n, dims as u32);
    let cells = interleaved_cells(m, dims);
    (0..n)
        .map(|k| {
            let cell = &cells[k % cells.len()];
            (0..dims)
                .map(|d| {
                    let w = (bounds[d][1] - bounds[d][0]) / m as f64;
                    let v = bounds[d][0] + w * (cell[d] as f64 + rng.gen::<f64>());
                    v.min(bounds[d][1])
                })
                .collect()
        })
        .collect()
}

/// Fresh training batches. Stratified sampling spreads points evenly over
/// the scaled box; grid sampling draws nodes of the training mesh.
pub fn sample_batches(config: &TrainingConfig, scenario: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Batches {
    let b = scenario.scaled_box();
    let t0 = b[0][0];
    match config.sampling {
        Sampling::Stratified => {
            let interior = stratified(config.interior_batch, &b, rng).concat();
            let boundary = stratified(config.boundary_batch, &b[1..], rng)
                .into_iter()
                .flat_map(|xy| [t0, xy[0], xy[1]])
                .collect();
            Batches { interior, boundary }
        }
        Sampling::Grid => {
            let counts: Vec<usize> = (0..3)
                .map(|d| ((b[d][1] - b[d][0]) / config.mesh_spacing[d]).round().max(1.0) as usize + 1)
                .collect();
            let node = |d: usize, i: usize| {
                (b[d][0] + i as f64 * config.mesh_spacing[d]).min(b[d][1])
            };
            let interior = (0..config.interior_batch)
                .flat_map(|_| {
                    let idx: Vec<usize> = counts.iter().map(|&c| rng.gen_range(0..c)).collect();
                    [node(0, idx[0]), node(1, idx[1]), node(2, idx[2])]
                })
                .collect();
            let boundary = (0..config.boundary_batch)
                .flat_map(|_| {
                    let (i, j) = (rng.gen_range(0..counts[1]), rng.gen_range(0..counts[2]));
                    [t0, node(1, i), node(2, j)]
                })
                .collect();
            Batches { interior, boundary }
        }
    }
}

/// A trained surrogate together with what is needed to query it in
/// physical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetSolution {
    pub net: DenseNet,
    pub scaling: ScalingTransform,
    pub domain: Domain3,
    pub scenario_hash: String,
    pub loss_history: Vec<f64>,
}

impl LevelSetSolution {
    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }
}

/// Trains with Adam on fresh batches each iteration. `progress` is called
/// after every step with the iteration index and loss.
pub fn train_with_progress(
    scenario: &ScenarioConfig,
    config: &TrainingConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<LevelSetSolution> {
    scenario.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = DenseNet::glorot(config.layer_sizes.clone(), config.activation, &mut rng)?;
    let adam = AdamConfig {
        lr: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(net.params().len());
    let mut history = Vec::with_capacity(config.iterations);
    for k in 0..config.iterations {
        let batches = sample_batches(config, scenario, &mut rng);
        let (loss, grad) = match loss_and_gradient(&net, scenario, config, &batches.interior, &batches.boundary) {
            Ok(v) => v,
            Err(Error::NonFinite { .. }) => return Err(Error::Divergence { iteration: k, loss: f64::NAN }),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { iteration: k, loss });
        }
        history.push(loss);
        adam_step(net.params_mut(), &grad, &mut state, &adam, config.learning_rate_at(k));
        progress(k, loss);
    }
    Ok(LevelSetSolution {
        net,
        scaling: scenario.scaling,
        domain: scenario.domain,
        scenario_hash: scenario.hash(),
        loss_history: history,
    })
}

pub fn train(scenario: &ScenarioConfig, config: &TrainingConfig) -> Result<LevelSetSolution> {
    train_with_progress(scenario, config, |_, _| {})
}

/// The surrogate on a physical grid at physical time `t`.
pub fn evaluate(solution: &LevelSetSolution, t: f64, grid: &Grid2) -> Result<ScalarField2> {
    grid.validate()?;
    let points: Vec<(f64, f64)> = grid.nodes().collect();
    let values = points
        .par_iter()
        .map(|&(x, y)| {
            let p = solution.scaling.scale_point([t, x, y]);
            solution.net.forward(&p).map(|v| v[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScalarField2 { grid: *grid, values })
}

/// Like [`evaluate`] for any `t`; also returns how far `t` lies outside
/// the training interval (0 inside).
pub fn extrapolate(solution: &LevelSetSolution, t: f64, grid: &Grid2) -> Result<(ScalarField2, f64)> {
    let d = &solution.domain;
    let outside = (d.t_min - t).max(t - d.t_max).max(0.0);
    Ok((evaluate(solution, t, grid)?, outside))
}

impl crate::geometry::FieldSource for LevelSetSolution {
    fn field_at(&self, t: f64, grid: &Grid2) -> Result<ScalarField2> {
        evaluate(self, t, grid)
    }
}
