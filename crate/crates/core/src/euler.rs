//! Flux-form dry Euler system on a terrain-following `η` coordinate:
//! residual assembly for a network surrogate and a loss-convergence study.
//!
//! Unknowns are `(U, V, W, Ω, Θm, φ, μd)` plus `Qm` in moist mode, all
//! functions of `(t, x, y, η)`. Forcings and map factors are omitted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ad::{Real, Tape, Var};
use crate::error::{Error, Result};
use crate::net::{grad_wrt_params, Activation, DenseNet, Jet, JetAdjoint, JetSpec, PointObjective};
use crate::optim::{adam_step, AdamConfig, AdamState};

pub const U: usize = 0;
pub const V: usize = 1;
pub const W: usize = 2;
pub const OMEGA: usize = 3;
pub const THETA: usize = 4;
pub const PHI: usize = 5;
pub const MU: usize = 6;
pub const QM: usize = 7;

/// Derivative slots.
const DT: usize = 0;
const DX: usize = 1;
const DY: usize = 2;
const DE: usize = 3;

pub const RESIDUAL_NAMES: [&str; 7] = ["u_momentum", "v_momentum", "w_momentum", "heat", "mass", "geopotential", "moisture"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EulerConstants {
    pub g: f64,
    pub rd: f64,
    pub gamma: f64,
    pub p0: f64,
}

impl Default for EulerConstants {
    fn default() -> Self {
        Self {
            g: 9.81,
            rd: 287.0,
            gamma: 1.4,
            p0: 1e5,
        }
    }
}

impl EulerConstants {
    pub fn validate(&self) -> Result<()> {
        if [self.g, self.rd, self.gamma, self.p0].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::validation("Euler constants must be positive"))
        }
    }
}

/// Resting, horizontally uniform atmosphere with constant potential
/// temperature and dry pressure `p_d = p_top + μ0·η` (η = 0 at the top,
/// 1 at the surface, where φ = 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseState {
    pub p_top: f64,
    pub mu0: f64,
    pub theta0: f64,
    pub q0: f64,
}

impl Default for BaseState {
    fn default() -> Self {
        Self {
            p_top: 5e3,
            mu0: 9.5e4,
            theta0: 300.0,
            q0: 0.01,
        }
    }
}

impl BaseState {
    pub fn pressure(&self, eta: f64) -> f64 {
        self.p_top + self.mu0 * eta
    }

    pub fn alpha_d(&self, c: &EulerConstants, eta: f64) -> f64 {
        c.rd * self.theta0 / c.p0 * (c.p0 / self.pressure(eta)).powf(1.0 / c.gamma)
    }

    pub fn phi(&self, c: &EulerConstants, eta: f64) -> f64 {
        let k = 1.0 - 1.0 / c.gamma;
        let ps = self.pressure(1.0);
        c.rd * self.theta0 * c.p0.powf(-k) * (ps.powf(k) - self.pressure(eta).powf(k)) / k
    }

    pub fn phi_eta(&self, c: &EulerConstants, eta: f64) -> f64 {
        -self.mu0 * self.alpha_d(c, eta)
    }

    pub fn phi_eta_eta(&self, c: &EulerConstants, eta: f64) -> f64 {
        self.mu0 * self.mu0 * self.alpha_d(c, eta) / (c.gamma * self.pressure(eta))
    }
}

/// Values and derivatives of the unknowns at one point.
///
/// `d[k][s]` is the derivative of unknown `k` along `s ∈ (t, x, y, η)`;
/// `phi_xe`, `phi_ye`, `phi_ee` are the mixed second derivatives of φ the
/// pressure gradient needs.
#[derive(Clone, Copy, Debug)]
pub struct EulerPoint<T> {
    pub v: [T; 8],
    pub d: [[T; 4]; 8],
    pub phi_xe: T,
    pub phi_ye: T,
    pub phi_ee: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerDiagnostics<T> {
    pub alpha_d: T,
    pub alpha: T,
    pub p: T,
    /// `∂p` along `(x, y, η)`.
    pub dp: [T; 3],
}

/// `αd = −∂ηφ/μd`, `α = αd/(1 + qm)` (moist) or `αd`, and
/// `p = p0·(Rd·θm/(p0·αd))^γ` with `θm = Θm/μd`.
pub fn diagnostics<T: Real>(pt: &EulerPoint<T>, c: &EulerConstants, moist: bool) -> Result<EulerDiagnostics<T>> {
    let mu = pt.v[MU];
    let theta = pt.v[THETA];
    let phi_e = pt.d[PHI][DE];
    if !(mu.value() > 0.0) {
        return Err(Error::NonPhysical { what: "dry column mass".into(), point: vec![mu.value()] });
    }
    let alpha_d = -phi_e / mu;
    if !(alpha_d.value() > 0.0) || !(theta.value() > 0.0) {
        return Err(Error::NonPhysical {
            what: "specific volume or potential temperature".into(),
            point: vec![alpha_d.value(), theta.value()],
        });
    }
    let alpha = if moist {
        alpha_d / ((pt.v[QM] / mu) + 1.0)
    } else {
        alpha_d
    };
    let base = (theta * c.rd) / (-phi_e * c.p0);
    let p = base.powf(c.gamma) * c.p0;
    let dtheta = [pt.d[THETA][DX], pt.d[THETA][DY], pt.d[THETA][DE]];
    let dphi_e = [pt.phi_xe, pt.phi_ye, pt.phi_ee];
    let dp = [0, 1, 2].map(|k| p * c.gamma * (dtheta[k] / theta - dphi_e[k] / phi_e));
    Ok(EulerDiagnostics { alpha_d, alpha, p, dp })
}

/// `∂x(U·a) + ∂y(V·a) + ∂η(Ω·a)` for `a = A/μd`.
fn flux_div<T: Real>(pt: &EulerPoint<T>, a_idx: usize) -> T {
    let mu = pt.v[MU];
    let a = pt.v[a_idx] / mu;
    let mut sum = a.constant(0.0);
    for (flux, s) in [(U, DX), (V, DY), (OMEGA, DE)] {
        let da = (pt.d[a_idx][s] - a * pt.d[MU][s]) / mu;
        sum = sum + pt.d[flux][s] * a + pt.v[flux] * da;
    }
    sum
}

/// The seven residuals in physical units, in the order of
/// [`RESIDUAL_NAMES`]. The moisture residual is zero in dry mode.
pub fn residuals<T: Real>(pt: &EulerPoint<T>, c: &EulerConstants, moist: bool) -> Result<[T; 7]> {
    let dg = diagnostics(pt, c, moist)?;
    let ratio = dg.alpha / dg.alpha_d;
    let mu = pt.v[MU];
    let zero = mu.constant(0.0);
    let ru = pt.d[U][DT] + flux_div(pt, U) + mu * dg.alpha * dg.dp[0] + ratio * dg.dp[2] * pt.d[PHI][DX];
    let rv = pt.d[V][DT] + flux_div(pt, V) + mu * dg.alpha * dg.dp[1] + ratio * dg.dp[2] * pt.d[PHI][DY];
    let rw = pt.d[W][DT] + flux_div(pt, W) - (ratio * dg.dp[2] - mu) * c.g;
    let rh = pt.d[THETA][DT] + flux_div(pt, THETA);
    let rm = pt.d[MU][DT] + pt.d[U][DX] + pt.d[V][DY] + pt.d[OMEGA][DE];
    let advect = pt.v[U] * pt.d[PHI][DX] + pt.v[V] * pt.d[PHI][DY] + pt.v[OMEGA] * pt.d[PHI][DE];
    let rg = pt.d[PHI][DT] + (advect - pt.v[W] * c.g) / mu;
    let rq = if moist { pt.d[QM][DT] + flux_div(pt, QM) } else { zero };
    Ok([ru, rv, rw, rh, rm, rg, rq])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EulerDomain {
    pub t_max: f64,
    pub length_x: f64,
    pub length_y: f64,
}

impl Default for EulerDomain {
    fn default() -> Self {
        Self {
            t_max: 600.0,
            length_x: 1e4,
            length_y: 1e4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EulerConfig {
    pub iterations: usize,
    pub interior_batch: usize,
    pub initial_batch: usize,
    pub learning_rate: f64,
    pub final_learning_rate: Option<f64>,
    pub ic_weight: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub moist: bool,
    /// Peak horizontal wind of the initial parabolic bump (m/s).
    pub amplitude: f64,
    /// Velocity scales of the outputs (m/s).
    pub u_scale: f64,
    pub w_scale: f64,
    pub domain: EulerDomain,
    pub base: BaseState,
    pub constants: EulerConstants,
}

impl Default for EulerConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            interior_batch: 2048,
            initial_batch: 512,
            learning_rate: 3e-3,
            final_learning_rate: Some(3e-4),
            ic_weight: 10.0,
            seed: 0,
            hidden: vec![24, 24],
            activation: Activation::Tanh,
            moist: false,
            amplitude: 5.0,
            u_scale: 10.0,
            w_scale: 1.0,
            domain: EulerDomain::default(),
            base: BaseState::default(),
            constants: EulerConstants::default(),
        }
    }
}

impl EulerConfig {
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        if self.iterations == 0 {
            return Err(Error::validation("iterations must be positive"));
        }
        if self.interior_batch == 0 || self.initial_batch == 0 {
            return Err(Error::validation("batch sizes must be positive"));
        }
        if !(self.learning_rate > 0.0) || self.final_learning_rate.is_some_and(|l| !(l > 0.0)) {
            return Err(Error::validation("learning rates must be positive"));
        }
        if !(self.ic_weight > 0.0 && self.u_scale > 0.0 && self.w_scale > 0.0) {
            return Err(Error::validation("weights and scales must be positive"));
        }
        let d = &self.domain;
        if !(d.t_max > 0.0 && d.length_x > 0.0 && d.length_y > 0.0) {
            return Err(Error::validation("Euler domain extents must be positive"));
        }
        let b = &self.base;
        if !(b.p_top > 0.0 && b.mu0 > 0.0 && b.theta0 > 0.0 && b.q0 >= 0.0) {
            return Err(Error::validation("base state must be positive"));
        }
        if self.hidden.iter().any(|h| *h == 0) {
            return Err(Error::validation("hidden layer sizes must be positive"));
        }
        Ok(())
    }

    pub fn outputs(&self) -> usize {
        if self.moist {
            8
        } else {
            7
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![4];
        s.extend(&self.hidden);
        s.push(self.outputs());
        s
    }

    pub fn scales(&self) -> EulerScales {
        let b = &self.base;
        let c = &self.constants;
        let mu = b.mu0;
        let phi = b.phi(c, 0.0);
        let t = self.domain.t_max;
        let l = self.domain.length_x.max(self.domain.length_y);
        EulerScales {
            field: [
                mu * self.u_scale,
                mu * self.u_scale,
                mu * self.w_scale,
                mu / t,
                mu * b.theta0,
                phi,
                mu,
                mu * b.q0.max(1e-3),
            ],
            residual: [
                mu * phi / l,
                mu * phi / l,
                c.g * mu,
                mu * b.theta0 / t,
                mu / t,
                phi / t,
                mu * b.q0.max(1e-3) / t,
            ],
        }
    }

    pub fn learning_rate_at(&self, k: usize) -> f64 {
        match self.final_learning_rate {
            Some(end) if self.iterations > 1 => {
                self.learning_rate * (end / self.learning_rate).powf(k as f64 / (self.iterations - 1) as f64)
            }
            _ => self.learning_rate,
        }
    }
}

/// Characteristic magnitudes used to make fields and residuals O(1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerScales {
    pub field: [f64; 8],
    pub residual: [f64; 7],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EulerFile {
    #[serde(default)]
    euler: EulerConfig,
}

/// Reads the `[euler]` section of a study file.
pub fn parse_euler_config(text: &str) -> Result<EulerConfig> {
    let file: EulerFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.euler.validate()?;
    Ok(file.euler)
}

// output perturbation sizes around the base state
const THETA_PERTURBATION: f64 = 0.1;
const PHI_PERTURBATION: f64 = 0.1;

/// Network outputs mapped onto the unknowns.
///
/// Inputs are `(t/T, x/Lx, y/Ly, η)`. Momenta and `Qm` are scaled outputs;
/// `Θm` and `φ` are perturbations of the base state; `μd` goes through a
/// softplus so it stays positive.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerUnknowns {
    pub net: DenseNet,
    pub config: EulerConfig,
}

fn softplus<T: Real>(o: T) -> T {
    if o.value() > 0.0 {
        o + ((-o).exp() + 1.0).ln()
    } else {
        (o.exp() + 1.0).ln()
    }
}

fn sigmoid<T: Real>(o: T) -> T {
    if o.value() >= 0.0 {
        ((-o).exp() + 1.0).powf(-1.0)
    } else {
        let e = o.exp();
        e / (e + 1.0)
    }
}

/// Raw network jet entries needed by the residuals.
struct RawJet<T> {
    value: Vec<T>,
    grad: Vec<[T; 4]>,
    phi_second: [T; 3],
}

fn jet_spec() -> JetSpec {
    JetSpec::with_pairs(vec![(1, 3), (2, 3), (3, 3)])
}

impl EulerUnknowns {
    pub fn new(net: DenseNet, config: EulerConfig) -> Result<Self> {
        config.validate()?;
        if net.layer_sizes().first() != Some(&4) || net.outputs() != config.outputs() {
            return Err(Error::Dimension {
                expected: config.outputs(),
                got: net.outputs(),
            });
        }
        Ok(Self { net, config })
    }

    fn input(&self, p: [f64; 4]) -> [f64; 4] {
        let d = &self.config.domain;
        [p[0] / d.t_max, p[1] / d.length_x, p[2] / d.length_y, p[3]]
    }

    fn chain(&self) -> [f64; 4] {
        let d = &self.config.domain;
        [1.0 / d.t_max, 1.0 / d.length_x, 1.0 / d.length_y, 1.0]
    }

    fn assemble<T: Real>(&self, raw: &RawJet<T>, eta: f64) -> EulerPoint<T> {
        let cfg = &self.config;
        let s = cfg.scales();
        let c = &cfg.constants;
        let b = &cfg.base;
        let chain = self.chain();
        let zero = raw.value[0].constant(0.0);
        let mut v = [zero; 8];
        let mut d = [[zero; 4]; 8];
        let scaled = |k: usize, factor: f64, v: &mut [T; 8], d: &mut [[T; 4]; 8]| {
            v[k] = raw.value[k] * factor;
            for a in 0..4 {
                d[k][a] = raw.grad[k][a] * (factor * chain[a]);
            }
        };
        for k in [U, V, W, OMEGA] {
            scaled(k, s.field[k], &mut v, &mut d);
        }
        if cfg.moist {
            scaled(QM, s.field[QM], &mut v, &mut d);
        }
        let th = s.field[THETA] * THETA_PERTURBATION;
        scaled(THETA, th, &mut v, &mut d);
        v[THETA] = v[THETA] + s.field[THETA];

        let ph = s.field[PHI] * PHI_PERTURBATION;
        scaled(PHI, ph, &mut v, &mut d);
        v[PHI] = v[PHI] + b.phi(c, eta);
        d[PHI][DE] = d[PHI][DE] + b.phi_eta(c, eta);
        let phi_xe = raw.phi_second[0] * (ph * chain[DX]);
        let phi_ye = raw.phi_second[1] * (ph * chain[DY]);
        let phi_ee = raw.phi_second[2] * ph + b.phi_eta_eta(c, eta);

        let m = s.field[MU] / std::f64::consts::LN_2;
        let o = raw.value[MU];
        v[MU] = softplus(o) * m;
        let sig = sigmoid(o) * m;
        for a in 0..4 {
            d[MU][a] = sig * raw.grad[MU][a] * chain[a];
        }
        EulerPoint { v, d, phi_xe, phi_ye, phi_ee }
    }

    fn raw_f64(jet: &Jet) -> RawJet<f64> {
        let n = jet.value.len();
        RawJet {
            value: jet.value.clone(),
            grad: (0..n).map(|k| [0, 1, 2, 3].map(|a| jet.d(k, a))).collect(),
            phi_second: [0, 1, 2].map(|p| jet.d2(PHI, p)),
        }
    }

    /// Unknowns at a physical point `(t, x, y, η)`.
    pub fn fields_at(&self, p: [f64; 4]) -> Result<[f64; 8]> {
        let out = self.net.forward(&self.input(p))?;
        let raw = RawJet {
            value: out,
            grad: vec![[0.0; 4]; self.config.outputs()],
            phi_second: [0.0; 3],
        };
        Ok(self.assemble(&raw, p[3]).v)
    }

    /// Values and exact derivatives at a physical point.
    pub fn point_at(&self, p: [f64; 4]) -> Result<EulerPoint<f64>> {
        let jet = self.net.jet(&self.input(p), &jet_spec())?;
        Ok(self.assemble(&Self::raw_f64(&jet), p[3]))
    }

    /// Residuals at a physical point divided by their characteristic scales.
    pub fn normalized_residuals(&self, p: [f64; 4]) -> Result<[f64; 7]> {
        let pt = self.point_at(p)?;
        normalize(residuals(&pt, &self.config.constants, self.config.moist)?, &self.config.scales())
    }
}

pub fn normalize<T: Real>(r: [T; 7], scales: &EulerScales) -> Result<[T; 7]> {
    let mut out = r;
    for k in 0..7 {
        out[k] = r[k] / scales.residual[k];
    }
    Ok(out)
}

/// Unknowns at `t = 0`: the base state plus a parabolic bump in `U`,
/// `U = μd·A·16η(1−η)·x̃(1−x̃)` with `x̃ = x/Lx`.
pub fn initial_state(config: &EulerConfig, x: f64, y: f64, eta: f64) -> [f64; 8] {
    let _ = y;
    let b = &config.base;
    let c = &config.constants;
    let xt = x / config.domain.length_x;
    let bump = 16.0 * eta * (1.0 - eta) * xt * (1.0 - xt);
    let q = if config.moist { b.mu0 * b.q0 } else { 0.0 };
    [
        b.mu0 * config.amplitude * bump,
        0.0,
        0.0,
        0.0,
        b.mu0 * b.theta0,
        b.phi(c, eta),
        b.mu0,
        q,
    ]
}

/// `Σ_k ((f_k − target_k)/scale_k)²` over the active unknowns.
pub fn initial_mismatch<T: Real>(fields: &[T; 8], target: &[f64; 8], scales: &EulerScales, outputs: usize) -> T {
    let mut sum = fields[0].constant(0.0);
    for k in 0..outputs {
        sum = sum + ((fields[k] - target[k]) / scales.field[k]).square();
    }
    sum
}

struct InteriorTerm<'a> {
    unknowns: &'a EulerUnknowns,
    spec: JetSpec,
    scales: EulerScales,
    weight: f64,
}

fn leaves<'t>(tape: &'t Tape, jet: &Jet) -> RawJet<Var<'t>> {
    let n = jet.value.len();
    RawJet {
        value: jet.value.iter().map(|v| tape.var(*v)).collect(),
        grad: (0..n).map(|k| [0, 1, 2, 3].map(|a| tape.var(jet.d(k, a)))).collect(),
        phi_second: [0, 1, 2].map(|p| {
            if jet.second.is_empty() {
                tape.var(0.0).constant(0.0)
            } else {
                tape.var(jet.d2(PHI, p))
            }
        }),
    }
}

fn adjoint_of(raw: &RawJet<Var<'_>>, g: &[f64], jet: &Jet) -> JetAdjoint {
    let pick = |v: &Var<'_>| v.id().map_or(0.0, |i| g.get(i).copied().unwrap_or(0.0));
    let mut adj = JetAdjoint::zeros_like(jet);
    let n = raw.value.len();
    let np = jet.second.len() / n;
    for k in 0..n {
        adj.value[k] = pick(&raw.value[k]);
        for a in 0..4 {
            adj.grad[k * jet.inputs + a] = pick(&raw.grad[k][a]);
        }
    }
    if np > 0 {
        for p in 0..3 {
            adj.second[PHI * np + p] = pick(&raw.phi_second[p]);
        }
    }
    adj
}

impl PointObjective for InteriorTerm<'_> {
    fn jet_spec(&self) -> &JetSpec {
        &self.spec
    }

    fn term(&self, p: &[f64], jet: &Jet) -> Result<(f64, JetAdjoint)> {
        let tape = Tape::new();
        let raw = leaves(&tape, jet);
        let pt = self.unknowns.assemble(&raw, p[3]);
        let cfg = &self.unknowns.config;
        let loss = match residuals(&pt, &cfg.constants, cfg.moist) {
            Ok(r) => {
                let r = normalize(r, &self.scales)?;
                r.iter().fold(r[0].constant(0.0), |acc, x| acc + x.square())
            }
            Err(Error::NonPhysical { .. }) => {
                // pull back towards a stratified column
                let phi_e = pt.d[PHI][DE] / self.scales.field[PHI] + 1.0;
                let theta = -pt.v[THETA] / self.scales.field[THETA] + 1.0;
                phi_e.max_const(0.0).square() + theta.max_const(0.0).square()
            }
            Err(e) => return Err(e),
        } * self.weight;
        let g = tape.gradient(&loss);
        Ok((loss.value(), adjoint_of(&raw, &g, jet)))
    }
}

struct InitialTerm<'a> {
    unknowns: &'a EulerUnknowns,
    spec: JetSpec,
    scales: EulerScales,
    weight: f64,
}

impl PointObjective for InitialTerm<'_> {
    fn jet_spec(&self) -> &JetSpec {
        &self.spec
    }

    fn term(&self, p: &[f64], jet: &Jet) -> Result<(f64, JetAdjoint)> {
        let cfg = &self.unknowns.config;
        let d = &cfg.domain;
        let target = initial_state(cfg, p[1] * d.length_x, p[2] * d.length_y, p[3]);
        let tape = Tape::new();
        let raw = leaves(&tape, jet);
        let pt = self.unknowns.assemble(&raw, p[3]);
        let loss = initial_mismatch(&pt.v, &target, &self.scales, cfg.outputs()) * self.weight;
        let g = tape.gradient(&loss);
        Ok((loss.value(), adjoint_of(&raw, &g, jet)))
    }
}

/// Interior and initial-face points in network coordinates (flat, stride 4).
pub fn sample_points(config: &EulerConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let interior = (0..config.interior_batch * 4).map(|_| rng.gen::<f64>()).collect();
    let initial = (0..config.initial_batch)
        .flat_map(|_| [0.0, rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
        .collect();
    (interior, initial)
}

/// Mean squared normalised residual plus weighted initial mismatch, and its
/// parameter gradient.
pub fn loss_and_gradient(unknowns: &EulerUnknowns, interior: &[f64], initial: &[f64]) -> Result<(f64, Vec<f64>)> {
    if interior.is_empty() || initial.is_empty() {
        return Err(Error::EmptySet);
    }
    let scales = unknowns.config.scales();
    let pde = InteriorTerm {
        unknowns,
        spec: jet_spec(),
        scales,
        weight: 1.0 / (interior.len() / 4) as f64,
    };
    let ic = InitialTerm {
        unknowns,
        spec: JetSpec::first_order(),
        scales,
        weight: unknowns.config.ic_weight / (initial.len() / 4) as f64,
    };
    let (a, mut grad) = grad_wrt_params(&unknowns.net, &pde, interior)?;
    let (b, gb) = grad_wrt_params(&unknowns.net, &ic, initial)?;
    grad.iter_mut().zip(&gb).for_each(|(x, y)| *x += y);
    Ok((a + b, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerStudyReport {
    pub iterations: usize,
    pub window: usize,
    pub initial_mean: f64,
    pub final_mean: f64,
    pub reduction: f64,
    pub converged: bool,
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Required ratio between the first and last window means.
pub const REQUIRED_REDUCTION: f64 = 10.0;

/// Mean of the first and last `window` entries and the convergence verdict.
pub fn verdict(history: &[f64]) -> EulerStudyReport {
    let window = (history.len() / 20).max(1).min(history.len().max(1));
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
    let initial_mean = mean(&history[..window.min(history.len())]);
    let final_mean = mean(&history[history.len().saturating_sub(window)..]);
    let reduction = initial_mean / final_mean;
    EulerStudyReport {
        iterations: history.len(),
        window,
        initial_mean,
        final_mean,
        reduction,
        converged: reduction >= REQUIRED_REDUCTION,
        history: history.to_vec(),
    }
}

/// Trains the surrogate with Adam and reports whether the loss converged.
pub fn convergence_study(config: &EulerConfig, mut progress: impl FnMut(usize, f64)) -> Result<(EulerUnknowns, EulerStudyReport)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let net = DenseNet::glorot(config.layer_sizes(), config.activation, &mut rng)?;
    let mut unknowns = EulerUnknowns::new(net, config.clone())?;
    let adam = AdamConfig {
        lr: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(unknowns.net.params().len());
    let mut history = Vec::with_capacity(config.iterations);
    for k in 0..config.iterations {
        let (interior, initial) = sample_points(config, &mut rng);
        let (loss, grad) = match loss_and_gradient(&unknowns, &interior, &initial) {
            Ok(v) => v,
            Err(Error::NonFinite { .. }) => return Err(Error::Divergence { iteration: k, loss: f64::NAN }),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { iteration: k, loss });
        }
        history.push(loss);
        adam_step(unknowns.net.params_mut(), &grad, &mut state, &adam, config.learning_rate_at(k));
        progress(k, loss);
    }
    Ok((unknowns, verdict(&history)))
}

/// Exact hydrostatic rest state at `η` with its analytic derivatives.
pub fn hydrostatic_point(base: &BaseState, c: &EulerConstants, eta: f64) -> EulerPoint<f64> {
    let mut v = [0.0; 8];
    let mut d = [[0.0; 4]; 8];
    v[MU] = base.mu0;
    v[THETA] = base.mu0 * base.theta0;
    v[PHI] = base.phi(c, eta);
    d[PHI][DE] = base.phi_eta(c, eta);
    EulerPoint {
        v,
        d,
        phi_xe: 0.0,
        phi_ye: 0.0,
        phi_ee: base.phi_eta_eta(c, eta),
    }
}
