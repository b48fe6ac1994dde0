//! Dense feed-forward networks with exact input derivatives.
//!
//! Besides plain evaluation, a network can be pushed forward together with
//! its first input-tangents along every input axis and, optionally, a set of
//! mixed second tangents. [`DenseNet::backprop`] then pulls an adjoint on
//! that whole jet back onto the parameters, which is what a PDE-residual
//! loss needs: the gradient of a function of `u`, `∂u/∂x` and
//! `∂²u/∂x∂y` with respect to the weights, computed exactly.
//!
//! Parameters live in one flat vector. For each layer in order the weight
//! matrix is stored row-major (`n_out × n_in`, row = output neuron) and is
//! followed by the `n_out` biases.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per reduction chunk. Fixed so the summation order of a batch
/// gradient does not depend on how many worker threads are running.
pub const REDUCTION_CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Parse(format!("unknown activation `{other}`"))),
        }
    }

    /// Value and first three derivatives at `z`.
    #[inline]
    fn eval(self, z: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let d1 = 1.0 - t * t;
                [t, d1, -2.0 * t * d1, d1 * (6.0 * t * t - 2.0)]
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                let d1 = s * (1.0 - s);
                let d2 = d1 * (1.0 - 2.0 * s);
                [s, d1, d2, d2 * (1.0 - 2.0 * s) - 2.0 * d1 * d1]
            }
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

/// Weights (row-major, `n_out × n_in`) and biases of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

/// Which derivatives a jet evaluation carries. First derivatives along
/// every input are always included; `pairs` lists the mixed second
/// derivatives `∂²/∂x_i∂x_j` to propagate as well.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JetSpec {
    pub pairs: Vec<(usize, usize)>,
}

impl JetSpec {
    pub fn first_order() -> Self {
        Self::default()
    }

    pub fn with_pairs(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs }
    }
}

/// Network output with its input derivatives.
///
/// `grad[o * k + i] = ∂y_o/∂x_i`, `second[o * npairs + p] = ∂²y_o/∂x_i∂x_j`
/// for `pairs[p] = (i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub second: Vec<f64>,
    pub inputs: usize,
}

impl Jet {
    #[inline]
    pub fn d(&self, output: usize, input: usize) -> f64 {
        self.grad[output * self.inputs + input]
    }

    #[inline]
    pub fn d2(&self, output: usize, pair: usize) -> f64 {
        let np = self.second.len() / self.value.len().max(1);
        self.second[output * np + pair]
    }
}

/// Adjoint of a scalar objective with respect to each entry of a [`Jet`]
/// (same layout).
#[derive(Clone, Debug, PartialEq)]
pub struct JetAdjoint {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub second: Vec<f64>,
}

impl JetAdjoint {
    pub fn zeros_like(jet: &Jet) -> Self {
        Self {
            value: vec![0.0; jet.value.len()],
            grad: vec![0.0; jet.grad.len()],
            second: vec![0.0; jet.second.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value
            .iter()
            .chain(&self.grad)
            .chain(&self.second)
            .all(|v| v.is_finite())
    }
}

struct LayerTrace {
    a: Vec<f64>,
    // tangent-major: ad[i * n + o]
    ad: Vec<f64>,
    add: Vec<f64>,
    zd: Vec<f64>,
    zdd: Vec<f64>,
    // activation derivatives at the pre-activation, hidden layers only
    s1: Vec<f64>,
    s2: Vec<f64>,
    s3: Vec<f64>,
}

/// Intermediate values of a jet evaluation, consumed by [`DenseNet::backprop`].
pub struct JetTrace {
    layers: Vec<LayerTrace>,
    pairs: Vec<(usize, usize)>,
    k: usize,
}

impl DenseNet {
    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn new(sizes: Vec<usize>, activation: Activation, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::validation(format!(
                "layer sizes must list at least two positive sizes, got {sizes:?}"
            )));
        }
        let expected = Self::param_count(&sizes);
        if params.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: params.len(),
            });
        }
        if let Some(bad) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::validation(format!("parameter {bad} is not finite")));
        }
        Ok(Self {
            sizes,
            activation,
            params,
        })
    }

    pub fn zeros(sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        let n = Self::param_count(&sizes);
        Self::new(sizes, activation, vec![0.0; n])
    }

    /// Glorot-uniform initialization: every weight and bias of layer
    /// `n_in → n_out` is drawn from `U(−√(6/(n_in+n_out)), +√(6/(n_in+n_out)))`.
    pub fn glorot<R: Rng + ?Sized>(
        sizes: Vec<usize>,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut params = Vec::with_capacity(Self::param_count(&sizes));
        for w in sizes.windows(2) {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            for _ in 0..(w[0] * w[1] + w[1]) {
                params.push(rng.gen_range(-limit..=limit));
            }
        }
        Self::new(sizes, activation, params)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn outputs(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.params.len() {
            return Err(Error::Dimension {
                expected: self.params.len(),
                got: theta.len(),
            });
        }
        self.params.copy_from_slice(theta);
        Ok(())
    }

    /// `(weight offset, bias offset, n_in, n_out)` per layer.
    fn offsets(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.sizes.len() - 1);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            out.push((off, off + n_in * n_out, n_in, n_out));
            off += n_in * n_out + n_out;
        }
        out
    }

    pub fn layers(&self) -> Vec<LayerParams> {
        self.offsets()
            .into_iter()
            .map(|(w, b, n_in, n_out)| LayerParams {
                n_in,
                n_out,
                weights: self.params[w..b].to_vec(),
                biases: self.params[b..b + n_out].to_vec(),
            })
            .collect()
    }

    pub fn from_layers(activation: Activation, layers: &[LayerParams]) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::validation("network needs at least one layer"))?;
        let mut sizes = vec![first.n_in];
        let mut params = Vec::new();
        for layer in layers {
            if layer.n_in != *sizes.last().unwrap() {
                return Err(Error::Dimension {
                    expected: *sizes.last().unwrap(),
                    got: layer.n_in,
                });
            }
            if layer.weights.len() != layer.n_in * layer.n_out || layer.biases.len() != layer.n_out
            {
                return Err(Error::Dimension {
                    expected: layer.n_in * layer.n_out + layer.n_out,
                    got: layer.weights.len() + layer.biases.len(),
                });
            }
            sizes.push(layer.n_out);
            params.extend_from_slice(&layer.weights);
            params.extend_from_slice(&layer.biases);
        }
        Self::new(sizes, activation, params)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.inputs() {
            return Err(Error::Dimension {
                expected: self.inputs(),
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let offsets = self.offsets();
        let last = offsets.len() - 1;
        let mut a = input.to_vec();
        for (l, &(w, b, n_in, n_out)) in offsets.iter().enumerate() {
            let weights = &self.params[w..b];
            let biases = &self.params[b..b + n_out];
            let mut z = biases.to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &weights[o * n_in..(o + 1) * n_in];
                *zo += row.iter().zip(&a).map(|(wq, aq)| wq * aq).sum::<f64>();
            }
            if l < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            a = z;
        }
        Ok(a)
    }

    /// Jacobian of [`forward`](Self::forward), row-major `outputs × inputs`.
    pub fn input_gradient(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jet(input, &JetSpec::first_order())?.grad)
    }

    pub fn jet(&self, input: &[f64], spec: &JetSpec) -> Result<Jet> {
        Ok(self.jet_traced(input, spec)?.0)
    }

    pub fn jet_traced(&self, input: &[f64], spec: &JetSpec) -> Result<(Jet, JetTrace)> {
        self.check_input(input)?;
        let k = self.inputs();
        for &(i, j) in &spec.pairs {
            if i >= k || j >= k {
                return Err(Error::Dimension {
                    expected: k,
                    got: i.max(j) + 1,
                });
            }
        }
        let np = spec.pairs.len();
        let offsets = self.offsets();
        let last = offsets.len() - 1;

        let mut ad0 = vec![0.0; k * k];
        for i in 0..k {
            ad0[i * k + i] = 1.0;
        }
        let mut layers = Vec::with_capacity(offsets.len() + 1);
        layers.push(LayerTrace {
            a: input.to_vec(),
            ad: ad0,
            add: vec![0.0; np * k],
            zd: Vec::new(),
            zdd: Vec::new(),
            s1: Vec::new(),
            s2: Vec::new(),
            s3: Vec::new(),
        });

        for (l, &(w, b, n_in, n_out)) in offsets.iter().enumerate() {
            let weights = &self.params[w..b];
            let biases = &self.params[b..b + n_out];
            let prev = layers.last().unwrap();
            let mut z = vec![0.0; n_out];
            let mut zd = vec![0.0; k * n_out];
            let mut zdd = vec![0.0; np * n_out];
            for o in 0..n_out {
                let row = &weights[o * n_in..(o + 1) * n_in];
                z[o] = biases[o] + dot(row, &prev.a);
                for i in 0..k {
                    zd[i * n_out + o] = dot(row, &prev.ad[i * n_in..(i + 1) * n_in]);
                }
                for p in 0..np {
                    zdd[p * n_out + o] = dot(row, &prev.add[p * n_in..(p + 1) * n_in]);
                }
            }
            let trace = if l < last {
                let mut a = vec![0.0; n_out];
                let mut ad = vec![0.0; k * n_out];
                let mut add = vec![0.0; np * n_out];
                let mut s1 = vec![0.0; n_out];
                let mut s2 = vec![0.0; n_out];
                let mut s3 = vec![0.0; n_out];
                for o in 0..n_out {
                    let [s, d1, d2, d3] = self.activation.eval(z[o]);
                    a[o] = s;
                    s1[o] = d1;
                    s2[o] = d2;
                    s3[o] = d3;
                    for i in 0..k {
                        ad[i * n_out + o] = d1 * zd[i * n_out + o];
                    }
                    for (p, &(pi, pj)) in spec.pairs.iter().enumerate() {
                        add[p * n_out + o] = d1 * zdd[p * n_out + o]
                            + d2 * zd[pi * n_out + o] * zd[pj * n_out + o];
                    }
                }
                LayerTrace {
                    a,
                    ad,
                    add,
                    zd,
                    zdd,
                    s1,
                    s2,
                    s3,
                }
            } else {
                LayerTrace {
                    a: z,
                    ad: zd.clone(),
                    add: zdd.clone(),
                    zd,
                    zdd,
                    s1: Vec::new(),
                    s2: Vec::new(),
                    s3: Vec::new(),
                }
            };
            layers.push(trace);
        }

        let out = layers.last().unwrap();
        let m = self.outputs();
        let mut grad = vec![0.0; m * k];
        let mut second = vec![0.0; m * np];
        for o in 0..m {
            for i in 0..k {
                grad[o * k + i] = out.ad[i * m + o];
            }
            for p in 0..np {
                second[o * np + p] = out.add[p * m + o];
            }
        }
        let jet = Jet {
            value: out.a.clone(),
            grad,
            second,
            inputs: k,
        };
        Ok((
            jet,
            JetTrace {
                layers,
                pairs: spec.pairs.clone(),
                k,
            },
        ))
    }

    /// Accumulates into `grad` the parameter gradient of an objective whose
    /// adjoint with respect to the traced jet is `adj`.
    pub fn backprop(&self, trace: &JetTrace, adj: &JetAdjoint, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        let k = trace.k;
        let np = trace.pairs.len();
        let m = self.outputs();
        let offsets = self.offsets();
        let last = offsets.len() - 1;

        let mut abar = adj.value.clone();
        let mut adbar = vec![0.0; k * m];
        let mut addbar = vec![0.0; np * m];
        for o in 0..m {
            for i in 0..k {
                adbar[i * m + o] = adj.grad[o * k + i];
            }
            for p in 0..np {
                addbar[p * m + o] = adj.second[o * np + p];
            }
        }

        for l in (0..offsets.len()).rev() {
            let (w, b, n_in, n_out) = offsets[l];
            let cur = &trace.layers[l + 1];
            let prev = &trace.layers[l];

            let (zbar, zdbar, zddbar) = if l < last {
                let mut zbar = vec![0.0; n_out];
                let mut zdbar = vec![0.0; k * n_out];
                let mut zddbar = vec![0.0; np * n_out];
                for o in 0..n_out {
                    let (s1, s2, s3) = (cur.s1[o], cur.s2[o], cur.s3[o]);
                    let mut zb = abar[o] * s1;
                    for i in 0..k {
                        let adb = adbar[i * n_out + o];
                        zb += adb * s2 * cur.zd[i * n_out + o];
                        zdbar[i * n_out + o] = adb * s1;
                    }
                    for (p, &(pi, pj)) in trace.pairs.iter().enumerate() {
                        let addb = addbar[p * n_out + o];
                        let (zi, zj) = (cur.zd[pi * n_out + o], cur.zd[pj * n_out + o]);
                        zb += addb * (s2 * cur.zdd[p * n_out + o] + s3 * zi * zj);
                        zdbar[pi * n_out + o] += addb * s2 * zj;
                        zdbar[pj * n_out + o] += addb * s2 * zi;
                        zddbar[p * n_out + o] = addb * s1;
                    }
                    zbar[o] = zb;
                }
                (zbar, zdbar, zddbar)
            } else {
                (abar.clone(), adbar.clone(), addbar.clone())
            };

            {
                let (gw, gb) = grad[w..b + n_out].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    gb[o] += zbar[o];
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    for q in 0..n_in {
                        let mut acc = zbar[o] * prev.a[q];
                        for i in 0..k {
                            acc += zdbar[i * n_out + o] * prev.ad[i * n_in + q];
                        }
                        for p in 0..np {
                            acc += zddbar[p * n_out + o] * prev.add[p * n_in + q];
                        }
                        row[q] += acc;
                    }
                }
            }

            if l > 0 {
                let weights = &self.params[w..b];
                let mut na = vec![0.0; n_in];
                let mut nad = vec![0.0; k * n_in];
                let mut nadd = vec![0.0; np * n_in];
                for o in 0..n_out {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    for q in 0..n_in {
                        let wq = row[q];
                        na[q] += wq * zbar[o];
                        for i in 0..k {
                            nad[i * n_in + q] += wq * zdbar[i * n_out + o];
                        }
                        for p in 0..np {
                            nadd[p * n_in + q] += wq * zddbar[p * n_out + o];
                        }
                    }
                }
                abar = na;
                adbar = nad;
                addbar = nadd;
            }
        }
    }

    /// Self-describing text form; floats use Rust's shortest round-trip
    /// decimal representation so parsing restores the bits exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sizes: Vec<String> = self.sizes.iter().map(|n| n.to_string()).collect();
        writeln!(s, "dense-net 1").unwrap();
        writeln!(s, "layers {}", sizes.join(" ")).unwrap();
        writeln!(s, "activation {}", self.activation.name()).unwrap();
        writeln!(s, "params {}", self.params.len()).unwrap();
        for p in &self.params {
            writeln!(s, "{p:?}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("network text ended before {what}")))
        };
        if next("header")? != "dense-net 1" {
            return Err(Error::Parse("expected `dense-net 1` header".into()));
        }
        let sizes = next("layers")?
            .strip_prefix("layers ")
            .ok_or_else(|| Error::Parse("expected `layers` line".into()))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let activation = Activation::from_name(
            next("activation")?
                .strip_prefix("activation ")
                .ok_or_else(|| Error::Parse("expected `activation` line".into()))?,
        )?;
        let count: usize = next("params")?
            .strip_prefix("params ")
            .ok_or_else(|| Error::Parse("expected `params` line".into()))?
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?;
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let v: f64 = next("parameter values")?
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
            params.push(v);
        }
        Self::new(sizes, activation, params)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A scalar objective that is a sum of per-point terms, each a function of
/// the network jet at that point.
pub trait PointObjective: Sync {
    fn jet_spec(&self) -> &JetSpec;

    /// Term value at `point` and its adjoint with respect to `jet`.
    fn term(&self, point: &[f64], jet: &Jet) -> Result<(f64, JetAdjoint)>;
}

/// Sum of `objective` over `points` (flat, stride = net inputs) and its
/// exact gradient with respect to the network parameters.
///
/// Points are processed in fixed chunks of [`REDUCTION_CHUNK`] that may run
/// in parallel; chunk partial sums are combined in chunk order, so the result
/// is bitwise reproducible for any thread count.
pub fn grad_wrt_params(
    net: &DenseNet,
    objective: &dyn PointObjective,
    points: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let dim = net.inputs();
    if points.len() % dim != 0 {
        return Err(Error::Dimension {
            expected: dim,
            got: points.len() % dim,
        });
    }
    let spec = objective.jet_spec();
    let partials: Vec<Result<(f64, Vec<f64>)>> = points
        .par_chunks(REDUCTION_CHUNK * dim)
        .map(|chunk| {
            let mut grad = vec![0.0; net.params.len()];
            let mut total = 0.0;
            for p in chunk.chunks_exact(dim) {
                let (jet, trace) = net.jet_traced(p, spec)?;
                let (value, adj) = objective.term(p, &jet)?;
                if !value.is_finite() || !adj.is_finite() {
                    return Err(Error::NonFinite {
                        what: "objective term".into(),
                        point: p.to_vec(),
                    });
                }
                total += value;
                net.backprop(&trace, &adj, &mut grad);
            }
            Ok((total, grad))
        })
        .collect();

    let mut total = 0.0;
    let mut grad = vec![0.0; net.params.len()];
    for part in partials {
        let (v, g) = part?;
        total += v;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((total, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_net(sizes: Vec<usize>, act: Activation, seed: u64) -> DenseNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseNet::glorot(sizes, act, &mut rng).unwrap()
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = DenseNet::zeros(vec![3, 16, 1], Activation::Tanh).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 7.5]).unwrap(), vec![0.0]);
        assert_eq!(net.input_gradient(&[1.0, -2.0, 7.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn single_linear_layer_is_a_dot_product() {
        let net = DenseNet::new(vec![3, 1], Activation::Tanh, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(net.forward(&[1.0, 1.0, 1.0]).unwrap(), vec![10.0]);
        assert_eq!(net.input_gradient(&[0.3, -1.0, 2.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn parameter_count_and_dimension_errors() {
        assert_eq!(DenseNet::param_count(&[3, 16, 1]), 3 * 16 + 16 + 16 + 1);
        let net = DenseNet::zeros(vec![3, 16, 1], Activation::Tanh).unwrap();
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::Dimension {
                expected: 3,
                got: 2
            })
        ));
        assert!(DenseNet::new(vec![3, 1], Activation::Tanh, vec![0.0; 3]).is_err());
        assert!(DenseNet::new(vec![2, 1], Activation::Tanh, vec![0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn jet_value_matches_forward() {
        let net = random_net(vec![3, 16, 1], Activation::Tanh, 3);
        let x = [0.4, -1.2, 2.5];
        let jet = net.jet(&x, &JetSpec::with_pairs(vec![(0, 1)])).unwrap();
        assert_eq!(jet.value, net.forward(&x).unwrap());
    }

    #[test]
    fn second_tangents_match_finite_differences_of_first() {
        for act in [Activation::Tanh, Activation::Sigmoid] {
            let net = random_net(vec![4, 8, 6, 3], act, 11);
            let x = [0.3, -0.7, 0.9, 0.1];
            let pairs = vec![(0, 3), (1, 3), (3, 3), (2, 1)];
            let jet = net.jet(&x, &JetSpec::with_pairs(pairs.clone())).unwrap();
            let h = 1e-5;
            for (p, &(i, j)) in pairs.iter().enumerate() {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let gp = net.input_gradient(&xp).unwrap();
                let gm = net.input_gradient(&xm).unwrap();
                for o in 0..3 {
                    let fd = (gp[o * 4 + i] - gm[o * 4 + i]) / (2.0 * h);
                    let exact = jet.d2(o, p);
                    assert!((fd - exact).abs() < 1e-7 * (1.0 + exact.abs()), "{act:?} {fd} {exact}");
                }
            }
        }
    }

    struct JetQuadratic {
        spec: JetSpec,
    }

    // sum of squares of every jet entry, weighted per slot
    impl PointObjective for JetQuadratic {
        fn jet_spec(&self) -> &JetSpec {
            &self.spec
        }
        fn term(&self, _p: &[f64], jet: &Jet) -> Result<(f64, JetAdjoint)> {
            let mut adj = JetAdjoint::zeros_like(jet);
            let mut v = 0.0;
            for (i, x) in jet.value.iter().enumerate() {
                v += x * x;
                adj.value[i] = 2.0 * x;
            }
            for (i, x) in jet.grad.iter().enumerate() {
                let w = 1.0 + i as f64;
                v += w * x * x;
                adj.grad[i] = 2.0 * w * x;
            }
            for (i, x) in jet.second.iter().enumerate() {
                let w = 0.5 + i as f64;
                v += w * x * x;
                adj.second[i] = 2.0 * w * x;
            }
            Ok((v, adj))
        }
    }

    #[test]
    fn parameter_gradient_through_second_tangents() {
        for act in [Activation::Tanh, Activation::Sigmoid] {
            let net = random_net(vec![4, 6, 5, 2], act, 5);
            let obj = JetQuadratic {
                spec: JetSpec::with_pairs(vec![(0, 3), (3, 3), (1, 2)]),
            };
            let points = [0.2, -0.4, 0.6, 0.8, -0.3, 0.5, 0.1, -0.9];
            let (_, g) = grad_wrt_params(&net, &obj, &points).unwrap();
            let h = 1e-6;
            let mut err = 0.0f64;
            let mut norm = 0.0f64;
            for q in 0..net.params().len() {
                let mut np = net.clone();
                np.params_mut()[q] += h;
                let mut nm = net.clone();
                nm.params_mut()[q] -= h;
                let fp = grad_wrt_params(&np, &obj, &points).unwrap().0;
                let fm = grad_wrt_params(&nm, &obj, &points).unwrap().0;
                let fd = (fp - fm) / (2.0 * h);
                err += (fd - g[q]).powi(2);
                norm += g[q].powi(2);
            }
            assert!(err.sqrt() / norm.sqrt() < 1e-6, "{act:?}");
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let net = random_net(vec![3, 16, 1], Activation::Sigmoid, 9);
        let back = DenseNet::from_text(&net.to_text()).unwrap();
        assert_eq!(net, back);
        assert!(DenseNet::from_text("dense-net 1\nlayers 3 1\nactivation relu\n").is_err());
    }

    #[test]
    fn layers_round_trip() {
        let net = random_net(vec![2, 5, 3, 1], Activation::Tanh, 1);
        let back = DenseNet::from_layers(Activation::Tanh, &net.layers()).unwrap();
        assert_eq!(net, back);
    }
}
