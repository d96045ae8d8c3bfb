//! Parameterized network: initialization, forward trace, exact backward, and
//! the two optimizers.

use super::graph::{InputRef, LayerKind, NetSpec, Shape};
use super::layers::{self, BnCache, ConvGeom};
use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};
use ndarray::{Array1, Array2, Array4};
use rand::Rng;
use rand_distr::StandardNormal;

/// Node activations are feature maps or flat feature matrices.
#[derive(Clone, Debug)]
pub enum TensorVal {
    Map(Array4<f64>),
    Flat(Array2<f64>),
}

impl TensorVal {
    pub fn map(&self) -> &Array4<f64> {
        match self {
            TensorVal::Map(a) => a,
            TensorVal::Flat(_) => panic!("expected map tensor"),
        }
    }

    pub fn flat(&self) -> &Array2<f64> {
        match self {
            TensorVal::Flat(a) => a,
            TensorVal::Map(_) => panic!("expected flat tensor"),
        }
    }

    fn add_assign(&mut self, other: &TensorVal) {
        match (self, other) {
            (TensorVal::Map(a), TensorVal::Map(b)) => *a += b,
            (TensorVal::Flat(a), TensorVal::Flat(b)) => *a += b,
            _ => panic!("tensor kind mismatch"),
        }
    }
}

/// Learnable tensors are rank-1 or rank-2.
#[derive(Clone, Debug, PartialEq)]
pub enum PTensor {
    A1(Array1<f64>),
    A2(Array2<f64>),
}

impl PTensor {
    pub fn len(&self) -> usize {
        match self {
            PTensor::A1(a) => a.len(),
            PTensor::A2(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_flat(&self, i: usize) -> f64 {
        match self {
            PTensor::A1(a) => a[i],
            PTensor::A2(a) => *a.iter().nth(i).unwrap(),
        }
    }

    pub fn add_flat(&mut self, i: usize, delta: f64) {
        match self {
            PTensor::A1(a) => a[i] += delta,
            PTensor::A2(a) => *a.iter_mut().nth(i).unwrap() += delta,
        }
    }

    fn zeros_like(&self) -> PTensor {
        match self {
            PTensor::A1(a) => PTensor::A1(Array1::zeros(a.len())),
            PTensor::A2(a) => PTensor::A2(Array2::zeros(a.dim())),
        }
    }

    fn a1(&self) -> &Array1<f64> {
        match self {
            PTensor::A1(a) => a,
            PTensor::A2(_) => panic!("expected rank-1 parameter"),
        }
    }

    fn a2(&self) -> &Array2<f64> {
        match self {
            PTensor::A2(a) => a,
            PTensor::A1(_) => panic!("expected rank-2 parameter"),
        }
    }
}

pub type NodeParams = Vec<PTensor>;
pub type Grads = Vec<NodeParams>;

enum LayerCache {
    None,
    Pool(Array4<usize>),
    Bn(BnCache),
}

/// Activations and per-layer caches from one forward pass.
pub struct Trace {
    pub input: Array4<f64>,
    outputs: Vec<TensorVal>,
    caches: Vec<LayerCache>,
}

impl Trace {
    pub fn output(&self, node: usize) -> &TensorVal {
        &self.outputs[node]
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    pub spec: NetSpec,
    pub shapes: Vec<Shape>,
    /// Learnable tensors per node (empty for parameterless nodes).
    pub params: Vec<NodeParams>,
    /// Batch-norm running statistics per node: [mean, var].
    pub buffers: Vec<Vec<Array1<f64>>>,
}

impl Network {
    /// He-normal initialization from a derived weight stream.
    pub fn init(spec: NetSpec, seed: u64) -> Result<Network> {
        let shapes = spec.infer_shapes()?;
        let mut rng = derive_rng(seed, stream::WEIGHT_INIT, 0);
        let mut params: Vec<NodeParams> = Vec::with_capacity(spec.nodes.len());
        let mut buffers: Vec<Vec<Array1<f64>>> = Vec::with_capacity(spec.nodes.len());
        for node in &spec.nodes {
            let (p, b) = match node.kind {
                LayerKind::Conv2d {
                    in_ch,
                    out_ch,
                    kernel,
                    bias,
                    ..
                } => {
                    let fan_in = in_ch * kernel.0 * kernel.1;
                    let std = (2.0 / fan_in as f64).sqrt();
                    let w = Array2::from_shape_fn((out_ch, fan_in), |_| {
                        let z: f64 = rng.sample(StandardNormal);
                        z * std
                    });
                    let mut p = vec![PTensor::A2(w)];
                    if bias {
                        p.push(PTensor::A1(Array1::zeros(out_ch)));
                    }
                    (p, vec![])
                }
                LayerKind::Dense {
                    in_features,
                    out_features,
                    bias,
                } => {
                    let std = (2.0 / in_features as f64).sqrt();
                    let w = Array2::from_shape_fn((out_features, in_features), |_| {
                        let z: f64 = rng.sample(StandardNormal);
                        z * std
                    });
                    let mut p = vec![PTensor::A2(w)];
                    if bias {
                        p.push(PTensor::A1(Array1::zeros(out_features)));
                    }
                    (p, vec![])
                }
                LayerKind::BatchNorm { channels } => (
                    vec![
                        PTensor::A1(Array1::ones(channels)),
                        PTensor::A1(Array1::zeros(channels)),
                    ],
                    vec![Array1::zeros(channels), Array1::ones(channels)],
                ),
                LayerKind::ChannelAffine { channels } => (
                    vec![
                        PTensor::A1(Array1::ones(channels)),
                        PTensor::A1(Array1::zeros(channels)),
                    ],
                    vec![],
                ),
                _ => (vec![], vec![]),
            };
            params.push(p);
            buffers.push(b);
        }
        Ok(Network {
            spec,
            shapes,
            params,
            buffers,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().flatten().map(|p| p.len()).sum()
    }

    pub fn zero_grads(&self) -> Grads {
        self.params
            .iter()
            .map(|np| np.iter().map(|p| p.zeros_like()).collect())
            .collect()
    }

    fn fetch(&self, trace: &Trace, r: InputRef) -> TensorVal {
        match r {
            InputRef::Input => TensorVal::Map(trace.input.clone()),
            InputRef::Node(i) => trace.outputs[i].clone(),
        }
    }

    /// Forward pass recording every node activation. `training` selects
    /// batch statistics for batch-norm layers.
    pub fn forward(&self, x: &Array4<f64>, training: bool) -> Result<Trace> {
        let (_, c, h, w) = x.dim();
        if (c, h, w) != self.spec.input {
            return Err(Error::invalid_input(format!(
                "forward: input dims ({c},{h},{w}) do not match spec {:?}",
                self.spec.input
            )));
        }
        let mut trace = Trace {
            input: x.clone(),
            outputs: Vec::with_capacity(self.spec.nodes.len()),
            caches: Vec::with_capacity(self.spec.nodes.len()),
        };
        for (idx, node) in self.spec.nodes.iter().enumerate() {
            let input = match node.input {
                InputRef::Input => TensorVal::Map(trace.input.clone()),
                InputRef::Node(i) => trace.outputs[i].clone(),
            };
            let (out, cache) = self.forward_node(idx, &node.kind, &input, &trace, training)?;
            trace.outputs.push(out);
            trace.caches.push(cache);
        }
        Ok(trace)
    }

    fn forward_node(
        &self,
        idx: usize,
        kind: &LayerKind,
        input: &TensorVal,
        trace: &Trace,
        training: bool,
    ) -> Result<(TensorVal, LayerCache)> {
        let out = match kind {
            LayerKind::Conv2d {
                out_ch,
                kernel,
                stride,
                padding,
                bias,
                ..
            } => {
                let g = ConvGeom {
                    kernel: *kernel,
                    stride: *stride,
                    padding: *padding,
                    out_ch: *out_ch,
                };
                let w = self.params[idx][0].a2();
                let b = bias.then(|| self.params[idx][1].a1());
                (
                    TensorVal::Map(layers::conv_forward(input.map().view(), w, b, &g)),
                    LayerCache::None,
                )
            }
            LayerKind::BatchNorm { .. } => {
                let gamma = self.params[idx][0].a1();
                let beta = self.params[idx][1].a1();
                if training {
                    let (out, cache) =
                        layers::batchnorm_forward_train(input.map().view(), gamma, beta);
                    (TensorVal::Map(out), LayerCache::Bn(cache))
                } else {
                    let out = layers::batchnorm_forward_eval(
                        input.map().view(),
                        gamma,
                        beta,
                        &self.buffers[idx][0],
                        &self.buffers[idx][1],
                    );
                    (TensorVal::Map(out), LayerCache::None)
                }
            }
            LayerKind::ChannelAffine { .. } => {
                let gamma = self.params[idx][0].a1();
                let beta = self.params[idx][1].a1();
                (
                    TensorVal::Map(layers::affine_forward(input.map().view(), gamma, beta)),
                    LayerCache::None,
                )
            }
            LayerKind::Relu => match input {
                TensorVal::Map(a) => (
                    TensorVal::Map(a.mapv(|v| v.max(0.0))),
                    LayerCache::None,
                ),
                TensorVal::Flat(a) => (
                    TensorVal::Flat(a.mapv(|v| v.max(0.0))),
                    LayerCache::None,
                ),
            },
            LayerKind::Sigmoid => match input {
                TensorVal::Map(a) => (
                    TensorVal::Map(a.mapv(sigmoid)),
                    LayerCache::None,
                ),
                TensorVal::Flat(a) => (
                    TensorVal::Flat(a.mapv(sigmoid)),
                    LayerCache::None,
                ),
            },
            LayerKind::MaxPool {
                kernel,
                stride,
                padding,
            } => {
                let (out, arg) =
                    layers::maxpool_forward(input.map().view(), *kernel, *stride, *padding);
                (TensorVal::Map(out), LayerCache::Pool(arg))
            }
            LayerKind::AvgPoolGlobal => (
                TensorVal::Flat(layers::global_avgpool_forward(input.map().view())),
                LayerCache::None,
            ),
            LayerKind::Dense { bias, .. } => {
                let w = self.params[idx][0].a2();
                let b = bias.then(|| self.params[idx][1].a1());
                (
                    TensorVal::Flat(layers::dense_forward(input.flat().view(), w, b)),
                    LayerCache::None,
                )
            }
            LayerKind::UpsampleNearest { factor } => (
                TensorVal::Map(layers::upsample_forward(input.map().view(), *factor)),
                LayerCache::None,
            ),
            LayerKind::SkipAdd { other } => {
                let other_val = self.fetch(trace, *other);
                let mut out = input.clone();
                out.add_assign(&other_val);
                (out, LayerCache::None)
            }
        };
        Ok(out)
    }

    /// Update batch-norm running statistics from the batch stats recorded in
    /// a training-mode trace (momentum 0.1).
    pub fn update_bn_running(&mut self, trace: &Trace) {
        const MOMENTUM: f64 = 0.1;
        for (idx, cache) in trace.caches.iter().enumerate() {
            if let LayerCache::Bn(bn) = cache {
                for (r, &m) in self.buffers[idx][0].iter_mut().zip(&bn.batch_mean) {
                    *r = (1.0 - MOMENTUM) * *r + MOMENTUM * m;
                }
                for (r, &v) in self.buffers[idx][1].iter_mut().zip(&bn.batch_var) {
                    *r = (1.0 - MOMENTUM) * *r + MOMENTUM * v;
                }
            }
        }
    }

    /// Backpropagate from arbitrary head gradients (node index, gradient).
    /// Returns parameter gradients aligned with `self.params`.
    pub fn backward(&self, trace: &Trace, head_grads: Vec<(usize, TensorVal)>) -> Grads {
        let n = self.spec.nodes.len();
        let mut dnode: Vec<Option<TensorVal>> = vec![None; n];
        for (node, g) in head_grads {
            match &mut dnode[node] {
                Some(acc) => acc.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }
        let mut grads = self.zero_grads();

        for idx in (0..n).rev() {
            let Some(dout) = dnode[idx].take() else {
                continue;
            };
            let node = self.spec.nodes[idx];
            let input = self.fetch(trace, node.input);
            let (dinput, dparams) = self.backward_node(idx, &node.kind, &input, trace, &dout);
            for (slot, g) in grads[idx].iter_mut().zip(dparams) {
                match (slot, g) {
                    (PTensor::A1(a), PTensor::A1(b)) => *a += &b,
                    (PTensor::A2(a), PTensor::A2(b)) => *a += &b,
                    _ => unreachable!("gradient rank mismatch"),
                }
            }
            let mut route = |r: InputRef, g: TensorVal| {
                if let InputRef::Node(i) = r {
                    match &mut dnode[i] {
                        Some(acc) => acc.add_assign(&g),
                        slot @ None => *slot = Some(g),
                    }
                }
            };
            if let LayerKind::SkipAdd { other } = node.kind {
                route(other, dinput.clone());
            }
            route(node.input, dinput);
        }
        grads
    }

    fn backward_node(
        &self,
        idx: usize,
        kind: &LayerKind,
        input: &TensorVal,
        trace: &Trace,
        dout: &TensorVal,
    ) -> (TensorVal, Vec<PTensor>) {
        match kind {
            LayerKind::Conv2d {
                out_ch,
                kernel,
                stride,
                padding,
                bias,
                ..
            } => {
                let g = ConvGeom {
                    kernel: *kernel,
                    stride: *stride,
                    padding: *padding,
                    out_ch: *out_ch,
                };
                let w = self.params[idx][0].a2();
                let (dx, dw, db) =
                    layers::conv_backward(input.map().view(), w, *bias, &g, dout.map().view());
                let mut dparams = vec![PTensor::A2(dw)];
                if let Some(db) = db {
                    dparams.push(PTensor::A1(db));
                }
                (TensorVal::Map(dx), dparams)
            }
            LayerKind::BatchNorm { .. } => {
                let LayerCache::Bn(cache) = &trace.caches[idx] else {
                    panic!("batchnorm backward requires a training-mode trace");
                };
                let gamma = self.params[idx][0].a1();
                let (dx, dgamma, dbeta) =
                    layers::batchnorm_backward(cache, gamma, dout.map().view());
                (
                    TensorVal::Map(dx),
                    vec![PTensor::A1(dgamma), PTensor::A1(dbeta)],
                )
            }
            LayerKind::ChannelAffine { .. } => {
                let gamma = self.params[idx][0].a1();
                let (dx, dgamma, dbeta) =
                    layers::affine_backward(input.map().view(), gamma, dout.map().view());
                (
                    TensorVal::Map(dx),
                    vec![PTensor::A1(dgamma), PTensor::A1(dbeta)],
                )
            }
            LayerKind::Relu => {
                let dx = match (input, dout) {
                    (TensorVal::Map(x), TensorVal::Map(g)) => {
                        let mut dx = g.clone();
                        dx.zip_mut_with(x, |d, &v| {
                            if v <= 0.0 {
                                *d = 0.0;
                            }
                        });
                        TensorVal::Map(dx)
                    }
                    (TensorVal::Flat(x), TensorVal::Flat(g)) => {
                        let mut dx = g.clone();
                        dx.zip_mut_with(x, |d, &v| {
                            if v <= 0.0 {
                                *d = 0.0;
                            }
                        });
                        TensorVal::Flat(dx)
                    }
                    _ => unreachable!(),
                };
                (dx, vec![])
            }
            LayerKind::Sigmoid => {
                let out = &trace.outputs[idx];
                let dx = match (out, dout) {
                    (TensorVal::Map(y), TensorVal::Map(g)) => {
                        let mut dx = g.clone();
                        dx.zip_mut_with(y, |d, &p| *d *= p * (1.0 - p));
                        TensorVal::Map(dx)
                    }
                    (TensorVal::Flat(y), TensorVal::Flat(g)) => {
                        let mut dx = g.clone();
                        dx.zip_mut_with(y, |d, &p| *d *= p * (1.0 - p));
                        TensorVal::Flat(dx)
                    }
                    _ => unreachable!(),
                };
                (dx, vec![])
            }
            LayerKind::MaxPool { .. } => {
                let LayerCache::Pool(arg) = &trace.caches[idx] else {
                    panic!("maxpool backward requires its argmax cache");
                };
                let dx = layers::maxpool_backward(input.map().dim(), arg, dout.map().view());
                (TensorVal::Map(dx), vec![])
            }
            LayerKind::AvgPoolGlobal => {
                let dx = layers::global_avgpool_backward(input.map().dim(), dout.flat().view());
                (TensorVal::Map(dx), vec![])
            }
            LayerKind::Dense { bias, .. } => {
                let w = self.params[idx][0].a2();
                let (dx, dw, db) =
                    layers::dense_backward(input.flat().view(), w, *bias, dout.flat().view());
                let mut dparams = vec![PTensor::A2(dw)];
                if let Some(db) = db {
                    dparams.push(PTensor::A1(db));
                }
                (TensorVal::Flat(dx), dparams)
            }
            LayerKind::UpsampleNearest { factor } => (
                TensorVal::Map(layers::upsample_backward(*factor, dout.map().view())),
                vec![],
            ),
            LayerKind::SkipAdd { .. } => (dout.clone(), vec![]),
        }
    }

    /// Probabilities from the designated head of a trace.
    pub fn probabilities(&self, trace: &Trace) -> Array1<f64> {
        trace.outputs[self.spec.prob_head].flat().column(0).to_owned()
    }

    /// Reconstruction output, when the net has one.
    pub fn reconstruction(&self, trace: &Trace) -> Option<Array4<f64>> {
        self.spec
            .recon_head
            .map(|r| trace.outputs[r].map().clone())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimKind {
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

pub struct Optimizer {
    kind: OptimKind,
    /// First moment (or velocity) per parameter tensor.
    m: Grads,
    /// Second moment, Adam only.
    v: Grads,
    t: usize,
}

impl Optimizer {
    pub fn new(kind: OptimKind, net: &Network) -> Optimizer {
        Optimizer {
            kind,
            m: net.zero_grads(),
            v: net.zero_grads(),
            t: 0,
        }
    }

    pub fn step(&mut self, net: &mut Network, grads: &Grads, lr: f64) {
        self.t += 1;
        match self.kind {
            OptimKind::SgdMomentum { momentum } => {
                for (node, ng) in grads.iter().enumerate() {
                    for (pi, g) in ng.iter().enumerate() {
                        update_pair(&mut self.m[node][pi], g, |mv, gv| {
                            *mv = momentum * *mv + gv;
                        });
                        apply_pair(&mut net.params[node][pi], &self.m[node][pi], |p, mv| {
                            *p -= lr * mv;
                        });
                    }
                }
            }
            OptimKind::Adam { beta1, beta2, eps } => {
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                for (node, ng) in grads.iter().enumerate() {
                    for (pi, g) in ng.iter().enumerate() {
                        update_pair(&mut self.m[node][pi], g, |mv, gv| {
                            *mv = beta1 * *mv + (1.0 - beta1) * gv;
                        });
                        update_pair(&mut self.v[node][pi], g, |vv, gv| {
                            *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                        });
                        let (m, v) = (&self.m[node][pi], &self.v[node][pi]);
                        apply_adam(&mut net.params[node][pi], m, v, lr, bc1, bc2, eps);
                    }
                }
            }
        }
    }
}

fn update_pair(state: &mut PTensor, grad: &PTensor, f: impl Fn(&mut f64, f64)) {
    match (state, grad) {
        (PTensor::A1(s), PTensor::A1(g)) => s.zip_mut_with(g, |sv, &gv| f(sv, gv)),
        (PTensor::A2(s), PTensor::A2(g)) => s.zip_mut_with(g, |sv, &gv| f(sv, gv)),
        _ => unreachable!(),
    }
}

fn apply_pair(param: &mut PTensor, state: &PTensor, f: impl Fn(&mut f64, f64)) {
    match (param, state) {
        (PTensor::A1(p), PTensor::A1(s)) => p.zip_mut_with(s, |pv, &sv| f(pv, sv)),
        (PTensor::A2(p), PTensor::A2(s)) => p.zip_mut_with(s, |pv, &sv| f(pv, sv)),
        _ => unreachable!(),
    }
}

fn apply_adam(
    param: &mut PTensor,
    m: &PTensor,
    v: &PTensor,
    lr: f64,
    bc1: f64,
    bc2: f64,
    eps: f64,
) {
    let step = |p: &mut f64, mv: f64, vv: f64| {
        let mh = mv / bc1;
        let vh = vv / bc2;
        *p -= lr * mh / (vh.sqrt() + eps);
    };
    match (param, m, v) {
        (PTensor::A1(p), PTensor::A1(ma), PTensor::A1(va)) => {
            for ((pv, &mv), &vv) in p.iter_mut().zip(ma.iter()).zip(va.iter()) {
                step(pv, mv, vv);
            }
        }
        (PTensor::A2(p), PTensor::A2(ma), PTensor::A2(va)) => {
            for ((pv, &mv), &vv) in p.iter_mut().zip(ma.iter()).zip(va.iter()) {
                step(pv, mv, vv);
            }
        }
        _ => unreachable!(),
    }
}
