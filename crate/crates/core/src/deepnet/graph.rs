//! Network graph description and static shape inference.
//!
//! A net is a list of layer nodes in topological order. Every node names its
//! input (the network input or an earlier node); residual connections use a
//! `SkipAdd` node with a second reference. Two heads are designated: a scalar
//! probability head and, for autoencoders, a reconstruction head.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputRef {
    /// The network input tensor.
    Input,
    /// Output of an earlier node.
    Node(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
        bias: bool,
    },
    /// Batch normalization over (batch, H, W) per channel.
    BatchNorm { channels: usize },
    /// Learnable per-channel scale and shift (normalization-free variant).
    ChannelAffine { channels: usize },
    Relu,
    MaxPool {
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
    },
    /// Global average pool: (B, C, H, W) -> feature vector (B, C).
    AvgPoolGlobal,
    Dense {
        in_features: usize,
        out_features: usize,
        bias: bool,
    },
    Sigmoid,
    /// Nearest-neighbor upsampling by integer factors.
    UpsampleNearest { factor: (usize, usize) },
    /// Elementwise sum with the output of `other`.
    SkipAdd { other: InputRef },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerNode {
    pub kind: LayerKind,
    pub input: InputRef,
}

/// Tensor shape per node: a (C, H, W) feature map or a flat feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Map { c: usize, h: usize, w: usize },
    Flat { f: usize },
}

impl Shape {
    pub fn elements(&self) -> usize {
        match self {
            Shape::Map { c, h, w } => c * h * w,
            Shape::Flat { f } => *f,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub preset: String,
    /// Input map dims (C, H, W); inputs here are single-channel power maps.
    pub input: (usize, usize, usize),
    pub nodes: Vec<LayerNode>,
    /// Node producing the (B, 1) probability.
    pub prob_head: usize,
    /// Node producing the input reconstruction, autoencoders only.
    pub recon_head: Option<usize>,
    /// Projection-shortcut convolutions, excluded from the canonical
    /// weighted-layer count.
    pub projection_convs: Vec<usize>,
}

impl NetSpec {
    /// Propagate shapes through the graph, validating declared channel and
    /// feature counts.
    pub fn infer_shapes(&self) -> Result<Vec<Shape>> {
        let input_shape = Shape::Map {
            c: self.input.0,
            h: self.input.1,
            w: self.input.2,
        };
        let mut shapes: Vec<Shape> = Vec::with_capacity(self.nodes.len());
        let fetch = |r: InputRef, shapes: &[Shape]| -> Result<Shape> {
            match r {
                InputRef::Input => Ok(input_shape),
                InputRef::Node(i) => shapes
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::invalid_input("net: forward reference in graph")),
            }
        };

        for (idx, node) in self.nodes.iter().enumerate() {
            let s_in = fetch(node.input, &shapes)?;
            let out = match node.kind {
                LayerKind::Conv2d {
                    in_ch,
                    out_ch,
                    kernel,
                    stride,
                    padding,
                    ..
                } => {
                    let Shape::Map { c, h, w } = s_in else {
                        return Err(Error::invalid_input(format!("node {idx}: conv on flat input")));
                    };
                    if c != in_ch {
                        return Err(Error::invalid_input(format!(
                            "node {idx}: conv expects {in_ch} channels, got {c}"
                        )));
                    }
                    let oh = (h + 2 * padding.0).checked_sub(kernel.0).ok_or_else(|| {
                        Error::invalid_input(format!("node {idx}: kernel exceeds padded input"))
                    })? / stride.0
                        + 1;
                    let ow = (w + 2 * padding.1).checked_sub(kernel.1).ok_or_else(|| {
                        Error::invalid_input(format!("node {idx}: kernel exceeds padded input"))
                    })? / stride.1
                        + 1;
                    Shape::Map {
                        c: out_ch,
                        h: oh,
                        w: ow,
                    }
                }
                LayerKind::BatchNorm { channels } | LayerKind::ChannelAffine { channels } => {
                    let Shape::Map { c, .. } = s_in else {
                        return Err(Error::invalid_input(format!(
                            "node {idx}: normalization on flat input"
                        )));
                    };
                    if c != channels {
                        return Err(Error::invalid_input(format!(
                            "node {idx}: affine/bn expects {channels} channels, got {c}"
                        )));
                    }
                    s_in
                }
                LayerKind::Relu | LayerKind::Sigmoid => s_in,
                LayerKind::MaxPool {
                    kernel,
                    stride,
                    padding,
                } => {
                    let Shape::Map { c, h, w } = s_in else {
                        return Err(Error::invalid_input(format!("node {idx}: pool on flat input")));
                    };
                    let oh = (h + 2 * padding.0 - kernel.0) / stride.0 + 1;
                    let ow = (w + 2 * padding.1 - kernel.1) / stride.1 + 1;
                    Shape::Map { c, h: oh, w: ow }
                }
                LayerKind::AvgPoolGlobal => {
                    let Shape::Map { c, .. } = s_in else {
                        return Err(Error::invalid_input(format!("node {idx}: pool on flat input")));
                    };
                    Shape::Flat { f: c }
                }
                LayerKind::Dense {
                    in_features,
                    out_features,
                    ..
                } => {
                    let Shape::Flat { f } = s_in else {
                        return Err(Error::invalid_input(format!("node {idx}: dense on map input")));
                    };
                    if f != in_features {
                        return Err(Error::invalid_input(format!(
                            "node {idx}: dense expects {in_features} features, got {f}"
                        )));
                    }
                    Shape::Flat { f: out_features }
                }
                LayerKind::UpsampleNearest { factor } => {
                    let Shape::Map { c, h, w } = s_in else {
                        return Err(Error::invalid_input(format!(
                            "node {idx}: upsample on flat input"
                        )));
                    };
                    Shape::Map {
                        c,
                        h: h * factor.0,
                        w: w * factor.1,
                    }
                }
                LayerKind::SkipAdd { other } => {
                    let s_other = fetch(other, &shapes)?;
                    if s_other != s_in {
                        return Err(Error::invalid_input(format!(
                            "node {idx}: skip_add shape mismatch {s_in:?} vs {s_other:?}"
                        )));
                    }
                    s_in
                }
            };
            shapes.push(out);
        }

        if self.prob_head >= self.nodes.len() {
            return Err(Error::invalid_input("net: prob_head out of range"));
        }
        if shapes[self.prob_head] != (Shape::Flat { f: 1 }) {
            return Err(Error::invalid_input("net: prob_head must produce one scalar"));
        }
        if let Some(r) = self.recon_head {
            if shapes.get(r).copied() != Some(input_shape) {
                return Err(Error::invalid_input(
                    "net: recon_head must reproduce the input dims",
                ));
            }
        }
        Ok(shapes)
    }

    /// Main-path weighted layers (convolutions and dense layers, projection
    /// shortcuts excluded), the canonical depth count.
    pub fn weighted_layer_count(&self) -> usize {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(i, n)| {
                matches!(n.kind, LayerKind::Conv2d { .. } | LayerKind::Dense { .. })
                    && !self.projection_convs.contains(i)
            })
            .count()
    }

    /// Total learnable parameter count.
    pub fn parameter_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n.kind {
                LayerKind::Conv2d {
                    in_ch,
                    out_ch,
                    kernel,
                    bias,
                    ..
                } => out_ch * in_ch * kernel.0 * kernel.1 + if bias { out_ch } else { 0 },
                LayerKind::Dense {
                    in_features,
                    out_features,
                    bias,
                } => in_features * out_features + if bias { out_features } else { 0 },
                LayerKind::BatchNorm { channels } | LayerKind::ChannelAffine { channels } => {
                    2 * channels
                }
                _ => 0,
            })
            .sum()
    }
}
