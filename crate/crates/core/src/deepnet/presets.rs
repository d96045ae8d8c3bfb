//! Named network presets.
//!
//! `resnet34_reference` is the canonical 34-layer residual arrangement
//! (3-4-6-3 blocks, widths 64..512) adapted to one input channel with a
//! single-logit head; it exists for cost accounting and is not trained here.
//! `resnet_mini` keeps the topology family at block counts (1,1,1,1) and base
//! width 16 for desk-scale training, with per-channel affine layers in place
//! of batch norm. `segnet_mini` is a three-stage conv autoencoder whose
//! classifier reads the bottleneck.

use super::graph::{InputRef, LayerKind, LayerNode, NetSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Resnet34Reference,
    ResnetMini,
    SegnetMini,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Resnet34Reference => "resnet34_reference",
            Preset::ResnetMini => "resnet_mini",
            Preset::SegnetMini => "segnet_mini",
        }
    }

    pub fn parse(name: &str) -> Result<Preset> {
        match name {
            "resnet34_reference" => Ok(Preset::Resnet34Reference),
            "resnet_mini" => Ok(Preset::ResnetMini),
            "segnet_mini" => Ok(Preset::SegnetMini),
            other => Err(Error::invalid_input(format!("unknown preset \"{other}\""))),
        }
    }
}

struct NetBuilder {
    nodes: Vec<LayerNode>,
    last: InputRef,
}

#[derive(Clone, Copy)]
enum Norm {
    Batch,
    Affine,
}

impl NetBuilder {
    fn new() -> Self {
        NetBuilder {
            nodes: Vec::new(),
            last: InputRef::Input,
        }
    }

    fn push(&mut self, kind: LayerKind) -> usize {
        self.nodes.push(LayerNode {
            kind,
            input: self.last,
        });
        let idx = self.nodes.len() - 1;
        self.last = InputRef::Node(idx);
        idx
    }

    fn mark(&self) -> InputRef {
        self.last
    }

    fn resume(&mut self, at: InputRef) {
        self.last = at;
    }

    fn conv(
        &mut self,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bias: bool,
    ) -> usize {
        self.push(LayerKind::Conv2d {
            in_ch,
            out_ch,
            kernel: (kernel, kernel),
            stride: (stride, stride),
            padding: (padding, padding),
            bias,
        })
    }

    fn norm(&mut self, kind: Norm, channels: usize) -> usize {
        match kind {
            Norm::Batch => self.push(LayerKind::BatchNorm { channels }),
            Norm::Affine => self.push(LayerKind::ChannelAffine { channels }),
        }
    }

    /// Two-conv residual block with an optional projection shortcut.
    /// Returns the index of a projection conv when one was needed.
    fn residual_block(
        &mut self,
        in_ch: usize,
        out_ch: usize,
        stride: usize,
        norm: Norm,
    ) -> Option<usize> {
        let entry = self.mark();
        self.conv(in_ch, out_ch, 3, stride, 1, false);
        self.norm(norm, out_ch);
        self.push(LayerKind::Relu);
        self.conv(out_ch, out_ch, 3, 1, 1, false);
        self.norm(norm, out_ch);
        let main = self.mark();

        let (shortcut, projection) = if stride != 1 || in_ch != out_ch {
            self.resume(entry);
            let proj = self.conv(in_ch, out_ch, 1, stride, 0, false);
            self.norm(norm, out_ch);
            (self.mark(), Some(proj))
        } else {
            (entry, None)
        };

        self.resume(main);
        self.push(LayerKind::SkipAdd { other: shortcut });
        self.push(LayerKind::Relu);
        projection
    }
}

/// Build a preset net for a (height, width) single-channel input.
pub fn build_preset(preset: Preset, input_dims: (usize, usize)) -> Result<NetSpec> {
    let (h, w) = input_dims;
    let spec = match preset {
        Preset::Resnet34Reference => {
            let mut b = NetBuilder::new();
            let mut projections = Vec::new();
            b.conv(1, 64, 7, 2, 3, false);
            b.norm(Norm::Batch, 64);
            b.push(LayerKind::Relu);
            b.push(LayerKind::MaxPool {
                kernel: (3, 3),
                stride: (2, 2),
                padding: (1, 1),
            });
            let widths = [64usize, 128, 256, 512];
            let blocks = [3usize, 4, 6, 3];
            let mut in_ch = 64;
            for (stage, (&width, &count)) in widths.iter().zip(&blocks).enumerate() {
                for block in 0..count {
                    let stride = if stage > 0 && block == 0 { 2 } else { 1 };
                    if let Some(p) = b.residual_block(in_ch, width, stride, Norm::Batch) {
                        projections.push(p);
                    }
                    in_ch = width;
                }
            }
            b.push(LayerKind::AvgPoolGlobal);
            b.push(LayerKind::Dense {
                in_features: 512,
                out_features: 1,
                bias: true,
            });
            let prob = b.push(LayerKind::Sigmoid);
            NetSpec {
                preset: preset.name().to_string(),
                input: (1, h, w),
                nodes: b.nodes,
                prob_head: prob,
                recon_head: None,
                projection_convs: projections,
            }
        }
        Preset::ResnetMini => {
            let mut b = NetBuilder::new();
            let mut projections = Vec::new();
            b.conv(1, 16, 3, 1, 1, false);
            b.norm(Norm::Affine, 16);
            b.push(LayerKind::Relu);
            let widths = [16usize, 32, 64, 128];
            let strides = [1usize, 2, 2, 2];
            let mut in_ch = 16;
            for (&width, &stride) in widths.iter().zip(&strides) {
                if let Some(pr) = b.residual_block(in_ch, width, stride, Norm::Affine) {
                    projections.push(pr);
                }
                in_ch = width;
            }
            b.push(LayerKind::AvgPoolGlobal);
            b.push(LayerKind::Dense {
                in_features: 128,
                out_features: 1,
                bias: true,
            });
            let prob = b.push(LayerKind::Sigmoid);
            NetSpec {
                preset: preset.name().to_string(),
                input: (1, h, w),
                nodes: b.nodes,
                prob_head: prob,
                recon_head: None,
                projection_convs: projections,
            }
        }
        Preset::SegnetMini => {
            if h % 8 != 0 || w % 8 != 0 {
                return Err(Error::invalid_input(
                    "segnet_mini: input dims must be divisible by 8",
                ));
            }
            let mut b = NetBuilder::new();
            let enc_widths = [8usize, 16, 32];
            let mut in_ch = 1;
            for &width in &enc_widths {
                b.conv(in_ch, width, 3, 1, 1, true);
                b.norm(Norm::Affine, width);
                b.push(LayerKind::Relu);
                b.push(LayerKind::MaxPool {
                    kernel: (2, 2),
                    stride: (2, 2),
                    padding: (0, 0),
                });
                in_ch = width;
            }
            let bottleneck = b.mark();

            // Classifier on the latent representation.
            b.push(LayerKind::AvgPoolGlobal);
            b.push(LayerKind::Dense {
                in_features: 32,
                out_features: 1,
                bias: true,
            });
            let prob = b.push(LayerKind::Sigmoid);

            // Mirrored decoder.
            b.resume(bottleneck);
            let dec = [(32usize, 16usize), (16, 8)];
            for &(from, to) in &dec {
                b.push(LayerKind::UpsampleNearest { factor: (2, 2) });
                b.conv(from, to, 3, 1, 1, true);
                b.norm(Norm::Affine, to);
                b.push(LayerKind::Relu);
            }
            b.push(LayerKind::UpsampleNearest { factor: (2, 2) });
            let recon = b.conv(8, 1, 3, 1, 1, true);

            NetSpec {
                preset: preset.name().to_string(),
                input: (1, h, w),
                nodes: b.nodes,
                prob_head: prob,
                recon_head: Some(recon),
                projection_convs: Vec::new(),
            }
        }
    };
    spec.infer_shapes()?;
    Ok(spec)
}
