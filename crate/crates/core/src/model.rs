//! Trained-model artifacts with a uniform scoring interface and a shared
//! checkpoint container.
//!
//! Checkpoint layout: magic `NDTM`, version u16 LE, family tag u8, a
//! length-prefixed JSON header describing the model structure, then
//! length-prefixed little-endian f64 parameter blocks. Classic models carry
//! the feature scaler and MPC-recovery settings used to build their
//! test-time inputs; nets carry their graph, parameters, and pooling recipe.

use crate::adcpm::TransformPlan;
use crate::channel::{ArrayConfig, ChannelMatrix, OfdmConfig};
use crate::classic_ml::{rf_score, svm_score, Kernel, RfModel, SvmModel, Tree};
use crate::deepnet::{AdcpmRecipe, forward_batch, NetSpec, Network, PTensor};
use crate::error::{Error, Result};
use crate::evalkit::ChannelScorer;
use crate::features::{estimate_mpc_with_plan, extract_features, Scaler};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"NDTM";
const VERSION: u16 = 1;

const FAMILY_SVM: u8 = 1;
const FAMILY_RF: u8 = 2;
const FAMILY_NET: u8 = 3;

/// Peak-picking settings for test-time MPC recovery.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub max_paths: usize,
    pub threshold_db: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            max_paths: 10,
            threshold_db: 20.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

pub struct SvmArtifact {
    pub name: String,
    pub model: SvmModel,
    pub scaler: Scaler,
    pub mpc: MpcConfig,
    pub array: ArrayConfig,
    pub ofdm: OfdmConfig,
    plan: TransformPlan,
}

pub struct RfArtifact {
    pub name: String,
    pub model: RfModel,
    pub scaler: Scaler,
    pub mpc: MpcConfig,
    pub array: ArrayConfig,
    pub ofdm: OfdmConfig,
    plan: TransformPlan,
}

pub struct NetArtifact {
    pub name: String,
    pub network: Network,
    pub pool: Option<(usize, usize)>,
    pub array: ArrayConfig,
    pub ofdm: OfdmConfig,
    recipe: AdcpmRecipe,
}

impl SvmArtifact {
    pub fn new(
        name: impl Into<String>,
        model: SvmModel,
        scaler: Scaler,
        mpc: MpcConfig,
        array: ArrayConfig,
        ofdm: OfdmConfig,
    ) -> Self {
        let plan = TransformPlan::new(&array, &ofdm);
        SvmArtifact {
            name: name.into(),
            model,
            scaler,
            mpc,
            array,
            ofdm,
            plan,
        }
    }
}

impl RfArtifact {
    pub fn new(
        name: impl Into<String>,
        model: RfModel,
        scaler: Scaler,
        mpc: MpcConfig,
        array: ArrayConfig,
        ofdm: OfdmConfig,
    ) -> Self {
        let plan = TransformPlan::new(&array, &ofdm);
        RfArtifact {
            name: name.into(),
            model,
            scaler,
            mpc,
            array,
            ofdm,
            plan,
        }
    }
}

impl NetArtifact {
    pub fn new(
        name: impl Into<String>,
        network: Network,
        pool: Option<(usize, usize)>,
        array: ArrayConfig,
        ofdm: OfdmConfig,
    ) -> Self {
        let recipe = AdcpmRecipe {
            plan: TransformPlan::new(&array, &ofdm),
            pool,
        };
        NetArtifact {
            name: name.into(),
            network,
            pool,
            array,
            ofdm,
            recipe,
        }
    }

    pub fn recipe(&self) -> &AdcpmRecipe {
        &self.recipe
    }
}

/// Classic-model features from an estimated channel; empty recoveries score
/// as maximally NLoS.
fn classic_features(
    plan: &TransformPlan,
    h_est: &ChannelMatrix,
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
    mpc: &MpcConfig,
    scaler: &Scaler,
) -> Result<Option<Array1<f64>>> {
    let set = estimate_mpc_with_plan(plan, h_est, array, ofdm, mpc.max_paths, mpc.threshold_db)?;
    if set.paths.is_empty() {
        return Ok(None);
    }
    let f = scaler.apply(&extract_features(&set)?);
    Ok(Some(Array1::from(f.to_array().to_vec())))
}

impl ChannelScorer for SvmArtifact {
    fn score_channel(&self, h_est: &ChannelMatrix) -> Result<f64> {
        match classic_features(&self.plan, h_est, &self.array, &self.ofdm, &self.mpc, &self.scaler)? {
            // Logistic squash maps the margin into (0,1): the 0.5 accuracy
            // threshold coincides with the sign rule and AUC is unchanged.
            Some(x) => Ok(crate::deepnet::sigmoid(svm_score(&self.model, x.view()))),
            None => Ok(0.0),
        }
    }

    fn name(&self) -> &str {
        &self.name
    }
}

impl ChannelScorer for RfArtifact {
    fn score_channel(&self, h_est: &ChannelMatrix) -> Result<f64> {
        match classic_features(&self.plan, h_est, &self.array, &self.ofdm, &self.mpc, &self.scaler)? {
            Some(x) => Ok(rf_score(&self.model, x.view())),
            None => Ok(0.0),
        }
    }

    fn name(&self) -> &str {
        &self.name
    }
}

impl ChannelScorer for NetArtifact {
    fn score_channel(&self, h_est: &ChannelMatrix) -> Result<f64> {
        let x = self.recipe.build(&h_est.data)?;
        let (probs, _) = forward_batch(&self.network, &[x])?;
        Ok(probs[0])
    }

    fn name(&self) -> &str {
        &self.name
    }
}

pub enum ModelArtifact {
    Svm(SvmArtifact),
    Rf(RfArtifact),
    Net(NetArtifact),
}

impl ModelArtifact {
    pub fn scorer(&self) -> &dyn ChannelScorer {
        match self {
            ModelArtifact::Svm(a) => a,
            ModelArtifact::Rf(a) => a,
            ModelArtifact::Net(a) => a,
        }
    }

    pub fn name(&self) -> &str {
        self.scorer().name()
    }
}

// ---------------------------------------------------------------------------
// Checkpoint container
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SvmHeader {
    name: String,
    kernel: Kernel,
    c: f64,
    bias: f64,
    n_sv: usize,
    dim: usize,
    scaler: Scaler,
    mpc: MpcConfig,
    array: ArrayConfig,
    ofdm: OfdmConfig,
}

#[derive(Serialize, Deserialize)]
struct RfHeader {
    name: String,
    trees: Vec<Tree>,
    max_depth: usize,
    min_leaf: usize,
    seed: u64,
    oob_error: Option<f64>,
    scaler: Scaler,
    mpc: MpcConfig,
    array: ArrayConfig,
    ofdm: OfdmConfig,
}

#[derive(Serialize, Deserialize)]
struct NetHeader {
    name: String,
    spec: NetSpec,
    pool: Option<(usize, usize)>,
    array: ArrayConfig,
    ofdm: OfdmConfig,
    /// Rank-2 tensor dims per block, None for rank-1, in block order.
    block_dims: Vec<Option<(usize, usize)>>,
}

fn write_envelope(w: &mut impl Write, family: u8, header: &[u8], blocks: &[Vec<f64>]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u8(family)?;
    w.write_u32::<LittleEndian>(header.len() as u32)?;
    w.write_all(header)?;
    w.write_u32::<LittleEndian>(blocks.len() as u32)?;
    for b in blocks {
        w.write_u64::<LittleEndian>(b.len() as u64)?;
        for &v in b {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    Ok(())
}

fn read_envelope(r: &mut impl Read) -> Result<(u8, Vec<u8>, Vec<Vec<f64>>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data("checkpoint: bad magic bytes".into()));
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Data(format!("checkpoint: unsupported version {version}")));
    }
    let family = r.read_u8()?;
    let hlen = r.read_u32::<LittleEndian>()? as usize;
    let mut header = vec![0u8; hlen];
    r.read_exact(&mut header)?;
    let nblocks = r.read_u32::<LittleEndian>()? as usize;
    let mut blocks = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let len = r.read_u64::<LittleEndian>()? as usize;
        let mut b = Vec::with_capacity(len);
        for _ in 0..len {
            b.push(r.read_f64::<LittleEndian>()?);
        }
        blocks.push(b);
    }
    Ok((family, header, blocks))
}

pub fn save_model(artifact: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    serialize_model(artifact, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| {
        Error::Data(format!("cannot read checkpoint {}: {e}", path.as_ref().display()))
    })?;
    deserialize_model(&mut bytes.as_slice())
}

pub fn serialize_model(artifact: &ModelArtifact, w: &mut impl Write) -> Result<()> {
    let json_err = |e: serde_json::Error| Error::Data(format!("checkpoint header: {e}"));
    match artifact {
        ModelArtifact::Svm(a) => {
            let header = serde_json::to_vec(&SvmHeader {
                name: a.name.clone(),
                kernel: a.model.kernel,
                c: a.model.c,
                bias: a.model.bias,
                n_sv: a.model.dual_coef.len(),
                dim: a.model.support_x.ncols(),
                scaler: a.scaler.clone(),
                mpc: a.mpc,
                array: a.array,
                ofdm: a.ofdm,
            })
            .map_err(json_err)?;
            let blocks = vec![
                a.model.support_x.iter().copied().collect(),
                a.model.dual_coef.clone(),
                a.model.alphas.clone(),
                a.model.labels.clone(),
            ];
            write_envelope(w, FAMILY_SVM, &header, &blocks)
        }
        ModelArtifact::Rf(a) => {
            let header = serde_json::to_vec(&RfHeader {
                name: a.name.clone(),
                trees: a.model.trees.clone(),
                max_depth: a.model.max_depth,
                min_leaf: a.model.min_leaf,
                seed: a.model.seed,
                oob_error: a.model.oob_error,
                scaler: a.scaler.clone(),
                mpc: a.mpc,
                array: a.array,
                ofdm: a.ofdm,
            })
            .map_err(json_err)?;
            write_envelope(w, FAMILY_RF, &header, &[])
        }
        ModelArtifact::Net(a) => {
            let mut blocks = Vec::new();
            let mut block_dims = Vec::new();
            for np in &a.network.params {
                for p in np {
                    match p {
                        PTensor::A1(v) => {
                            block_dims.push(None);
                            blocks.push(v.to_vec());
                        }
                        PTensor::A2(m) => {
                            block_dims.push(Some(m.dim()));
                            blocks.push(m.iter().copied().collect());
                        }
                    }
                }
            }
            for bufs in &a.network.buffers {
                for b in bufs {
                    block_dims.push(None);
                    blocks.push(b.to_vec());
                }
            }
            let header = serde_json::to_vec(&NetHeader {
                name: a.name.clone(),
                spec: a.network.spec.clone(),
                pool: a.pool,
                array: a.array,
                ofdm: a.ofdm,
                block_dims,
            })
            .map_err(json_err)?;
            write_envelope(w, FAMILY_NET, &header, &blocks)
        }
    }
}

pub fn deserialize_model(r: &mut impl Read) -> Result<ModelArtifact> {
    let (family, header, blocks) = read_envelope(r)?;
    let json_err = |e: serde_json::Error| Error::Data(format!("checkpoint header: {e}"));
    match family {
        FAMILY_SVM => {
            let h: SvmHeader = serde_json::from_slice(&header).map_err(json_err)?;
            if blocks.len() != 4 || blocks[0].len() != h.n_sv * h.dim {
                return Err(Error::Data("checkpoint: svm block layout mismatch".into()));
            }
            let support_x = Array2::from_shape_vec((h.n_sv, h.dim), blocks[0].clone())
                .map_err(|e| Error::Data(format!("checkpoint: {e}")))?;
            let model = SvmModel {
                kernel: h.kernel,
                c: h.c,
                support_x,
                dual_coef: blocks[1].clone(),
                bias: h.bias,
                alphas: blocks[2].clone(),
                labels: blocks[3].clone(),
            };
            Ok(ModelArtifact::Svm(SvmArtifact::new(
                h.name, model, h.scaler, h.mpc, h.array, h.ofdm,
            )))
        }
        FAMILY_RF => {
            let h: RfHeader = serde_json::from_slice(&header).map_err(json_err)?;
            let model = RfModel {
                trees: h.trees,
                max_depth: h.max_depth,
                min_leaf: h.min_leaf,
                seed: h.seed,
                oob_error: h.oob_error,
            };
            Ok(ModelArtifact::Rf(RfArtifact::new(
                h.name, model, h.scaler, h.mpc, h.array, h.ofdm,
            )))
        }
        FAMILY_NET => {
            let h: NetHeader = serde_json::from_slice(&header).map_err(json_err)?;
            let mut network = Network::init(h.spec, 0)?;
            let mut it = blocks.into_iter().zip(h.block_dims);
            for np in &mut network.params {
                for p in np {
                    let Some((data, dims)) = it.next() else {
                        return Err(Error::Data("checkpoint: missing parameter block".into()));
                    };
                    *p = match dims {
                        None => PTensor::A1(Array1::from(data)),
                        Some(d) => PTensor::A2(
                            Array2::from_shape_vec(d, data)
                                .map_err(|e| Error::Data(format!("checkpoint: {e}")))?,
                        ),
                    };
                }
            }
            for bufs in &mut network.buffers {
                for b in bufs {
                    let Some((data, _)) = it.next() else {
                        return Err(Error::Data("checkpoint: missing buffer block".into()));
                    };
                    *b = Array1::from(data);
                }
            }
            Ok(ModelArtifact::Net(NetArtifact::new(
                h.name, network, h.pool, h.array, h.ofdm,
            )))
        }
        other => Err(Error::Data(format!("checkpoint: unknown family tag {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ElementPattern;
    use crate::classic_ml::{rf_train, svm_train};
    use crate::deepnet::{build_preset, Preset};
    use ndarray::array;

    fn desk_array() -> ArrayConfig {
        ArrayConfig {
            rows: 4,
            cols: 8,
            dv: 0.8,
            dh: 0.5,
            pattern: ElementPattern::Isotropic,
        }
    }

    fn desk_ofdm() -> OfdmConfig {
        OfdmConfig {
            fc: 28e9,
            bandwidth: 100e6,
            n_subcarriers: 32,
            n_guard: 24,
        }
    }

    fn default_scaler() -> Scaler {
        Scaler {
            mean: [0.0; 6],
            std: [1.0; 6],
        }
    }

    #[test]
    fn svm_checkpoint_round_trip() {
        let x = array![[0.0, 1.0], [1.0, 0.5], [0.4, -1.0], [-1.0, 0.2]];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        let model = svm_train(&x, &y, Kernel::Rbf { gamma: 0.7 }, 5.0, 1e-6).unwrap();
        let art = ModelArtifact::Svm(SvmArtifact::new(
            "svm_rbf",
            model,
            default_scaler(),
            MpcConfig::default(),
            desk_array(),
            desk_ofdm(),
        ));
        let mut buf = Vec::new();
        serialize_model(&art, &mut buf).unwrap();
        let back = deserialize_model(&mut buf.as_slice()).unwrap();
        let ModelArtifact::Svm(b) = back else {
            panic!("family mismatch");
        };
        let ModelArtifact::Svm(a) = art else {
            unreachable!()
        };
        assert_eq!(a.model.dual_coef, b.model.dual_coef);
        assert_eq!(a.model.bias, b.model.bias);
        assert_eq!(a.model.support_x, b.model.support_x);

        // Serialization is byte-deterministic.
        let mut buf2 = Vec::new();
        serialize_model(&ModelArtifact::Svm(a), &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn rf_checkpoint_round_trip() {
        let vals = [0.0, 0.3, 0.7, 1.0, 5.0, 5.4, 5.8, 6.0];
        let x = Array2::from_shape_vec((8, 1), vals.to_vec()).unwrap();
        let y = vec![0u8, 0, 0, 0, 1, 1, 1, 1];
        let model = rf_train(&x, &y, 7, 4, 1, 3).unwrap();
        let art = ModelArtifact::Rf(RfArtifact::new(
            "rf",
            model,
            default_scaler(),
            MpcConfig::default(),
            desk_array(),
            desk_ofdm(),
        ));
        let mut buf = Vec::new();
        serialize_model(&art, &mut buf).unwrap();
        let back = deserialize_model(&mut buf.as_slice()).unwrap();
        let (ModelArtifact::Rf(a), ModelArtifact::Rf(b)) = (art, back) else {
            panic!("family mismatch");
        };
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn net_checkpoint_round_trip_preserves_scores() {
        // ADCPM of the desk config below is NM x Nc = 32 x 32.
        let spec = build_preset(Preset::ResnetMini, (32, 32)).unwrap();
        let net = Network::init(spec, 5).unwrap();
        let art = NetArtifact::new("resnet_mini", net, None, desk_array(), desk_ofdm());

        // A synthetic estimated channel to score.
        let set = crate::geometry::MultipathSet {
            paths: vec![crate::geometry::PathComponent {
                gain: 1.0,
                delay: 5.0 / desk_ofdm().bandwidth,
                azimuth: 0.3,
                elevation: -0.05,
                bounces: 0,
            }],
            is_los: true,
            ue_position: crate::vec3::Vec3::default(),
        };
        let mut h = crate::channel::synth_cfr(&set, &desk_array(), &desk_ofdm()).unwrap();
        h.kind = crate::channel::ChannelKind::Estimated;
        let before = art.score_channel(&h).unwrap();

        let art = ModelArtifact::Net(art);
        let mut buf = Vec::new();
        serialize_model(&art, &mut buf).unwrap();
        let back = deserialize_model(&mut buf.as_slice()).unwrap();
        let after = back.scorer().score_channel(&h).unwrap();
        assert_eq!(before, after);
        assert_eq!(back.name(), "resnet_mini");
    }

    #[test]
    fn bad_magic_is_a_data_error() {
        let bytes = b"XXXX\x01\x00\x01";
        match deserialize_model(&mut bytes.as_slice()) {
            Err(Error::Data(_)) => {}
            Err(other) => panic!("wrong error kind: {other}"),
            Ok(_) => panic!("bad magic accepted"),
        }
    }
}
