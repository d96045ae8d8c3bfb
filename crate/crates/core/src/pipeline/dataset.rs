//! Labeled dataset generation and the binary sample container.
//!
//! Container layout (all little-endian): magic `NDTL`, version u16, then one
//! record per sample until end of file. Record: UE position as 3 f64, path
//! count u32 followed by 5 f64 per path (gain, delay, azimuth, elevation,
//! bounce count), channel dims as 2 u32 followed by interleaved complex f32
//! row-major, label u8. The format is streamable and language-neutral.

use crate::channel::{synth_cfr, ArrayConfig, ChannelKind, ChannelMatrix, OfdmConfig};
use crate::error::{Error, Result};
use crate::geometry::{trace_paths, MultipathSet, PathComponent, Scene};
use crate::rng::{derive_rng, stream};
use crate::vec3::Vec3;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"NDTL";
const VERSION: u16 = 1;

/// One labeled sample: twin ground truth plus the true channel.
#[derive(Clone, Debug)]
pub struct Sample {
    pub ue_position: Vec3,
    pub truth: MultipathSet,
    pub channel: ChannelMatrix,
    pub label: u8,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn los_count(&self) -> usize {
        self.samples.iter().filter(|s| s.label == 1).count()
    }
}

/// Exclusion counters recorded alongside generation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenStats {
    pub grid_positions: usize,
    pub outage_excluded: usize,
    pub cp_rejected: usize,
    pub subsampled_away: usize,
}

/// Trace, label, and synthesize every grid UE. Outage positions (no paths)
/// are excluded; samples whose longest delay exceeds the cyclic prefix are
/// rejected; both are counted. With `max_samples` set the survivors are
/// subsampled uniformly (seeded) to exactly that count.
pub fn generate_dataset(
    scene: &Scene,
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
    cell_size: f64,
    ue_height: f64,
    max_samples: Option<usize>,
    seed: u64,
) -> Result<(Dataset, GenStats)> {
    array.validate()?;
    ofdm.validate()?;
    let grid = crate::geometry::ue_grid(scene, cell_size, ue_height)?;
    let wavelength = ofdm.wavelength();
    let cp = ofdm.cp_duration();

    enum Outcome {
        Keep(Box<Sample>),
        Outage,
        CpReject,
    }

    let outcomes: Vec<Outcome> = grid
        .par_iter()
        .map(|&ue| -> Result<Outcome> {
            let truth = trace_paths(scene, ue, scene.bs_position, wavelength)?;
            if truth.is_outage() {
                return Ok(Outcome::Outage);
            }
            if truth.max_delay().unwrap() > cp {
                return Ok(Outcome::CpReject);
            }
            let channel = synth_cfr(&truth, array, ofdm)?;
            let label = u8::from(truth.is_los);
            Ok(Outcome::Keep(Box::new(Sample {
                ue_position: ue,
                truth,
                channel,
                label,
            })))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut stats = GenStats {
        grid_positions: grid.len(),
        ..GenStats::default()
    };
    let mut samples = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Keep(s) => samples.push(*s),
            Outcome::Outage => stats.outage_excluded += 1,
            Outcome::CpReject => stats.cp_rejected += 1,
        }
    }

    if let Some(cap) = max_samples {
        if cap < samples.len() {
            let mut idx: Vec<usize> = (0..samples.len()).collect();
            let mut rng = derive_rng(seed, stream::SUBSAMPLE, 0);
            idx.shuffle(&mut rng);
            idx.truncate(cap);
            idx.sort_unstable();
            stats.subsampled_away = samples.len() - cap;
            let mut kept = Vec::with_capacity(cap);
            for (pos, s) in samples.into_iter().enumerate() {
                if idx.binary_search(&pos).is_ok() {
                    kept.push(s);
                }
            }
            samples = kept;
        }
    }

    Ok((Dataset { samples }, stats))
}

// ---------------------------------------------------------------------------
// Container i/o
// ---------------------------------------------------------------------------

pub fn write_dataset(dataset: &Dataset, w: &mut impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    for s in &dataset.samples {
        w.write_f64::<LittleEndian>(s.ue_position.x)?;
        w.write_f64::<LittleEndian>(s.ue_position.y)?;
        w.write_f64::<LittleEndian>(s.ue_position.z)?;
        w.write_u32::<LittleEndian>(s.truth.paths.len() as u32)?;
        for p in &s.truth.paths {
            w.write_f64::<LittleEndian>(p.gain)?;
            w.write_f64::<LittleEndian>(p.delay)?;
            w.write_f64::<LittleEndian>(p.azimuth)?;
            w.write_f64::<LittleEndian>(p.elevation)?;
            w.write_f64::<LittleEndian>(p.bounces as f64)?;
        }
        let (rows, cols) = s.channel.data.dim();
        w.write_u32::<LittleEndian>(rows as u32)?;
        w.write_u32::<LittleEndian>(cols as u32)?;
        for v in s.channel.data.iter() {
            w.write_f32::<LittleEndian>(v.re as f32)?;
            w.write_f32::<LittleEndian>(v.im as f32)?;
        }
        w.write_u8(s.label)?;
    }
    Ok(())
}

pub fn read_dataset(r: &mut impl Read) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data("dataset: bad magic bytes".into()));
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Data(format!("dataset: unsupported version {version}")));
    }
    let mut samples = Vec::new();
    loop {
        // Either a clean end of file or a full record.
        let x = match r.read_f64::<LittleEndian>() {
            Ok(v) => v,
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        };
        let y = r.read_f64::<LittleEndian>()?;
        let z = r.read_f64::<LittleEndian>()?;
        let n_paths = r.read_u32::<LittleEndian>()? as usize;
        let mut paths = Vec::with_capacity(n_paths);
        for _ in 0..n_paths {
            let gain = r.read_f64::<LittleEndian>()?;
            let delay = r.read_f64::<LittleEndian>()?;
            let azimuth = r.read_f64::<LittleEndian>()?;
            let elevation = r.read_f64::<LittleEndian>()?;
            let bounces = r.read_f64::<LittleEndian>()? as u32;
            paths.push(PathComponent {
                gain,
                delay,
                azimuth,
                elevation,
                bounces,
            });
        }
        let rows = r.read_u32::<LittleEndian>()? as usize;
        let cols = r.read_u32::<LittleEndian>()? as usize;
        let mut data = Array2::<Complex64>::zeros((rows, cols));
        for v in data.iter_mut() {
            let re = r.read_f32::<LittleEndian>()?;
            let im = r.read_f32::<LittleEndian>()?;
            *v = Complex64::new(re as f64, im as f64);
        }
        let label = r.read_u8()?;
        let is_los = label == 1;
        samples.push(Sample {
            ue_position: Vec3::new(x, y, z),
            truth: MultipathSet {
                paths,
                is_los,
                ue_position: Vec3::new(x, y, z),
            },
            channel: ChannelMatrix {
                data,
                kind: ChannelKind::TrueChannel,
                outage: false,
            },
            label,
        });
    }
    Ok(Dataset { samples })
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    write_dataset(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let f = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::Data(format!("cannot read dataset {}: {e}", path.as_ref().display()))
    })?;
    read_dataset(&mut BufReader::new(f))
}
