//! Scene geometry and specular multipath tracing.
//!
//! A scene is a set of axis-aligned building boxes on a flat ground plane,
//! plus a base station pose. Propagation paths are constructed with the image
//! method: the transmitter is mirrored across candidate reflector faces
//! (building walls, roofs, and the ground), the folded path is recovered by
//! backtracking from the receiver, and every segment is validated against all
//! boxes for occlusion. The direct path is included iff the line of sight is
//! clear, which also provides the ground-truth LoS label.

mod scene_file;

pub use scene_file::{load_scene, save_scene, scene_from_toml_str, scene_to_toml_string};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Margin on the segment parameter so that endpoints lying exactly on a face
/// (reflection points) do not count as occlusion.
const SEG_EPS: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Scene types
// ---------------------------------------------------------------------------

/// Axis-aligned box with strictly positive extent on every axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl AxisBox {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::invalid_input("box corners must be finite"));
        }
        if min.x >= max.x || min.y >= max.y || min.z >= max.z {
            return Err(Error::invalid_input(
                "box must have strictly positive extent on each axis",
            ));
        }
        Ok(Self { min, max })
    }

    /// Half-open containment test: faces at the max corner are outside.
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x < self.max.x
            && p.y >= self.min.y
            && p.y < self.max.y
            && p.z >= self.min.z
            && p.z < self.max.z
    }

    /// Slab test: does the open interior of segment a->b pass through the
    /// interior of the box? Grazing contact (tangent to a face or an edge)
    /// does not block.
    pub fn blocks_segment(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let mut t_lo = SEG_EPS;
        let mut t_hi = 1.0 - SEG_EPS;
        for k in 0..3 {
            let dk = d.axis(k);
            let ak = a.axis(k);
            let (lo, hi) = (self.min.axis(k), self.max.axis(k));
            if dk.abs() < 1e-15 {
                // Parallel to the slab: open interval so that a segment lying
                // exactly on a face counts as grazing, not blocking.
                if ak <= lo || ak >= hi {
                    return false;
                }
            } else {
                let t0 = (lo - ak) / dk;
                let t1 = (hi - ak) / dk;
                let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
                t_lo = t_lo.max(t0);
                t_hi = t_hi.min(t1);
                if t_lo >= t_hi {
                    return false;
                }
            }
        }
        t_hi - t_lo > 1e-12
    }
}

/// Scene description: buildings, ground, base-station pose, material constant.
#[derive(Clone, Debug)]
pub struct Scene {
    pub buildings: Vec<AxisBox>,
    /// XY corners of the area covered by the UE grid.
    pub area_min: [f64; 2],
    pub area_max: [f64; 2],
    pub ground_z: f64,
    pub bs_position: Vec3,
    /// Radians clockwise from north (+y).
    pub bs_bearing: f64,
    /// Amplitude reflection coefficient per bounce, in (0, 1].
    pub reflection_coeff: f64,
    pub max_bounces: u32,
}

impl Scene {
    pub fn new(
        buildings: Vec<AxisBox>,
        area_min: [f64; 2],
        area_max: [f64; 2],
        ground_z: f64,
        bs_position: Vec3,
        bs_bearing: f64,
        reflection_coeff: f64,
        max_bounces: u32,
    ) -> Result<Self> {
        if area_min[0] >= area_max[0] || area_min[1] >= area_max[1] {
            return Err(Error::invalid_input("scene area must have positive extent"));
        }
        if bs_position.z <= ground_z {
            return Err(Error::invalid_input("bs_position must be above the ground"));
        }
        if !(reflection_coeff > 0.0 && reflection_coeff <= 1.0) {
            return Err(Error::invalid_input("reflection_coeff must be in (0, 1]"));
        }
        Ok(Self {
            buildings,
            area_min,
            area_max,
            ground_z,
            bs_position,
            bs_bearing,
            reflection_coeff,
            max_bounces,
        })
    }

    /// All candidate reflector faces: four walls and the roof of every
    /// building, plus the ground plane. Building undersides cannot reflect.
    pub fn reflector_faces(&self) -> Vec<Face> {
        let mut faces = Vec::with_capacity(self.buildings.len() * 5 + 1);
        faces.push(Face::ground(self.ground_z));
        for b in &self.buildings {
            faces.push(Face::wall(b, 0, false));
            faces.push(Face::wall(b, 0, true));
            faces.push(Face::wall(b, 1, false));
            faces.push(Face::wall(b, 1, true));
            faces.push(Face::wall(b, 2, true)); // roof
        }
        faces
    }

    fn point_in_any_building(&self, p: Vec3) -> bool {
        self.buildings.iter().any(|b| b.contains(p))
    }
}

/// Planar reflector: an axis-aligned rectangle (building face) or the
/// unbounded ground plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Face {
    /// Normal axis: 0 = x, 1 = y, 2 = z.
    pub axis: usize,
    /// Plane coordinate along the normal axis.
    pub coord: f64,
    /// Outward normal sign along the axis.
    pub outward: f64,
    /// In-plane bounds on the two remaining axes, None for unbounded (ground).
    pub bounds: Option<[(f64, f64); 2]>,
}

impl Face {
    fn ground(z: f64) -> Self {
        Face {
            axis: 2,
            coord: z,
            outward: 1.0,
            bounds: None,
        }
    }

    fn wall(b: &AxisBox, axis: usize, max_side: bool) -> Self {
        let (u, v) = other_axes(axis);
        Face {
            axis,
            coord: if max_side {
                b.max.axis(axis)
            } else {
                b.min.axis(axis)
            },
            outward: if max_side { 1.0 } else { -1.0 },
            bounds: Some([
                (b.min.axis(u), b.max.axis(u)),
                (b.min.axis(v), b.max.axis(v)),
            ]),
        }
    }

    pub fn normal(&self) -> Vec3 {
        Vec3::default().with_axis(self.axis, self.outward)
    }

    fn mirror(&self, p: Vec3) -> Vec3 {
        p.with_axis(self.axis, 2.0 * self.coord - p.axis(self.axis))
    }

    fn in_bounds(&self, p: Vec3) -> bool {
        match self.bounds {
            None => true,
            Some([(u0, u1), (v0, v1)]) => {
                let (u, v) = other_axes(self.axis);
                p.axis(u) >= u0 && p.axis(u) <= u1 && p.axis(v) >= v0 && p.axis(v) <= v1
            }
        }
    }

    /// Two faces on the same plane can never follow each other in a specular
    /// sequence (the mirror images would cancel).
    fn same_plane(&self, o: &Face) -> bool {
        self.axis == o.axis && self.coord == o.coord
    }
}

fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("axis index out of range"),
    }
}

// ---------------------------------------------------------------------------
// Multipath types
// ---------------------------------------------------------------------------

/// One specular propagation path, seen from the base station.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathComponent {
    /// Linear amplitude, unitary transmit power.
    pub gain: f64,
    /// Propagation delay in seconds.
    pub delay: f64,
    /// Arrival azimuth at the BS, radians in (-pi, pi], BS-local frame.
    pub azimuth: f64,
    /// Arrival elevation at the BS, radians in [-pi/2, pi/2].
    pub elevation: f64,
    /// Number of specular reflections (0 = direct path).
    pub bounces: u32,
}

/// Set of propagation paths for one UE position with its LoS ground truth.
///
/// Sets recovered from estimated channels (see the features module) carry
/// placeholder `bounces = 0` and `is_los = false`; the traced-set invariants
/// apply only to sets produced by [`trace_paths`].
#[derive(Clone, Debug, PartialEq)]
pub struct MultipathSet {
    pub paths: Vec<PathComponent>,
    pub is_los: bool,
    pub ue_position: Vec3,
}

impl MultipathSet {
    pub fn is_outage(&self) -> bool {
        self.paths.is_empty()
    }

    /// Largest path delay, None for an outage set.
    pub fn max_delay(&self) -> Option<f64> {
        self.paths.iter().map(|p| p.delay).fold(None, |acc, d| {
            Some(acc.map_or(d, |a: f64| a.max(d)))
        })
    }
}

/// A traced path together with its folded polyline and reflector sequence,
/// used for physical-validity checks.
#[derive(Clone, Debug)]
pub struct TracedPath {
    pub component: PathComponent,
    /// tx, reflection points..., rx.
    pub points: Vec<Vec3>,
    pub faces: Vec<Face>,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// True iff the open segment tx->rx intersects no building box.
pub fn los_test(scene: &Scene, tx: Vec3, rx: Vec3) -> Result<bool> {
    if tx == rx {
        return Err(Error::invalid_input("los_test: degenerate segment (tx = rx)"));
    }
    Ok(!scene.buildings.iter().any(|b| b.blocks_segment(tx, rx)))
}

/// All unobstructed specular paths between tx and rx up to
/// `scene.max_bounces`, sorted by increasing delay. Arrival angles are
/// computed at `rx`, which is expected to be the base station.
pub fn trace_paths(scene: &Scene, tx: Vec3, rx: Vec3, wavelength: f64) -> Result<MultipathSet> {
    trace_paths_detailed(scene, tx, rx, wavelength).map(|(set, _)| set)
}

/// As [`trace_paths`], additionally returning the folded geometry of every
/// path for validation.
pub fn trace_paths_detailed(
    scene: &Scene,
    tx: Vec3,
    rx: Vec3,
    wavelength: f64,
) -> Result<(MultipathSet, Vec<TracedPath>)> {
    if tx == rx {
        return Err(Error::invalid_input("trace_paths: degenerate segment (tx = rx)"));
    }
    if !(wavelength > 0.0) {
        return Err(Error::invalid_input("trace_paths: wavelength must be positive"));
    }

    let mut traced = Vec::new();

    let is_los = los_test(scene, tx, rx)?;
    if is_los {
        traced.push(make_path(scene, tx, rx, wavelength, vec![tx, rx], Vec::new()));
    }

    let faces = scene.reflector_faces();
    let mut seq: Vec<usize> = Vec::new();
    enumerate_sequences(scene, &faces, tx, rx, wavelength, &mut seq, &mut traced);

    traced.sort_by(|a, b| a.component.delay.total_cmp(&b.component.delay));
    let paths: Vec<PathComponent> = traced.iter().map(|t| t.component).collect();

    debug_assert!(
        !is_los || paths.first().is_some_and(|p| p.bounces == 0),
        "direct path must attain the minimum delay"
    );

    let set = MultipathSet {
        paths,
        is_los,
        ue_position: tx,
    };
    Ok((set, traced))
}

/// Depth-first enumeration of reflector sequences up to max_bounces.
fn enumerate_sequences(
    scene: &Scene,
    faces: &[Face],
    tx: Vec3,
    rx: Vec3,
    wavelength: f64,
    seq: &mut Vec<usize>,
    out: &mut Vec<TracedPath>,
) {
    if seq.len() as u32 >= scene.max_bounces {
        return;
    }
    for (i, face) in faces.iter().enumerate() {
        if let Some(&last) = seq.last() {
            if faces[last].same_plane(face) {
                continue;
            }
        }
        seq.push(i);
        if let Some(path) = build_reflected_path(scene, faces, seq, tx, rx, wavelength) {
            out.push(path);
        }
        enumerate_sequences(scene, faces, tx, rx, wavelength, seq, out);
        seq.pop();
    }
}

/// Attempt to construct the specular path tx -> f1 -> ... -> fk -> rx.
/// Returns None when the sequence has no geometrically valid, unobstructed
/// realization.
fn build_reflected_path(
    scene: &Scene,
    faces: &[Face],
    seq: &[usize],
    tx: Vec3,
    rx: Vec3,
    wavelength: f64,
) -> Option<TracedPath> {
    let k = seq.len();

    // Successive images of the source across the faces in visiting order.
    let mut images = Vec::with_capacity(k + 1);
    images.push(tx);
    for &fi in seq {
        let prev = *images.last().unwrap();
        images.push(faces[fi].mirror(prev));
    }

    // Backtrack from rx: intersect segment (image_j -> next_point) with face j.
    let mut points = vec![Vec3::default(); k + 2];
    points[k + 1] = rx;
    for j in (1..=k).rev() {
        let face = &faces[seq[j - 1]];
        let from = images[j];
        let to = points[j + 1];
        let denom = to.axis(face.axis) - from.axis(face.axis);
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = (face.coord - from.axis(face.axis)) / denom;
        if !(t > SEG_EPS && t < 1.0 - SEG_EPS) {
            return None;
        }
        let p = from + (to - from) * t;
        if !face.in_bounds(p) {
            return None;
        }
        points[j] = p;
    }
    points[0] = tx;

    // Reflection sidedness: each hit must arrive from the outward side.
    for j in 1..=k {
        let n = faces[seq[j - 1]].normal();
        let incoming = points[j] - points[j - 1];
        let outgoing = points[j + 1] - points[j];
        if incoming.dot(n) >= 0.0 || outgoing.dot(n) <= 0.0 {
            return None;
        }
    }

    // Occlusion of every folded segment.
    for w in points.windows(2) {
        if scene.buildings.iter().any(|b| b.blocks_segment(w[0], w[1])) {
            return None;
        }
    }

    Some(make_path(scene, tx, rx, wavelength, points, seq.iter().map(|&i| faces[i]).collect()))
}

fn make_path(
    scene: &Scene,
    tx: Vec3,
    rx: Vec3,
    wavelength: f64,
    points: Vec<Vec3>,
    faces: Vec<Face>,
) -> TracedPath {
    let bounces = faces.len() as u32;
    // Unfolded length: image distance for reflected paths, |tx-rx| direct.
    let mut image = tx;
    for f in &faces {
        image = f.mirror(image);
    }
    let d_total = image.distance(rx);

    let gain = wavelength / (4.0 * std::f64::consts::PI * d_total)
        * scene.reflection_coeff.powi(bounces as i32);
    let delay = d_total / SPEED_OF_LIGHT;

    // Arrival direction at the BS: from rx toward the last folded point,
    // collinear with the final image by the mirror property.
    let last = points[points.len() - 2];
    let u = (last - rx).normalized();
    let (azimuth, elevation) = arrival_angles(scene.bs_bearing, u);

    TracedPath {
        component: PathComponent {
            gain,
            delay,
            azimuth,
            elevation,
            bounces,
        },
        points,
        faces,
    }
}

/// Global arrival direction -> BS-local (azimuth, elevation).
///
/// The BS boresight points along the bearing (clockwise from north = +y);
/// azimuth is measured from boresight, positive to the left, and elevation
/// above the horizontal plane.
pub fn arrival_angles(bearing: f64, u: Vec3) -> (f64, f64) {
    let bx = Vec3::new(bearing.sin(), bearing.cos(), 0.0);
    let by = Vec3::new(-bearing.cos(), bearing.sin(), 0.0);
    let az = u.dot(by).atan2(u.dot(bx));
    let el = u.z.clamp(-1.0, 1.0).asin();
    (az, el)
}

/// Row-major grid of cell centers over the scene area at the given height,
/// excluding centers inside buildings. Rows advance along y, columns along x.
pub fn ue_grid(scene: &Scene, cell_size: f64, ue_height: f64) -> Result<Vec<Vec3>> {
    if !(cell_size > 0.0) {
        return Err(Error::invalid_input("ue_grid: cell_size must be positive"));
    }
    let nx = ((scene.area_max[0] - scene.area_min[0]) / cell_size).floor() as usize;
    let ny = ((scene.area_max[1] - scene.area_min[1]) / cell_size).floor() as usize;
    let z = scene.ground_z + ue_height;
    let mut grid = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let p = Vec3::new(
                scene.area_min[0] + (i as f64 + 0.5) * cell_size,
                scene.area_min[1] + (j as f64 + 0.5) * cell_size,
                z,
            );
            if !scene.point_in_any_building(p) {
                grid.push(p);
            }
        }
    }
    Ok(grid)
}
