//! Seeded fixture generators and independent oracles.
//!
//! Nothing here is measured data. The hand template is a hand-made table of
//! plausible proportions in canonical units (wrist→index-MCP = 1); scenes are
//! analytic primitives ray-cast through pixel centers. Every generator is a
//! pure function of its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{backproject, CameraIntrinsics, PixelPoint, Ray, Rotation3, Vec3};
use crate::gesture::{landmarks, Chirality, HandKeypoints, NUM_JOINTS};
use crate::grasp::{GraspCandidate, GraspPose, GripperWidth, SelectionParams, AttentionMode};
use crate::memory::{EntryRecord, MemoryBank};
use crate::metrics::Mask;
use crate::pointing::DepthScene;
use crate::transfer::FeatureMap;

const fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Open right hand in canonical coordinates. Fixture constants, not data.
pub const HAND_TEMPLATE: [Vec3; NUM_JOINTS] = [
    v(0.0, 0.0, 0.0),
    // thumb
    v(0.28, -0.30, 0.10),
    v(0.55, -0.52, 0.16),
    v(0.80, -0.66, 0.20),
    v(1.02, -0.76, 0.22),
    // index
    v(1.0, 0.0, 0.0),
    v(1.42, -0.03, 0.04),
    v(1.68, -0.05, 0.08),
    v(1.90, -0.06, 0.12),
    // middle
    v(0.97, 0.24, 0.0),
    v(1.43, 0.25, 0.05),
    v(1.72, 0.25, 0.10),
    v(1.96, 0.25, 0.15),
    // ring
    v(0.90, 0.46, 0.0),
    v(1.32, 0.50, 0.05),
    v(1.58, 0.52, 0.09),
    v(1.80, 0.53, 0.13),
    // pinky
    v(0.80, 0.66, 0.0),
    v(1.12, 0.73, 0.04),
    v(1.32, 0.77, 0.07),
    v(1.50, 0.80, 0.10),
];

/// Pointing pose: index extended (bent 8° off the wrist→MCP axis), the
/// other fingers curled towards the palm.
pub const POINTING_TEMPLATE: [Vec3; NUM_JOINTS] = [
    v(0.0, 0.0, 0.0),
    v(0.28, -0.30, 0.10),
    v(0.55, -0.45, 0.25),
    v(0.75, -0.35, 0.38),
    v(0.92, -0.20, 0.42),
    v(1.0, 0.0, 0.0),
    v(1.4456, -0.0626, 0.0),
    v(1.7031, -0.0988, 0.0),
    v(1.9210, -0.1294, 0.0),
    v(0.97, 0.24, 0.0),
    v(1.15, 0.25, 0.30),
    v(1.00, 0.25, 0.45),
    v(0.85, 0.25, 0.35),
    v(0.90, 0.46, 0.0),
    v(1.06, 0.48, 0.28),
    v(0.93, 0.49, 0.41),
    v(0.79, 0.49, 0.32),
    v(0.80, 0.66, 0.0),
    v(0.93, 0.70, 0.22),
    v(0.84, 0.72, 0.33),
    v(0.72, 0.72, 0.27),
];

/// Similarity transform `p ↦ s·R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sim3 {
    pub rotation: Rotation3,
    pub scale: f64,
    pub translation: Vec3,
}

impl Sim3 {
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation * p * self.scale + self.translation
    }

    pub fn apply_hand(&self, g: &HandKeypoints) -> Result<HandKeypoints> {
        g.map_joints(|j| self.apply(j))
    }
}

/// Uniformly distributed rotation (normalized Gaussian quaternion).
pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation3 {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            let [w, x, y, z] = q.map(|c| c / n);
            return Rotation3::from_unit_quaternion(w, x, y, z).expect("unit quaternion");
        }
    }
}

/// Random similarity with log-uniform scale in `scale` and translation in
/// the cube `[-translation, translation]³`.
pub fn random_sim3<R: Rng>(rng: &mut R, scale: (f64, f64), translation: f64) -> Sim3 {
    let s = (rng.gen_range(scale.0.ln()..=scale.1.ln())).exp();
    Sim3 {
        rotation: random_rotation(rng),
        scale: s,
        translation: Vec3::new(
            rng.gen_range(-translation..=translation),
            rng.gen_range(-translation..=translation),
            rng.gen_range(-translation..=translation),
        ),
    }
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Template plus uniform per-joint noise of half-width `amplitude` on every
/// joint except the three reference landmarks, then `transform`.
pub fn synth_hand(seed: u64, amplitude: f64, transform: Option<&Sim3>) -> HandKeypoints {
    synth_hand_from(&HAND_TEMPLATE, Chirality::Right, seed, amplitude, transform)
}

pub fn synth_hand_from(
    template: &[Vec3; NUM_JOINTS],
    chirality: Chirality,
    seed: u64,
    amplitude: f64,
    transform: Option<&Sim3>,
) -> HandKeypoints {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut joints = *template;
    if amplitude > 0.0 {
        for (i, j) in joints.iter_mut().enumerate() {
            if matches!(i, landmarks::WRIST | landmarks::INDEX_MCP | landmarks::PINKY_MCP) {
                continue;
            }
            *j += Vec3::new(
                rng.gen_range(-amplitude..=amplitude),
                rng.gen_range(-amplitude..=amplitude),
                rng.gen_range(-amplitude..=amplitude),
            );
        }
    }
    if let Some(t) = transform {
        for j in &mut joints {
            *j = t.apply(*j);
        }
    }
    HandKeypoints::new(joints, chirality).expect("finite template")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Plane { point: Vec3, normal: Vec3 },
    Sphere { center: Vec3, radius: f64 },
    /// Axis-aligned box.
    Box { center: Vec3, half_extents: Vec3 },
}

impl Primitive {
    /// Smallest `s > 0` with `origin + s·dir` on the surface.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        match *self {
            Primitive::Plane { point, normal } => {
                let denom = normal.dot(dir);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let s = normal.dot(point - origin) / denom;
                (s > 0.0).then_some(s)
            }
            Primitive::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.dot(dir);
                let b = oc.dot(dir);
                let c = oc.dot(oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                [(-b - sq) / a, (-b + sq) / a].into_iter().find(|&s| s > 0.0)
            }
            Primitive::Box { center, half_extents } => {
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..3 {
                    let (o, d) = (origin[k] - center[k], dir[k]);
                    let h = half_extents[k];
                    if d.abs() < 1e-15 {
                        if o.abs() > h {
                            return None;
                        }
                        continue;
                    }
                    let (a, b) = ((-h - o) / d, (h - o) / d);
                    lo = lo.max(a.min(b));
                    hi = hi.min(a.max(b));
                }
                if hi < lo || hi <= 0.0 {
                    return None;
                }
                Some(if lo > 0.0 { lo } else { hi })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    pub intrinsics: CameraIntrinsics,
    pub seed: u64,
    /// Std-dev of Gaussian depth noise, meters; 0 renders exact depth.
    #[serde(default)]
    pub depth_noise: f64,
}

/// First analytic hit of an arbitrary ray over all primitives.
pub fn closed_form_hit(primitives: &[Primitive], ray: &Ray) -> Option<Vec3> {
    primitives
        .iter()
        .filter_map(|p| p.intersect(ray.origin, ray.direction))
        .min_by(f64::total_cmp)
        .map(|s| ray.at(s))
}

/// Ray-casts every pixel center; cells without a hit get depth 0 (invalid).
pub fn render_depth(spec: &SceneSpec) -> Result<DepthScene> {
    let k = spec.intrinsics;
    k.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut depth = Vec::with_capacity(k.width as usize * k.height as usize);
    for row in 0..k.height {
        for col in 0..k.width {
            // z-component 1, so the ray parameter is the depth itself
            let dir = Vec3::new((col as f64 - k.cx) / k.fx, (row as f64 - k.cy) / k.fy, 1.0);
            let hit = spec
                .primitives
                .iter()
                .filter_map(|p| p.intersect(Vec3::ZERO, dir))
                .min_by(f64::total_cmp);
            let d = match hit {
                Some(z) if spec.depth_noise > 0.0 => {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    (z + n * spec.depth_noise).max(1e-6)
                }
                Some(z) => z,
                None => 0.0,
            };
            depth.push(d);
        }
    }
    DepthScene::new(k, depth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePairSpec {
    pub h: usize,
    pub w: usize,
    pub d: usize,
    pub seed: u64,
    /// `((src_row, src_col), (tgt_row, tgt_col))`.
    pub planted: Vec<((usize, usize), (usize, usize))>,
    /// Image pixels per feature cell.
    pub cell_px: u32,
}

pub const PLANT_MARGIN: f64 = 0.2;
const PLANT_RETRIES: usize = 200;

#[derive(Debug, Clone)]
pub struct FeaturePair {
    pub src: FeatureMap,
    pub tgt: FeatureMap,
    /// Cell correspondences guaranteed by construction.
    pub truth: Vec<((usize, usize), (usize, usize))>,
}

/// Random unit features with planted shared vectors.
///
/// Each planted vector has cosine at most `1 − PLANT_MARGIN` with every other
/// cell of both maps. With no planted pairs the target is an exact copy of
/// the source and the ground truth is the identity on all cells.
pub fn synth_featmap_pair(spec: &FeaturePairSpec) -> Result<FeaturePair> {
    let FeaturePairSpec { h, w, d, seed, cell_px, .. } = *spec;
    if d < 8 || h == 0 || w == 0 || cell_px == 0 {
        return Err(Error::InvalidParams(format!(
            "feature pair needs h, w, cell_px > 0 and d >= 8 (got {h}x{w}x{d}, {cell_px} px)"
        )));
    }
    let in_range = |(r, c): (usize, usize)| r < h && c < w;
    for (s, t) in &spec.planted {
        if !in_range(*s) || !in_range(*t) {
            return Err(Error::InvalidParams(format!("planted cell {s:?}/{t:?} out of range")));
        }
    }
    let dup = |side: fn(&((usize, usize), (usize, usize))) -> (usize, usize)| {
        let mut cells: Vec<_> = spec.planted.iter().map(side).collect();
        cells.sort();
        cells.windows(2).any(|p| p[0] == p[1])
    };
    if dup(|p| p.0) || dup(|p| p.1) {
        return Err(Error::InvalidParams("planted cells must be distinct".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h * w;
    let fresh = |rng: &mut ChaCha8Rng| -> Vec<f64> { random_unit_vector(rng, d) };
    let mut src: Vec<Vec<f64>> = (0..n).map(|_| fresh(&mut rng)).collect();
    let (img_w, img_h) = (w as u32 * cell_px, h as u32 * cell_px);

    if spec.planted.is_empty() {
        let map = to_map(h, w, d, &src, img_w, img_h)?;
        let truth = (0..h).flat_map(|r| (0..w).map(move |c| ((r, c), (r, c)))).collect();
        return Ok(FeaturePair { src: map.clone(), tgt: map, truth });
    }

    let mut tgt: Vec<Vec<f64>> = (0..n).map(|_| fresh(&mut rng)).collect();
    let mut planted_vecs: Vec<Vec<f64>> = spec.planted.iter().map(|_| fresh(&mut rng)).collect();
    let idx = |(r, c): (usize, usize)| r * w + c;
    let limit = 1.0 - PLANT_MARGIN;

    for _ in 0..PLANT_RETRIES {
        for (p, (s, t)) in spec.planted.iter().enumerate() {
            src[idx(*s)] = planted_vecs[p].clone();
            tgt[idx(*t)] = planted_vecs[p].clone();
        }
        // f32 storage is what transfer will see
        let src_f = quantize(&src);
        let tgt_f = quantize(&tgt);
        let mut clean = true;
        for (p, (s, t)) in spec.planted.iter().enumerate() {
            let pv = &quantize(std::slice::from_ref(&planted_vecs[p]))[0];
            for (cells, own, resample) in [(&src_f, idx(*s), &mut src), (&tgt_f, idx(*t), &mut tgt)] {
                for (i, cell) in cells.iter().enumerate() {
                    if i == own || dot(pv, cell) <= limit {
                        continue;
                    }
                    clean = false;
                    match spec.planted.iter().position(|(a, b)| idx(*a) == i || idx(*b) == i) {
                        Some(q) if q != p => planted_vecs[q] = fresh(&mut rng),
                        _ => resample[i] = fresh(&mut rng),
                    }
                }
            }
        }
        if clean {
            return Ok(FeaturePair {
                src: to_map(h, w, d, &src, img_w, img_h)?,
                tgt: to_map(h, w, d, &tgt, img_w, img_h)?,
                truth: spec.planted.clone(),
            });
        }
    }
    Err(Error::MarginUnsatisfiable(PLANT_RETRIES))
}

fn quantize(v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    v.iter()
        .map(|c| c.iter().map(|&x| x as f32 as f64).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    ab / (na * nb)
}

fn to_map(h: usize, w: usize, d: usize, cells: &[Vec<f64>], iw: u32, ih: u32) -> Result<FeatureMap> {
    let data = cells.iter().flatten().map(|&x| x as f32).collect();
    FeatureMap::new(h, w, d, data, iw, ih)
}

/// Eq.-level re-implementation of grasp selection with plain loops, sharing
/// no code with [`crate::grasp`]. Deviation uses `‖I − M‖²_F = 3 − 2 tr M +
/// ‖M‖²_F` for `M = R_hᵀ R_i`.
pub fn oracle_select(
    candidates: &[GraspCandidate],
    r_h: &Rotation3,
    contact: PixelPoint,
    k: &CameraIntrinsics,
    params: &SelectionParams,
) -> usize {
    let a = r_h.rows();
    let mut best_idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let b = c.pose.r.rows();
        let mut m = [[0.0f64; 3]; 3];
        for r in 0..3 {
            for col in 0..3 {
                for kk in 0..3 {
                    m[r][col] += a[kk][r] * b[kk][col];
                }
            }
        }
        let mut sq = 0.0;
        let mut tr = 0.0;
        for r in 0..3 {
            tr += m[r][r];
            for col in 0..3 {
                sq += m[r][col] * m[r][col];
            }
        }
        let dev = (3.0 - 2.0 * tr + sq).max(0.0).sqrt();
        let mut s = c.score;
        if params.attention == AttentionMode::Weight {
            let t = c.pose.t;
            let u = k.fx * t.x / t.z + k.cx;
            let vv = k.fy * t.y / t.z + k.cy;
            let d2 = (u - contact.u) * (u - contact.u) + (vv - contact.v) * (vv - contact.v);
            s *= (-d2 / (2.0 * params.sigma * params.sigma)).exp();
        }
        let eff = s - params.lambda * dev;
        if eff > best {
            best = eff;
            best_idx = i;
        }
    }
    best_idx
}

/// Random candidate set around `center`; a few candidates are rotated
/// slightly away from `near`, the rest have uniform random orientation.
pub fn synth_candidates<R: Rng>(
    rng: &mut R,
    n: usize,
    center: Vec3,
    spread: f64,
    near: &Rotation3,
) -> Vec<GraspCandidate> {
    (0..n)
        .map(|i| {
            let r = if i % 4 == 0 {
                let axis = Vec3::from(std::array::from_fn::<f64, 3, _>(|_| StandardNormal.sample(rng)));
                let tilt = Rotation3::from_axis_angle(axis, rng.gen_range(0.0..0.5))
                    .unwrap_or(Rotation3::IDENTITY);
                *near * tilt
            } else {
                random_rotation(rng)
            };
            let t = center
                + Vec3::new(
                    rng.gen_range(-spread..=spread),
                    rng.gen_range(-spread..=spread),
                    rng.gen_range(-spread..=spread),
                );
            GraspCandidate::new(GraspPose { t, r, w: GripperWidth::Open }, rng.gen_range(0.0..=1.0))
                .expect("score in range")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankSpec {
    pub entries: usize,
    pub seed: u64,
    pub embedding_dim: usize,
    /// Feature grid `(h, w, d)` per entry.
    pub grid: (usize, usize, usize),
    pub cell_px: u32,
    /// Articulation noise, canonical units.
    pub articulation: f64,
    /// Meters per canonical unit.
    pub hand_scale: f64,
}

impl Default for BankSpec {
    fn default() -> Self {
        BankSpec {
            entries: 12,
            seed: 0,
            embedding_dim: 16,
            grid: (8, 8, 16),
            cell_px: 8,
            articulation: 0.15,
            hand_scale: 0.085,
        }
    }
}

pub struct SynthBank {
    pub bank: MemoryBank,
}

/// Random metric hand placed in front of the camera.
pub fn random_metric_hand<R: Rng>(rng: &mut R, articulation: f64, hand_scale: f64, chirality: Chirality) -> HandKeypoints {
    let t = Sim3 {
        rotation: random_rotation(rng),
        scale: hand_scale,
        translation: Vec3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(0.4..0.8)),
    };
    let mut template = HAND_TEMPLATE;
    if chirality == Chirality::Left {
        for j in &mut template {
            j.y = -j.y;
        }
    }
    synth_hand_from(&template, chirality, rng.gen(), articulation, Some(&t))
}

/// Bank of random entries; every third entry is a left hand.
pub fn synth_bank(spec: &BankSpec) -> Result<SynthBank> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut bank = MemoryBank::new();
    let (h, w, d) = spec.grid;
    for i in 0..spec.entries {
        let chirality = if i % 3 == 2 { Chirality::Left } else { Chirality::Right };
        let gesture = random_metric_hand(&mut rng, spec.articulation, spec.hand_scale, chirality);
        let cells: Vec<Vec<f64>> = (0..h * w).map(|_| random_unit_vector(&mut rng, d)).collect();
        let (iw, ih) = (w as u32 * spec.cell_px, h as u32 * spec.cell_px);
        let features = to_map(h, w, d, &cells, iw, ih)?;
        let contact = PixelPoint::new(rng.gen_range(0.0..iw as f64 - 1.0), rng.gen_range(0.0..ih as f64 - 1.0));
        bank.ingest(EntryRecord {
            id: format!("e{i:04}"),
            gesture,
            embedding: random_unit_vector(&mut rng, spec.embedding_dim),
            features,
            image_ref: format!("images/e{i:04}.png"),
            contact,
            category: Some(format!("cat{}", i % 4)),
        })?;
    }
    Ok(SynthBank { bank })
}

/// End-to-end synthetic case parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub focal: f64,
    pub cell_px: u32,
    pub feature_dim: usize,
    pub embedding_dim: usize,
    pub bank_entries: usize,
    pub candidates: usize,
    /// Radius of rendered hand-joint spheres, meters.
    pub joint_radius: f64,
}

impl Default for CaseSpec {
    fn default() -> Self {
        CaseSpec {
            seed: 0,
            width: 160,
            height: 120,
            focal: 150.0,
            cell_px: 8,
            feature_dim: 16,
            embedding_dim: 16,
            bank_entries: 10,
            candidates: 24,
            joint_radius: 0.007,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTruth {
    /// Entry the retrieval should select.
    pub entry_id: String,
    /// Ground-truth target feature cell `(row, col)`.
    pub cell: (usize, usize),
    /// Where the pointing ray hits the unperturbed scene.
    pub pointing_target: Vec3,
}

pub struct SynthCase {
    pub bank: MemoryBank,
    pub inputs: crate::pipeline::PipelineInputs,
    pub scene_spec: SceneSpec,
    pub truth: CaseTruth,
    pub mask: Mask,
}

/// Generates a full pipeline fixture: a table with a box and a ball, a
/// pointing hand (rendered into the depth map as joint spheres) aimed at a
/// point on the box's front face, a bank containing the matching grasp
/// gesture plus a gesture-identical decoy, and dense features with a planted
/// correspondence next to the pointed-at location.
pub fn synth_case(spec: &CaseSpec) -> Result<SynthCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_ca5e);
    let k = CameraIntrinsics::new(
        spec.focal,
        spec.focal,
        spec.width as f64 / 2.0,
        spec.height as f64 / 2.0,
        spec.width,
        spec.height,
    )?;

    // objects
    let bx = rng.gen_range(-0.10..0.10);
    let by = rng.gen_range(-0.04..0.06);
    let half = Vec3::new(0.08, 0.06, 0.05);
    let box_center = Vec3::new(bx, by, 0.95);
    let front_z = box_center.z - half.z;
    let ball_x = if bx > 0.0 { -0.25 } else { 0.25 };
    let mut primitives = vec![
        Primitive::Plane { point: Vec3::new(0.0, 0.0, 1.15), normal: Vec3::new(0.0, -0.4, -1.0) },
        Primitive::Box { center: box_center, half_extents: half },
        Primitive::Sphere { center: Vec3::new(ball_x, -0.05, 1.0), radius: 0.06 },
    ];
    let target = Vec3::new(
        bx + rng.gen_range(-0.05..0.05),
        by + rng.gen_range(-0.035..0.035),
        front_z,
    );

    // pointing hand: index MCP offset towards the image center and the camera
    let side = if target.x > 0.0 { -1.0 } else { 1.0 };
    let mcp = target
        + Vec3::new(
            side * rng.gen_range(0.15..0.20),
            rng.gen_range(-0.14..-0.08),
            -rng.gen_range(0.18..0.24),
        );
    let pointing = pointing_hand(&mut rng, mcp, target)?;
    for j in pointing.joints() {
        primitives.push(Primitive::Sphere { center: *j, radius: spec.joint_radius });
    }
    let scene_spec = SceneSpec { primitives, intrinsics: k, seed: spec.seed, depth_noise: 0.0 };
    let scene = render_depth(&scene_spec)?;

    // target feature grid and ground-truth cell next to the pointed pixel
    let tw = (spec.width / spec.cell_px) as usize;
    let th = (spec.height / spec.cell_px) as usize;
    let tpx = crate::geometry::project(target, &k)?;
    let cell_of = |p: f64, n: usize| ((p + 0.5) / spec.cell_px as f64).floor().clamp(0.0, n as f64 - 1.0) as usize;
    let (tr, tc) = (cell_of(tpx.v, th), cell_of(tpx.u, tw));
    let truth_cell = (
        (tr as i64 + rng.gen_range(-1..=1)).clamp(0, th as i64 - 1) as usize,
        (tc as i64 + rng.gen_range(-1..=1)).clamp(0, tw as i64 - 1) as usize,
    );

    // bank: random entries + true entry + decoy twin
    let mut bank_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    let mut bank = synth_bank(&BankSpec {
        entries: spec.bank_entries,
        seed: bank_rng.gen(),
        embedding_dim: spec.embedding_dim,
        grid: (8, 8, spec.feature_dim),
        cell_px: spec.cell_px,
        ..BankSpec::default()
    })?
    .bank;
    let true_gesture = random_metric_hand(&mut bank_rng, 0.15, 0.085, Chirality::Right);
    let src_cell = (bank_rng.gen_range(0..8), bank_rng.gen_range(0..8));
    let shared = random_unit_vector(&mut bank_rng, spec.feature_dim);
    let src_features = planted_map(&mut bank_rng, 8, 8, spec, &shared, src_cell)?;
    let query_features = planted_map(&mut bank_rng, th, tw, spec, &shared, truth_cell)?;
    let true_embedding = random_unit_vector(&mut bank_rng, spec.embedding_dim);
    let true_id = "target-entry".to_string();
    bank.ingest(EntryRecord {
        id: true_id.clone(),
        gesture: true_gesture.clone(),
        embedding: true_embedding.clone(),
        features: src_features.clone(),
        image_ref: "images/target-entry.png".into(),
        contact: src_features.cell_center(src_cell.0, src_cell.1),
        category: Some("mug".into()),
    })?;
    let decoy_cells: Vec<Vec<f64>> = (0..64).map(|_| random_unit_vector(&mut bank_rng, spec.feature_dim)).collect();
    bank.ingest(EntryRecord {
        id: "decoy-twin".into(),
        gesture: true_gesture.clone(),
        embedding: random_unit_vector(&mut bank_rng, spec.embedding_dim),
        features: to_map(8, 8, spec.feature_dim, &decoy_cells, 8 * spec.cell_px, 8 * spec.cell_px)?,
        image_ref: "images/decoy.png".into(),
        contact: src_features.cell_center(src_cell.0, src_cell.1),
        category: Some("bowl".into()),
    })?;

    // query: the true gesture seen from elsewhere, embedding close to the true one
    let view = Sim3 {
        rotation: random_rotation(&mut bank_rng),
        scale: bank_rng.gen_range(0.8..1.25),
        translation: Vec3::new(0.0, 0.0, 0.6),
    };
    let centered = true_gesture.map_joints(|j| j - true_gesture.joint(landmarks::WRIST))?;
    let grasp = view.apply_hand(&centered)?;
    let noise = random_unit_vector(&mut bank_rng, spec.embedding_dim);
    let query_embedding: Vec<f64> = true_embedding.iter().zip(&noise).map(|(a, b)| a + 0.15 * b).collect();

    let r_h = crate::gripper::hand_to_gripper_rotation(&grasp)?;
    let contact_px = query_features.cell_center(truth_cell.0, truth_cell.1);
    let depth = scene
        .nearest_valid(contact_px, 5.0)
        .map(|(_, _, d)| d)
        .unwrap_or(front_z);
    let contact3d = backproject(contact_px, depth, &k)?;
    let candidates = synth_candidates(&mut bank_rng, spec.candidates, contact3d, 0.03, &r_h);

    let mut mask = Mask::new(spec.width, spec.height);
    for row in truth_cell.0 * spec.cell_px as usize..(truth_cell.0 + 1) * spec.cell_px as usize {
        for col in truth_cell.1 * spec.cell_px as usize..(truth_cell.1 + 1) * spec.cell_px as usize {
            mask.set(col as u32, row as u32, true);
        }
    }

    Ok(SynthCase {
        bank,
        inputs: crate::pipeline::PipelineInputs {
            scene,
            pointing,
            grasp,
            query_embedding,
            query_features,
            candidates: Some(candidates),
        },
        scene_spec,
        truth: CaseTruth { entry_id: true_id, cell: truth_cell, pointing_target: target },
        mask,
    })
}

/// Random grid with `planted` at `cell`, margin-checked like
/// [`synth_featmap_pair`].
fn planted_map(
    rng: &mut ChaCha8Rng,
    h: usize,
    w: usize,
    spec: &CaseSpec,
    planted: &[f64],
    cell: (usize, usize),
) -> Result<FeatureMap> {
    let pv = quantize(&[planted.to_vec()]).remove(0);
    let mut cells: Vec<Vec<f64>> = (0..h * w).map(|_| random_unit_vector(rng, spec.feature_dim)).collect();
    let own = cell.0 * w + cell.1;
    cells[own] = pv.clone();
    for i in 0..cells.len() {
        let mut tries = 0;
        while i != own && dot(&pv, &quantize(std::slice::from_ref(&cells[i]))[0]) > 1.0 - PLANT_MARGIN {
            cells[i] = random_unit_vector(rng, spec.feature_dim);
            tries += 1;
            if tries > PLANT_RETRIES {
                return Err(Error::MarginUnsatisfiable(PLANT_RETRIES));
            }
        }
    }
    to_map(h, w, spec.feature_dim, &cells, w as u32 * spec.cell_px, h as u32 * spec.cell_px)
}

/// Pointing hand whose index finger lies on the line from `mcp` to `target`.
pub fn pointing_hand<R: Rng>(rng: &mut R, mcp: Vec3, target: Vec3) -> Result<HandKeypoints> {
    let scale = 0.085;
    let d = (target - mcp)
        .normalized()
        .ok_or_else(|| Error::DegenerateInput("target at hand".into()))?;
    // template finger direction (index MCP → tip)
    let f = (POINTING_TEMPLATE[landmarks::INDEX_TIP] - POINTING_TEMPLATE[landmarks::INDEX_MCP])
        .normalized()
        .expect("template finger");
    // frame A: f, a random perpendicular, completing axis; frame B likewise for d
    let aux = if f.cross(Vec3::Z).norm() > 0.1 { Vec3::Z } else { Vec3::X };
    let fa = f.cross(aux).normalized().unwrap();
    let fb = f.cross(fa);
    let roll: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let helper = if d.cross(Vec3::Y).norm() > 0.1 { Vec3::Y } else { Vec3::X };
    let da0 = d.cross(helper).normalized().unwrap();
    let db0 = d.cross(da0);
    let (s, c) = roll.sin_cos();
    let da = da0 * c + db0 * s;
    let db = d.cross(da);
    let src = Rotation3::from_columns(f, fa, fb)?;
    let dst = Rotation3::from_columns(d, da, db)?;
    let rotation = dst * src.transpose();
    let anchor = rotation * POINTING_TEMPLATE[landmarks::INDEX_MCP] * scale;
    let t = Sim3 { rotation, scale, translation: mcp - anchor };
    Ok(synth_hand_from(&POINTING_TEMPLATE, Chirality::Right, 0, 0.0, Some(&t)))
}
