//! Browser bindings for the gestgrasp demo page.
//!
//! Every export returns a JSON string; errors come back as `"[stage] message"`.

use gestgrasp::geometry::{backproject, project, PixelPoint, Ray, Rotation3, Vec3};
use gestgrasp::gesture::{canonicalize, gesture_similarity};
use gestgrasp::grasp::{select_grasp, AttentionMode, SelectionParams};
use gestgrasp::gripper::hand_to_gripper_rotation;
use gestgrasp::pointing::{locate_target, PointingParams, PointingResult};
use gestgrasp::synth::{closed_form_hit, pointing_hand, render_depth, synth_case, synth_hand, CaseSpec, Primitive, SceneSpec, Sim3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Crop side used by the pointing demo, pixels.
pub const DEMO_CROP: u32 = 80;
/// Number of non-hand primitives at the front of a synthetic scene.
const OBJECTS: usize = 3;
const JOINT_RADIUS: f64 = 0.007;

fn tag<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> String {
    move |e| format!("[{stage}] {e}")
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("json")
}

#[derive(Serialize)]
struct PointView {
    width: u32,
    height: u32,
    /// Row-major depth in meters, 0 where nothing was hit.
    depth: Vec<f32>,
    aim: PixelPoint,
    /// Pointing-hand joints projected to pixels.
    hand: Vec<PixelPoint>,
    result: Option<PointingResult>,
    /// Pixel distance between the aimed and the located target.
    error_px: Option<f64>,
    error: Option<String>,
}

/// Aims a synthetic pointing hand at the surface under pixel `(u, v)` of the
/// scene for `seed`, renders depth, and runs target localization.
#[wasm_bindgen]
pub fn point_at(seed: u64, u: f64, v: f64) -> Result<String, String> {
    let case = synth_case(&CaseSpec { seed, ..CaseSpec::default() }).map_err(tag("input"))?;
    let k = case.scene_spec.intrinsics;
    let objects: Vec<Primitive> = case.scene_spec.primitives[..OBJECTS].to_vec();
    let aim = PixelPoint::new(u, v);
    let through = backproject(aim, 1.0, &k).map_err(tag("input"))?;
    let ray = Ray::new(Vec3::ZERO, through).map_err(tag("input"))?;
    let target = closed_form_hit(&objects, &ray).ok_or_else(|| "[input] no surface under that pixel".to_string())?;

    let side = if target.x > 0.0 { -1.0 } else { 1.0 };
    let mcp = target + Vec3::new(side * 0.17, -0.11, -0.21);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hand = pointing_hand(&mut rng, mcp, target).map_err(tag("input"))?;
    let mut primitives = objects;
    primitives.extend(hand.joints().iter().map(|&center| Primitive::Sphere { center, radius: JOINT_RADIUS }));
    let scene = render_depth(&SceneSpec { primitives, intrinsics: k, seed, depth_noise: 0.0 }).map_err(tag("input"))?;

    let params = PointingParams { crop_size: DEMO_CROP, ..PointingParams::default() };
    let (result, error) = match locate_target(&hand, &scene, &params) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(format!("[pointing] {e}"))),
    };
    let view = PointView {
        width: scene.width(),
        height: scene.height(),
        depth: scene.depth_grid().iter().map(|&d| d as f32).collect(),
        aim,
        hand: hand.joints().iter().filter_map(|&j| project(j, &k).ok()).collect(),
        error_px: result.as_ref().map(|r| r.target2d.distance(aim)),
        result,
        error,
    };
    Ok(to_json(&view))
}

#[derive(Serialize)]
struct CanonView {
    /// Transformed input hand, camera coordinates.
    observed: Vec<[f64; 3]>,
    canonical_reference: Vec<[f64; 3]>,
    canonical_observed: Vec<[f64; 3]>,
    max_abs_diff: f64,
    similarity: f64,
}

/// Canonicalizes a hand before and after a similarity transform given by
/// yaw/pitch/roll (degrees) and a scale factor.
#[wasm_bindgen]
pub fn canonicalize_view(seed: u64, yaw: f64, pitch: f64, roll: f64, scale: f64) -> Result<String, String> {
    let rot = |axis: Vec3, deg: f64| Rotation3::from_axis_angle(axis, deg.to_radians());
    let rotation = rot(Vec3::Z, yaw).map_err(tag("input"))?
        * rot(Vec3::Y, pitch).map_err(tag("input"))?
        * rot(Vec3::X, roll).map_err(tag("input"))?;
    if !(scale > 0.0) {
        return Err("[input] scale must be positive".into());
    }
    let reference = synth_hand(seed, 0.15, None);
    let t = Sim3 { rotation, scale, translation: Vec3::new(0.1, -0.2, 0.5) };
    let observed = t.apply_hand(&reference).map_err(tag("input"))?;
    let a = canonicalize(&reference).map_err(tag("retrieval"))?;
    let b = canonicalize(&observed).map_err(tag("retrieval"))?;
    let arr = |js: &[Vec3]| js.iter().map(|j| j.to_array()).collect::<Vec<_>>();
    let view = CanonView {
        observed: arr(observed.joints()),
        canonical_reference: arr(a.to_keypoints().joints()),
        canonical_observed: arr(b.to_keypoints().joints()),
        max_abs_diff: a.max_abs_diff(&b),
        similarity: gesture_similarity(&a, &b).map_err(tag("retrieval"))?,
    };
    Ok(to_json(&view))
}

#[derive(Serialize)]
struct CandidateView {
    pixel: Option<PixelPoint>,
    score: f64,
    attention: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct SweepPoint {
    lambda: f64,
    index: usize,
    effective: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct SweepView {
    width: u32,
    height: u32,
    contact: PixelPoint,
    candidates: Vec<CandidateView>,
    sweep: Vec<SweepPoint>,
}

/// Grasp selection on the synthetic case for `seed` at `steps + 1` evenly
/// spaced orientation weights in `[0, lambda_max]`.
#[wasm_bindgen]
pub fn lambda_sweep(seed: u64, lambda_max: f64, steps: u32, attention: bool, sigma: f64) -> Result<String, String> {
    if !(lambda_max >= 0.0) || steps == 0 {
        return Err("[config] lambda_max must be non-negative and steps positive".into());
    }
    let case = synth_case(&CaseSpec { seed, ..CaseSpec::default() }).map_err(tag("input"))?;
    let k = case.scene_spec.intrinsics;
    let candidates = case.inputs.candidates.clone().unwrap_or_default();
    let r_h = hand_to_gripper_rotation(&case.inputs.grasp).map_err(tag("rotation"))?;
    let contact = case.inputs.query_features.cell_center(case.truth.cell.0, case.truth.cell.1);
    let attention = if attention { AttentionMode::Weight } else { AttentionMode::Off };
    let select = |lambda: f64| {
        select_grasp(&candidates, &r_h, contact, &k, &SelectionParams { lambda, sigma, attention }).map_err(tag("grasp"))
    };
    let base = select(0.0)?;
    let sweep = (0..=steps)
        .map(|i| {
            let lambda = lambda_max * i as f64 / steps as f64;
            let s = select(lambda)?;
            let b = s.breakdown[s.index];
            Ok(SweepPoint { lambda, index: s.index, effective: b.effective, deviation: b.deviation })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let view = SweepView {
        width: k.width,
        height: k.height,
        contact,
        candidates: candidates
            .iter()
            .zip(&base.breakdown)
            .map(|(c, b)| CandidateView {
                pixel: project(c.pose.t, &k).ok(),
                score: b.score,
                attention: b.attention,
                deviation: b.deviation,
            })
            .collect(),
        sweep,
    };
    Ok(to_json(&view))
}
