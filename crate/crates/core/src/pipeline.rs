//! End-to-end inference: pointing → crop → retrieval → transfer → rotation
//! → grasp.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{PixelPoint, Rotation3};
use crate::gesture::HandKeypoints;
use crate::grasp::{direct_grasp, select_grasp, GraspCandidate, GraspPose, ScoreBreakdown, SelectionParams};
use crate::gripper::hand_to_gripper_rotation;
use crate::memory::MemoryBank;
use crate::pointing::{locate_target, CropRect, DepthScene, PointingParams, PointingResult};
use crate::retrieval::{retrieve, Retrieval, DEFAULT_TOP_K};
use crate::transfer::{transfer_contact, Correspondence, FeatureMap, SearchWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Input,
    Pointing,
    Crop,
    Retrieval,
    Transfer,
    Rotation,
    Grasp,
    Eval,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Input => "input",
            Stage::Pointing => "pointing",
            Stage::Crop => "crop",
            Stage::Retrieval => "retrieval",
            Stage::Transfer => "transfer",
            Stage::Rotation => "rotation",
            Stage::Grasp => "grasp",
            Stage::Eval => "eval",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T, Error> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Component switches for ablation runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablations {
    /// Skip ray casting; search the whole image.
    pub no_pointing: bool,
    /// Use the pointed pixel (or crop center) as the contact.
    pub no_transfer: bool,
    /// Drop the orientation term from selection.
    pub no_rotation: bool,
    /// No candidate set: build the grasp from contact and hand rotation.
    pub no_grasp_model: bool,
    /// No grasp gesture: skip retrieval, transfer and rotation.
    pub no_grasp_gesture: bool,
}

impl Ablations {
    pub fn union(self, o: Ablations) -> Ablations {
        Ablations {
            no_pointing: self.no_pointing || o.no_pointing,
            no_transfer: self.no_transfer || o.no_transfer,
            no_rotation: self.no_rotation || o.no_rotation,
            no_grasp_model: self.no_grasp_model || o.no_grasp_model,
            no_grasp_gesture: self.no_grasp_gesture || o.no_grasp_gesture,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub pointing: PointingParams,
    pub top_k: usize,
    pub selection: SelectionParams,
    /// Back-off along the approach axis for direct grasps, meters.
    pub standoff: f64,
    /// Adds wall-clock stage timings to the report (breaks byte-identity).
    pub record_timings: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            pointing: PointingParams::default(),
            top_k: DEFAULT_TOP_K,
            selection: SelectionParams::default(),
            standoff: 0.0,
            record_timings: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub scene: DepthScene,
    pub pointing: HandKeypoints,
    pub grasp: HandKeypoints,
    pub query_embedding: Vec<f64>,
    /// Dense features of the target image, or of the crop.
    pub query_features: FeatureMap,
    pub candidates: Option<Vec<GraspCandidate>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactSource {
    Transfer,
    Pointing,
    CropCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspMode {
    Selected,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub source_contact: PixelPoint,
    pub correspondence: Correspondence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspReport {
    pub mode: GraspMode,
    pub pose: GraspPose,
    pub index: Option<usize>,
    pub breakdown: Option<ScoreBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub ablations: Ablations,
    pub pointing: Option<PointingResult>,
    pub crop: CropRect,
    pub retrieval: Option<Retrieval>,
    pub transfer: Option<TransferReport>,
    pub contact: PixelPoint,
    pub contact_source: ContactSource,
    pub gripper_rotation: Option<Rotation3>,
    pub grasp: GraspReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Clock {
    on: bool,
    last: Option<Instant>,
    times: BTreeMap<String, f64>,
}

impl Clock {
    fn new(on: bool) -> Clock {
        Clock { on, last: on.then(Instant::now), times: BTreeMap::new() }
    }

    fn lap(&mut self, stage: Stage) {
        if let Some(last) = self.last {
            let now = Instant::now();
            self.times.insert(stage.to_string(), (now - last).as_secs_f64() * 1e3);
            self.last = Some(now);
        }
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.on.then_some(self.times)
    }
}

/// Checks input combinations that are errors regardless of data.
pub fn check_inputs(inputs: &PipelineInputs, ablations: &Ablations) -> Result<(), StageError> {
    match (&inputs.candidates, ablations.no_grasp_model) {
        (Some(_), true) => Err(Error::Config("candidates given while no_grasp_model is set".into())),
        (None, false) => Err(Error::Config("candidates required unless no_grasp_model is set".into())),
        _ => Ok(()),
    }
    .at(Stage::Config)
}

pub fn run_pipeline(
    bank: &MemoryBank,
    inputs: &PipelineInputs,
    params: &PipelineParams,
    ablations: &Ablations,
) -> Result<PipelineReport, StageError> {
    check_inputs(inputs, ablations)?;
    params.selection.validate().at(Stage::Config)?;
    let scene = &inputs.scene;
    let k = scene.intrinsics();
    let mut clock = Clock::new(params.record_timings);

    // 1. pointing and crop
    let pointing = if ablations.no_pointing {
        None
    } else {
        Some(locate_target(&inputs.pointing, scene, &params.pointing).at(Stage::Pointing)?)
    };
    clock.lap(Stage::Pointing);
    let crop = pointing.as_ref().map_or(CropRect::full(scene.width(), scene.height()), |p| p.crop);
    let fallback = match &pointing {
        Some(p) => (p.target2d, ContactSource::Pointing),
        None => (
            PixelPoint::new(
                crop.u0 as f64 + (crop.w as f64 - 1.0) / 2.0,
                crop.v0 as f64 + (crop.h as f64 - 1.0) / 2.0,
            ),
            ContactSource::CropCenter,
        ),
    };

    let use_gesture = !ablations.no_grasp_gesture;

    // 2. retrieval
    let retrieval = if use_gesture && !ablations.no_transfer {
        Some(retrieve(&inputs.grasp, &inputs.query_embedding, bank, params.top_k).at(Stage::Retrieval)?)
    } else {
        None
    };
    clock.lap(Stage::Retrieval);

    // 3. transfer
    let (contact, contact_source, transfer) = match &retrieval {
        Some(r) => {
            let entry = &bank.entries()[r.result.entry_index];
            let (corr, offset) = transfer_in_crop(entry, &inputs.query_features, crop, scene).at(Stage::Transfer)?;
            let contact = PixelPoint::new(corr.target_pixel.u + offset.0, corr.target_pixel.v + offset.1);
            (
                contact,
                ContactSource::Transfer,
                Some(TransferReport { source_contact: entry.contact, correspondence: corr }),
            )
        }
        None => (fallback.0, fallback.1, None),
    };
    clock.lap(Stage::Transfer);

    // 4. rotation
    let gripper_rotation = if use_gesture && !ablations.no_rotation {
        Some(hand_to_gripper_rotation(&inputs.grasp).at(Stage::Rotation)?)
    } else {
        None
    };
    clock.lap(Stage::Rotation);

    // 5. grasp
    let r_h = gripper_rotation.unwrap_or(Rotation3::IDENTITY);
    let grasp = match &inputs.candidates {
        Some(cands) if !ablations.no_grasp_model => {
            let mut sel_params = params.selection;
            if gripper_rotation.is_none() {
                sel_params.lambda = 0.0;
            }
            let sel = select_grasp(cands, &r_h, contact, k, &sel_params).at(Stage::Grasp)?;
            GraspReport {
                mode: GraspMode::Selected,
                pose: sel.candidate.pose,
                index: Some(sel.index),
                breakdown: Some(sel.breakdown[sel.index]),
            }
        }
        _ => GraspReport {
            mode: GraspMode::Direct,
            pose: direct_grasp(contact, scene, &r_h, params.standoff).at(Stage::Grasp)?,
            index: None,
            breakdown: None,
        },
    };
    clock.lap(Stage::Grasp);

    Ok(PipelineReport {
        ablations: *ablations,
        pointing,
        crop,
        retrieval,
        transfer,
        contact,
        contact_source,
        gripper_rotation,
        grasp,
        timings_ms: clock.finish(),
    })
}

/// Runs transfer against either a full-image or a crop-sized feature map.
/// Returns the correspondence and the pixel offset into full-image
/// coordinates.
fn transfer_in_crop(
    entry: &crate::memory::MemoryEntry,
    query: &FeatureMap,
    crop: CropRect,
    scene: &DepthScene,
) -> Result<(Correspondence, (f64, f64)), Error> {
    let dims = query.image_dims();
    if dims == (scene.width(), scene.height()) {
        let c = transfer_contact(&entry.features, entry.contact, query, Some(SearchWindow::Rect(crop)))?;
        Ok((c, (0.0, 0.0)))
    } else if dims == (crop.w, crop.h) {
        let c = transfer_contact(&entry.features, entry.contact, query, None)?;
        Ok((c, (crop.u0 as f64, crop.v0 as f64)))
    } else {
        Err(Error::InvalidFeatureMap(format!(
            "query features cover {}x{}, expected the image ({}x{}) or the crop ({}x{})",
            dims.0,
            dims.1,
            scene.width(),
            scene.height(),
            crop.w,
            crop.h
        )))
    }
}
