//! On-disk formats for pipeline inputs.
//!
//! * keypoints: JSON lines, `{"chirality": "R", "joints": [[x, y, z], ...]}`
//!   (extra fields such as `frame` are ignored)
//! * embedding: JSON array of numbers, or `{"embedding": [...]}`
//! * scene: JSON `{"intrinsics": {...}, "depth": "<file>.ggt"}`, depth as a
//!   rank-2 GGT1 tensor `[height, width]`, relative to the scene file
//! * features: rank-3 GGT1 tensor `[h, w, d]`

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::gesture::HandKeypoints;
use crate::pointing::DepthScene;
use crate::tensor::Tensor;
use crate::transfer::FeatureMap;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_keypoints(text: &str) -> Result<Vec<HandKeypoints>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::parse(format!("keypoints line {}", i + 1), e))
        })
        .collect()
}

pub fn read_keypoints(path: &Path) -> Result<Vec<HandKeypoints>> {
    parse_keypoints(&read_text(path)?)
}

/// First hand in a keypoints file.
pub fn read_hand(path: &Path) -> Result<HandKeypoints> {
    read_keypoints(path)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::parse(path.display().to_string(), "no keypoint records"))
}

pub fn write_keypoints(path: &Path, hands: &[HandKeypoints]) -> Result<()> {
    let mut out = String::new();
    for h in hands {
        out.push_str(&serde_json::to_string(h).expect("hands serialize"));
        out.push('\n');
    }
    write_text(path, &out)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbeddingFile {
    Bare(Vec<f64>),
    Wrapped { embedding: Vec<f64> },
}

pub fn read_embedding(path: &Path) -> Result<Vec<f64>> {
    let parsed: EmbeddingFile = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    let v = match parsed {
        EmbeddingFile::Bare(v) | EmbeddingFile::Wrapped { embedding: v } => v,
    };
    if v.is_empty() {
        return Err(Error::parse(path.display().to_string(), "empty embedding"));
    }
    Ok(v)
}

pub fn write_embedding(path: &Path, v: &[f64]) -> Result<()> {
    write_text(path, &serde_json::to_string(&serde_json::json!({ "embedding": v })).expect("json"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub intrinsics: CameraIntrinsics,
    pub depth: PathBuf,
}

pub fn read_scene(path: &Path) -> Result<DepthScene> {
    let file: SceneFile = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let tensor = Tensor::read(&base.join(&file.depth))?;
    let k = file.intrinsics;
    if tensor.dims != [k.height, k.width] {
        return Err(Error::InvalidScene(format!(
            "depth tensor dims {:?}, intrinsics say [{}, {}]",
            tensor.dims, k.height, k.width
        )));
    }
    DepthScene::new(k, tensor.data.iter().map(|&d| d as f64).collect())
}

/// Writes `scene.json`-style metadata at `path` and the depth tensor next
/// to it under `depth_name`.
pub fn write_scene(path: &Path, scene: &DepthScene, depth_name: &str) -> Result<()> {
    let k = *scene.intrinsics();
    let base = path.parent().unwrap_or(Path::new("."));
    let tensor = Tensor::new(
        vec![k.height, k.width],
        scene.depth_grid().iter().map(|&d| if d.is_finite() { d as f32 } else { 0.0 }).collect(),
    )?;
    fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
    tensor.write(&base.join(depth_name))?;
    let file = SceneFile { intrinsics: k, depth: depth_name.into() };
    write_text(path, &serde_json::to_string_pretty(&file).expect("json"))
}

/// Reads a `[h, w, d]` feature tensor covering an image of `image_dims`.
pub fn read_features(path: &Path, image_dims: (u32, u32)) -> Result<FeatureMap> {
    let t = Tensor::read(path)?;
    let [h, w, d] = t.dims[..] else {
        return Err(Error::InvalidFeatureMap(format!("expected rank 3, got dims {:?}", t.dims)));
    };
    FeatureMap::new(h as usize, w as usize, d as usize, t.data, image_dims.0, image_dims.1)
}

pub fn write_features(path: &Path, map: &FeatureMap) -> Result<()> {
    Tensor::new(vec![map.h() as u32, map.w() as u32, map.d() as u32], map.data().to_vec())?.write(path)
}

/// Writes `text` plus a trailing newline, creating parent directories.
pub fn write_report(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "{text}").map_err(|e| Error::io(path, e))
}
