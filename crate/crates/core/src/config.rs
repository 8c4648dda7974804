//! TOML run configuration.
//!
//! ```toml
//! [inputs]
//! bank = "bank"
//! scene = "scene.json"
//! pointing = "pointing.jsonl"
//! grasp = "grasp.jsonl"
//! embedding = "embedding.json"
//! features = "features.ggt"
//! candidates = "candidates.jsonl"   # omit with no_grasp_model
//! mask = "mask.pgm"                 # evaluation only
//!
//! [params]
//! top_k = 5
//! epsilon = 0.01
//! crop_size = 224
//! lambda = 0.1
//! sigma = 30.0
//!
//! [ablations]
//! no_rotation = false
//! ```
//!
//! Relative paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RansacParams;
use crate::grasp::{load_candidates, AttentionMode, SelectionParams};
use crate::io::{read_embedding, read_features, read_hand, read_scene};
use crate::memory::{load_bank, MemoryBank};
use crate::metrics::Mask;
use crate::pipeline::{Ablations, AtStage, PipelineInputs, PipelineParams, Stage, StageError};
use crate::pointing::PointingParams;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub bank: PathBuf,
    pub scene: PathBuf,
    pub pointing: PathBuf,
    pub grasp: PathBuf,
    pub embedding: PathBuf,
    pub features: PathBuf,
    /// Image size covered by `features`; defaults to the scene size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_image_dims: Option<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
}

/// Flat parameter table; every field optional, defaults as in
/// [`PipelineParams::default`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crop_size: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_exclusion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inlier_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ransac_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_timings: Option<bool>,
}

impl ParamTable {
    /// Fields set in `other` win.
    pub fn merged(&self, other: &ParamTable) -> ParamTable {
        macro_rules! pick {
            ($($f:ident),*) => { ParamTable { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            top_k, epsilon, crop_size, self_exclusion, refine_radius, inlier_threshold,
            ransac_iterations, seed, lambda, sigma, attention, standoff, record_timings
        )
    }

    pub fn resolve(&self) -> Result<PipelineParams> {
        let d = PipelineParams::default();
        let ransac = RansacParams {
            inlier_threshold: self.inlier_threshold.unwrap_or(d.pointing.ransac.inlier_threshold),
            iterations: self.ransac_iterations.unwrap_or(d.pointing.ransac.iterations),
            seed: self.seed.unwrap_or(d.pointing.ransac.seed),
        };
        let p = PipelineParams {
            pointing: PointingParams {
                ransac,
                epsilon: self.epsilon.unwrap_or(d.pointing.epsilon),
                self_exclusion: self.self_exclusion.unwrap_or(d.pointing.self_exclusion),
                refine_radius: self.refine_radius.unwrap_or(d.pointing.refine_radius),
                crop_size: self.crop_size.unwrap_or(d.pointing.crop_size),
            },
            top_k: self.top_k.unwrap_or(d.top_k),
            selection: SelectionParams {
                lambda: self.lambda.unwrap_or(d.selection.lambda),
                sigma: self.sigma.unwrap_or(d.selection.sigma),
                attention: self.attention.unwrap_or(d.selection.attention),
            },
            standoff: self.standoff.unwrap_or(d.standoff),
            record_timings: self.record_timings.unwrap_or(false),
        };
        if p.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if p.pointing.crop_size == 0 {
            return Err(Error::Config("crop_size must be positive".into()));
        }
        if !(p.pointing.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(p.pointing.ransac.inlier_threshold > 0.0) || p.pointing.ransac.iterations == 0 {
            return Err(Error::Config("RANSAC threshold and iterations must be positive".into()));
        }
        if !(p.standoff >= 0.0) {
            return Err(Error::Config("standoff must be non-negative".into()));
        }
        p.selection.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: InputPaths,
    #[serde(default)]
    pub params: ParamTable,
    #[serde(default)]
    pub ablations: Ablations,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads `path` and rebases relative input paths onto its directory.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        let i = &mut self.inputs;
        for p in [&mut i.bank, &mut i.scene, &mut i.pointing, &mut i.grasp, &mut i.embedding, &mut i.features] {
            *p = base.join(&*p);
        }
        for p in [&mut i.candidates, &mut i.mask].into_iter().flatten() {
            *p = base.join(&*p);
        }
    }

    /// ORs in extra ablations. Setting `no_grasp_model` drops the candidate
    /// file so the result stays valid.
    pub fn with_ablations(mut self, extra: Ablations) -> PipelineConfig {
        self.ablations = self.ablations.union(extra);
        if self.ablations.no_grasp_model {
            self.inputs.candidates = None;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.inputs.candidates, self.ablations.no_grasp_model) {
            (Some(_), true) => Err(Error::Config("candidates given while no_grasp_model is set".into())),
            (None, false) => Err(Error::Config("candidates required unless no_grasp_model is set".into())),
            _ => Ok(()),
        }?;
        self.params.resolve().map(|_| ())
    }
}

pub struct LoadedCase {
    pub bank: MemoryBank,
    pub inputs: PipelineInputs,
    pub params: PipelineParams,
    pub ablations: Ablations,
    pub mask: Option<Mask>,
}

pub fn load_case(cfg: &PipelineConfig) -> Result<LoadedCase, StageError> {
    cfg.validate().at(Stage::Config)?;
    let params = cfg.params.resolve().at(Stage::Config)?;
    let i = &cfg.inputs;
    let bank = load_bank(&i.bank).at(Stage::Input)?;
    let scene = read_scene(&i.scene).at(Stage::Input)?;
    let dims = i.features_image_dims.unwrap_or((scene.width(), scene.height()));
    let inputs = PipelineInputs {
        pointing: read_hand(&i.pointing).at(Stage::Input)?,
        grasp: read_hand(&i.grasp).at(Stage::Input)?,
        query_embedding: read_embedding(&i.embedding).at(Stage::Input)?,
        query_features: read_features(&i.features, dims).at(Stage::Input)?,
        candidates: i.candidates.as_deref().map(load_candidates).transpose().at(Stage::Input)?,
        scene,
    };
    let mask = i.mask.as_deref().map(Mask::read).transpose().at(Stage::Input)?;
    Ok(LoadedCase { bank, inputs, params, ablations: cfg.ablations, mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
[inputs]
bank = "bank"
scene = "scene.json"
pointing = "p.jsonl"
grasp = "g.jsonl"
embedding = "e.json"
features = "f.ggt"
candidates = "c.jsonl"
"#;

    #[test]
    fn defaults_and_overrides() {
        let cfg = PipelineConfig::from_toml(MIN).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.params.resolve().unwrap(), PipelineParams::default());

        let flags = ParamTable { lambda: Some(0.5), ..Default::default() };
        let file = ParamTable { lambda: Some(0.2), sigma: Some(10.0), ..Default::default() };
        let p = file.merged(&flags).resolve().unwrap();
        assert_eq!(p.selection.lambda, 0.5);
        assert_eq!(p.selection.sigma, 10.0);
    }

    #[test]
    fn invalid_configs() {
        assert!(PipelineConfig::from_toml("[inputs]\nbank = 3").is_err());
        assert!(PipelineConfig::from_toml(&format!("{MIN}\n[params]\nunknown = 1")).is_err());
        let mut cfg = PipelineConfig::from_toml(MIN).unwrap();
        cfg.ablations.no_grasp_model = true;
        assert!(cfg.validate().is_err());
        let cfg = cfg.with_ablations(Ablations::default());
        cfg.validate().unwrap();
        let bad = ParamTable { sigma: Some(0.0), ..Default::default() };
        assert!(bad.resolve().is_err());
        let bad = ParamTable { top_k: Some(0), ..Default::default() };
        assert!(bad.resolve().is_err());
    }

    #[test]
    fn rebase_and_roundtrip() {
        let mut cfg = PipelineConfig::from_toml(MIN).unwrap();
        let again = PipelineConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        cfg.rebase(Path::new("/data/case"));
        assert_eq!(cfg.inputs.scene, Path::new("/data/case/scene.json"));
        assert_eq!(cfg.inputs.candidates.as_deref(), Some(Path::new("/data/case/c.jsonl")));
    }
}
