//! Batch evaluation over case directories.
//!
//! A case directory holds a `case.toml` ([`PipelineConfig`]) whose inputs
//! include a ground-truth `mask`. Cases are processed in name order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{load_case, InputPaths, ParamTable, PipelineConfig};
use crate::error::{Error, Result};
use crate::geometry::PixelPoint;
use crate::grasp::write_candidates;
use crate::io::{write_embedding, write_features, write_keypoints, write_scene};
use crate::memory::save_bank;
use crate::metrics::compute_dtm;
use crate::pipeline::{run_pipeline, Ablations, AtStage, Stage, StageError};
use crate::synth::SynthCase;

pub const CASE_FILE: &str = "case.toml";
/// Default DTM threshold for the success-rate proxy.
pub const DEFAULT_SR_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub name: String,
    pub contact: Option<PixelPoint>,
    pub dtm: Option<f64>,
    /// `"[stage] message"` when the case failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub cases: usize,
    pub completed: usize,
    pub completion_rate: f64,
    pub mean_dtm: Option<f64>,
    pub median_dtm: Option<f64>,
    /// Fraction of all cases with DTM at or below `sr_threshold`. A proxy
    /// for task success, not a measured robot success rate.
    pub sr_proxy: f64,
    pub sr_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ablations: Ablations,
    pub outcomes: Vec<CaseOutcome>,
    pub summary: EvalSummary,
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub ablations: Ablations,
    pub params: ParamTable,
    /// `None` uses [`DEFAULT_SR_THRESHOLD`].
    pub sr_threshold: Option<f64>,
}

pub fn list_cases(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(CASE_FILE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

pub fn eval_case(dir: &Path, opts: &EvalOptions) -> Result<(PixelPoint, f64), StageError> {
    let mut cfg = PipelineConfig::load(&dir.join(CASE_FILE)).at(Stage::Config)?.with_ablations(opts.ablations);
    cfg.params = cfg.params.merged(&opts.params);
    let case = load_case(&cfg)?;
    let mask = case
        .mask
        .ok_or_else(|| Error::Config("case has no mask".into()))
        .at(Stage::Eval)?;
    let report = run_pipeline(&case.bank, &case.inputs, &case.params, &case.ablations)?;
    let dtm = compute_dtm(report.contact, &mask).at(Stage::Eval)?;
    Ok((report.contact, dtm))
}

pub fn eval_batch(root: &Path, opts: &EvalOptions) -> Result<EvalReport> {
    let dirs = list_cases(root)?;
    if dirs.is_empty() {
        return Err(Error::Config(format!("no case directories with {CASE_FILE} under {}", root.display())));
    }
    let outcomes: Vec<CaseOutcome> = dirs
        .iter()
        .map(|d| {
            let name = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            match eval_case(d, opts) {
                Ok((c, dtm)) => CaseOutcome { name, contact: Some(c), dtm: Some(dtm), error: None },
                Err(e) => CaseOutcome { name, contact: None, dtm: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let threshold = opts.sr_threshold.unwrap_or(DEFAULT_SR_THRESHOLD);
    Ok(EvalReport { ablations: opts.ablations, summary: summarize(&outcomes, threshold), outcomes })
}

pub fn summarize(outcomes: &[CaseOutcome], sr_threshold: f64) -> EvalSummary {
    let mut dtms: Vec<f64> = outcomes.iter().filter_map(|o| o.dtm).collect();
    dtms.sort_by(f64::total_cmp);
    let n = outcomes.len();
    let median = match dtms.len() {
        0 => None,
        m if m % 2 == 1 => Some(dtms[m / 2]),
        m => Some((dtms[m / 2 - 1] + dtms[m / 2]) / 2.0),
    };
    EvalSummary {
        cases: n,
        completed: dtms.len(),
        completion_rate: if n == 0 { 0.0 } else { dtms.len() as f64 / n as f64 },
        mean_dtm: (!dtms.is_empty()).then(|| dtms.iter().sum::<f64>() / dtms.len() as f64),
        median_dtm: median,
        sr_proxy: if n == 0 { 0.0 } else { dtms.iter().filter(|&&d| d <= sr_threshold).count() as f64 / n as f64 },
        sr_threshold,
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let width = self.outcomes.iter().map(|o| o.name.len()).max().unwrap_or(4).max(4);
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>16}  status", "case", "dtm", "contact");
        for o in &self.outcomes {
            let dtm = o.dtm.map_or("-".to_string(), |d| format!("{d:.6}"));
            let c = o.contact.map_or("-".to_string(), |c| format!("({:.1}, {:.1})", c.u, c.v));
            let status = o.error.as_deref().unwrap_or("ok");
            let _ = writeln!(out, "{:<width$}  {dtm:>10}  {c:>16}  {status}", o.name);
        }
        let s = &self.summary;
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |d| format!("{d:.6}"));
        let _ = writeln!(out, "cases {}  completed {} ({:.1}%)", s.cases, s.completed, 100.0 * s.completion_rate);
        let _ = writeln!(out, "mean dtm {}  median dtm {}", fmt(s.mean_dtm), fmt(s.median_dtm));
        let _ = write!(
            out,
            "sr-proxy (dtm <= {}) {:.1}%  [proxy from contact accuracy, not robot trials]",
            s.sr_threshold,
            100.0 * s.sr_proxy
        );
        out
    }
}

/// Materializes a synthetic case as a case directory.
pub fn write_case(case: &SynthCase, dir: &Path, params: &ParamTable) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_bank(&case.bank, &dir.join("bank"))?;
    write_scene(&dir.join("scene.json"), &case.inputs.scene, "depth.ggt")?;
    write_keypoints(&dir.join("pointing.jsonl"), std::slice::from_ref(&case.inputs.pointing))?;
    write_keypoints(&dir.join("grasp.jsonl"), std::slice::from_ref(&case.inputs.grasp))?;
    write_embedding(&dir.join("embedding.json"), &case.inputs.query_embedding)?;
    write_features(&dir.join("features.ggt"), &case.inputs.query_features)?;
    if let Some(c) = &case.inputs.candidates {
        write_candidates(&dir.join("candidates.jsonl"), c)?;
    }
    case.mask.write(&dir.join("mask.pgm"))?;
    let dims = case.inputs.query_features.image_dims();
    let cfg = PipelineConfig {
        inputs: InputPaths {
            bank: "bank".into(),
            scene: "scene.json".into(),
            pointing: "pointing.jsonl".into(),
            grasp: "grasp.jsonl".into(),
            embedding: "embedding.json".into(),
            features: "features.ggt".into(),
            features_image_dims: (dims != (case.inputs.scene.width(), case.inputs.scene.height())).then_some(dims),
            candidates: case.inputs.candidates.as_ref().map(|_| "candidates.jsonl".into()),
            mask: Some("mask.pgm".into()),
        },
        params: params.clone(),
        ablations: Ablations::default(),
    };
    let truth = serde_json::to_string_pretty(&case.truth).expect("json");
    std::fs::write(dir.join("truth.json"), truth).map_err(|e| Error::io(dir, e))?;
    std::fs::write(dir.join(CASE_FILE), cfg.to_toml()).map_err(|e| Error::io(dir, e))
}
