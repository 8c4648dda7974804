//! Affordance memory bank: (grasp gesture, source image, contact point)
//! entries with their image embeddings and dense feature maps.
//!
//! On disk a bank is a directory:
//!
//! ```text
//! bank/
//!   manifest.jsonl        one JSON object per entry, in bank order
//!   features/000000.ggt   rank-3 GGT1 tensor (H, W, D) per entry
//! ```
//!
//! Manifest paths are relative to the bank directory. Numbers are written
//! with shortest round-trip formatting, so save → load is bit-exact.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PixelPoint, Vec3};
use crate::gesture::{canonicalize, CanonicalGesture, Chirality, HandKeypoints, MAX_HAND_SPAN};
use crate::tensor::Tensor;
use crate::transfer::FeatureMap;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const FEATURE_DIR: &str = "features";

/// Tolerance when re-checking cached canonical gestures.
pub const CANONICAL_TOL: f64 = 1e-9;

/// Input to [`MemoryBank::ingest`].
#[derive(Debug, Clone)]
pub struct EntryRecord {
    pub id: String,
    pub gesture: HandKeypoints,
    pub embedding: Vec<f64>,
    pub features: FeatureMap,
    pub image_ref: String,
    pub contact: PixelPoint,
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub id: String,
    pub gesture: HandKeypoints,
    pub canonical: CanonicalGesture,
    pub embedding: Vec<f64>,
    pub features: FeatureMap,
    /// Feature tensor path relative to the bank directory.
    pub feature_ref: String,
    /// Source image path; never opened by the library.
    pub image_ref: String,
    /// Contact point in source-image pixels.
    pub contact: PixelPoint,
    pub image_dims: (u32, u32),
    pub category: Option<String>,
}

impl MemoryEntry {
    pub fn chirality(&self) -> Chirality {
        self.gesture.chirality()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryBank {
    entries: Vec<MemoryEntry>,
    embedding_dim: Option<usize>,
    feature_dim: Option<usize>,
}

impl MemoryBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    /// Direct mutable access, bypassing ingestion checks. Run
    /// [`validate_bank`] after editing.
    pub fn entries_mut(&mut self) -> &mut [MemoryEntry] {
        &mut self.entries
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    pub fn get(&self, id: &str) -> Option<&MemoryEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Validates `rec`, caches its canonical gesture and appends it.
    /// The bank is left untouched on error.
    pub fn ingest(&mut self, rec: EntryRecord) -> Result<&MemoryEntry> {
        let invalid = |reason: String| Error::InvalidEntry {
            id: rec.id.clone(),
            reason,
        };
        if rec.id.is_empty() {
            return Err(invalid("empty id".into()));
        }
        if self.get(&rec.id).is_some() {
            return Err(Error::DuplicateId(rec.id));
        }
        if let Some(expected) = self.embedding_dim {
            if rec.embedding.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    got: rec.embedding.len(),
                });
            }
        }
        if let Some(expected) = self.feature_dim {
            if rec.features.d() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    got: rec.features.d(),
                });
            }
        }
        if rec.embedding.is_empty() || rec.embedding.iter().any(|v| !v.is_finite()) {
            return Err(invalid("embedding must be non-empty and finite".into()));
        }
        if norm(&rec.embedding) == 0.0 {
            return Err(invalid("embedding has zero norm".into()));
        }
        let (w, h) = rec.features.image_dims();
        if !rec.contact.inside(w, h) {
            return Err(invalid(format!(
                "contact ({}, {}) outside {w}x{h} image",
                rec.contact.u, rec.contact.v
            )));
        }
        let span = rec.gesture.span();
        if span >= MAX_HAND_SPAN {
            return Err(invalid(format!(
                "hand span {span:.3} m exceeds the {MAX_HAND_SPAN} m sanity bound"
            )));
        }
        let canonical = canonicalize(&rec.gesture)?;

        self.embedding_dim = Some(rec.embedding.len());
        self.feature_dim = Some(rec.features.d());
        let feature_ref = format!("{FEATURE_DIR}/{:06}.ggt", self.entries.len());
        self.entries.push(MemoryEntry {
            id: rec.id,
            gesture: rec.gesture,
            canonical,
            embedding: rec.embedding,
            image_dims: (w, h),
            features: rec.features,
            feature_ref,
            image_ref: rec.image_ref,
            contact: rec.contact,
            category: rec.category,
        });
        Ok(self.entries.last().unwrap())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Serialize, Deserialize)]
struct ManifestRecord {
    id: String,
    chirality: Chirality,
    joints: Vec<Vec3>,
    canonical: Vec<Vec3>,
    embedding: Vec<f64>,
    contact: PixelPoint,
    image_dims: (u32, u32),
    #[serde(default)]
    category: Option<String>,
    feature_ref: String,
    image_ref: String,
}

/// Writes `bank` into `dir`, creating it if needed.
pub fn save_bank(bank: &MemoryBank, dir: &Path) -> Result<()> {
    let features = dir.join(FEATURE_DIR);
    fs::create_dir_all(&features).map_err(|e| Error::io(&features, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut out = BufWriter::new(file);
    for e in &bank.entries {
        let fm = &e.features;
        let tensor = Tensor::new(
            vec![fm.h() as u32, fm.w() as u32, fm.d() as u32],
            fm.data().to_vec(),
        )?;
        let tensor_path = dir.join(&e.feature_ref);
        if let Some(parent) = tensor_path.parent() {
            fs::create_dir_all(parent).map_err(|err| Error::io(parent, err))?;
        }
        tensor.write(&tensor_path)?;
        let rec = ManifestRecord {
            id: e.id.clone(),
            chirality: e.chirality(),
            joints: e.gesture.joints().to_vec(),
            canonical: e.canonical.joints.to_vec(),
            embedding: e.embedding.clone(),
            contact: e.contact,
            image_dims: e.image_dims,
            category: e.category.clone(),
            feature_ref: e.feature_ref.clone(),
            image_ref: e.image_ref.clone(),
        };
        let line = serde_json::to_string(&rec).expect("manifest records serialize");
        writeln!(out, "{line}").map_err(|err| Error::io(&manifest_path, err))?;
    }
    out.flush().map_err(|e| Error::io(&manifest_path, e))
}

/// Reads a bank written by [`save_bank`].
///
/// Structural problems (bad JSON, duplicate ids, inconsistent dimensions)
/// fail the load. Semantic invariants such as the cached canonical gesture
/// are kept as stored; [`validate_bank`] reports them.
pub fn load_bank(dir: &Path) -> Result<MemoryBank> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let file = fs::File::open(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut bank = MemoryBank::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(&manifest_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| Error::CorruptManifest {
            line: lineno,
            reason,
        };
        let rec: ManifestRecord =
            serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        if !seen.insert(rec.id.clone()) {
            return Err(corrupt(format!("duplicate id {:?}", rec.id)));
        }
        let gesture = HandKeypoints::from_slice(&rec.joints, rec.chirality)
            .map_err(|e| corrupt(format!("joints: {e}")))?;
        let canonical_joints: [Vec3; 21] = rec
            .canonical
            .as_slice()
            .try_into()
            .map_err(|_| corrupt(format!("{} canonical joints", rec.canonical.len())))?;
        let tensor = Tensor::read(&dir.join(&rec.feature_ref))?;
        let [h, w, d] = tensor.dims[..] else {
            return Err(Error::MalformedTensor(format!(
                "{}: expected rank 3, got dims {:?}",
                rec.feature_ref, tensor.dims
            )));
        };
        let features = FeatureMap::new(
            h as usize,
            w as usize,
            d as usize,
            tensor.data,
            rec.image_dims.0,
            rec.image_dims.1,
        )?;
        for (dim, got, what) in [
            (&mut bank.embedding_dim, rec.embedding.len(), "embedding"),
            (&mut bank.feature_dim, d as usize, "feature"),
        ] {
            match *dim {
                Some(expected) if expected != got => {
                    return Err(corrupt(format!(
                        "{what} dimension {got}, earlier entries have {expected}"
                    )))
                }
                _ => *dim = Some(got),
            }
        }
        bank.entries.push(MemoryEntry {
            id: rec.id,
            canonical: CanonicalGesture {
                joints: canonical_joints,
                chirality: rec.chirality,
            },
            gesture,
            embedding: rec.embedding,
            features,
            feature_ref: rec.feature_ref,
            image_ref: rec.image_ref,
            contact: rec.contact,
            image_dims: rec.image_dims,
            category: rec.category,
        });
    }
    Ok(bank)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    DuplicateId,
    EmbeddingDimension,
    EmbeddingInvalid,
    FeatureDimension,
    FeatureImageDims,
    ContactOutside,
    ImplausibleHand,
    DegenerateHand,
    CanonicalMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub entry_id: String,
    pub kind: FindingKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: usize,
    pub findings: Vec<Finding>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Re-checks every entry invariant without modifying the bank.
pub fn validate_bank(bank: &MemoryBank) -> ValidationReport {
    let mut report = ValidationReport {
        entries: bank.len(),
        ..Default::default()
    };
    if bank.is_empty() {
        report.warnings.push("empty".into());
        return report;
    }
    let emb_dim = bank.embedding_dim.unwrap_or(bank.entries[0].embedding.len());
    let feat_dim = bank.feature_dim.unwrap_or(bank.entries[0].features.d());
    let mut seen = HashSet::new();
    for e in &bank.entries {
        let mut find = |kind, detail: String| {
            report.findings.push(Finding {
                entry_id: e.id.clone(),
                kind,
                detail,
            })
        };
        if !seen.insert(e.id.as_str()) {
            find(FindingKind::DuplicateId, "id appears more than once".into());
        }
        if e.embedding.len() != emb_dim {
            find(
                FindingKind::EmbeddingDimension,
                format!("length {} vs bank {emb_dim}", e.embedding.len()),
            );
        }
        if e.embedding.iter().any(|v| !v.is_finite()) || !(norm(&e.embedding) > 0.0) {
            find(FindingKind::EmbeddingInvalid, "embedding is zero or non-finite".into());
        }
        if e.features.d() != feat_dim {
            find(
                FindingKind::FeatureDimension,
                format!("{} channels vs bank {feat_dim}", e.features.d()),
            );
        }
        if e.features.image_dims() != e.image_dims {
            find(
                FindingKind::FeatureImageDims,
                format!(
                    "feature map image dims {:?} vs entry {:?}",
                    e.features.image_dims(),
                    e.image_dims
                ),
            );
        }
        if !e.contact.inside(e.image_dims.0, e.image_dims.1) {
            find(
                FindingKind::ContactOutside,
                format!("({}, {}) outside {:?}", e.contact.u, e.contact.v, e.image_dims),
            );
        }
        let span = e.gesture.span();
        if span >= MAX_HAND_SPAN {
            find(FindingKind::ImplausibleHand, format!("span {span:.3} m"));
        }
        match canonicalize(&e.gesture) {
            Ok(c) => {
                let diff = c.max_abs_diff(&e.canonical);
                if !(diff <= CANONICAL_TOL) || c.chirality != e.canonical.chirality {
                    find(
                        FindingKind::CanonicalMismatch,
                        format!("cached canonical differs by {diff:.3e}"),
                    );
                }
            }
            Err(err) => find(FindingKind::DegenerateHand, err.to_string()),
        }
    }
    report
}
