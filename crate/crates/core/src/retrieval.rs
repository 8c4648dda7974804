//! Two-stage retrieval over the memory bank.
//!
//! Stage 1 keeps the `K` same-chirality entries whose canonical gestures are
//! most similar to the query. Stage 2 picks, among those, the entry whose
//! image embedding is closest to the query embedding. Both stages break ties
//! by ascending entry id so the result does not depend on bank order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gesture::{canonicalize, cosine, gesture_similarity, HandKeypoints};
use crate::memory::MemoryBank;

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureHit {
    /// Position in the bank.
    pub index: usize,
    pub entry_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub hits: Vec<GestureHit>,
    /// Fewer same-chirality entries than requested existed.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub entry_id: String,
    pub entry_index: usize,
    pub gesture_similarity: f64,
    pub embedding_similarity: f64,
    /// 1-based rank of the selected entry in stage 1.
    pub rank_stage1: usize,
}

fn by_score_then_id(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

pub fn retrieve_topk_gestures(query: &HandKeypoints, bank: &MemoryBank, k: usize) -> Result<TopK> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    let q = canonicalize(query)?;
    let mut hits = bank
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.chirality() == query.chirality())
        .map(|(index, e)| {
            Ok(GestureHit {
                index,
                entry_id: e.id.clone(),
                similarity: gesture_similarity(&q, &e.canonical)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if hits.is_empty() {
        return Err(Error::NoChiralityMatch);
    }
    hits.sort_by(|a, b| {
        by_score_then_id((a.similarity, &a.entry_id), (b.similarity, &b.entry_id))
    });
    let truncated = hits.len() < k;
    hits.truncate(k);
    Ok(TopK { hits, truncated })
}

/// Stage 2: the candidate with the most similar embedding.
pub fn select_entry(
    bank: &MemoryBank,
    candidates: &[GestureHit],
    query_embedding: &[f64],
) -> Result<RetrievalResult> {
    let mut best: Option<(f64, usize)> = None;
    for (pos, hit) in candidates.iter().enumerate() {
        let entry = bank.entries().get(hit.index).ok_or_else(|| {
            Error::Config(format!("candidate index {} outside bank", hit.index))
        })?;
        if entry.embedding.len() != query_embedding.len() {
            return Err(Error::DimensionMismatch {
                expected: entry.embedding.len(),
                got: query_embedding.len(),
            });
        }
        let sim = cosine(query_embedding, &entry.embedding)?;
        let better = match best {
            None => true,
            Some((s, p)) => {
                by_score_then_id((sim, &hit.entry_id), (s, &candidates[p].entry_id))
                    == Ordering::Less
            }
        };
        if better {
            best = Some((sim, pos));
        }
    }
    let (embedding_similarity, pos) = best.ok_or(Error::NoCandidates)?;
    let hit = &candidates[pos];
    Ok(RetrievalResult {
        entry_id: hit.entry_id.clone(),
        entry_index: hit.index,
        gesture_similarity: hit.similarity,
        embedding_similarity,
        rank_stage1: pos + 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub result: RetrievalResult,
    pub stage1: TopK,
}

pub fn retrieve(
    query: &HandKeypoints,
    query_embedding: &[f64],
    bank: &MemoryBank,
    k: usize,
) -> Result<Retrieval> {
    let stage1 = retrieve_topk_gestures(query, bank, k)?;
    let result = select_entry(bank, &stage1.hits, query_embedding)?;
    Ok(Retrieval { result, stage1 })
}
