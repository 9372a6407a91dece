//! Per-image scoring.
//!
//! An image succeeds when every requested object is detected and, where an
//! attribute is requested, at least one detection of that object carries the
//! color. Extra objects are never penalized. When one label is requested at
//! several positions, detections are assigned to positions by a maximum
//! cardinality matching so that a single detection cannot satisfy two
//! positions.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{check_binding_srgb, ReferencePalette, DEFAULT_BINDING_THRESHOLD};
use crate::error::{Error, Result};
use crate::ingest::{prepare_record, ImageRecord, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_DEDUP_IOU};
use crate::prompt::{PromptDataset, PromptInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub confidence: f64,
    pub dedup_iou: f64,
    pub binding: f64,
    /// Record color verdicts of every detection against every requested
    /// attribute (attribute leaking diagnostics).
    #[serde(default)]
    pub audit: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            confidence: DEFAULT_CONFIDENCE_THRESHOLD,
            dedup_iou: DEFAULT_DEDUP_IOU,
            binding: DEFAULT_BINDING_THRESHOLD,
            audit: false,
        }
    }
}

/// Color verdict of one detection against one requested attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub detection_id: u32,
    pub label: String,
    pub attribute: String,
    pub proportion: f64,
    pub bound: bool,
    /// Whether this detection was matched to a position asking for exactly
    /// this attribute. A bound, unrequested verdict is a leak.
    pub requested: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub prompt_id: String,
    pub seed: u64,
    pub success: u8,
    pub position_presence: Vec<bool>,
    pub position_binding: Vec<Option<bool>>,
    pub matched_detection_ids: Vec<Option<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<Vec<AuditEntry>>,
}

impl Outcome {
    pub fn succeeded(&self) -> bool {
        self.success == 1
    }

    /// Success recomputed from the per-position diagnostics.
    pub fn recomputed_success(&self) -> bool {
        self.position_presence.iter().all(|&p| p) && self.position_binding.iter().flatten().all(|&b| b)
    }
}

/// Score one confidence-filtered, deduplicated record.
pub fn score_image(
    instance: &PromptInstance,
    record: &ImageRecord,
    palette: &ReferencePalette,
    thresholds: &Thresholds,
) -> Result<Outcome> {
    if instance.prompt_id != record.prompt_id {
        return Err(Error::PromptMismatch {
            instance: instance.prompt_id.clone(),
            record: record.prompt_id.clone(),
        });
    }
    let gt = &instance.ground_truth;
    let dets = &record.detections;

    // candidates sorted by id so the matching ignores list order
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by_key(|&d| dets[d].id());

    let mut verdicts: BTreeMap<(usize, String), (f64, bool)> = BTreeMap::new();
    let mut verdict = |d: usize, attr: &str| -> Result<(f64, bool)> {
        if let Some(v) = verdicts.get(&(d, attr.to_string())) {
            return Ok(*v);
        }
        let det = &dets[d];
        let pixels = det.pixels.as_deref().ok_or_else(|| Error::MissingPixels {
            prompt_id: record.prompt_id.clone(),
            seed: record.seed,
            detection: det.id(),
        })?;
        let v = check_binding_srgb(pixels, attr, palette, thresholds.binding)?;
        verdicts.insert((d, attr.to_string()), (v.proportion, v.success));
        Ok((v.proportion, v.success))
    };

    let mut label_edges = Vec::with_capacity(gt.len());
    let mut full_edges = Vec::with_capacity(gt.len());
    for g in gt {
        let same_label: Vec<usize> = order.iter().copied().filter(|&d| dets[d].label == g.object).collect();
        let full = match &g.attribute {
            None => same_label.clone(),
            Some(a) => {
                let mut v = Vec::new();
                for &d in &same_label {
                    if verdict(d, a)?.1 {
                        v.push(d);
                    }
                }
                v
            }
        };
        label_edges.push(same_label);
        full_edges.push(full);
    }

    let presence_match = max_matching(&label_edges, dets.len());
    let full_match = max_matching(&full_edges, dets.len());

    let position_presence: Vec<bool> = presence_match.iter().map(Option::is_some).collect();
    let position_binding: Vec<Option<bool>> = gt
        .iter()
        .enumerate()
        .map(|(i, g)| g.attribute.as_ref().map(|_| position_presence[i] && full_match[i].is_some()))
        .collect();
    let success = full_match.iter().all(Option::is_some);
    let matched_detection_ids = full_match
        .iter()
        .zip(&presence_match)
        .map(|(f, p)| f.or(*p).map(|d| dets[d].id()))
        .collect();

    let audit = if thresholds.audit {
        let requested_attrs: BTreeSet<&str> = gt.iter().filter_map(|g| g.attribute.as_deref()).collect();
        let mut entries = Vec::new();
        for &d in &order {
            for &a in &requested_attrs {
                let (proportion, bound) = verdict(d, a)?;
                let requested = full_match
                    .iter()
                    .enumerate()
                    .any(|(i, m)| *m == Some(d) && gt[i].attribute.as_deref() == Some(a));
                entries.push(AuditEntry {
                    detection_id: dets[d].id(),
                    label: dets[d].label.clone(),
                    attribute: a.to_string(),
                    proportion,
                    bound,
                    requested,
                });
            }
        }
        Some(entries)
    } else {
        None
    };

    let outcome = Outcome {
        prompt_id: record.prompt_id.clone(),
        seed: record.seed,
        success: u8::from(success),
        position_presence,
        position_binding,
        matched_detection_ids,
        audit,
    };
    debug_assert_eq!(outcome.succeeded(), outcome.recomputed_success());
    Ok(outcome)
}

/// Kuhn's augmenting-path matching, positions in order. Returns the
/// detection matched to each position.
fn max_matching(edges: &[Vec<usize>], n_det: usize) -> Vec<Option<usize>> {
    fn augment(p: usize, edges: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &d in &edges[p] {
            if seen[d] {
                continue;
            }
            seen[d] = true;
            if owner[d].is_none_or(|q| augment(q, edges, seen, owner)) {
                owner[d] = Some(p);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_det];
    for p in 0..edges.len() {
        let mut seen = vec![false; n_det];
        augment(p, edges, &mut seen, &mut owner);
    }
    let mut matched = vec![None; edges.len()];
    for (d, o) in owner.iter().enumerate() {
        if let Some(p) = o {
            matched[*p] = Some(d);
        }
    }
    matched
}

/// A record that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub record: usize,
    pub prompt_id: String,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderSampled {
    pub prompt_id: String,
    pub images: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Coverage {
    pub records_in: usize,
    pub outcomes: usize,
    pub rejects: Vec<Reject>,
    /// Seeds seen anywhere in the corpus, ascending.
    pub seeds: Vec<u64>,
    /// `(prompt_id, seed)` pairs absent from the corpus, over every dataset
    /// prompt and every seen seed.
    pub missing: Vec<(String, u64)>,
    pub under_sampled: Vec<UnderSampled>,
}

impl Coverage {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty() && self.rejects.is_empty()
    }
}

/// Filter, deduplicate and score every record. Outcomes come back sorted by
/// `(prompt_id, seed)`; unscorable records are listed in the coverage.
pub fn score_corpus(
    dataset: &PromptDataset,
    records: &[ImageRecord],
    palette: &ReferencePalette,
    thresholds: &Thresholds,
    min_images_per_prompt: usize,
) -> (Vec<Outcome>, Coverage) {
    let index = dataset.index();

    let mut first_seen: BTreeMap<(&str, u64), usize> = BTreeMap::new();
    let mut duplicate = vec![false; records.len()];
    for (i, r) in records.iter().enumerate() {
        if first_seen.insert((r.prompt_id.as_str(), r.seed), i).is_some() {
            duplicate[i] = true;
        }
    }

    let results: Vec<std::result::Result<Outcome, String>> = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            if duplicate[i] {
                return Err("duplicate (prompt_id, seed)".to_string());
            }
            let instance = index
                .get(r.prompt_id.as_str())
                .ok_or_else(|| format!("unknown prompt_id `{}`", r.prompt_id))?;
            let prepared = prepare_record(r, thresholds.confidence, thresholds.dedup_iou);
            score_image(instance, &prepared, palette, thresholds).map_err(|e| e.to_string())
        })
        .collect();

    let mut outcomes = Vec::with_capacity(records.len());
    let mut rejects = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(o) => outcomes.push(o),
            Err(reason) => rejects.push(Reject {
                record: i,
                prompt_id: records[i].prompt_id.clone(),
                seed: records[i].seed,
                reason,
            }),
        }
    }
    outcomes.sort_by(|a, b| (&a.prompt_id, a.seed).cmp(&(&b.prompt_id, b.seed)));

    let seeds: BTreeSet<u64> = records.iter().map(|r| r.seed).collect();
    let scored: BTreeSet<(&str, u64)> = outcomes.iter().map(|o| (o.prompt_id.as_str(), o.seed)).collect();
    let mut per_prompt: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &outcomes {
        *per_prompt.entry(o.prompt_id.as_str()).or_default() += 1;
    }
    let mut missing = Vec::new();
    let mut under_sampled = Vec::new();
    let mut prompt_ids: Vec<&str> = dataset.prompts.iter().map(|p| p.prompt_id.as_str()).collect();
    prompt_ids.sort_unstable();
    for pid in prompt_ids {
        for &s in &seeds {
            if !scored.contains(&(pid, s)) {
                missing.push((pid.to_string(), s));
            }
        }
        let n = per_prompt.get(pid).copied().unwrap_or(0);
        if n < min_images_per_prompt {
            under_sampled.push(UnderSampled {
                prompt_id: pid.to_string(),
                images: n,
            });
        }
    }

    let coverage = Coverage {
        records_in: records.len(),
        outcomes: outcomes.len(),
        rejects,
        seeds: seeds.into_iter().collect(),
        missing,
        under_sampled,
    };
    (outcomes, coverage)
}
