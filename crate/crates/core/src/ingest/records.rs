use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::SegmentationMask;
use crate::error::{Error, Result};
use crate::io_util;
use crate::prompt::PromptDataset;

pub const RESULTS_SCHEMA_ID: &str = "tiam.results/v1";

/// Settings the detector ran with. Recorded, never re-applied here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorMeta {
    pub confidence_threshold: f64,
    pub nms_iou: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    /// Stable id within the record; defaults to the list index on load.
    #[serde(default)]
    pub id: Option<u32>,
    pub label: String,
    pub confidence: f64,
    /// `[x, y, w, h]` in pixels.
    pub bbox: [f64; 4],
    pub mask: SegmentationMask,
    /// sRGB of each foreground pixel, in RLE (column-major) order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels: Option<Vec<[u8; 3]>>,
}

impl Detection {
    pub fn id(&self) -> u32 {
        self.id.unwrap_or(u32::MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub prompt_id: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    pub image_width: u32,
    pub image_height: u32,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub schema_id: String,
    pub dataset_ref: String,
    pub model_name: String,
    pub detector_meta: DetectorMeta,
    pub records: Vec<ImageRecord>,
}

impl ResultsFile {
    /// Parse and validate a results document. Each record is decoded on its
    /// own so schema errors name the offending record.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text)?;
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| Error::schema(None, "$", "expected a JSON object"))?;
        let raw_records = match obj.remove("records") {
            Some(Value::Array(a)) => a,
            Some(_) => return Err(Error::schema(None, "records", "expected an array")),
            None => return Err(Error::schema(None, "records", "missing")),
        };
        let field = |name: &str| -> Result<Value> {
            obj.get(name)
                .cloned()
                .ok_or_else(|| Error::schema(None, name, "missing"))
        };
        let schema_id: String = serde_json::from_value(field("schema_id")?)
            .map_err(|e| Error::schema(None, "schema_id", e.to_string()))?;
        let dataset_ref: String = serde_json::from_value(field("dataset_ref")?)
            .map_err(|e| Error::schema(None, "dataset_ref", e.to_string()))?;
        let model_name: String = serde_json::from_value(field("model_name")?)
            .map_err(|e| Error::schema(None, "model_name", e.to_string()))?;
        let detector_meta: DetectorMeta = serde_json::from_value(field("detector_meta")?)
            .map_err(|e| Error::schema(None, "detector_meta", e.to_string()))?;

        let mut records = Vec::with_capacity(raw_records.len());
        for (i, raw) in raw_records.into_iter().enumerate() {
            let mut rec: ImageRecord =
                serde_json::from_value(raw).map_err(|e| Error::schema(Some(i), "record", e.to_string()))?;
            for (j, d) in rec.detections.iter_mut().enumerate() {
                d.id.get_or_insert(j as u32);
            }
            records.push(rec);
        }
        let file = ResultsFile {
            schema_id,
            dataset_ref,
            model_name,
            detector_meta,
            records,
        };
        if let Some(e) = validate_results(&file, None).into_iter().next() {
            return Err(e);
        }
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Load, validate and resolve every record against `dataset`.
pub fn load_records(path: impl AsRef<Path>, dataset: &PromptDataset) -> Result<ResultsFile> {
    let text = io_util::read_to_string(path.as_ref())?;
    let file = ResultsFile::from_json(&text)?;
    if let Some(e) = validate_results(&file, Some(dataset)).into_iter().next() {
        return Err(e);
    }
    Ok(file)
}

pub fn save_records(path: impl AsRef<Path>, file: &ResultsFile) -> Result<()> {
    io_util::write_atomic(path.as_ref(), file.to_json()?.as_bytes())
}

/// Every schema violation in `file`, in document order. With a dataset,
/// prompt ids must resolve against it.
pub fn validate_results(file: &ResultsFile, dataset: Option<&PromptDataset>) -> Vec<Error> {
    let mut errors = Vec::new();
    if file.schema_id != RESULTS_SCHEMA_ID {
        errors.push(Error::schema(
            None,
            "schema_id",
            format!("expected `{RESULTS_SCHEMA_ID}`, found `{}`", file.schema_id),
        ));
    }
    let m = &file.detector_meta;
    for (name, v) in [("confidence_threshold", m.confidence_threshold), ("nms_iou", m.nms_iou)] {
        if !(0.0..=1.0).contains(&v) {
            errors.push(Error::schema(None, format!("detector_meta.{name}"), format!("{v} outside [0, 1]")));
        }
    }
    let index = dataset.map(PromptDataset::index);
    for (i, rec) in file.records.iter().enumerate() {
        validate_record(i, rec, &mut errors);
        if let Some(index) = &index {
            if !index.contains_key(rec.prompt_id.as_str()) {
                errors.push(Error::UnknownPrompt {
                    record: i,
                    prompt_id: rec.prompt_id.clone(),
                });
            }
        }
    }
    errors
}

fn validate_record(i: usize, rec: &ImageRecord, errors: &mut Vec<Error>) {
    let mut push = |field: String, message: String| errors.push(Error::schema(Some(i), field, message));
    if rec.image_width == 0 || rec.image_height == 0 {
        push("image_width/image_height".into(), "image dimensions must be positive".into());
    }
    let (w, h) = (f64::from(rec.image_width), f64::from(rec.image_height));
    let mut ids = BTreeSet::new();
    for (j, d) in rec.detections.iter().enumerate() {
        let at = |f: &str| format!("detections[{j}].{f}");
        if !ids.insert(d.id()) {
            push(at("id"), format!("duplicate id {}", d.id()));
        }
        if d.label.trim().is_empty() {
            push(at("label"), "empty label".into());
        }
        if !(0.0..=1.0).contains(&d.confidence) {
            push(at("confidence"), format!("{} outside [0, 1]", d.confidence));
        }
        let [x, y, bw, bh] = d.bbox;
        let eps = 1e-6;
        if d.bbox.iter().any(|v| !v.is_finite() || *v < 0.0) || x + bw > w + eps || y + bh > h + eps {
            push(at("bbox"), format!("{:?} not inside {}x{}", d.bbox, rec.image_width, rec.image_height));
        }
        let m = &d.mask;
        if (m.width, m.height) != (rec.image_width, rec.image_height) {
            push(
                at("mask.size"),
                format!("mask is {}x{}, image is {}x{}", m.width, m.height, rec.image_width, rec.image_height),
            );
            continue;
        }
        if m.run_total() != m.pixel_count() {
            push(
                at("mask.counts"),
                format!("runs sum to {}, expected {}", m.run_total(), m.pixel_count()),
            );
            continue;
        }
        if m.area() == 0 {
            push(at("mask.counts"), "mask has no foreground pixel".into());
        }
        if let Some(px) = &d.pixels {
            if px.len() as u64 != m.area() {
                push(
                    at("pixels"),
                    format!("{} colors for {} foreground pixels", px.len(), m.area()),
                );
            }
        }
    }
}
