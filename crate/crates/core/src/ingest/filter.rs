use super::{mask_iou, ImageRecord};

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.25;
pub const DEFAULT_DEDUP_IOU: f64 = 0.95;

/// Keep detections with `confidence >= threshold`, in order.
pub fn filter_confidence(record: &ImageRecord, threshold: f64) -> ImageRecord {
    let mut out = record.clone();
    out.detections.retain(|d| d.confidence >= threshold);
    out
}

/// Drop both members of every differently-labelled pair whose masks overlap
/// with IoU at or above `iou_threshold`. Pairs are judged on the input set,
/// so a detection caught in several pairs is removed once.
pub fn dedup_overlaps(record: &ImageRecord, iou_threshold: f64) -> ImageRecord {
    let dets = &record.detections;
    let mut removed = vec![false; dets.len()];
    for i in 0..dets.len() {
        for j in i + 1..dets.len() {
            if dets[i].label == dets[j].label {
                continue;
            }
            // masks share the image size once the record is validated
            let iou = mask_iou(&dets[i].mask, &dets[j].mask).unwrap_or(0.0);
            if iou >= iou_threshold {
                removed[i] = true;
                removed[j] = true;
            }
        }
    }
    let mut out = record.clone();
    out.detections = dets
        .iter()
        .zip(&removed)
        .filter(|(_, &r)| !r)
        .map(|(d, _)| d.clone())
        .collect();
    out
}

/// Confidence filter, then overlap removal.
pub fn prepare_record(record: &ImageRecord, confidence_threshold: f64, dedup_iou: f64) -> ImageRecord {
    dedup_overlaps(&filter_confidence(record, confidence_threshold), dedup_iou)
}
