//! Detector output: RLE masks, the results document, confidence filtering
//! and cross-label overlap removal.

mod filter;
mod records;
mod rle;

pub use filter::{dedup_overlaps, filter_confidence, prepare_record, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_DEDUP_IOU};
pub use records::{
    load_records, save_records, validate_results, Detection, DetectorMeta, ImageRecord, ResultsFile,
    RESULTS_SCHEMA_ID,
};
pub use rle::{mask_iou, SegmentationMask};
