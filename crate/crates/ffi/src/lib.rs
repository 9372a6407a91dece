//! C ABI over the `tiam` core.
//!
//! Every fallible call returns a [`TiamStatus`]; on failure a message is
//! available from [`tiam_last_error`] on the same thread. Strings handed out
//! by the library are released with [`tiam_string_free`], handles with their
//! own `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tiam::color::{classify_pixel, srgb_to_lab, ReferencePalette};
use tiam::ingest::{mask_iou, ResultsFile, SegmentationMask};
use tiam::prompt::{count_prompts, PromptDataset, Template};
use tiam::scoring::{score_corpus, Outcome, Thresholds};
use tiam::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiamStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Input rejected by a schema or semantic check.
    Invalid = 3,
    Io = 4,
    /// Result does not fit the output type.
    Overflow = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiamLab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// Opaque template handle.
pub struct TiamTemplate(Template);

/// Opaque palette handle.
pub struct TiamPalette(ReferencePalette);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

struct Fail(TiamStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => TiamStatus::Io,
            _ => TiamStatus::Invalid,
        };
        Fail(status, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(TiamStatus::Invalid, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TiamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TiamStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TiamStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(TiamStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TiamStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(TiamStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(TiamStatus::NullArgument, format!("`{name}` is null")))
}

fn to_c(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(TiamStatus::Invalid, "output contains a NUL byte".into()))
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn tiam_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn tiam_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_template_from_json(json: *const c_char, out: *mut *mut TiamTemplate) -> TiamStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = Template::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(TiamTemplate(t)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_template_load(path: *const c_char, out: *mut *mut TiamTemplate) -> TiamStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = Template::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(TiamTemplate(t)));
        Ok(())
    })
}

/// # Safety
/// `t` must come from `tiam_template_*`, or be null.
#[no_mangle]
pub unsafe extern "C" fn tiam_template_free(t: *mut TiamTemplate) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Closed-form number of prompts the template yields.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_template_count(t: *const TiamTemplate, out: *mut u64) -> TiamStatus {
    guard(|| {
        let t = ref_arg(t, "template")?;
        let out = out_arg(out, "out")?;
        let n = count_prompts(&t.0)?;
        *out = u64::try_from(n).map_err(|_| Fail(TiamStatus::Overflow, format!("{n} prompts overflow u64")))?;
        Ok(())
    })
}

/// The full prompt dataset as JSON. Free with `tiam_string_free`.
///
/// # Safety
/// `t` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_template_generate_json(t: *const TiamTemplate, out_json: *mut *mut c_char) -> TiamStatus {
    guard(|| {
        let t = ref_arg(t, "template")?;
        let out = out_arg(out_json, "out_json")?;
        *out = to_c(PromptDataset::generate(&t.0)?.to_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_palette_standard(out: *mut *mut TiamPalette) -> TiamStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(TiamPalette(ReferencePalette::standard())));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_palette_load(path: *const c_char, out: *mut *mut TiamPalette) -> TiamStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let p = ReferencePalette::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(TiamPalette(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from `tiam_palette_*`, or be null.
#[no_mangle]
pub unsafe extern "C" fn tiam_palette_free(p: *mut TiamPalette) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

#[no_mangle]
pub extern "C" fn tiam_srgb_to_lab(r: u8, g: u8, b: u8) -> TiamLab {
    let c = srgb_to_lab(r, g, b);
    TiamLab { l: c.l, a: c.a, b: c.b }
}

/// Name of the nearest reference color. Free with `tiam_string_free`.
///
/// # Safety
/// `p` must be a live handle; `out_name` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_palette_classify(
    p: *const TiamPalette,
    r: u8,
    g: u8,
    b: u8,
    out_name: *mut *mut c_char,
) -> TiamStatus {
    guard(|| {
        let p = ref_arg(p, "palette")?;
        let out = out_arg(out_name, "out_name")?;
        *out = to_c(classify_pixel(&srgb_to_lab(r, g, b), &p.0).to_string())?;
        Ok(())
    })
}

/// IoU of two masks given as `{"size": [h, w], "counts": [...]}`.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_mask_iou(mask_a: *const c_char, mask_b: *const c_char, out: *mut f64) -> TiamStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let a: SegmentationMask = serde_json::from_str(str_arg(mask_a, "mask_a")?)?;
        let b: SegmentationMask = serde_json::from_str(str_arg(mask_b, "mask_b")?)?;
        *out = mask_iou(&a, &b)?;
        Ok(())
    })
}

/// Score a results document against a dataset document. Writes a JSON
/// array of outcomes sorted by prompt id and seed. Records that cannot be
/// scored make the call fail.
///
/// # Safety
/// Strings must be NUL-terminated, `palette` a live handle and `out_json`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_score_json(
    dataset_json: *const c_char,
    results_json: *const c_char,
    palette: *const TiamPalette,
    confidence_threshold: f64,
    dedup_iou: f64,
    binding_threshold: f64,
    out_json: *mut *mut c_char,
) -> TiamStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        let palette = ref_arg(palette, "palette")?;
        let dataset = PromptDataset::from_json(str_arg(dataset_json, "dataset_json")?)?;
        let results = ResultsFile::from_json(str_arg(results_json, "results_json")?)?;
        let thresholds = Thresholds {
            confidence: confidence_threshold,
            dedup_iou,
            binding: binding_threshold,
            audit: false,
        };
        let (outcomes, coverage) = score_corpus(&dataset, &results.records, &palette.0, &thresholds, 1);
        if let Some(r) = coverage.rejects.first() {
            return Err(Fail(
                TiamStatus::Invalid,
                format!("record {} ({}, seed {}): {}", r.record, r.prompt_id, r.seed, r.reason),
            ));
        }
        *out = to_c(serde_json::to_string(&outcomes)?)?;
        Ok(())
    })
}

/// Mean success over a JSON array of outcomes.
///
/// # Safety
/// `outcomes_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tiam_compute_tiam(outcomes_json: *const c_char, out: *mut f64) -> TiamStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let outcomes: Vec<Outcome> = serde_json::from_str(str_arg(outcomes_json, "outcomes_json")?)?;
        *out = tiam::analytics::compute_tiam(&outcomes)?;
        Ok(())
    })
}
