use serde::{Deserialize, Serialize};

use super::{srgb_to_lab, LabColor, ReferencePalette};
use crate::error::{Error, Result};

pub const DEFAULT_BINDING_THRESHOLD: f64 = 0.40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingVerdict {
    pub target_attribute: String,
    pub proportion: f64,
    pub success: bool,
}

/// Share of mask pixels whose nearest reference color is `target`; the
/// binding holds when that share reaches `threshold`.
pub fn check_binding(
    mask_pixels: &[LabColor],
    target: &str,
    palette: &ReferencePalette,
    threshold: f64,
) -> Result<BindingVerdict> {
    let target_idx = target_index(target, palette)?;
    if mask_pixels.is_empty() {
        return Err(Error::EmptyMask);
    }
    let hits = mask_pixels.iter().filter(|p| palette.nearest(p) == target_idx).count();
    Ok(verdict(target, hits, mask_pixels.len(), threshold))
}

/// [`check_binding`] over 8-bit sRGB triples.
pub fn check_binding_srgb(
    mask_pixels: &[[u8; 3]],
    target: &str,
    palette: &ReferencePalette,
    threshold: f64,
) -> Result<BindingVerdict> {
    let target_idx = target_index(target, palette)?;
    if mask_pixels.is_empty() {
        return Err(Error::EmptyMask);
    }
    let hits = mask_pixels
        .iter()
        .filter(|[r, g, b]| palette.nearest(&srgb_to_lab(*r, *g, *b)) == target_idx)
        .count();
    Ok(verdict(target, hits, mask_pixels.len(), threshold))
}

fn target_index(target: &str, palette: &ReferencePalette) -> Result<usize> {
    if !palette.is_attribute(target) {
        return Err(Error::InvalidArgument(format!("`{target}` is not an attribute color of the palette")));
    }
    Ok(palette
        .entries()
        .iter()
        .position(|(n, _)| n == target)
        .expect("attribute names are palette entries"))
}

fn verdict(target: &str, hits: usize, total: usize, threshold: f64) -> BindingVerdict {
    let proportion = hits as f64 / total as f64;
    BindingVerdict {
        target_attribute: target.to_string(),
        proportion,
        success: proportion >= threshold,
    }
}
