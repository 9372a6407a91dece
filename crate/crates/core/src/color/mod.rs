//! CIELAB conversion, nearest-reference color classification and the
//! per-mask attribute binding decision.

mod binding;
mod lab;
mod palette;

pub use binding::{check_binding, check_binding_srgb, BindingVerdict, DEFAULT_BINDING_THRESHOLD};
pub use lab::{srgb_to_lab, LabColor};
pub use palette::{classify_pixel, PaletteFile, PaletteSample, ReferencePalette, PALETTE_SCHEMA_ID};
