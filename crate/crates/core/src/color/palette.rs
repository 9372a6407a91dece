use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LabColor;
use crate::error::{Error, Result};
use crate::io_util;

pub const PALETTE_SCHEMA_ID: &str = "tiam.palette/v1";

const REFERENCE_NAMES: [&str; 8] = ["white", "black", "red", "green", "blue", "purple", "pink", "yellow"];
const ATTRIBUTE_NAMES: [&str; 6] = ["red", "green", "blue", "purple", "pink", "yellow"];

const DEFAULT_PALETTE: &str = include_str!("../../data/palette.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteSample {
    pub name: String,
    #[serde(rename = "L")]
    pub l: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub provenance: String,
}

/// On-disk palette. Several samples may share a name; they are averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteFile {
    pub schema_id: String,
    #[serde(default)]
    pub white_point: String,
    #[serde(default)]
    pub observer: String,
    #[serde(default)]
    pub derivation: String,
    pub attribute_names: Vec<String>,
    pub entries: Vec<PaletteSample>,
}

/// Reference colors for pixel classification. Pixels are classified against
/// every entry (including white and black); only `attribute_names` may be
/// requested as prompt attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePalette {
    entries: Vec<(String, LabColor)>,
    attribute_names: Vec<String>,
}

impl ReferencePalette {
    /// The palette shipped in `data/palette.json`.
    pub fn standard() -> Self {
        Self::from_json(DEFAULT_PALETTE).expect("shipped palette is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&io_util::read_to_string(path.as_ref())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PaletteFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &PaletteFile) -> Result<Self> {
        if file.schema_id != PALETTE_SCHEMA_ID {
            return Err(Error::Palette(format!("unsupported schema_id `{}`", file.schema_id)));
        }
        // name -> (sum, count), in first-appearance order
        let mut acc: Vec<(String, [f64; 3], usize)> = Vec::new();
        for s in &file.entries {
            if !(s.l.is_finite() && s.a.is_finite() && s.b.is_finite()) || !(0.0..=100.0).contains(&s.l) {
                return Err(Error::Palette(format!("entry `{}` has out-of-range coordinates", s.name)));
            }
            match acc.iter_mut().find(|(n, _, _)| *n == s.name) {
                Some((_, sum, k)) => {
                    sum[0] += s.l;
                    sum[1] += s.a;
                    sum[2] += s.b;
                    *k += 1;
                }
                None => acc.push((s.name.clone(), [s.l, s.a, s.b], 1)),
            }
        }
        let entries: Vec<(String, LabColor)> = acc
            .into_iter()
            .map(|(name, sum, k)| {
                let k = k as f64;
                (name, LabColor::new(sum[0] / k, sum[1] / k, sum[2] / k))
            })
            .collect();

        let mut names: Vec<&str> = entries.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        let mut expected = REFERENCE_NAMES.to_vec();
        expected.sort_unstable();
        if names != expected {
            return Err(Error::Palette(format!(
                "reference colors must be exactly {REFERENCE_NAMES:?}, found {names:?}"
            )));
        }
        let mut attrs: Vec<&str> = file.attribute_names.iter().map(String::as_str).collect();
        attrs.sort_unstable();
        let mut expected = ATTRIBUTE_NAMES.to_vec();
        expected.sort_unstable();
        if attrs != expected {
            return Err(Error::Palette(format!(
                "attribute colors must be exactly {ATTRIBUTE_NAMES:?}, found {attrs:?}"
            )));
        }

        Ok(ReferencePalette {
            entries,
            attribute_names: file.attribute_names.clone(),
        })
    }

    pub fn entries(&self) -> &[(String, LabColor)] {
        &self.entries
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn is_attribute(&self, name: &str) -> bool {
        self.attribute_names.iter().any(|a| a == name)
    }

    pub fn get(&self, name: &str) -> Option<LabColor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    /// Index of the nearest entry; the first entry wins a tie.
    pub fn nearest(&self, pixel: &LabColor) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, (_, c)) in self.entries.iter().enumerate() {
            let d = pixel.distance_squared(c);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Name of the palette entry nearest to `pixel` in Lab.
pub fn classify_pixel<'p>(pixel: &LabColor, palette: &'p ReferencePalette) -> &'p str {
    &palette.entries[palette.nearest(pixel)].0
}
