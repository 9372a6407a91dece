//! Run configuration: built-in defaults, then a TOML file, then flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::color::DEFAULT_BINDING_THRESHOLD;
use crate::error::{Error, Result};
use crate::ingest::{DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_DEDUP_IOU};
use crate::io_util;
use crate::scoring::Thresholds;

pub const DEFAULT_MIN_IMAGES_PER_PROMPT: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub template_path: Option<PathBuf>,
    pub dataset_path: Option<PathBuf>,
    pub results_path: Option<PathBuf>,
    pub outcomes_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub confidence_threshold: f64,
    pub dedup_iou: f64,
    pub binding_threshold: f64,
    pub min_images_per_prompt: usize,
    /// `None` uses the built-in palette.
    pub palette_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            template_path: None,
            dataset_path: None,
            results_path: None,
            outcomes_path: None,
            output_dir: PathBuf::from("."),
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            dedup_iou: DEFAULT_DEDUP_IOU,
            binding_threshold: DEFAULT_BINDING_THRESHOLD,
            min_images_per_prompt: DEFAULT_MIN_IMAGES_PER_PROMPT,
            palette_path: None,
        }
    }
}

/// A partial config, as read from a file or collected from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverlay {
    pub template_path: Option<PathBuf>,
    pub dataset_path: Option<PathBuf>,
    pub results_path: Option<PathBuf>,
    pub outcomes_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub confidence_threshold: Option<f64>,
    pub dedup_iou: Option<f64>,
    pub binding_threshold: Option<f64>,
    pub min_images_per_prompt: Option<usize>,
    pub palette_path: Option<PathBuf>,
}

impl ConfigOverlay {
    /// Read a TOML file. Relative paths inside it are taken relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = io_util::read_to_string(path)?;
        let mut o: ConfigOverlay =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut o.template_path,
            &mut o.dataset_path,
            &mut o.results_path,
            &mut o.outcomes_path,
            &mut o.output_dir,
            &mut o.palette_path,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(o)
    }

    fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$f = v.clone().into();
                }
            )*};
        }
        set!(template_path, dataset_path, results_path, outcomes_path, palette_path);
        set!(output_dir, confidence_threshold, dedup_iou, binding_threshold, min_images_per_prompt);
    }
}

impl RunConfig {
    /// Defaults, overridden by `file`, overridden by `flags`.
    pub fn resolve(file: Option<&ConfigOverlay>, flags: &ConfigOverlay) -> Result<Self> {
        let mut c = RunConfig::default();
        if let Some(f) = file {
            f.apply(&mut c);
        }
        flags.apply(&mut c);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("confidence_threshold", self.confidence_threshold),
            ("dedup_iou", self.dedup_iou),
            ("binding_threshold", self.binding_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.min_images_per_prompt == 0 {
            return Err(Error::Config("min_images_per_prompt must be at least 1".into()));
        }
        Ok(())
    }

    pub fn thresholds(&self, audit: bool) -> Thresholds {
        Thresholds {
            confidence: self.confidence_threshold,
            dedup_iou: self.dedup_iou,
            binding: self.binding_threshold,
            audit,
        }
    }
}
