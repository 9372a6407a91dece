use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{count_prompts, enumerate_prompts, PromptInstance, Template, TemplateFile};
use crate::error::{Error, Result};
use crate::io_util;

pub const DATASET_SCHEMA_ID: &str = "tiam.dataset/v1";

/// A generated prompt dataset. `count` is the closed-form prompt count and
/// must equal `prompts.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptDataset {
    pub schema_id: String,
    pub template: TemplateFile,
    pub count: u64,
    pub prompts: Vec<PromptInstance>,
}

impl PromptDataset {
    pub fn generate(template: &Template) -> Result<Self> {
        let count = count_prompts(template)?;
        let prompts = enumerate_prompts(template);
        if prompts.len() as u128 != count {
            return Err(Error::Template {
                template: template.name().to_string(),
                message: format!("closed-form count {count} disagrees with {} enumerated prompts", prompts.len()),
            });
        }
        Ok(PromptDataset {
            schema_id: DATASET_SCHEMA_ID.to_string(),
            template: template.to_file(),
            count: count as u64,
            prompts,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = io_util::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ds: PromptDataset = serde_json::from_str(text)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_id != DATASET_SCHEMA_ID {
            return Err(Error::schema(None, "schema_id", format!("expected `{DATASET_SCHEMA_ID}`, found `{}`", self.schema_id)));
        }
        if self.count != self.prompts.len() as u64 {
            return Err(Error::schema(
                None,
                "count",
                format!("header says {} prompts, body has {}", self.count, self.prompts.len()),
            ));
        }
        let n = self.template.n_positions;
        let mut seen = BTreeMap::new();
        for (i, p) in self.prompts.iter().enumerate() {
            if p.ground_truth.len() != n {
                return Err(Error::schema(
                    None,
                    format!("prompts[{i}].ground_truth"),
                    format!("expected {n} entries, found {}", p.ground_truth.len()),
                ));
            }
            if seen.insert(p.prompt_id.as_str(), i).is_some() {
                return Err(Error::schema(None, format!("prompts[{i}].prompt_id"), format!("duplicate `{}`", p.prompt_id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn n_positions(&self) -> usize {
        self.template.n_positions
    }

    /// Prompt lookup by id.
    pub fn index(&self) -> BTreeMap<&str, &PromptInstance> {
        self.prompts.iter().map(|p| (p.prompt_id.as_str(), p)).collect()
    }
}
