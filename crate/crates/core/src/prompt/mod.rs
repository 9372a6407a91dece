//! Prompt templates, their instantiation, and closed-form prompt counts.

mod count;
mod dataset;
mod template;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use count::{count_prompts, pairwise_configurations, PairwiseConfiguration};
pub use dataset::{PromptDataset, DATASET_SCHEMA_ID};
pub use template::{AttributeSet, Choice, ObjectSet, Template, TemplateFile, UniquenessMode};

use crate::error::{Error, Result};
use template::Segment;

/// One requested `(object, attribute)` at a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundTruth {
    pub position: usize,
    pub object: String,
    #[serde(default)]
    pub attribute: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub prompt_id: String,
    pub text: String,
    pub ground_truth: Vec<GroundTruth>,
}

/// The object and optional attribute picked for one position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Slot {
    pub object: String,
    pub attribute: Option<String>,
}

impl Slot {
    pub fn new(object: impl Into<String>, attribute: Option<&str>) -> Self {
        Slot {
            object: object.into(),
            attribute: attribute.map(str::to_string),
        }
    }
}

/// Whether `slots` respects `mode`. Absent attributes compare equal.
pub fn satisfies_uniqueness(mode: UniquenessMode, slots: &[(&str, Option<&str>)]) -> bool {
    let pairs = || (0..slots.len()).flat_map(move |i| (i + 1..slots.len()).map(move |j| (i, j)));
    match mode {
        UniquenessMode::Free => true,
        UniquenessMode::Pairwise => pairs().all(|(i, j)| slots[i] != slots[j]),
        UniquenessMode::Strict => pairs().all(|(i, j)| {
            slots[i].0 != slots[j].0 && (slots[i].1.is_none() || slots[i].1 != slots[j].1)
        }),
    }
}

/// Render the prompt for one assignment, after checking set membership and
/// the template's uniqueness mode.
pub fn render_prompt(template: &Template, assignment: &[Slot]) -> Result<PromptInstance> {
    let n = template.n_positions();
    if assignment.len() != n {
        return Err(Error::RejectedAssignment(format!(
            "expected {n} slots, got {}",
            assignment.len()
        )));
    }
    let mut choices = Vec::with_capacity(n);
    for (i, slot) in assignment.iter().enumerate() {
        let pos = i + 1;
        let object = template.object_sets()[i]
            .labels
            .iter()
            .position(|l| *l == slot.object)
            .ok_or_else(|| {
                Error::RejectedAssignment(format!("position {pos}: `{}` not in object set", slot.object))
            })?;
        let attrs = &template.attribute_sets()[i].attributes;
        let attribute = match (&slot.attribute, attrs.is_empty()) {
            (None, true) => None,
            (Some(a), false) => Some(attrs.iter().position(|x| x == a).ok_or_else(|| {
                Error::RejectedAssignment(format!("position {pos}: `{a}` not in attribute set"))
            })?),
            (None, false) => {
                return Err(Error::RejectedAssignment(format!("position {pos}: attribute required")))
            }
            (Some(a), true) => {
                return Err(Error::RejectedAssignment(format!(
                    "position {pos}: `{a}` given but the position takes no attribute"
                )))
            }
        };
        let choice = Choice { object, attribute };
        if !template.choices(i).contains(&choice) {
            return Err(Error::RejectedAssignment(format!(
                "position {pos}: `{}` is not an allowed colored object",
                slot_text(slot)
            )));
        }
        choices.push(choice);
    }
    let labels: Vec<_> = choices
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (a, o) = template.choice_labels(i, *c);
            (o, a)
        })
        .collect();
    if !satisfies_uniqueness(template.uniqueness_mode(), &labels) {
        return Err(Error::RejectedAssignment(format!(
            "{:?} uniqueness violated by [{}]",
            template.uniqueness_mode(),
            assignment.iter().map(slot_text).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(instantiate(template, &choices))
}

fn slot_text(slot: &Slot) -> String {
    match &slot.attribute {
        Some(a) => format!("{a} {}", slot.object),
        None => slot.object.clone(),
    }
}

/// Every assignment the template admits, as choice vectors in lexicographic
/// order (position 1 most significant).
pub fn enumerate_assignments(template: &Template) -> Vec<Vec<Choice>> {
    let n = template.n_positions();
    let mut out = Vec::new();
    let mut current: Vec<Choice> = Vec::with_capacity(n);
    let mut labels: Vec<(&str, Option<&str>)> = Vec::with_capacity(n);
    descend(template, &mut current, &mut labels, &mut out);
    out
}

fn descend<'t>(
    t: &'t Template,
    current: &mut Vec<Choice>,
    labels: &mut Vec<(&'t str, Option<&'t str>)>,
    out: &mut Vec<Vec<Choice>>,
) {
    let pos = current.len();
    if pos == t.n_positions() {
        out.push(current.clone());
        return;
    }
    for &c in t.choices(pos) {
        let (a, o) = t.choice_labels(pos, c);
        let ok = labels.iter().all(|prev| {
            satisfies_uniqueness(t.uniqueness_mode(), &[*prev, (o, a)])
        });
        if !ok {
            continue;
        }
        current.push(c);
        labels.push((o, a));
        descend(t, current, labels, out);
        current.pop();
        labels.pop();
    }
}

/// All prompts of a template, in the order of [`enumerate_assignments`].
pub fn enumerate_prompts(template: &Template) -> Vec<PromptInstance> {
    enumerate_assignments(template)
        .iter()
        .map(|choices| instantiate(template, choices))
        .collect()
}

fn instantiate(t: &Template, choices: &[Choice]) -> PromptInstance {
    let ground_truth: Vec<GroundTruth> = choices
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (a, o) = t.choice_labels(i, *c);
            GroundTruth {
                position: i + 1,
                object: o.to_string(),
                attribute: a.map(str::to_string),
            }
        })
        .collect();

    let mut raw = String::new();
    for seg in &t.segments {
        match seg {
            Segment::Text(s) => raw.push_str(s),
            Segment::Det(i) => {
                let gt = &ground_truth[i - 1];
                let next = gt.attribute.as_deref().unwrap_or(&gt.object);
                raw.push_str(t.article_for(next));
            }
            Segment::Attr(i) => {
                if let Some(a) = &ground_truth[i - 1].attribute {
                    raw.push_str(a);
                }
            }
            Segment::Obj(i) => raw.push_str(&ground_truth[i - 1].object),
        }
    }
    let text = raw.split_whitespace().collect::<Vec<_>>().join(" ");

    PromptInstance {
        prompt_id: prompt_id(t.name(), &ground_truth),
        text,
        ground_truth,
    }
}

/// Hex SHA-256 prefix over the template name and the assignment tuple.
pub fn prompt_id(template_name: &str, ground_truth: &[GroundTruth]) -> String {
    let mut h = Sha256::new();
    h.update(template_name.as_bytes());
    for gt in ground_truth {
        h.update([0x1f]);
        h.update(gt.object.as_bytes());
        h.update([0x1e]);
        if let Some(a) = &gt.attribute {
            h.update([0x01]);
            h.update(a.as_bytes());
        }
    }
    hex::encode(&h.finalize()[..12])
}
