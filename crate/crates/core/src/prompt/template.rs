use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util;

/// Which repetitions a template tolerates across positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UniquenessMode {
    /// Objects pairwise distinct and attributes pairwise distinct.
    Strict,
    /// The same object may repeat only with a different attribute.
    Pairwise,
    /// Anything goes.
    Free,
}

/// On-disk template document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateFile {
    pub name: String,
    pub n_positions: usize,
    pub text_pattern: String,
    pub object_sets: Vec<Vec<String>>,
    pub attribute_sets: Vec<Vec<String>>,
    /// Optional restriction of each position to explicit `(attribute, object)`
    /// pairs instead of the full product of its two sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colored_objects: Option<Vec<Vec<(String, String)>>>,
    pub uniqueness_mode: UniquenessMode,
    #[serde(default)]
    pub article_overrides: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectSet {
    pub position_index: usize,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSet {
    pub position_index: usize,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Segment {
    Text(String),
    Det(usize),
    Attr(usize),
    Obj(usize),
}

/// One selectable `(object, attribute)` combination at a position, as
/// indices into that position's sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Choice {
    pub object: usize,
    pub attribute: Option<usize>,
}

/// A validated template.
#[derive(Debug, Clone)]
pub struct Template {
    name: String,
    n_positions: usize,
    text_pattern: String,
    pub(crate) segments: Vec<Segment>,
    object_sets: Vec<ObjectSet>,
    attribute_sets: Vec<AttributeSet>,
    choices: Vec<Vec<Choice>>,
    restricted: bool,
    mode: UniquenessMode,
    article_overrides: BTreeMap<String, String>,
}

impl Template {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = io_util::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TemplateFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn from_file(file: TemplateFile) -> Result<Self> {
        let name = file.name.clone();
        let err = |message: String| Error::Template {
            template: name.clone(),
            message,
        };

        let n = file.n_positions;
        if n == 0 {
            return Err(err("n_positions must be at least 1".into()));
        }
        if file.object_sets.len() != n {
            return Err(err(format!(
                "expected {n} object_sets, found {}",
                file.object_sets.len()
            )));
        }
        if file.attribute_sets.len() != n {
            return Err(err(format!(
                "expected {n} attribute_sets, found {}",
                file.attribute_sets.len()
            )));
        }

        let mut object_sets = Vec::with_capacity(n);
        let mut attribute_sets = Vec::with_capacity(n);
        for (i, (objs, attrs)) in file.object_sets.iter().zip(&file.attribute_sets).enumerate() {
            let pos = i + 1;
            if objs.is_empty() {
                return Err(err(format!("position {pos}: object set is empty")));
            }
            if let Some(dup) = first_duplicate(objs) {
                return Err(err(format!("position {pos}: duplicate object `{dup}`")));
            }
            if let Some(dup) = first_duplicate(attrs) {
                return Err(err(format!("position {pos}: duplicate attribute `{dup}`")));
            }
            if objs.iter().chain(attrs).any(|w| w.trim().is_empty()) {
                return Err(err(format!("position {pos}: blank label")));
            }
            object_sets.push(ObjectSet {
                position_index: pos,
                labels: objs.clone(),
            });
            attribute_sets.push(AttributeSet {
                position_index: pos,
                attributes: attrs.clone(),
            });
        }

        let segments = parse_pattern(&file.text_pattern).map_err(&err)?;
        let mut obj_seen = vec![0usize; n];
        let mut attr_seen = vec![0usize; n];
        for seg in &segments {
            let (idx, counter) = match seg {
                Segment::Text(_) => continue,
                Segment::Det(i) => (*i, None),
                Segment::Attr(i) => (*i, Some(&mut attr_seen)),
                Segment::Obj(i) => (*i, Some(&mut obj_seen)),
            };
            if idx == 0 || idx > n {
                return Err(err(format!("placeholder index {idx} outside 1..={n}")));
            }
            if let Some(c) = counter {
                c[idx - 1] += 1;
            }
        }
        for pos in 1..=n {
            if obj_seen[pos - 1] != 1 {
                return Err(err(format!(
                    "obj({pos}) must appear exactly once, found {}",
                    obj_seen[pos - 1]
                )));
            }
            let has_attrs = !attribute_sets[pos - 1].attributes.is_empty();
            if attr_seen[pos - 1] > 1 || (has_attrs && attr_seen[pos - 1] == 0) {
                return Err(err(format!(
                    "attr({pos}) must appear exactly once when position {pos} has attributes"
                )));
            }
        }

        let restricted = file.colored_objects.is_some();
        let choices = match &file.colored_objects {
            None => (0..n)
                .map(|i| {
                    let n_attr = attribute_sets[i].attributes.len();
                    let mut v = Vec::new();
                    for o in 0..object_sets[i].labels.len() {
                        if n_attr == 0 {
                            v.push(Choice { object: o, attribute: None });
                        } else {
                            v.extend((0..n_attr).map(|a| Choice { object: o, attribute: Some(a) }));
                        }
                    }
                    v
                })
                .collect::<Vec<_>>(),
            Some(lists) => {
                if lists.len() != n {
                    return Err(err(format!(
                        "expected {n} colored_objects lists, found {}",
                        lists.len()
                    )));
                }
                let mut all = Vec::with_capacity(n);
                for (i, list) in lists.iter().enumerate() {
                    let pos = i + 1;
                    if attribute_sets[i].attributes.is_empty() {
                        return Err(err(format!(
                            "position {pos}: colored_objects requires a non-empty attribute set"
                        )));
                    }
                    let mut v = BTreeSet::new();
                    for (attr, obj) in list {
                        let o = index_of(&object_sets[i].labels, obj).ok_or_else(|| {
                            err(format!("position {pos}: colored object `{attr} {obj}` uses unknown object"))
                        })?;
                        let a = index_of(&attribute_sets[i].attributes, attr).ok_or_else(|| {
                            err(format!("position {pos}: colored object `{attr} {obj}` uses unknown attribute"))
                        })?;
                        if !v.insert(Choice { object: o, attribute: Some(a) }) {
                            return Err(err(format!("position {pos}: duplicate colored object `{attr} {obj}`")));
                        }
                    }
                    if v.is_empty() {
                        return Err(err(format!("position {pos}: colored_objects list is empty")));
                    }
                    all.push(v.into_iter().collect());
                }
                all
            }
        };

        if file.uniqueness_mode == UniquenessMode::Strict {
            let shared = object_sets.windows(2).all(|w| w[0].labels == w[1].labels)
                && attribute_sets.windows(2).all(|w| w[0].attributes == w[1].attributes);
            if !shared || restricted {
                return Err(err(
                    "strict mode requires the same object and attribute sets at every position".into(),
                ));
            }
        }

        for (word, article) in &file.article_overrides {
            if article != "a" && article != "an" {
                return Err(err(format!("article override for `{word}` must be `a` or `an`")));
            }
        }
        let article_overrides = file
            .article_overrides
            .iter()
            .map(|(k, v)| (k.to_lowercase(), v.clone()))
            .collect();

        Ok(Template {
            name: file.name,
            n_positions: n,
            text_pattern: file.text_pattern,
            segments,
            object_sets,
            attribute_sets,
            choices,
            restricted,
            mode: file.uniqueness_mode,
            article_overrides,
        })
    }

    /// The document this template was built from.
    pub fn to_file(&self) -> TemplateFile {
        let colored_objects = self.restricted.then(|| {
            (0..self.n_positions)
                .map(|i| {
                    self.choices[i]
                        .iter()
                        .map(|c| {
                            let (a, o) = self.choice_labels(i, *c);
                            (a.unwrap_or_default().to_string(), o.to_string())
                        })
                        .collect()
                })
                .collect()
        });
        TemplateFile {
            name: self.name.clone(),
            n_positions: self.n_positions,
            text_pattern: self.text_pattern.clone(),
            object_sets: self.object_sets.iter().map(|s| s.labels.clone()).collect(),
            attribute_sets: self.attribute_sets.iter().map(|s| s.attributes.clone()).collect(),
            colored_objects,
            uniqueness_mode: self.mode,
            article_overrides: self.article_overrides.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    pub fn text_pattern(&self) -> &str {
        &self.text_pattern
    }

    pub fn uniqueness_mode(&self) -> UniquenessMode {
        self.mode
    }

    pub fn object_sets(&self) -> &[ObjectSet] {
        &self.object_sets
    }

    pub fn attribute_sets(&self) -> &[AttributeSet] {
        &self.attribute_sets
    }

    pub fn has_attributes(&self) -> bool {
        self.attribute_sets.iter().any(|s| !s.attributes.is_empty())
    }

    /// Selectable combinations at zero-based position `pos`, ordered by
    /// object index then attribute index.
    pub fn choices(&self, pos: usize) -> &[Choice] {
        &self.choices[pos]
    }

    pub(crate) fn choice_labels(&self, pos: usize, c: Choice) -> (Option<&str>, &str) {
        let obj = self.object_sets[pos].labels[c.object].as_str();
        let attr = c.attribute.map(|a| self.attribute_sets[pos].attributes[a].as_str());
        (attr, obj)
    }

    pub(crate) fn article_for(&self, word: &str) -> &'static str {
        let lower = word.to_lowercase();
        let first = lower.split_whitespace().next().unwrap_or("");
        let over = self
            .article_overrides
            .get(&lower)
            .or_else(|| self.article_overrides.get(first));
        match over.map(String::as_str) {
            Some("an") => "an",
            Some(_) => "a",
            None if first.starts_with(['a', 'e', 'i', 'o', 'u']) => "an",
            None => "a",
        }
    }
}

fn first_duplicate(items: &[String]) -> Option<&str> {
    let mut seen = BTreeSet::new();
    items.iter().find(|s| !seen.insert(s.as_str())).map(String::as_str)
}

fn index_of(items: &[String], needle: &str) -> Option<usize> {
    items.iter().position(|s| s == needle)
}

/// Split a pattern into literal text and `det(i)` / `attr(i)` / `obj(i)`
/// placeholders. Any other `name(digits)` token is rejected.
pub(crate) fn parse_pattern(pattern: &str) -> std::result::Result<Vec<Segment>, String> {
    let bytes = pattern.as_bytes();
    let mut segments = Vec::new();
    let mut text_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let boundary = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        if boundary && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'(' {
                let mut k = j + 1;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                if k > j + 1 && k < bytes.len() && bytes[k] == b')' {
                    let ident = &pattern[i..j];
                    let idx: usize = pattern[j + 1..k]
                        .parse()
                        .map_err(|_| format!("placeholder index too large in `{}`", &pattern[i..=k]))?;
                    let seg = match ident {
                        "det" => Segment::Det(idx),
                        "attr" => Segment::Attr(idx),
                        "obj" => Segment::Obj(idx),
                        other => return Err(format!("unknown placeholder `{other}({idx})`")),
                    };
                    if text_start < i {
                        segments.push(Segment::Text(pattern[text_start..i].to_string()));
                    }
                    segments.push(seg);
                    i = k + 1;
                    text_start = i;
                    continue;
                }
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if text_start < pattern.len() {
        segments.push(Segment::Text(pattern[text_start..].to_string()));
    }
    Ok(segments)
}

#[cfg(test)]
pub(crate) use tests::file as test_file;

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn file(n: usize, objs: &[&str], attrs: &[&str], mode: UniquenessMode) -> TemplateFile {
        let pattern = (1..=n)
            .map(|i| {
                if attrs.is_empty() {
                    format!("det({i}) obj({i})")
                } else {
                    format!("det({i}) attr({i}) obj({i})")
                }
            })
            .collect::<Vec<_>>()
            .join(" and ");
        TemplateFile {
            name: "t".into(),
            n_positions: n,
            text_pattern: format!("a photo of {pattern}"),
            object_sets: vec![objs.iter().map(|s| s.to_string()).collect(); n],
            attribute_sets: vec![attrs.iter().map(|s| s.to_string()).collect(); n],
            colored_objects: None,
            uniqueness_mode: mode,
            article_overrides: BTreeMap::new(),
        }
    }

    #[test]
    fn parses_placeholders() {
        let segs = parse_pattern("a photo of det(1) attr(1) obj(1), and det(12) obj(12)").unwrap();
        assert_eq!(
            segs,
            vec![
                Segment::Text("a photo of ".into()),
                Segment::Det(1),
                Segment::Text(" ".into()),
                Segment::Attr(1),
                Segment::Text(" ".into()),
                Segment::Obj(1),
                Segment::Text(", and ".into()),
                Segment::Det(12),
                Segment::Text(" ".into()),
                Segment::Obj(12),
            ]
        );
    }

    #[test]
    fn unknown_placeholder_is_rejected() {
        let err = parse_pattern("a photo of foo(1) obj(1)").unwrap_err();
        assert!(err.contains("foo(1)"), "{err}");
        assert!(parse_pattern("a photo of xobj(1)").is_err());
        // No digits, so plain text.
        assert_eq!(parse_pattern("a photo (of) obj()").unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_templates() {
        let mut f = file(2, &["cat", "dog"], &[], UniquenessMode::Strict);
        f.text_pattern = "a photo of det(1) obj(1)".into();
        assert!(Template::from_file(f).is_err(), "obj(2) missing");

        let mut f = file(2, &["cat", "dog"], &[], UniquenessMode::Strict);
        f.text_pattern.push_str(" obj(3)");
        assert!(Template::from_file(f).is_err(), "index out of range");

        let mut f = file(2, &["cat", "dog"], &[], UniquenessMode::Strict);
        f.object_sets[1] = vec!["cat".into(), "cat".into()];
        assert!(Template::from_file(f).is_err(), "duplicate label");

        let mut f = file(2, &["cat", "dog"], &[], UniquenessMode::Strict);
        f.object_sets[1] = vec!["cow".into(), "dog".into()];
        assert!(Template::from_file(f).is_err(), "strict needs shared sets");

        let mut f = file(1, &["cat"], &["red"], UniquenessMode::Free);
        f.text_pattern = "a photo of det(1) obj(1)".into();
        assert!(Template::from_file(f).is_err(), "attr(1) missing");

        let mut f = file(1, &["cat"], &[], UniquenessMode::Free);
        f.attribute_sets.push(vec![]);
        assert!(Template::from_file(f).is_err(), "set count");
    }

    #[test]
    fn choices_follow_object_then_attribute_order() {
        let t = Template::from_file(file(1, &["cat", "car"], &["red", "blue"], UniquenessMode::Free)).unwrap();
        let got: Vec<_> = t.choices(0).iter().map(|c| t.choice_labels(0, *c)).collect();
        assert_eq!(
            got,
            vec![(Some("red"), "cat"), (Some("blue"), "cat"), (Some("red"), "car"), (Some("blue"), "car")]
        );
    }

    #[test]
    fn article_rule_and_overrides() {
        let mut f = file(1, &["cat"], &[], UniquenessMode::Free);
        f.article_overrides.insert("Hour".into(), "an".into());
        f.article_overrides.insert("unicorn".into(), "a".into());
        let t = Template::from_file(f).unwrap();
        assert_eq!(t.article_for("elephant"), "an");
        assert_eq!(t.article_for("Orange"), "an");
        assert_eq!(t.article_for("car"), "a");
        assert_eq!(t.article_for("hour"), "an");
        assert_eq!(t.article_for("unicorn"), "a");
        assert_eq!(t.article_for("hot dog"), "a");
    }

    #[test]
    fn file_round_trip() {
        let text = include_str!("../../data/templates/colored_overlap_3.json");
        let t = Template::from_json(text).unwrap();
        let back: TemplateFile = serde_json::from_str(text).unwrap();
        let mut expected = back.clone();
        // to_file sorts colored objects into enumeration order
        expected.colored_objects = None;
        let mut got = t.to_file();
        let colored = got.colored_objects.take().unwrap();
        assert_eq!(got, expected);
        for (a, b) in colored.iter().zip(back.colored_objects.as_ref().unwrap()) {
            let mut a = a.clone();
            let mut b = b.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }
}
