#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiam::ingest::{Detection, DetectorMeta, ImageRecord, ResultsFile, SegmentationMask, RESULTS_SCHEMA_ID};
use tiam::prompt::{PromptDataset, Template, TemplateFile, UniquenessMode};

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

pub fn template(name: &str) -> Template {
    Template::load(data(&format!("templates/{name}.json"))).unwrap()
}

pub fn dataset(name: &str) -> PromptDataset {
    PromptDataset::generate(&template(name)).unwrap()
}

/// An sRGB value per reference color that classifies as that color.
pub const SRGB: [(&str, [u8; 3]); 8] = [
    ("white", [241, 241, 241]),
    ("black", [38, 38, 38]),
    ("red", [187, 29, 42]),
    ("green", [0, 142, 78]),
    ("blue", [0, 101, 162]),
    ("purple", [110, 43, 115]),
    ("pink", [250, 183, 183]),
    ("yellow", [234, 198, 0]),
];

pub fn srgb(name: &str) -> [u8; 3] {
    SRGB.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("no color {name}")).1
}

/// Column height of generated masks.
pub const H: u32 = 100;

/// A detection to be laid out in its own image column.
#[derive(Clone, Debug)]
pub struct Det {
    pub id: Option<u32>,
    pub label: String,
    pub confidence: f64,
    pub pixels: Option<Vec<[u8; 3]>>,
    /// Explicit mask; otherwise a full column.
    pub mask: Option<SegmentationMask>,
}

impl Det {
    pub fn new(label: &str) -> Self {
        Det {
            id: None,
            label: label.into(),
            confidence: 0.9,
            pixels: Some(vec![srgb("black"); H as usize]),
            mask: None,
        }
    }

    /// Every pixel in `color`.
    pub fn colored(label: &str, color: &str) -> Self {
        Det::new(label).paint(color, H as usize, "black")
    }

    /// `k` of the column's pixels in `color`, the rest in `other`.
    pub fn paint(mut self, color: &str, k: usize, other: &str) -> Self {
        let mut px = vec![srgb(color); k];
        px.resize(H as usize, srgb(other));
        self.pixels = Some(px);
        self
    }

    pub fn conf(mut self, c: f64) -> Self {
        self.confidence = c;
        self
    }

    pub fn id(mut self, id: u32) -> Self {
        self.id = Some(id);
        self
    }

    pub fn no_pixels(mut self) -> Self {
        self.pixels = None;
        self
    }

    pub fn with_mask(mut self, mask: SegmentationMask, color: &str) -> Self {
        self.pixels = Some(vec![srgb(color); mask.area() as usize]);
        self.mask = Some(mask);
        self
    }
}

/// Runs for a mask covering column `j` of a `w x H` image.
pub fn column_mask(w: u32, j: u32) -> SegmentationMask {
    let mut counts = vec![j * H, H];
    if j + 1 < w {
        counts.push((w - j - 1) * H);
    }
    SegmentationMask { width: w, height: H, counts }
}

/// Lay detections out one per column (explicit masks keep their own
/// geometry and must match the image size).
pub fn record(prompt_id: &str, seed: u64, dets: Vec<Det>) -> ImageRecord {
    let w = dets
        .iter()
        .filter_map(|d| d.mask.as_ref().map(|m| m.width))
        .max()
        .unwrap_or(0)
        .max(dets.len() as u32)
        .max(1);
    let detections = dets
        .into_iter()
        .enumerate()
        .map(|(j, d)| {
            let mask = d.mask.unwrap_or_else(|| column_mask(w, j as u32));
            Detection {
                id: d.id.or(Some(j as u32)),
                label: d.label,
                confidence: d.confidence,
                bbox: [0.0, 0.0, f64::from(w), f64::from(H)],
                mask,
                pixels: d.pixels,
            }
        })
        .collect();
    ImageRecord {
        prompt_id: prompt_id.into(),
        seed,
        image_path: None,
        image_width: w,
        image_height: H,
        detections,
    }
}

pub fn results_file(records: Vec<ImageRecord>) -> ResultsFile {
    ResultsFile {
        schema_id: RESULTS_SCHEMA_ID.into(),
        dataset_ref: "fixture".into(),
        model_name: "fixture-model".into(),
        detector_meta: DetectorMeta {
            confidence_threshold: 0.25,
            nms_iou: 0.8,
            detector_id: None,
        },
        records,
    }
}

/// Rates a synthetic corpus is drawn from.
#[derive(Clone, Debug, Default)]
pub struct Plant {
    /// Probability that the object at each position is drawn.
    pub presence: Vec<f64>,
    /// Probability that a drawn object carries its requested color; absent
    /// colors are always bound.
    pub binding: BTreeMap<String, f64>,
    /// When set, an image succeeds with its seed's rate and otherwise
    /// misses one uniformly chosen position; `presence` is ignored.
    pub seed_rate: Option<BTreeMap<u64, f64>>,
    /// Add an unrelated detection to every image.
    pub distractor: bool,
}

/// Records drawn from `plant`, with the success each record was built to
/// have.
pub fn planted_corpus(
    ds: &PromptDataset,
    seeds: &[u64],
    plant: &Plant,
    rng_seed: u64,
) -> (Vec<ImageRecord>, BTreeMap<(String, u64), bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut records = Vec::new();
    let mut intended = BTreeMap::new();
    for p in &ds.prompts {
        for &s in seeds {
            let n = p.ground_truth.len();
            let (present, bound): (Vec<bool>, Vec<bool>) = match &plant.seed_rate {
                Some(rates) => {
                    let ok = rng.gen_bool(rates[&s]);
                    let miss = rng.gen_range(0..n);
                    ((0..n).map(|i| ok || i != miss).collect(), vec![true; n])
                }
                None => (0..n)
                    .map(|i| {
                        let present = rng.gen_bool(plant.presence[i]);
                        let rate = p.ground_truth[i]
                            .attribute
                            .as_ref()
                            .and_then(|c| plant.binding.get(c))
                            .copied()
                            .unwrap_or(1.0);
                        (present, rng.gen_bool(rate))
                    })
                    .unzip(),
            };
            let mut dets = Vec::new();
            for (i, g) in p.ground_truth.iter().enumerate() {
                if !present[i] {
                    continue;
                }
                dets.push(match (&g.attribute, bound[i]) {
                    (Some(c), true) => Det::colored(&g.object, c),
                    _ => Det::new(&g.object),
                });
            }
            if plant.distractor {
                dets.push(Det::colored("person", "yellow"));
            }
            let success = (0..n).all(|i| present[i] && (bound[i] || p.ground_truth[i].attribute.is_none()));
            intended.insert((p.prompt_id.clone(), s), success);
            records.push(record(&p.prompt_id, s, dets));
        }
    }
    (records, intended)
}

/// `3 * sqrt(p (1 - p) / n)`.
pub fn band(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Template over explicit per-position sets. An empty attribute list means
/// no attributes anywhere.
pub fn make_template(
    objects: &[Vec<&str>],
    attributes: &[Vec<&str>],
    colored: Option<Vec<Vec<(&str, &str)>>>,
    mode: UniquenessMode,
) -> TemplateFile {
    let n = objects.len();
    let with_attr = !attributes.is_empty();
    let pattern = (1..=n)
        .map(|i| {
            if with_attr {
                format!("det({i}) attr({i}) obj({i})")
            } else {
                format!("det({i}) obj({i})")
            }
        })
        .collect::<Vec<_>>()
        .join(" and ");
    let own = |v: &[Vec<&str>]| v.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect();
    TemplateFile {
        name: "oracle".into(),
        n_positions: n,
        text_pattern: format!("a photo of {pattern}"),
        object_sets: own(objects),
        attribute_sets: if with_attr { own(attributes) } else { vec![vec![]; n] },
        colored_objects: colored.map(|c| {
            c.into_iter()
                .map(|p| p.into_iter().map(|(a, o)| (a.to_string(), o.to_string())).collect())
                .collect()
        }),
        uniqueness_mode: mode,
        article_overrides: Default::default(),
    }
}

/// Number of admissible N-tuples, by walking the full product of
/// per-position choices and testing each tuple against the mode's rule.
pub fn brute_count(f: &TemplateFile) -> u64 {
    let choices: Vec<Vec<(Option<String>, String)>> = (0..f.n_positions)
        .map(|i| match &f.colored_objects {
            Some(c) => c[i].iter().map(|(a, o)| (Some(a.clone()), o.clone())).collect(),
            None if f.attribute_sets[i].is_empty() => f.object_sets[i].iter().map(|o| (None, o.clone())).collect(),
            None => f.attribute_sets[i]
                .iter()
                .flat_map(|a| f.object_sets[i].iter().map(move |o| (Some(a.clone()), o.clone())))
                .collect(),
        })
        .collect();
    let ok = |t: &[&(Option<String>, String)]| {
        let pairs = || (0..t.len()).flat_map(move |i| (i + 1..t.len()).map(move |j| (i, j)));
        match f.uniqueness_mode {
            UniquenessMode::Free => true,
            UniquenessMode::Pairwise => pairs().all(|(i, j)| t[i] != t[j]),
            UniquenessMode::Strict => pairs().all(|(i, j)| t[i].1 != t[j].1 && (t[i].0.is_none() || t[i].0 != t[j].0)),
        }
    };
    let mut count = 0u64;
    let mut idx = vec![0usize; f.n_positions];
    if choices.iter().any(|c| c.is_empty()) {
        return 0;
    }
    loop {
        let t: Vec<&(Option<String>, String)> = idx.iter().enumerate().map(|(i, &k)| &choices[i][k]).collect();
        if ok(&t) {
            count += 1;
        }
        let mut p = 0;
        loop {
            if p == idx.len() {
                return count;
            }
            idx[p] += 1;
            if idx[p] < choices[p].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

pub const OBJECT_POOL: [&str; 6] = ["car", "apple", "zebra", "bear", "oven", "kite"];
pub const COLOR_POOL: [&str; 6] = ["red", "green", "blue", "purple", "pink", "yellow"];

/// sRGB to Lab built from first principles: the RGB->XYZ matrix is solved
/// from the primaries' chromaticities and the D65 white, and Lab uses the
/// epsilon/kappa form of the CIE definition.
pub fn oracle_lab(rgb: [u8; 3]) -> [f64; 3] {
    let white = [0.95047, 1.0, 1.08883];
    let prim = [(0.64, 0.33), (0.30, 0.60), (0.15, 0.06)];
    // columns: XYZ of each primary at Y = 1
    let p: Vec<[f64; 3]> = prim.iter().map(|&(x, y)| [x / y, 1.0, (1.0 - x - y) / y]).collect();
    let m = |r: usize, c: usize| p[c][r];
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let base = [[m(0, 0), m(0, 1), m(0, 2)], [m(1, 0), m(1, 1), m(1, 2)], [m(2, 0), m(2, 1), m(2, 2)]];
    let d = det3(base);
    // Cramer's rule for the primaries' scales
    let s: Vec<f64> = (0..3)
        .map(|k| {
            let mut a = base;
            for r in 0..3 {
                a[r][k] = white[r];
            }
            det3(a) / d
        })
        .collect();
    let lin: Vec<f64> = rgb
        .iter()
        .map(|&v| {
            let v = f64::from(v) / 255.0;
            if v <= 0.04045 {
                v / 12.92
            } else {
                ((v + 0.055) / 1.055).powf(2.4)
            }
        })
        .collect();
    let xyz: Vec<f64> = (0..3).map(|r| (0..3).map(|c| m(r, c) * s[c] * lin[c]).sum()).collect();
    let eps = 216.0 / 24389.0;
    let kappa = 24389.0 / 27.0;
    let f = |t: f64| if t > eps { t.powf(1.0 / 3.0) } else { (kappa * t + 16.0) / 116.0 };
    let (fx, fy, fz) = (f(xyz[0] / white[0]), f(xyz[1] / white[1]), f(xyz[2] / white[2]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}
