//! Aggregation of per-image outcomes.
//!
//! Ratios with an empty denominator are `None` and serialize as `null`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util;
use crate::prompt::{GroundTruth, PromptDataset};
use crate::scoring::Outcome;

/// Mean success over all outcomes.
pub fn compute_tiam(outcomes: &[Outcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("no outcomes"));
    }
    let hits = outcomes.iter().filter(|o| o.succeeded()).count();
    Ok(hits as f64 / outcomes.len() as f64)
}

/// Success rate per prompt id.
pub fn per_prompt_tiam(outcomes: &[Outcome]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for o in outcomes {
        let e = acc.entry(o.prompt_id.as_str()).or_default();
        e.0 += usize::from(o.succeeded());
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (hit, n))| (k.to_string(), hit as f64 / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedProfile {
    pub seed: u64,
    pub raw_tiam: f64,
    pub n_images: usize,
    /// `(raw - mean) / sd` with the population standard deviation over seeds;
    /// absent with fewer than two seeds or zero spread.
    pub z_score: Option<f64>,
    /// 1 = best. Ties go to the smaller seed.
    pub rank: usize,
}

/// Pool every prompt per seed. Profiles come back in ascending seed order.
pub fn per_seed_tiam(outcomes: &[Outcome]) -> Result<Vec<SeedProfile>> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("no outcomes"));
    }
    let mut acc: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for o in outcomes {
        let e = acc.entry(o.seed).or_default();
        e.0 += usize::from(o.succeeded());
        e.1 += 1;
    }
    let mut profiles: Vec<SeedProfile> = acc
        .into_iter()
        .map(|(seed, (hit, n))| SeedProfile {
            seed,
            raw_tiam: hit as f64 / n as f64,
            n_images: n,
            z_score: None,
            rank: 0,
        })
        .collect();

    let k = profiles.len() as f64;
    let mean = profiles.iter().map(|p| p.raw_tiam).sum::<f64>() / k;
    let var = profiles.iter().map(|p| (p.raw_tiam - mean).powi(2)).sum::<f64>() / k;
    let sd = var.sqrt();
    if profiles.len() >= 2 && sd > 1e-12 {
        for p in &mut profiles {
            p.z_score = Some((p.raw_tiam - mean) / sd);
        }
    }

    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|&a, &b| {
        profiles[b]
            .raw_tiam
            .total_cmp(&profiles[a].raw_tiam)
            .then(profiles[a].seed.cmp(&profiles[b].seed))
    });
    for (r, &i) in order.iter().enumerate() {
        profiles[i].rank = r + 1;
    }
    Ok(profiles)
}

/// Five-number summary plus the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Quartiles by linear interpolation between order statistics.
pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = (v.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Some(BoxStats {
        n: v.len(),
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

fn common_positions(outcomes: &[Outcome]) -> Result<usize> {
    let n = outcomes
        .first()
        .ok_or(Error::EmptyInput("no outcomes"))?
        .position_presence
        .len();
    if let Some(o) = outcomes.iter().find(|o| o.position_presence.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "outcomes mix {n}- and {}-position prompts",
            o.position_presence.len()
        )));
    }
    Ok(n)
}

/// Share of outcomes in which the object at each position was detected.
pub fn occurrence_by_position(outcomes: &[Outcome]) -> Result<Vec<f64>> {
    let n = common_positions(outcomes)?;
    let total = outcomes.len() as f64;
    Ok((0..n)
        .map(|i| outcomes.iter().filter(|o| o.position_presence[i]).count() as f64 / total)
        .collect())
}

/// Correctly colored among detected, as counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BindCount {
    pub bound: usize,
    pub detected: usize,
}

impl BindCount {
    pub fn rate(&self) -> Option<f64> {
        (self.detected > 0).then(|| self.bound as f64 / self.detected as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorRate {
    pub color: String,
    pub bound: usize,
    pub detected: usize,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionBinding {
    pub position: usize,
    pub bound: usize,
    pub detected: usize,
    pub rate: Option<f64>,
    pub per_color: Vec<ColorRate>,
}

/// Binding success rate per position, split by requested color.
pub fn binding_success_rate(outcomes: &[Outcome], dataset: &PromptDataset) -> Result<Vec<PositionBinding>> {
    let n = common_positions(outcomes)?;
    let index = dataset.index();
    let mut overall = vec![BindCount::default(); n];
    let mut by_color: Vec<BTreeMap<String, BindCount>> = vec![BTreeMap::new(); n];
    for o in outcomes {
        let gt = ground_truth(&index, o)?;
        for i in 0..n {
            let Some(color) = &gt[i].attribute else { continue };
            let c = by_color[i].entry(color.clone()).or_default();
            if o.position_presence[i] {
                overall[i].detected += 1;
                c.detected += 1;
                if o.position_binding[i] == Some(true) {
                    overall[i].bound += 1;
                    c.bound += 1;
                }
            }
        }
    }
    Ok((0..n)
        .map(|i| PositionBinding {
            position: i + 1,
            bound: overall[i].bound,
            detected: overall[i].detected,
            rate: overall[i].rate(),
            per_color: by_color[i]
                .iter()
                .map(|(color, c)| ColorRate {
                    color: color.clone(),
                    bound: c.bound,
                    detected: c.detected,
                    rate: c.rate(),
                })
                .collect(),
        })
        .collect())
}

fn ground_truth<'d>(
    index: &BTreeMap<&str, &'d crate::prompt::PromptInstance>,
    o: &Outcome,
) -> Result<&'d [GroundTruth]> {
    let p = index
        .get(o.prompt_id.as_str())
        .ok_or_else(|| Error::InvalidArgument(format!("outcome for unknown prompt `{}`", o.prompt_id)))?;
    if p.ground_truth.len() != o.position_presence.len() {
        return Err(Error::InvalidArgument(format!(
            "outcome for `{}` has {} positions, prompt has {}",
            o.prompt_id,
            o.position_presence.len(),
            p.ground_truth.len()
        )));
    }
    Ok(&p.ground_truth)
}

/// Success rate and binding rate over outcomes whose prompt requests a given
/// `(color, object)` at any position. Without attributes `color` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorObjectSlice {
    pub color: Option<String>,
    pub object: String,
    pub n_images: usize,
    pub tiam: f64,
    pub bound: usize,
    pub detected: usize,
    pub binding_rate: Option<f64>,
}

pub fn per_color_object(outcomes: &[Outcome], dataset: &PromptDataset) -> Result<Vec<ColorObjectSlice>> {
    let index = dataset.index();
    let mut acc: BTreeMap<(Option<String>, String), (usize, usize, BindCount)> = BTreeMap::new();
    for o in outcomes {
        let gt = ground_truth(&index, o)?;
        let keys: BTreeSet<(Option<String>, String)> =
            gt.iter().map(|g| (g.attribute.clone(), g.object.clone())).collect();
        for k in keys {
            let e = acc.entry(k.clone()).or_default();
            e.0 += usize::from(o.succeeded());
            e.1 += 1;
            for (i, g) in gt.iter().enumerate() {
                if g.attribute.is_some() && (g.attribute.clone(), g.object.clone()) == k && o.position_presence[i] {
                    e.2.detected += 1;
                    e.2.bound += usize::from(o.position_binding[i] == Some(true));
                }
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|((color, object), (hit, n, b))| ColorObjectSlice {
            color,
            object,
            n_images: n,
            tiam: hit as f64 / n as f64,
            bound: b.bound,
            detected: b.detected,
            binding_rate: b.rate(),
        })
        .collect())
}

/// TIAM when only the first `n` seeds (ascending) of each prompt are kept,
/// for `n = 1..=max_n`.
pub fn convergence_curve(outcomes: &[Outcome], max_n: usize) -> Result<Vec<(usize, f64)>> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("no outcomes"));
    }
    if max_n == 0 {
        return Err(Error::InvalidArgument("max_n must be at least 1".into()));
    }
    let mut by_prompt: BTreeMap<&str, Vec<(u64, bool)>> = BTreeMap::new();
    for o in outcomes {
        by_prompt.entry(o.prompt_id.as_str()).or_default().push((o.seed, o.succeeded()));
    }
    for (pid, v) in by_prompt.iter_mut() {
        if v.len() < max_n {
            return Err(Error::InvalidArgument(format!(
                "prompt `{pid}` has {} images, fewer than {max_n}",
                v.len()
            )));
        }
        v.sort_unstable();
    }
    let n_prompts = by_prompt.len();
    let mut hits = 0usize;
    let mut curve = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        hits += by_prompt.values().filter(|v| v[n - 1].1).count();
        curve.push((n, hits as f64 / (n * n_prompts) as f64));
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSelection {
    /// Best first.
    pub best: Vec<u64>,
    /// Worst first.
    pub worst: Vec<u64>,
}

pub fn select_seeds(profiles: &[SeedProfile], k: usize) -> Result<SeedSelection> {
    if k == 0 || k > profiles.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            profiles.len()
        )));
    }
    let mut by_rank: Vec<&SeedProfile> = profiles.iter().collect();
    by_rank.sort_by_key(|p| p.rank);
    Ok(SeedSelection {
        best: by_rank.iter().take(k).map(|p| p.seed).collect(),
        worst: by_rank.iter().rev().take(k).map(|p| p.seed).collect(),
    })
}

/// Success rate per ordered object pair, for two-position datasets.
pub fn pair_tiam(outcomes: &[Outcome], dataset: &PromptDataset) -> Result<BTreeMap<(String, String), f64>> {
    if dataset.n_positions() != 2 {
        return Err(Error::InvalidArgument(format!(
            "pair scores need a two-object dataset, got {} positions",
            dataset.n_positions()
        )));
    }
    let index = dataset.index();
    let mut acc: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for o in outcomes {
        let gt = ground_truth(&index, o)?;
        let e = acc.entry((gt[0].object.clone(), gt[1].object.clone())).or_default();
        e.0 += usize::from(o.succeeded());
        e.1 += 1;
    }
    Ok(acc.into_iter().map(|(k, (h, n))| (k, h as f64 / n as f64)).collect())
}

/// Everything `report` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiamReport {
    pub model_name: String,
    pub template_name: String,
    pub n_positions: usize,
    pub n_outcomes: usize,
    pub global_tiam: f64,
    /// Smallest number of images any prompt received.
    pub n_images_per_prompt: usize,
    pub per_prompt: BTreeMap<String, f64>,
    pub per_seed: Vec<SeedProfile>,
    pub per_seed_box: BoxStats,
    pub per_position_occurrence: Vec<f64>,
    pub binding_success_rate: Vec<PositionBinding>,
    pub per_color_object: Vec<ColorObjectSlice>,
    pub convergence: Vec<(usize, f64)>,
    /// Unordered-pair scores `(a, b, tiam(a,b), tiam(b,a))`, two-object
    /// datasets only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unordered_pairs: Vec<(String, String, Option<f64>, Option<f64>)>,
}

pub fn build_report(outcomes: &[Outcome], dataset: &PromptDataset, model_name: &str) -> Result<TiamReport> {
    let global_tiam = compute_tiam(outcomes)?;
    let per_prompt = per_prompt_tiam(outcomes);
    let per_seed = per_seed_tiam(outcomes)?;
    let raws: Vec<f64> = per_seed.iter().map(|p| p.raw_tiam).collect();
    let per_seed_box = box_stats(&raws).expect("at least one seed");
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for o in outcomes {
        *counts.entry(o.prompt_id.as_str()).or_default() += 1;
    }
    let n_images_per_prompt = counts.values().copied().min().unwrap_or(0);
    let unordered_pairs = if dataset.n_positions() == 2 {
        let pairs = pair_tiam(outcomes, dataset)?;
        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for (a, b) in pairs.keys() {
            let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if seen.insert(key.clone()) {
                let ab = pairs.get(&key).copied();
                let ba = pairs.get(&(key.1.clone(), key.0.clone())).copied();
                rows.push((key.0, key.1, ab, ba));
            }
        }
        rows
    } else {
        Vec::new()
    };
    Ok(TiamReport {
        model_name: model_name.to_string(),
        template_name: dataset.template.name.clone(),
        n_positions: dataset.n_positions(),
        n_outcomes: outcomes.len(),
        global_tiam,
        n_images_per_prompt,
        per_prompt,
        per_seed,
        per_seed_box,
        per_position_occurrence: occurrence_by_position(outcomes)?,
        binding_success_rate: binding_success_rate(outcomes, dataset)?,
        per_color_object: per_color_object(outcomes, dataset)?,
        convergence: convergence_curve(outcomes, n_images_per_prompt.max(1))?,
        unordered_pairs,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), |x| x.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render every CSV table of the report as `(file name, contents)`. Each
/// table opens with a `#` line describing what it holds.
pub fn report_tables(r: &TiamReport) -> Vec<(&'static str, String)> {
    let model = csv_field(&r.model_name);
    let mut out = Vec::new();

    let mut s = String::from("# TIAM by number of objects in the prompt\nmodel,n_objects,tiam,n_images\n");
    let _ = writeln!(s, "{model},{},{},{}", r.n_positions, r.global_tiam, r.n_outcomes);
    out.push(("table_1.csv", s));

    let mut s = String::from("# proportion of images showing the object at each prompt position\nmodel");
    for i in 1..=r.n_positions {
        let _ = write!(s, ",o{i}");
    }
    s.push('\n');
    s.push_str(&model);
    for v in &r.per_position_occurrence {
        let _ = write!(s, ",{v}");
    }
    s.push('\n');
    out.push(("table_2.csv", s));

    let b = &r.per_seed_box;
    let mut s = String::from("# distribution of per-seed TIAM over seeds\nmodel,n_seeds,min,q1,median,q3,max,mean\n");
    let _ = writeln!(s, "{model},{},{},{},{},{},{},{}", b.n, b.min, b.q1, b.median, b.q3, b.max, b.mean);
    out.push(("per_seed_boxplot.csv", s));

    let mut s = String::from("# TIAM per seed, pooled over prompts; z-score standardized across seeds\nseed,raw_tiam,n_images,z_score,rank\n");
    for p in &r.per_seed {
        let _ = writeln!(s, "{},{},{},{},{}", p.seed, p.raw_tiam, p.n_images, opt(p.z_score), p.rank);
    }
    out.push(("per_seed.csv", s));

    let mut s = String::from("# occurrence of the object at each position\nposition,occurrence,n_images\n");
    for (i, v) in r.per_position_occurrence.iter().enumerate() {
        let _ = writeln!(s, "{},{v},{}", i + 1, r.n_outcomes);
    }
    out.push(("occurrence_positions.csv", s));

    let mut s = String::from("# correctly colored among detected, per position and requested color (* = all colors)\nposition,color,bound,detected,rate\n");
    for p in &r.binding_success_rate {
        let _ = writeln!(s, "{},*,{},{},{}", p.position, p.bound, p.detected, opt(p.rate));
        for c in &p.per_color {
            let _ = writeln!(s, "{},{},{},{},{}", p.position, csv_field(&c.color), c.bound, c.detected, opt(c.rate));
        }
    }
    out.push(("binding_rates.csv", s));

    let mut s = String::from("# TIAM using only the first n seeds of every prompt\nn_images_per_prompt,tiam\n");
    for (n, v) in &r.convergence {
        let _ = writeln!(s, "{n},{v}");
    }
    out.push(("convergence.csv", s));

    let mut s = String::from(
        "# TIAM and binding rate over prompts requesting each colored object\ncolor,object,n_images,tiam,bound,detected,binding_rate\n",
    );
    for c in &r.per_color_object {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            csv_field(c.color.as_deref().unwrap_or("")),
            csv_field(&c.object),
            c.n_images,
            c.tiam,
            c.bound,
            c.detected,
            opt(c.binding_rate)
        );
    }
    out.push(("per_color_object.csv", s));

    let mut s = String::from("# TIAM per prompt\nprompt_id,tiam\n");
    for (k, v) in &r.per_prompt {
        let _ = writeln!(s, "{k},{v}");
    }
    out.push(("per_prompt.csv", s));

    if !r.unordered_pairs.is_empty() {
        let mut s = String::from("# unordered object pairs: TIAM of both orderings and their mean\nobject_a,object_b,tiam_ab,tiam_ba,mean\n");
        for (a, b, ab, ba) in &r.unordered_pairs {
            let mean = ab.zip(*ba).map(|(x, y)| (x + y) / 2.0);
            let _ = writeln!(s, "{},{},{},{},{}", csv_field(a), csv_field(b), opt(*ab), opt(*ba), opt(mean));
        }
        out.push(("pair_tiam.csv", s));
    }
    out
}

/// Write `report.json` and every CSV table into `dir`.
pub fn write_report(report: &TiamReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    let p = dir.join("report.json");
    io_util::write_atomic(&p, json.as_bytes())?;
    written.push(p);
    for (name, body) in report_tables(report) {
        let p = dir.join(name);
        io_util::write_atomic(&p, body.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}
