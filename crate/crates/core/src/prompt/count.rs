//! Closed-form prompt counts.
//!
//! Strict templates (shared sets, no repeated object or attribute) count as
//! the product of two falling factorials. Free templates count as the plain
//! product of per-position choices. Pairwise templates (an object may repeat
//! only under a different attribute) split each position's colored objects
//! into those unique to the position and those shared with another one, then
//! sum over the configurations in which shared colored objects occupy some
//! positions.

use std::collections::{BTreeMap, BTreeSet};

use super::template::{Template, UniquenessMode};
use crate::error::{Error, Result};

type ColoredObject = (Option<String>, String);

/// One configuration of shared colored objects: `shared[i]` is the colored
/// object placed at zero-based position `i`, `None` where the position draws
/// from its position-unique colored objects instead. `open_positions` holds
/// those 1-based positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseConfiguration {
    pub shared: Vec<Option<(Option<String>, String)>>,
    pub open_positions: Vec<usize>,
}

pub fn count_prompts(template: &Template) -> Result<u128> {
    let n = template.n_positions();
    match template.uniqueness_mode() {
        UniquenessMode::Strict => {
            let n_obj = template.object_sets()[0].labels.len();
            let n_attr = template.attribute_sets()[0].attributes.len();
            if n_obj < n {
                return Err(Error::Infeasible(format!(
                    "{} objects cannot fill {n} distinct positions",
                    n_obj
                )));
            }
            if n_attr > 0 && n_attr < n {
                return Err(Error::Infeasible(format!(
                    "{} attributes cannot fill {n} distinct positions",
                    n_attr
                )));
            }
            let attrs = if n_attr == 0 { 1 } else { falling_factorial(n_attr, n) };
            Ok(falling_factorial(n_obj, n) * attrs)
        }
        UniquenessMode::Free => Ok((0..n).map(|i| template.choices(i).len() as u128).product()),
        UniquenessMode::Pairwise => {
            let (unique_sizes, configs) = split_and_configure(template);
            let base: u128 = unique_sizes.iter().product();
            let shared: u128 = configs
                .iter()
                .map(|c| c.open_positions.iter().map(|&p| unique_sizes[p - 1]).product::<u128>())
                .sum();
            Ok(base + shared)
        }
    }
}

/// The configuration multiset of a pairwise template, built as a tree over
/// positions: each level picks a shared colored object not yet used on the
/// branch, or leaves the position open. The all-open leaf is not included.
/// A configuration with no open position contributes an empty product (1)
/// to the count.
pub fn pairwise_configurations(template: &Template) -> Vec<PairwiseConfiguration> {
    split_and_configure(template).1
}

fn colored_objects(template: &Template, pos: usize) -> BTreeSet<ColoredObject> {
    template
        .choices(pos)
        .iter()
        .map(|c| {
            let (a, o) = template.choice_labels(pos, *c);
            (a.map(str::to_string), o.to_string())
        })
        .collect()
}

fn split_and_configure(template: &Template) -> (Vec<u128>, Vec<PairwiseConfiguration>) {
    let n = template.n_positions();
    let sets: Vec<_> = (0..n).map(|i| colored_objects(template, i)).collect();

    let mut occurrences: BTreeMap<&ColoredObject, usize> = BTreeMap::new();
    for set in &sets {
        for u in set {
            *occurrences.entry(u).or_default() += 1;
        }
    }
    let mut unique_sizes = Vec::with_capacity(n);
    let mut shared: Vec<Vec<&ColoredObject>> = Vec::with_capacity(n);
    for set in &sets {
        let (multi, single): (Vec<_>, Vec<_>) = set.iter().partition(|u| occurrences[u] > 1);
        unique_sizes.push(single.len() as u128);
        shared.push(multi);
    }

    let mut configs = Vec::new();
    let mut branch: Vec<Option<&ColoredObject>> = Vec::with_capacity(n);
    grow(&shared, &mut branch, &mut configs);
    (unique_sizes, configs)
}

fn grow<'a>(
    shared: &[Vec<&'a ColoredObject>],
    branch: &mut Vec<Option<&'a ColoredObject>>,
    out: &mut Vec<PairwiseConfiguration>,
) {
    let pos = branch.len();
    if pos == shared.len() {
        if branch.iter().any(Option::is_some) {
            out.push(PairwiseConfiguration {
                shared: branch.iter().map(|s| s.cloned()).collect(),
                open_positions: (1..=pos).filter(|&p| branch[p - 1].is_none()).collect(),
            });
        }
        return;
    }
    for &u in &shared[pos] {
        if branch.contains(&Some(u)) {
            continue;
        }
        branch.push(Some(u));
        grow(shared, branch, out);
        branch.pop();
    }
    branch.push(None);
    grow(shared, branch, out);
    branch.pop();
}

fn falling_factorial(n: usize, k: usize) -> u128 {
    (0..k).map(|i| (n - i) as u128).product()
}
