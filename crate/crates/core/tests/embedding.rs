mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiam::analytics::pair_tiam;
use tiam::color::ReferencePalette;
use tiam::embedding::{classical_mds, correlate, DissimilarityMatrix};
use tiam::scoring::{score_corpus, Thresholds};

pub fn planted_points(n: usize, seed: u64) -> (DissimilarityMatrix, Vec<[f64; 2]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let labels = (0..n).map(|i| format!("p{i:02}")).collect();
    let values = pts
        .iter()
        .map(|a| pts.iter().map(|b| (a[0] - b[0]).hypot(a[1] - b[1])).collect())
        .collect();
    (DissimilarityMatrix::new(labels, values).unwrap(), pts)
}

/// Two-pass textbook Pearson over the upper triangle.
fn pearson(a: &DissimilarityMatrix, b: &DissimilarityMatrix) -> f64 {
    let n = a.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            xs.push(a.values[i][j]);
            ys.push(b.get(&a.labels[i], &a.labels[j]).unwrap());
        }
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[allow(clippy::needless_range_loop)]
fn random_matrix(n: usize, seed: u64) -> DissimilarityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x: f64 = rng.gen();
            (v[i][j], v[j][i]) = (x, x);
        }
    }
    DissimilarityMatrix::new((0..n).map(|i| format!("o{i}")).collect(), v).unwrap()
}

#[test]
fn planted_points_are_recovered() {
    for (n, seed) in [(10, 1), (17, 2), (30, 3)] {
        let (d, _) = planted_points(n, seed);
        let e = classical_mds(&d).unwrap();
        assert!(!e.deficient);
        assert!(e.stress < 1e-9, "stress {}", e.stress);
        for i in 0..n {
            for j in 0..n {
                assert!((e.distance(i, j) - d.values[i][j]).abs() < 1e-6);
            }
        }
        for axis in 0..2 {
            let mean: f64 = e.coordinates.iter().map(|c| c[axis]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-9);
        }
    }
}

#[test]
fn two_points_at_point_eight() {
    let d = DissimilarityMatrix::new(vec!["a".into(), "b".into()], vec![vec![0.0, 0.8], vec![0.8, 0.0]]).unwrap();
    let e = classical_mds(&d).unwrap();
    assert!(((e.coordinates[0][0] - e.coordinates[1][0]).abs() - 0.8).abs() < 1e-12);
    assert_eq!(e.coordinates[0][1], 0.0);
    assert!(e.deficient);
}

#[test]
fn non_euclidean_input_has_positive_stress() {
    let e = classical_mds(&random_matrix(8, 5)).unwrap();
    assert!(e.stress > 1e-3);
}

#[test]
fn correlation_matches_two_pass_formula() {
    for seed in 0..10 {
        let a = random_matrix(9, seed);
        let b = random_matrix(9, seed + 100);
        assert!((correlate(&a, &b).unwrap() - pearson(&a, &b)).abs() < 1e-12);
    }
    let a = random_matrix(6, 1);
    let neg = DissimilarityMatrix::new(
        a.labels.clone(),
        a.values
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().enumerate().map(|(j, v)| if i == j { 0.0 } else { 1.0 - v }).collect())
            .collect(),
    )
    .unwrap();
    assert!((correlate(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    assert!((correlate(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn twenty_eight_label_corpus_builds_a_symmetric_matrix() {
    let ds = common::dataset("two_objects_28_semantic");
    let plant = common::Plant { presence: vec![0.7, 0.5], ..Default::default() };
    let (records, _) = common::planted_corpus(&ds, &[0, 1, 2, 3], &plant, 3);
    let (outcomes, _) = score_corpus(&ds, &records, &ReferencePalette::standard(), &Thresholds::default(), 1);
    let pairs = pair_tiam(&outcomes, &ds).unwrap();
    let d = DissimilarityMatrix::from_pair_scores(&pairs).unwrap();
    assert_eq!(d.len(), 28);

    // direct recomputation from the outcomes
    let index = ds.index();
    let mut tally: BTreeMap<(String, String), (u32, u32)> = BTreeMap::new();
    for o in &outcomes {
        let gt = &index[o.prompt_id.as_str()].ground_truth;
        let e = tally.entry((gt[0].object.clone(), gt[1].object.clone())).or_default();
        e.0 += u32::from(o.succeeded());
        e.1 += 1;
    }
    let rate = |a: &str, b: &str| {
        let (h, n) = tally[&(a.to_string(), b.to_string())];
        f64::from(h) / f64::from(n)
    };
    for (i, a) in d.labels.iter().enumerate() {
        assert_eq!(d.values[i][i], 0.0);
        for (j, b) in d.labels.iter().enumerate() {
            assert_eq!(d.values[i][j], d.values[j][i]);
            if i != j {
                assert!((d.values[i][j] - (rate(a, b) + rate(b, a)) / 2.0).abs() < 1e-15);
                assert!((0.0..=1.0).contains(&d.values[i][j]));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn relabeling_permutes_distances(n in 3usize..12, seed in 0u64..1000, shift in 1usize..11) {
        let (d, _) = planted_points(n, seed);
        let mut order = d.labels.clone();
        order.rotate_left(shift % n);
        let p = d.reordered(&order).unwrap();
        let (e, f) = (classical_mds(&d).unwrap(), classical_mds(&p).unwrap());
        for i in 0..n {
            for j in 0..n {
                let (pi, pj) = ((i + shift % n) % n, (j + shift % n) % n);
                prop_assert!((f.distance(i, j) - e.distance(pi, pj)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pair_scores_give_symmetric_zero_diagonal(n in 2usize..8, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scores = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    scores.insert((format!("o{a}"), format!("o{b}")), rng.gen::<f64>());
                }
            }
        }
        let d = DissimilarityMatrix::from_pair_scores(&scores).unwrap();
        for i in 0..n {
            prop_assert_eq!(d.values[i][i], 0.0);
            for j in 0..n {
                prop_assert_eq!(d.values[i][j], d.values[j][i]);
            }
        }
    }
}
