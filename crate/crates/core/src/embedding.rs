//! Object-pair dissimilarities and their planar embedding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityMatrix {
    pub labels: Vec<String>,
    /// Row-major, symmetric, zero diagonal.
    pub values: Vec<Vec<f64>>,
}

impl DissimilarityMatrix {
    /// From ordered-pair scores: `d(x, y)` is the mean of `s(x, y)` and
    /// `s(y, x)`. Every ordered pair of distinct labels must be present.
    pub fn from_pair_scores(scores: &BTreeMap<(String, String), f64>) -> Result<Self> {
        let labels: Vec<String> = scores
            .keys()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = labels.len();
        let mut values = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let get = |x: &str, y: &str| {
                    scores.get(&(x.to_string(), y.to_string())).copied().ok_or_else(|| {
                        Error::InvalidArgument(format!("no score for the pair ({x}, {y})"))
                    })
                };
                let d = (get(&labels[i], &labels[j])? + get(&labels[j], &labels[i])?) / 2.0;
                values[i][j] = d;
                values[j][i] = d;
            }
        }
        Ok(DissimilarityMatrix { labels, values })
    }

    /// Any non-negative symmetric matrix with a zero diagonal; planted and
    /// external distances need not lie in `[0, 1]`.
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!("dissimilarity matrix is not {n}x{n}")));
        }
        for i in 0..n {
            if values[i][i].abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at `{}`", labels[i])));
            }
            for j in 0..n {
                if !values[i][j].is_finite() || values[i][j] < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "dissimilarity {} at ({}, {}) is negative or not finite",
                        values[i][j], labels[i], labels[j]
                    )));
                }
                if (values[i][j] - values[j][i]).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(DissimilarityMatrix { labels, values })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.values[i][j])
    }

    /// Read a square CSV: a header of labels after one leading cell, then
    /// one row per label starting with the label itself.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = io_util::read_to_string(path)?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let labels: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let name = rec.get(0).unwrap_or_default().to_string();
            let vals = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::schema(Some(r), name.clone(), e.to_string()))?;
            rows.insert(name, vals);
        }
        let values = labels
            .iter()
            .map(|l| {
                rows.remove(l)
                    .ok_or_else(|| Error::InvalidArgument(format!("no row for `{l}` in {}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, values)
    }

    /// Same labels, reordered to `order`. Fails if the label sets differ.
    pub fn reordered(&self, order: &[String]) -> Result<Self> {
        let a: BTreeSet<&String> = self.labels.iter().collect();
        let b: BTreeSet<&String> = order.iter().collect();
        if a != b || order.len() != self.labels.len() {
            return Err(Error::InvalidArgument("label sets differ".into()));
        }
        let idx: Vec<usize> = order
            .iter()
            .map(|l| self.labels.iter().position(|x| x == l).expect("checked"))
            .collect();
        let values = idx.iter().map(|&i| idx.iter().map(|&j| self.values[i][j]).collect()).collect();
        Ok(DissimilarityMatrix { labels: order.to_vec(), values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub labels: Vec<String>,
    pub coordinates: Vec<[f64; 2]>,
    /// Kruskal stress-1 of the embedding against the input.
    pub stress: f64,
    /// Fewer than two positive eigenvalues; missing axes are zero.
    pub deficient: bool,
    pub eigenvalues: [f64; 2],
}

impl Embedding2D {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,x,y\n");
        for (l, [x, y]) in self.labels.iter().zip(&self.coordinates) {
            let _ = writeln!(s, "{l},{x},{y}");
        }
        s
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let [a, b] = self.coordinates[i];
        let [c, d] = self.coordinates[j];
        (a - c).hypot(b - d)
    }
}

/// Classical (Torgerson) scaling into two dimensions. Each axis is flipped
/// so its first coordinate of magnitude above 1e-12 is positive.
pub fn classical_mds(d: &DissimilarityMatrix) -> Result<Embedding2D> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {n}")));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| d.values[i][j].powi(2));
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand));

    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));

    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut coordinates = vec![[0.0; 2]; n];
    let mut eigenvalues = [0.0; 2];
    let mut deficient = false;
    for axis in 0..2 {
        let Some(&k) = order.get(axis) else {
            deficient = true;
            continue;
        };
        let lambda = eig.eigenvalues[k];
        if lambda <= 1e-10 * scale {
            deficient = true;
            continue;
        }
        eigenvalues[axis] = lambda;
        let v = eig.eigenvectors.column(k);
        let sign = v.iter().find(|x| x.abs() > 1e-12).map_or(1.0, |x| x.signum());
        for i in 0..n {
            coordinates[i][axis] = sign * v[i] * lambda.sqrt();
        }
    }

    let mut emb = Embedding2D {
        labels: d.labels.clone(),
        coordinates,
        stress: 0.0,
        deficient,
        eigenvalues,
    };
    emb.stress = stress(d, &emb);
    Ok(emb)
}

/// `sqrt(sum (d_ij - e_ij)^2 / sum d_ij^2)` over unordered pairs; 0 when
/// every dissimilarity is 0.
pub fn stress(d: &DissimilarityMatrix, e: &Embedding2D) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            num += (d.values[i][j] - e.distance(i, j)).powi(2);
            den += d.values[i][j].powi(2);
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Pearson correlation of the upper triangles of two matrices over the same
/// labels. Errors when either side has no variance.
pub fn correlate(a: &DissimilarityMatrix, b: &DissimilarityMatrix) -> Result<f64> {
    let b = b.reordered(&a.labels)?;
    let n = a.len();
    let (mut k, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (a.values[i][j], b.values[i][j]);
            k += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
    }
    let cov = sxy - sx * sy / k;
    let vx = sxx - sx * sx / k;
    let vy = syy - sy * sy / k;
    if k < 2.0 || vx <= 1e-15 || vy <= 1e-15 {
        return Err(Error::InvalidArgument("correlation undefined: a side has no variance".into()));
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}
