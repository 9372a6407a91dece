use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uncompressed COCO-style RLE: alternating background/foreground run
/// lengths over the column-major pixel order, starting with background.
/// Serialized as `{"size": [height, width], "counts": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RleDoc", into = "RleDoc")]
pub struct SegmentationMask {
    pub width: u32,
    pub height: u32,
    pub counts: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RleDoc {
    size: [u32; 2],
    counts: Vec<u32>,
}

impl From<RleDoc> for SegmentationMask {
    fn from(d: RleDoc) -> Self {
        SegmentationMask {
            height: d.size[0],
            width: d.size[1],
            counts: d.counts,
        }
    }
}

impl From<SegmentationMask> for RleDoc {
    fn from(m: SegmentationMask) -> Self {
        RleDoc {
            size: [m.height, m.width],
            counts: m.counts,
        }
    }
}

impl SegmentationMask {
    /// Encode a column-major bitmap (`pixel (x, y)` at `y + height * x`).
    pub fn from_bitmap(width: u32, height: u32, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize, "bitmap size");
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for &b in bits {
            if b != current {
                counts.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
        counts.push(run);
        SegmentationMask { width, height, counts }
    }

    pub fn to_bitmap(&self) -> Vec<bool> {
        let n = self.pixel_count() as usize;
        let mut bits = Vec::with_capacity(n);
        for (i, &c) in self.counts.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, c as usize));
        }
        bits.resize(n, false);
        bits
    }

    pub fn pixel_count(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    pub fn run_total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Foreground pixel count.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| u64::from(c)).sum()
    }
}

fn intersection(a: &[u32], b: &[u32]) -> u64 {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut ca, mut cb) = (u64::from(a[0]), u64::from(b[0]));
    let mut inter = 0;
    loop {
        while ca == 0 {
            ia += 1;
            match a.get(ia) {
                Some(&c) => ca = u64::from(c),
                None => return inter,
            }
        }
        while cb == 0 {
            ib += 1;
            match b.get(ib) {
                Some(&c) => cb = u64::from(c),
                None => return inter,
            }
        }
        let step = ca.min(cb);
        if ia % 2 == 1 && ib % 2 == 1 {
            inter += step;
        }
        ca -= step;
        cb -= step;
    }
}

/// Intersection over union of the foreground of two equally sized masks,
/// computed directly on the runs. Returns 0 when both masks are empty.
pub fn mask_iou(m1: &SegmentationMask, m2: &SegmentationMask) -> Result<f64> {
    if (m1.width, m1.height) != (m2.width, m2.height) {
        return Err(Error::DimensionMismatch(m1.width, m1.height, m2.width, m2.height));
    }
    let inter = intersection(&m1.counts, &m2.counts);
    let union = m1.area() + m2.area() - inter;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}
