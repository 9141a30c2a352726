//! Differentially private Count sketch.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::{sample_geometric, NoiseSpec};
use crate::query::median;
use crate::rng::RngHandle;
use crate::table::SparseTable;

const MERSENNE_61: u64 = (1 << 61) - 1;

fn mod_mersenne(x: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let folded = (x & p) + (x >> 61);
    let folded = (folded & p) + (folded >> 61);
    let r = folded as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// `(a x + b) mod (2^61 - 1)`, pairwise independent over the key space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseHash {
    a: u64,
    b: u64,
}

impl PairwiseHash {
    fn draw(rng: &mut RngHandle) -> Self {
        PairwiseHash { a: 1 + rng.below(MERSENNE_61 - 1), b: rng.below(MERSENNE_61) }
    }

    fn eval(&self, x: u64) -> u64 {
        let x = mod_mersenne(x as u128);
        mod_mersenne(self.a as u128 * x as u128 + self.b as u128)
    }
}

/// How row estimates are combined into one point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combine {
    #[default]
    Mean,
    Median,
}

/// A `depth x width` Count sketch with geometric noise in every bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateSketch {
    width: usize,
    depth: usize,
    m: u64,
    buckets: Vec<i64>,
    rows: Vec<PairwiseHash>,
    signs: Vec<PairwiseHash>,
    spec: NoiseSpec,
}

#[derive(Serialize, Deserialize)]
struct SketchMeta {
    width: usize,
    depth: usize,
    m: u64,
    epsilon: f64,
    sensitivity: u64,
    rows: Vec<PairwiseHash>,
    signs: Vec<PairwiseHash>,
}

impl PrivateSketch {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    /// Row-major bucket values.
    pub fn buckets(&self) -> &[i64] {
        &self.buckets
    }

    fn bucket(&self, row: usize, index: u64) -> usize {
        row * self.width + (self.rows[row].eval(index) % self.width as u64) as usize
    }

    fn sign(&self, row: usize, index: u64) -> i64 {
        if self.signs[row].eval(index) & 1 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let meta = SketchMeta {
            width: self.width,
            depth: self.depth,
            m: self.m,
            epsilon: self.spec.epsilon(),
            sensitivity: self.spec.sensitivity(),
            rows: self.rows.clone(),
            signs: self.signs.clone(),
        };
        writeln!(out, "# {}", serde_json::to_string(&meta)?)?;
        for row in self.buckets.chunks(self.width) {
            let line: Vec<String> = row.iter().map(i64::to_string).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self> {
        let mut lines = source.lines();
        let head = lines.next().ok_or_else(|| invalid("empty sketch file"))??;
        let meta: SketchMeta = serde_json::from_str(head.trim_start_matches('#').trim())?;
        if meta.rows.len() != meta.depth || meta.signs.len() != meta.depth || meta.width == 0 {
            return Err(invalid("sketch metadata is inconsistent"));
        }
        let spec = NoiseSpec::new(meta.epsilon, meta.sensitivity)?;
        let mut buckets = Vec::with_capacity(meta.width * meta.depth);
        for (n, line) in lines.enumerate() {
            let line = line?;
            let before = buckets.len();
            for v in line.split(',') {
                let v = v.trim().parse::<i64>().map_err(|e| Error::Parse { line: n + 2, message: e.to_string() })?;
                buckets.push(v);
            }
            if buckets.len() - before != meta.width {
                return Err(Error::Parse { line: n + 2, message: format!("expected {} buckets", meta.width) });
            }
        }
        if buckets.len() != meta.width * meta.depth {
            return Err(invalid(format!("expected {} rows", meta.depth)));
        }
        Ok(PrivateSketch {
            width: meta.width,
            depth: meta.depth,
            m: meta.m,
            buckets,
            rows: meta.rows,
            signs: meta.signs,
            spec,
        })
    }
}

/// Builds the sketch. Hash functions are drawn from `rng` before any noise,
/// so a fixed seed fixes the pre-noise buckets. `spec` carries
/// the per-cell budget; each of the `d` rows moves two buckets, so the
/// bucket noise uses sensitivity `2d` times that of `spec`.
pub fn build_private_sketch(
    table: &SparseTable,
    width: usize,
    depth: usize,
    spec: &NoiseSpec,
    rng: &mut RngHandle,
) -> Result<PrivateSketch> {
    if width == 0 || depth == 0 {
        return Err(invalid("sketch width and depth must be at least 1"));
    }
    let rows = (0..depth).map(|_| PairwiseHash::draw(rng)).collect();
    let signs = (0..depth).map(|_| PairwiseHash::draw(rng)).collect();
    let mut sketch = PrivateSketch {
        width,
        depth,
        m: table.m(),
        buckets: vec![0; width * depth],
        rows,
        signs,
        spec: spec.scaled(2 * depth as u64)?,
    };
    for &(i, c) in table.entries() {
        for row in 0..depth {
            let b = sketch.bucket(row, i);
            sketch.buckets[b] += sketch.sign(row, i) * c;
        }
    }
    let noise = sketch.spec;
    for b in &mut sketch.buckets {
        *b += sample_geometric(&noise, rng);
    }
    Ok(sketch)
}

/// Combines `g_j(i) * bucket[j][h_j(i)]` over the rows.
pub fn sketch_point_estimate(sketch: &PrivateSketch, index: u64, combine: Combine) -> Result<f64> {
    if index >= sketch.m {
        return Err(invalid(format!("index {index} outside domain of size {}", sketch.m)));
    }
    let mut row_estimates: Vec<f64> = (0..sketch.depth)
        .map(|r| (sketch.sign(r, index) * sketch.buckets[sketch.bucket(r, index)]) as f64)
        .collect();
    Ok(match combine {
        Combine::Mean => row_estimates.iter().sum::<f64>() / sketch.depth as f64,
        Combine::Median => median(&mut row_estimates),
    })
}
