//! Sparse labeled datasets: LIBSVM text I/O, seeded shuffling, and the two
//! grouping strategies the cascade builds on (uniform random and
//! class-balanced partitioning).

use crate::error::Error;
use crate::rng::{shuffled_indices, DetRng};
use crate::Result;
use std::fmt::Write as _;

/// Sparse feature vector: `(index, value)` pairs with 1-based, strictly
/// increasing indices. Zero values are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds a vector from `(index, value)` pairs. Explicit zeros are
    /// dropped; indices must be ≥ 1 and strictly increasing.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        let mut last = 0u32;
        for &(idx, _) in &entries {
            if idx == 0 {
                return Err(Error::Config("feature indices are 1-based; got 0".into()));
            }
            if idx <= last {
                return Err(Error::Config(format!(
                    "feature indices must be strictly increasing; got {idx} after {last}"
                )));
            }
            last = idx;
        }
        Ok(SparseVector { entries: entries.into_iter().filter(|&(_, v)| v != 0.0).collect() })
    }

    /// Dense slice to sparse form; `values[0]` becomes feature index 1.
    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v != 0.0)
                .map(|(i, &v)| (i as u32 + 1, v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    /// Highest feature index present (0 for the empty vector).
    pub fn max_index(&self) -> u32 {
        self.entries.last().map_or(0, |&(i, _)| i)
    }
}

/// One labeled training sample; labels are exactly +1 or −1.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    features: SparseVector,
    label: i8,
}

impl Sample {
    pub fn new(features: SparseVector, label: i8) -> Result<Self> {
        if label != 1 && label != -1 {
            return Err(Error::Config(format!("label must be +1 or -1, got {label}")));
        }
        Ok(Sample { features, label })
    }

    pub fn features(&self) -> &SparseVector {
        &self.features
    }

    pub fn label(&self) -> i8 {
        self.label
    }
}

/// An ordered collection of samples plus the feature dimensionality (maximum
/// feature index observed, unless overridden upward).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: u32,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        let dim = samples.iter().map(|s| s.features.max_index()).max().unwrap_or(0);
        Dataset { samples, dim }
    }

    /// Like [`Dataset::new`] but with an explicit dimensionality, which must
    /// cover every stored feature index.
    pub fn with_dim(samples: Vec<Sample>, dim: u32) -> Result<Self> {
        let seen = samples.iter().map(|s| s.features.max_index()).max().unwrap_or(0);
        if dim < seen {
            return Err(Error::Config(format!(
                "dim override {dim} is below the maximum feature index {seen}"
            )));
        }
        Ok(Dataset { samples, dim })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn positive_count(&self) -> usize {
        self.samples.iter().filter(|s| s.label == 1).count()
    }

    pub fn negative_count(&self) -> usize {
        self.len() - self.positive_count()
    }

    pub fn labels(&self) -> Vec<i8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// New dataset holding the samples at `ids`, in that order. The original
    /// dimensionality is kept so subset models stay comparable.
    pub fn select(&self, ids: &[usize]) -> Dataset {
        Dataset { samples: ids.iter().map(|&i| self.samples[i].clone()).collect(), dim: self.dim }
    }

    /// Parses LIBSVM sparse text: one `<label> <index>:<value> ...` sample per
    /// line. Labels must read as +1/−1; with `remap_zero_one`, 0/1-labeled
    /// files are accepted as −1/+1. Empty lines are skipped, explicit zero
    /// values dropped, and the reported dim is the maximum index actually
    /// seen in the data.
    pub fn parse_libsvm(text: &str, remap_zero_one: bool) -> Result<Dataset> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_num = lineno + 1;
            let mut toks = line.split_whitespace();
            let Some(label_tok) = toks.next() else { continue };

            let label = match label_tok.parse::<f64>() {
                Ok(v) if v == 1.0 => 1i8,
                Ok(v) if v == -1.0 => -1i8,
                Ok(v) if v == 0.0 && remap_zero_one => -1i8,
                _ => return Err(Error::Label { line: line_num, found: label_tok.to_string() }),
            };

            let mut entries = Vec::new();
            let mut last_idx = 0u32;
            for tok in toks {
                let Some((is, vs)) = tok.split_once(':') else {
                    return Err(Error::Parse {
                        line: line_num,
                        msg: format!("expected index:value, got {tok:?}"),
                    });
                };
                let idx: u32 = is.parse().map_err(|_| Error::Parse {
                    line: line_num,
                    msg: format!("bad feature index {is:?}"),
                })?;
                if idx == 0 {
                    return Err(Error::Parse {
                        line: line_num,
                        msg: "feature indices are 1-based; got 0".into(),
                    });
                }
                if idx <= last_idx {
                    return Err(Error::Parse {
                        line: line_num,
                        msg: format!("feature index {idx} not increasing (previous {last_idx})"),
                    });
                }
                last_idx = idx;
                let val: f64 = vs.parse().map_err(|_| Error::Parse {
                    line: line_num,
                    msg: format!("bad feature value {vs:?}"),
                })?;
                if val != 0.0 {
                    entries.push((idx, val));
                }
            }
            samples.push(Sample { features: SparseVector { entries }, label });
        }
        Ok(Dataset::new(samples))
    }

    /// Serializes to LIBSVM text. Values print in shortest round-trip form,
    /// so `parse_libsvm(write_libsvm(ds))` reproduces `ds` exactly.
    pub fn write_libsvm(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(if s.label == 1 { "+1" } else { "-1" });
            for &(idx, val) in s.features.entries() {
                let _ = write!(out, " {idx}:{val}");
            }
            out.push('\n');
        }
        out
    }

    /// Seeded Fisher–Yates permutation of the samples (ChaCha8 stream, so the
    /// result is identical on every platform).
    pub fn shuffle(&self, seed: u64) -> Dataset {
        self.select(&shuffled_indices(self.len(), seed))
    }

    /// Order-stable split into (positives, negatives).
    pub fn split_by_class(&self) -> (Dataset, Dataset) {
        let (pos, neg): (Vec<_>, Vec<_>) =
            self.samples.iter().cloned().partition(|s| s.label == 1);
        (
            Dataset { samples: pos, dim: self.dim },
            Dataset { samples: neg, dim: self.dim },
        )
    }

    /// Random grouping: shuffle with `seed`, then cut into `k` contiguous
    /// parts whose sizes differ by at most one (larger parts first).
    pub fn partition_random(&self, k: usize, seed: u64) -> Result<Vec<Dataset>> {
        Ok(partition_indices_random(self.len(), k, seed)?
            .iter()
            .map(|ids| self.select(ids))
            .collect())
    }

    /// Class-balanced grouping: each class is shuffled with `seed` and dealt
    /// into `k` parts (per-class sizes differing by at most one), so every
    /// part mirrors the full dataset's class ratio as closely as integer
    /// division allows.
    pub fn partition_balanced(&self, k: usize, seed: u64) -> Result<Vec<Dataset>> {
        Ok(partition_indices_balanced(&self.labels(), k, seed)?
            .iter()
            .map(|ids| self.select(ids))
            .collect())
    }
}

/// Part sizes for splitting `n` items into `k` groups: remainders go to the
/// lowest-indexed groups.
fn chunk_sizes(n: usize, k: usize) -> Vec<usize> {
    let (q, r) = (n / k, n % k);
    (0..k).map(|i| q + usize::from(i < r)).collect()
}

fn take_chunks(ids: Vec<usize>, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(k);
    let mut rest = ids.as_slice();
    for size in chunk_sizes(ids.len(), k) {
        let (chunk, tail) = rest.split_at(size);
        out.push(chunk.to_vec());
        rest = tail;
    }
    out
}

/// Index-level form of [`Dataset::partition_random`], used where subset
/// members must stay traceable to their position in the original dataset.
pub fn partition_indices_random(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::Partition("group count must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Partition(format!("cannot split {n} samples into {k} groups")));
    }
    Ok(take_chunks(shuffled_indices(n, seed), k))
}

/// Index-level form of [`Dataset::partition_balanced`]. Both classes are
/// shuffled by one generator (positives first), then dealt into `k`
/// contiguous per-class chunks; group `i` is its positive chunk followed by
/// its negative chunk.
pub fn partition_indices_balanced(labels: &[i8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::Partition("group count must be at least 1".into()));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        if y == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    if pos.len() < k || neg.len() < k {
        return Err(Error::Partition(format!(
            "balanced grouping into {k} needs at least {k} samples of each class \
             (have {} positive, {} negative)",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = DetRng::new(seed);
    rng.shuffle(&mut pos);
    rng.shuffle(&mut neg);
    let pos_chunks = take_chunks(pos, k);
    let neg_chunks = take_chunks(neg, k);
    Ok(pos_chunks
        .into_iter()
        .zip(neg_chunks)
        .map(|(mut p, mut n)| {
            p.append(&mut n);
            p
        })
        .collect())
}
