//! Kernel functions over sparse vectors and an LRU-bounded cache of kernel
//! matrix rows. The cache stores exact values only — a cached row is bitwise
//! identical to recomputing it — so cache capacity never affects training
//! results, only speed.

use crate::dataset::{Dataset, SparseVector};
use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::rc::Rc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// exp(−gamma·‖a−b‖²)
    Rbf { gamma: f64 },
    /// (gamma·⟨a,b⟩ + coef0)^degree
    Poly { gamma: f64, degree: u32, coef0: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } => {
                if gamma.is_finite() && gamma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("rbf gamma must be positive, got {gamma}")))
                }
            }
            KernelSpec::Poly { gamma, degree, coef0 } => {
                if !(gamma.is_finite() && gamma > 0.0) {
                    Err(Error::Config(format!("poly gamma must be positive, got {gamma}")))
                } else if degree < 1 {
                    Err(Error::Config("poly degree must be at least 1".into()))
                } else if !coef0.is_finite() {
                    Err(Error::Config(format!("poly coef0 must be finite, got {coef0}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn eval(&self, a: &SparseVector, b: &SparseVector) -> f64 {
        self.eval_with_norms(a, b, sq_norm(a), sq_norm(b))
    }

    /// Same value as [`KernelSpec::eval`] but with the squared norms already
    /// known; this is the one code path both the cache and direct evaluation
    /// go through, which keeps them bit-identical.
    fn eval_with_norms(&self, a: &SparseVector, b: &SparseVector, sq_a: f64, sq_b: f64) -> f64 {
        match *self {
            KernelSpec::Linear => dot(a, b),
            KernelSpec::Rbf { gamma } => {
                let d2 = (sq_a + sq_b - 2.0 * dot(a, b)).max(0.0);
                (-gamma * d2).exp()
            }
            KernelSpec::Poly { gamma, degree, coef0 } => {
                (gamma * dot(a, b) + coef0).powi(degree as i32)
            }
        }
    }
}

/// Sparse dot product by index merge.
pub fn dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (xs, ys) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < xs.len() && j < ys.len() {
        match xs[i].0.cmp(&ys[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += xs[i].1 * ys[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

pub fn sq_norm(a: &SparseVector) -> f64 {
    a.entries().iter().map(|&(_, v)| v * v).sum()
}

struct CachedRow {
    values: Rc<[f64]>,
    stamp: u64,
}

/// LRU cache of kernel matrix rows for one dataset. Row `i` holds
/// `K(x_i, x_j)` for every `j`. Single-owner: each solver instance builds its
/// own cache; nothing here is shared across threads.
pub struct KernelCache<'a> {
    spec: KernelSpec,
    ds: &'a Dataset,
    sq: Vec<f64>,
    capacity_bytes: usize,
    rows: HashMap<usize, CachedRow>,
    bytes_used: usize,
    clock: u64,
    hits: u64,
    misses: u64,
}

impl<'a> KernelCache<'a> {
    /// `capacity_bytes = 0` disables storage entirely (every row access
    /// recomputes); that degenerate mode still returns correct rows.
    pub fn new(ds: &'a Dataset, spec: KernelSpec, capacity_bytes: usize) -> KernelCache<'a> {
        let sq = ds.samples().iter().map(|s| sq_norm(s.features())).collect();
        KernelCache {
            spec,
            ds,
            sq,
            capacity_bytes,
            rows: HashMap::new(),
            bytes_used: 0,
            clock: 0,
            hits: 0,
            misses: 0,
        }
    }

    pub fn with_capacity_mb(ds: &'a Dataset, spec: KernelSpec, mb: usize) -> KernelCache<'a> {
        KernelCache::new(ds, spec, mb.saturating_mul(1 << 20))
    }

    fn compute_row(&self, i: usize) -> Rc<[f64]> {
        let samples = self.ds.samples();
        let xi = samples[i].features();
        let sq_i = self.sq[i];
        samples
            .iter()
            .enumerate()
            .map(|(j, s)| self.spec.eval_with_norms(xi, s.features(), sq_i, self.sq[j]))
            .collect()
    }

    /// Full kernel row for sample `i`, cached when capacity allows.
    pub fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.stamp = self.clock;
            self.hits += 1;
            return Rc::clone(&entry.values);
        }
        self.misses += 1;
        let values = self.compute_row(i);
        let row_bytes = values.len() * std::mem::size_of::<f64>();
        if row_bytes <= self.capacity_bytes {
            while self.bytes_used + row_bytes > self.capacity_bytes {
                let oldest = self
                    .rows
                    .iter()
                    .min_by_key(|(_, r)| r.stamp)
                    .map(|(&k, _)| k)
                    .expect("bytes_used > 0 implies a resident row");
                let evicted = self.rows.remove(&oldest).unwrap();
                self.bytes_used -= evicted.values.len() * std::mem::size_of::<f64>();
            }
            self.bytes_used += row_bytes;
            self.rows.insert(i, CachedRow { values: Rc::clone(&values), stamp: self.clock });
        }
        values
    }

    /// Kernel values of sample `i` against each index in `active`.
    pub fn row_for(&mut self, i: usize, active: &[usize]) -> Vec<f64> {
        let full = self.row(i);
        active.iter().map(|&j| full[j]).collect()
    }

    /// K(x_i, x_i), from the precomputed norms where the kernel allows.
    pub fn diag(&self, i: usize) -> f64 {
        let s = self.ds.samples()[i].features();
        self.spec.eval_with_norms(s, s, self.sq[i], self.sq[i])
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn bytes_used(&self) -> usize {
        self.bytes_used
    }

    pub fn capacity_bytes(&self) -> usize {
        self.capacity_bytes
    }
}
