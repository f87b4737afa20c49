//! Deterministic synthetic datasets. Everything here is a pure function of
//! its arguments — the same seed gives the same samples on any platform —
//! which keeps benchmarks and retention experiments reproducible without
//! shipping data files.

use crate::dataset::{Dataset, Sample, SparseVector};
use crate::rng::DetRng;

/// Two 2-D Gaussian blobs centred at (±`gap`, 0), positives first. `flip`
/// mislabels each sample independently with that probability, creating
/// genuine noise points on both sides.
pub fn noisy_blobs(n_pos: usize, n_neg: usize, gap: f64, flip: f64, seed: u64) -> Dataset {
    let mut rng = DetRng::new(seed);
    let samples = (0..(n_pos + n_neg))
        .map(|i| {
            let pos = i < n_pos;
            let cx = if pos { gap } else { -gap };
            let x = cx + rng.gaussian();
            let y = rng.gaussian();
            let mut label: i8 = if pos { 1 } else { -1 };
            if rng.unit_f64() < flip {
                label = -label;
            }
            Sample::new(SparseVector::from_dense(&[x, y]), label).unwrap()
        })
        .collect();
    Dataset::new(samples)
}

/// Two spherical Gaussian clouds in `dim` dimensions with means at
/// ±`sep`/√dim per coordinate, so the class centres sit 2·`sep` apart no
/// matter the dimension and the Bayes error is Φ(−`sep`). With `sep` around
/// 1 the classes overlap heavily and a large share of either class ends up
/// inside the margin — the regime where partition quality actually matters.
/// `flip` adds independent label noise on top.
pub fn gaussian_overlap(
    n_pos: usize,
    n_neg: usize,
    dim: u32,
    sep: f64,
    flip: f64,
    seed: u64,
) -> Dataset {
    let mut rng = DetRng::new(seed);
    let shift = sep / f64::from(dim).sqrt();
    let samples = (0..(n_pos + n_neg))
        .map(|i| {
            let pos = i < n_pos;
            let centre = if pos { shift } else { -shift };
            let coords: Vec<f64> = (0..dim).map(|_| centre + rng.gaussian()).collect();
            let mut label: i8 = if pos { 1 } else { -1 };
            if rng.unit_f64() < flip {
                label = -label;
            }
            Sample::new(SparseVector::from_dense(&coords), label).unwrap()
        })
        .collect();
    Dataset::new(samples)
}

/// A linearly separable set whose maximum-margin solution is known by
/// construction: samples 0 and 1 are positives at (1, ±0.25), sample 2 is a
/// negative at (−1, 0), and every other sample sits in a far cluster with
/// |x| ∈ [3, 6]. The separator is x = 0 with margin 1, so the three planted
/// points are exactly the support vectors — of the full set and of any
/// subset that contains them.
///
/// The far clusters' lateral offsets stay in [−0.2, 0.2], strictly inside
/// the ±0.25 span of the planted positives. That keeps every far point's
/// closest approach to the pos hull between the two planted positives, so a
/// subset that holds both (but not the planted negative) still needs both to
/// support its margin; wider offsets would let the hyperplane tilt and drop
/// one of them.
///
/// Needs `n_pos ≥ 2` and `n_neg ≥ 1`.
pub fn separable(n_pos: usize, n_neg: usize, seed: u64) -> Dataset {
    assert!(n_pos >= 2 && n_neg >= 1, "need room for the planted margin points");
    let mut rng = DetRng::new(seed);
    let mut samples = vec![
        Sample::new(SparseVector::from_dense(&[1.0, 0.25]), 1).unwrap(),
        Sample::new(SparseVector::from_dense(&[1.0, -0.25]), 1).unwrap(),
        Sample::new(SparseVector::from_dense(&[-1.0, 0.0]), -1).unwrap(),
    ];
    for i in 0..(n_pos - 2) + (n_neg - 1) {
        let pos = i < n_pos - 2;
        let x = 3.0 + 3.0 * rng.unit_f64();
        let y = 0.4 * rng.unit_f64() - 0.2;
        let sign = if pos { 1.0 } else { -1.0 };
        samples.push(
            Sample::new(
                SparseVector::from_dense(&[sign * x, y]),
                if pos { 1 } else { -1 },
            )
            .unwrap(),
        );
    }
    Dataset::new(samples)
}

/// Sparse binary features in the style of one-hot-encoded census data:
/// every feature fires with a small base rate, and the first `informative`
/// features fire substantially more often for positives. Useful as an
/// imbalanced high-dimensional stand-in when no real dataset is on disk.
pub fn sparse_binary(
    n_pos: usize,
    n_neg: usize,
    dim: u32,
    informative: u32,
    seed: u64,
) -> Dataset {
    assert!(informative <= dim, "more informative features than features");
    let mut rng = DetRng::new(seed);
    let mut pos_rate = Vec::with_capacity(dim as usize);
    let mut neg_rate = Vec::with_capacity(dim as usize);
    for j in 0..dim {
        let base = 0.03 + 0.17 * rng.unit_f64();
        let lift = if j < informative { 0.25 + 0.25 * rng.unit_f64() } else { 0.0 };
        pos_rate.push((base + lift).min(0.95));
        neg_rate.push(base);
    }
    let samples = (0..(n_pos + n_neg))
        .map(|i| {
            let pos = i < n_pos;
            let rates = if pos { &pos_rate } else { &neg_rate };
            let entries = (0..dim)
                .filter_map(|j| {
                    (rng.unit_f64() < rates[j as usize]).then_some((j + 1, 1.0))
                })
                .collect();
            Sample::new(SparseVector::new(entries).unwrap(), if pos { 1 } else { -1 })
                .unwrap()
        })
        .collect();
    Dataset::with_dim(samples, dim).unwrap()
}
