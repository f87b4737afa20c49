//! Retention analysis: classify samples relative to the full-data model,
//! and compute — exactly, in big-rational arithmetic — the probability that
//! a global positive support vector survives the first cascade layer under
//! random versus class-balanced grouping.
//!
//! Relative to a direct training run, every sample falls in exactly one
//! bucket per class: *noise* (misclassified, y·f(x) < 0), *support vector*
//! (α > 0 and not noise), or *common* (everything else). A group keeps its
//! global positive SVs when it draws at least one of them and either no
//! noise at all or noise of both signs; the probability functions sum the
//! ways to draw such a group, over a uniform random group or a per-class
//! stratified one.

use crate::cascade::{run_cascade_traced, CascadeOptions, CascadePlan};
use crate::dataset::Dataset;
use crate::error::Error;
use crate::solver::{smo_train_detailed, SolverConfig, TrainDetail, SV_THRESHOLD};
use crate::Result;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Probability calculators reject censuses above this population size; the
/// binomial sums stay exact at any size, but beyond ~10⁴ samples their cost
/// (which grows with the product of the SV and noise pool sizes) stops being
/// interactive.
pub const MAX_CENSUS_TOTAL: u64 = 10_000;

/// Per-class sample counts of one training run, plus the group count `m`
/// the retention probabilities are asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetentionCensus {
    /// Positive / negative support vectors.
    pub p_sv: u64,
    pub n_sv: u64,
    /// Positive / negative noise (misclassified samples).
    pub p_noise: u64,
    pub n_noise: u64,
    /// Positive / negative common samples (neither SV nor noise).
    pub p_common: u64,
    pub n_common: u64,
    /// Number of groups the dataset is split into.
    pub m: u64,
}

impl RetentionCensus {
    pub fn pos_total(&self) -> u64 {
        self.p_sv + self.p_noise + self.p_common
    }

    pub fn neg_total(&self) -> u64 {
        self.n_sv + self.n_noise + self.n_common
    }

    pub fn total(&self) -> u64 {
        self.pos_total() + self.neg_total()
    }

    /// Group size t = ⌊T/m⌋, matching the partitioners' remainder rule as
    /// seen by the smallest groups.
    pub fn group_size(&self) -> u64 {
        self.total() / self.m
    }

    /// Positives per balanced group, p = ⌊pT/m⌋.
    pub fn group_pos(&self) -> u64 {
        self.pos_total() / self.m
    }

    /// Negatives per balanced group, n = ⌊nT/m⌋.
    pub fn group_neg(&self) -> u64 {
        self.neg_total() / self.m
    }
}

/// C(n, k) exactly; 0 when k < 0 or k > n.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    // Multiply/divide incrementally; each prefix product of j consecutive
    // integers is divisible by j!, so every division is exact.
    for i in 0..k {
        acc = acc * (n - k + 1 + i) / (i + 1);
    }
    acc
}

/// Buckets every training sample per the taxonomy above. `detail` must come
/// from training on `ds` itself.
pub fn census(ds: &Dataset, detail: &TrainDetail, m: u64) -> Result<RetentionCensus> {
    if detail.alpha.len() != ds.len() || detail.decision.len() != ds.len() {
        return Err(Error::Config(format!(
            "census needs solver state for the same dataset: {} samples but {} alphas / {} decisions",
            ds.len(),
            detail.alpha.len(),
            detail.decision.len()
        )));
    }
    if m == 0 {
        return Err(Error::Infeasible("group count m must be at least 1".into()));
    }
    let mut c = RetentionCensus {
        p_sv: 0,
        n_sv: 0,
        p_noise: 0,
        n_noise: 0,
        p_common: 0,
        n_common: 0,
        m,
    };
    for (i, s) in ds.samples().iter().enumerate() {
        let y = f64::from(s.label());
        let positive = s.label() == 1;
        // Noise before SV: a misclassified sample at the box bound is noise.
        let slot = if y * detail.decision[i] < 0.0 {
            if positive { &mut c.p_noise } else { &mut c.n_noise }
        } else if detail.alpha[i] > SV_THRESHOLD {
            if positive { &mut c.p_sv } else { &mut c.n_sv }
        } else if positive {
            &mut c.p_common
        } else {
            &mut c.n_common
        };
        *slot += 1;
    }
    Ok(c)
}

fn check_census(c: &RetentionCensus) -> Result<()> {
    if c.m == 0 {
        return Err(Error::Infeasible("group count m must be at least 1".into()));
    }
    if c.total() > MAX_CENSUS_TOTAL {
        return Err(Error::Infeasible(format!(
            "population {} exceeds the supported exact-arithmetic limit of {MAX_CENSUS_TOTAL}",
            c.total()
        )));
    }
    if c.group_size() == 0 {
        return Err(Error::Infeasible(format!(
            "{} groups over {} samples leave empty groups",
            c.m,
            c.total()
        )));
    }
    Ok(())
}

fn ratio(num: BigUint, den: BigUint) -> Result<BigRational> {
    if den.is_zero() {
        return Err(Error::Infeasible("empty event space".into()));
    }
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// Probability that one uniformly drawn group of t = ⌊T/m⌋ samples keeps the
/// global positive SVs: it contains at least one positive SV and either no
/// noise at all (case 1) or at least one noise point of each sign (case 2).
/// Each case sums over the ways to draw from the constrained pools, with the
/// unconstrained remainder (common samples and negative SVs) drawn freely.
pub fn retention_prob_random(c: &RetentionCensus) -> Result<BigRational> {
    check_census(c)?;
    let t = c.group_size();
    // Samples that are neither noise nor positive SVs.
    let free = c.p_common + c.n_common + c.n_sv;

    let mut numerator = BigUint::zero();
    // Case 1: t1 ≥ 1 positive SVs, zero noise, rest free.
    for t1 in 1..=c.p_sv.min(t) {
        numerator += binomial(c.p_sv, t1 as i64) * binomial(free, (t - t1) as i64);
    }
    // Case 2: t4 ≥ 1 positive SVs, t5 ≥ 1 positive noise, t6 ≥ 1 negative
    // noise, rest free.
    for t4 in 1..=c.p_sv.min(t) {
        for t5 in 1..=c.p_noise.min(t - t4) {
            for t6 in 1..=c.n_noise.min(t - t4 - t5) {
                numerator += binomial(c.p_sv, t4 as i64)
                    * binomial(c.p_noise, t5 as i64)
                    * binomial(c.n_noise, t6 as i64)
                    * binomial(free, (t - t4 - t5 - t6) as i64);
            }
        }
    }
    ratio(numerator, binomial(c.total(), t as i64))
}

/// Same event as [`retention_prob_random`], for a stratified group holding
/// exactly p = ⌊pT/m⌋ positives and n = ⌊nT/m⌋ negatives, drawn uniformly
/// per class.
pub fn retention_prob_balanced(c: &RetentionCensus) -> Result<BigRational> {
    check_census(c)?;
    let (p, n) = (c.group_pos(), c.group_neg());
    if p == 0 || n == 0 {
        return Err(Error::Infeasible(format!(
            "balanced groups need at least one sample of each class; \
             m = {} over {} positives and {} negatives leaves p = {p}, n = {n}",
            c.m,
            c.pos_total(),
            c.neg_total()
        )));
    }
    let neg_free = c.n_common + c.n_sv;

    // Case 1: zero noise on either side; t1 ≥ 1 positive SVs.
    let mut case1 = BigUint::zero();
    for t1 in 1..=c.p_sv.min(p) {
        case1 += binomial(c.p_sv, t1 as i64) * binomial(c.p_common, (p - t1) as i64);
    }
    case1 *= binomial(neg_free, n as i64);

    // Case 2: ≥ 1 positive SV and ≥ 1 noise point of each sign. The class
    // sides are independent draws, so their counts multiply.
    let mut pos2 = BigUint::zero();
    for t4 in 1..=c.p_sv.min(p) {
        for t5 in 1..=c.p_noise.min(p - t4) {
            pos2 += binomial(c.p_sv, t4 as i64)
                * binomial(c.p_noise, t5 as i64)
                * binomial(c.p_common, (p - t4 - t5) as i64);
        }
    }
    let mut neg2 = BigUint::zero();
    for t6 in 1..=c.n_noise.min(n) {
        neg2 += binomial(c.n_noise, t6 as i64) * binomial(neg_free, (n - t6) as i64);
    }

    let numerator = case1 + pos2 * neg2;
    let denominator = binomial(c.pos_total(), p as i64) * binomial(c.neg_total(), n as i64);
    ratio(numerator, denominator)
}

/// The two grouping strategies' event-space sizes, C(T,t) versus
/// C(pT,p)·C(nT,n), and whether the first strictly exceeds the second.
/// Requires p ≥ 1, n ≥ 1 and p + n = t (the floors must be consistent).
pub fn denominator_inequality(c: &RetentionCensus) -> Result<(BigUint, BigUint, bool)> {
    check_census(c)?;
    let (t, p, n) = (c.group_size(), c.group_pos(), c.group_neg());
    if p == 0 || n == 0 {
        return Err(Error::Infeasible(format!(
            "comparison needs at least one sample of each class per group (p = {p}, n = {n})"
        )));
    }
    if p + n != t {
        return Err(Error::Infeasible(format!(
            "group sizes disagree under m = {}: p + n = {} but t = {t}; \
             pick m dividing the class totals",
            c.m,
            p + n
        )));
    }
    let lhs = binomial(c.total(), t as i64);
    let rhs = binomial(c.pos_total(), p as i64) * binomial(c.neg_total(), n as i64);
    let holds = lhs > rhs;
    Ok((lhs, rhs, holds))
}

/// One cascade run's retention of the global SV set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RetentionRun {
    pub seed: u64,
    /// Fraction of global SVs still in the working set after layer 0's merge.
    pub layer1_fraction: f64,
    /// Fraction of global SVs among the final model's SVs.
    pub final_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct RetentionMeasurement {
    /// Support-vector indices of the direct-training baseline.
    pub global_sv_ids: Vec<usize>,
    pub runs: Vec<RetentionRun>,
}

/// Trains the direct baseline once, then measures — per seed — how much of
/// its SV set survives the first layer and the final model of a cascade.
/// Membership is by sample identity (index in `ds`), tracked through
/// partitioning.
pub fn measure_retention(
    ds: &Dataset,
    plan: &CascadePlan,
    cfg: &SolverConfig,
    seeds: &[u64],
) -> Result<RetentionMeasurement> {
    let (_, detail) = smo_train_detailed(ds, cfg)?;
    if !detail.converged {
        return Err(Error::Training(
            "direct-training baseline did not converge; retention has no reference".into(),
        ));
    }
    let global = detail.sv_indices;
    if global.is_empty() {
        return Err(Error::Training("direct training produced no support vectors".into()));
    }
    let global_set: HashSet<usize> = global.iter().copied().collect();
    let frac = |ids: &[usize]| {
        ids.iter().filter(|i| global_set.contains(i)).count() as f64 / global.len() as f64
    };

    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let (_, _, trace) = run_cascade_traced(ds, plan, cfg, seed, &CascadeOptions::default())?;
        runs.push(RetentionRun {
            seed,
            layer1_fraction: frac(&trace.working_sets[0]),
            final_fraction: frac(&trace.final_sv_ids),
        });
    }
    Ok(RetentionMeasurement { global_sv_ids: global, runs })
}
