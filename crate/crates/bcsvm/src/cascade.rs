//! Multi-layer grouped training: partition the working set, train the groups
//! in parallel, keep each group's support vectors, merge, and repeat per the
//! layer plan until a single model remains.
//!
//! Two partitioners are available — uniform random (the classic cascade) and
//! class-balanced — and two merge topologies: pooled (all SV sets concatenate
//! into the next layer's working set) and pairwise (SV sets combine two at a
//! time, halving the group count each layer).

use crate::dataset::{partition_indices_balanced, partition_indices_random, Dataset};
use crate::error::Error;
use crate::rng::layer_seed;
use crate::solver::{smo_train_detailed, SolverConfig, SvmModel};
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Random,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeKind {
    Pooled,
    Pairwise,
}

/// Layer plan: `layers[l]` is the group count of layer `l`. The last entry
/// must be 1 so the run ends in a single model.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadePlan {
    pub layers: Vec<usize>,
    pub partition: PartitionKind,
    pub merge: MergeKind,
}

impl CascadePlan {
    pub fn pooled(layers: Vec<usize>, partition: PartitionKind) -> CascadePlan {
        CascadePlan { layers, partition, merge: MergeKind::Pooled }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("layer plan must not be empty".into()));
        }
        if self.layers.iter().any(|&g| g == 0) {
            return Err(Error::Config("every layer's group count must be at least 1".into()));
        }
        if *self.layers.last().unwrap() != 1 {
            return Err(Error::Config(format!(
                "the last layer must have exactly 1 group to end in a single model, got {:?}",
                self.layers
            )));
        }
        if self.merge == MergeKind::Pairwise {
            for (l, &g) in self.layers.iter().enumerate() {
                if !g.is_power_of_two() {
                    return Err(Error::Config(format!(
                        "pairwise merging needs power-of-two group counts, got {g} at layer {l}"
                    )));
                }
                if l > 0 && self.layers[l - 1] != 2 * g {
                    return Err(Error::Config(format!(
                        "pairwise merging halves the group count each layer; \
                         layer {l} has {g} groups after {}",
                        self.layers[l - 1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// What one layer did: group sizes in, SV counts out, and wall times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer_index: usize,
    pub group_count: usize,
    pub subset_sizes: Vec<usize>,
    pub sv_counts: Vec<usize>,
    /// Size of the working set this layer hands to the next one.
    pub merged_size: usize,
    pub subset_seconds: Vec<f64>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CascadeOptions {
    /// Worker threads for subset training; `None` uses the process default.
    /// Results are identical for every width.
    pub workers: Option<usize>,
    /// Keep going when a subset hits `max_iter` instead of aborting. Off by
    /// default: a silently half-trained subset corrupts SV filtering.
    pub allow_nonconverged: bool,
}

/// Sample identities flowing through a run, as indices into the original
/// dataset: the working set surviving each layer's merge, and the final
/// model's support vectors.
#[derive(Debug, Clone)]
pub struct CascadeTrace {
    pub working_sets: Vec<Vec<usize>>,
    pub final_sv_ids: Vec<usize>,
}

struct SubsetOutcome {
    sv_ids: Vec<usize>,
    model: SvmModel,
    seconds: f64,
    converged: bool,
}

fn train_subset(
    ds: &Dataset,
    ids: &[usize],
    cfg: &SolverConfig,
    layer: usize,
    subset: usize,
) -> Result<SubsetOutcome> {
    let start = Instant::now();
    let sub = ds.select(ids);
    let (model, detail) = smo_train_detailed(&sub, cfg)
        .map_err(|e| Error::Training(format!("layer {layer} group {subset}: {e}")))?;
    let sv_ids: Vec<usize> = detail.sv_indices.iter().map(|&local| ids[local]).collect();
    Ok(SubsetOutcome {
        sv_ids,
        model,
        seconds: start.elapsed().as_secs_f64(),
        converged: detail.converged,
    })
}

/// [`run_cascade`] with explicit worker/abort options.
pub fn run_cascade_opts(
    ds: &Dataset,
    plan: &CascadePlan,
    cfg: &SolverConfig,
    seed: u64,
    opts: &CascadeOptions,
) -> Result<(SvmModel, Vec<LayerReport>)> {
    run_cascade_traced(ds, plan, cfg, seed, opts).map(|(m, r, _)| (m, r))
}

/// Runs the full layer plan and returns the final model and per-layer
/// reports. Group count 1 trains the working set directly (no shuffling), so
/// a `[1]` plan reproduces plain `smo_train` bit for bit.
pub fn run_cascade(
    ds: &Dataset,
    plan: &CascadePlan,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<(SvmModel, Vec<LayerReport>)> {
    run_cascade_opts(ds, plan, cfg, seed, &CascadeOptions::default())
}

/// Classic cascade: random grouping, pooled merge.
pub fn csvm(
    ds: &Dataset,
    layers: &[usize],
    cfg: &SolverConfig,
    seed: u64,
) -> Result<(SvmModel, Vec<LayerReport>)> {
    run_cascade(ds, &CascadePlan::pooled(layers.to_vec(), PartitionKind::Random), cfg, seed)
}

/// Balanced cascade: class-balanced grouping, pooled merge.
pub fn bcsvm(
    ds: &Dataset,
    layers: &[usize],
    cfg: &SolverConfig,
    seed: u64,
) -> Result<(SvmModel, Vec<LayerReport>)> {
    run_cascade(ds, &CascadePlan::pooled(layers.to_vec(), PartitionKind::Balanced), cfg, seed)
}

/// Full-visibility variant: also returns which original samples survived each
/// layer, for retention measurements.
pub fn run_cascade_traced(
    ds: &Dataset,
    plan: &CascadePlan,
    cfg: &SolverConfig,
    seed: u64,
    opts: &CascadeOptions,
) -> Result<(SvmModel, Vec<LayerReport>, CascadeTrace)> {
    plan.validate()?;
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Training("cannot run a cascade on an empty dataset".into()));
    }

    let pool = match opts.workers {
        Some(w) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?,
        ),
        None => None,
    };

    let mut working: Vec<usize> = (0..ds.len()).collect();
    // SV id sets of the previous layer, kept separate for pairwise feeding.
    let mut prev_sv_sets: Vec<Vec<usize>> = Vec::new();
    let mut reports = Vec::with_capacity(plan.layers.len());
    let mut working_sets = Vec::with_capacity(plan.layers.len());
    let mut final_model: Option<SvmModel> = None;
    let mut final_sv_ids = Vec::new();
    let last_layer = plan.layers.len() - 1;

    for (l, &g) in plan.layers.iter().enumerate() {
        let layer_start = Instant::now();

        let subset_ids: Vec<Vec<usize>> = if plan.merge == MergeKind::Pairwise && l > 0 {
            // SV sets combine two-by-two and become this layer's groups
            // directly; no re-partitioning. Disjoint inputs stay disjoint.
            let pairs: Vec<Vec<usize>> = prev_sv_sets
                .chunks(2)
                .map(|pair| pair.concat())
                .collect();
            assert_eq!(pairs.len(), g, "halving plan out of step with SV sets");
            pairs
        } else if g == 1 {
            vec![working.clone()]
        } else {
            let lseed = layer_seed(seed, l as u64);
            let positions = match plan.partition {
                PartitionKind::Random => partition_indices_random(working.len(), g, lseed),
                PartitionKind::Balanced => {
                    let labels: Vec<i8> =
                        working.iter().map(|&i| ds.samples()[i].label()).collect();
                    partition_indices_balanced(&labels, g, lseed)
                }
            }
            .map_err(|e| Error::Partition(format!("layer {l}: {e}")))?;
            positions
                .into_iter()
                .map(|chunk| chunk.into_iter().map(|pos| working[pos]).collect())
                .collect()
        };

        let run = || -> Result<Vec<SubsetOutcome>> {
            subset_ids
                .par_iter()
                .enumerate()
                .map(|(s, ids)| train_subset(ds, ids, cfg, l, s))
                .collect()
        };
        let outcomes = match &pool {
            Some(p) => p.install(run),
            None => run(),
        }?;

        for (s, o) in outcomes.iter().enumerate() {
            if !o.converged && !opts.allow_nonconverged {
                return Err(Error::Training(format!(
                    "layer {l} group {s} hit max_iter without converging; raise max_iter \
                     or allow non-converged subsets explicitly"
                )));
            }
            if l < last_layer {
                let has_pos = o.sv_ids.iter().any(|&i| ds.samples()[i].label() == 1);
                let has_neg = o.sv_ids.iter().any(|&i| ds.samples()[i].label() == -1);
                if !(has_pos && has_neg) {
                    return Err(Error::Training(format!(
                        "layer {l} group {s} produced a single-class support-vector set; \
                         use fewer, larger groups"
                    )));
                }
            }
        }

        let merged: Vec<usize> = outcomes.iter().flat_map(|o| o.sv_ids.clone()).collect();
        reports.push(LayerReport {
            layer_index: l,
            group_count: g,
            subset_sizes: subset_ids.iter().map(Vec::len).collect(),
            sv_counts: outcomes.iter().map(|o| o.sv_ids.len()).collect(),
            merged_size: merged.len(),
            subset_seconds: outcomes.iter().map(|o| o.seconds).collect(),
            total_seconds: layer_start.elapsed().as_secs_f64(),
        });
        working_sets.push(merged.clone());

        if l == last_layer {
            let mut outcomes = outcomes;
            let last = outcomes.pop().expect("final layer trains exactly one group");
            final_sv_ids = last.sv_ids;
            final_model = Some(last.model);
        } else {
            prev_sv_sets = outcomes.into_iter().map(|o| o.sv_ids).collect();
            working = merged;
        }
    }

    let model = final_model.expect("plan validation guarantees a final layer");
    Ok((model, reports, CascadeTrace { working_sets, final_sv_ids }))
}
