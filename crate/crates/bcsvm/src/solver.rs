//! SMO solver for the binary soft-margin kernel SVM, plus the trained model
//! and its JSON serialization.
//!
//! The solver maximizes the standard dual
//!   Σ α_i − ½ ΣΣ α_i α_j y_i y_j K(x_i, x_j),  0 ≤ α_i ≤ C,  Σ α_i y_i = 0
//! by repeatedly picking the maximal violating pair under the first-order
//! working-set rule and solving the two-variable subproblem analytically,
//! until the KKT gap drops to `tol`.

use crate::dataset::{Dataset, Sample, SparseVector};
use crate::error::Error;
use crate::kernel::{KernelCache, KernelSpec};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Dual variables below this are treated as zero when collecting support
/// vectors, so floating-point dust never inflates the SV set handed to the
/// next cascade layer.
pub const SV_THRESHOLD: f64 = 1e-12;

/// Guard for a non-positive-definite two-variable subproblem.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Box constraint C.
    pub c: f64,
    /// KKT violation tolerance at termination.
    pub tol: f64,
    /// Cap on two-variable updates; hitting it flags the model non-converged.
    pub max_iter: u64,
    /// Kernel row cache budget in megabytes (0 disables caching).
    pub cache_mb: usize,
    pub kernel: KernelSpec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 1.0,
            tol: 1e-3,
            max_iter: 10_000_000,
            cache_mb: 100,
            kernel: KernelSpec::Linear,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        self.kernel.validate()
    }
}

/// Trained model: support vectors with signed dual coefficients
/// (`coef_i = y_i·α_i`) and the bias, evaluated as
/// `f(x) = Σ coef_i·K(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    svs: Vec<Sample>,
    coef: Vec<f64>,
    bias: f64,
    kernel: KernelSpec,
    c: f64,
    converged: bool,
}

/// Per-sample solver state exposed for analysis: the census of a training run
/// needs every α_i and every decision value, not just the surviving SVs.
#[derive(Debug, Clone)]
pub struct TrainDetail {
    /// Dual variable per training sample, in dataset order.
    pub alpha: Vec<f64>,
    /// Decision value f(x_i) per training sample.
    pub decision: Vec<f64>,
    /// Indices (into the training dataset) of samples with α above
    /// [`SV_THRESHOLD`].
    pub sv_indices: Vec<usize>,
    /// Two-variable updates performed.
    pub iterations: u64,
    /// Final KKT gap m(α) − M(α).
    pub gap: f64,
    /// Dual objective Σα − ½αᵀQα at termination.
    pub dual_objective: f64,
    pub converged: bool,
}

/// Maximal-violating-pair scan. Returns the argmax over the "up" set and
/// argmin over the "low" set of −y_t·G_t together with those two extrema.
fn select_pair(
    y: &[f64],
    alpha: &[f64],
    grad: &[f64],
    c: f64,
) -> (Option<usize>, Option<usize>, f64, f64) {
    let mut i: Option<usize> = None;
    let mut j: Option<usize> = None;
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..y.len() {
        let v = -y[t] * grad[t];
        let positive = y[t] > 0.0;
        if (positive && alpha[t] < c) || (!positive && alpha[t] > 0.0) {
            if v > m_up {
                m_up = v;
                i = Some(t);
            }
        }
        if (positive && alpha[t] > 0.0) || (!positive && alpha[t] < c) {
            if v < m_low {
                m_low = v;
                j = Some(t);
            }
        }
    }
    (i, j, m_up, m_low)
}

/// Trains and returns the model; see [`smo_train_detailed`] for the variant
/// that also reports per-sample solver state.
pub fn smo_train(ds: &Dataset, cfg: &SolverConfig) -> Result<SvmModel> {
    smo_train_detailed(ds, cfg).map(|(model, _)| model)
}

pub fn smo_train_detailed(ds: &Dataset, cfg: &SolverConfig) -> Result<(SvmModel, TrainDetail)> {
    cfg.validate()?;
    let n = ds.len();
    if ds.positive_count() == 0 || ds.negative_count() == 0 {
        return Err(Error::Training(format!(
            "training needs both classes; got {} positive and {} negative samples",
            ds.positive_count(),
            ds.negative_count()
        )));
    }

    let y: Vec<f64> = ds.samples().iter().map(|s| f64::from(s.label())).collect();
    let mut cache = KernelCache::with_capacity_mb(ds, cfg.kernel, cfg.cache_mb);
    let qdiag: Vec<f64> = (0..n).map(|i| cache.diag(i)).collect();

    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − Σα; at α = 0 this is just −1.
    let mut grad = vec![-1.0; n];
    let mut iterations = 0u64;
    let mut converged = false;

    loop {
        let (i_opt, j_opt, m_up, m_low) = select_pair(&y, &alpha, &grad, cfg.c);
        let (Some(i), Some(j)) = (i_opt, j_opt) else {
            // One side of the feasible set is empty; nothing left to move.
            converged = true;
            break;
        };
        if m_up - m_low <= cfg.tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let row_i = cache.row(i);
        let k_ij = row_i[j];
        let mut quad = qdiag[i] + qdiag[j] - 2.0 * k_ij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let (old_ai, old_aj) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = old_ai - old_aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > cfg.c {
                    alpha[i] = cfg.c;
                    alpha[j] = cfg.c - diff;
                }
            } else if alpha[j] > cfg.c {
                alpha[j] = cfg.c;
                alpha[i] = cfg.c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = old_ai + old_aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > cfg.c {
                if alpha[i] > cfg.c {
                    alpha[i] = cfg.c;
                    alpha[j] = sum - cfg.c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cfg.c {
                if alpha[j] > cfg.c {
                    alpha[j] = cfg.c;
                    alpha[i] = sum - cfg.c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (d_ai, d_aj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        let row_j = cache.row(j);
        for t in 0..n {
            grad[t] += y[i] * y[t] * row_i[t] * d_ai + y[j] * y[t] * row_j[t] * d_aj;
        }
    }

    let (_, _, m_up, m_low) = select_pair(&y, &alpha, &grad, cfg.c);
    let gap = m_up - m_low;

    // Bias: mean of y_i − (f(x_i) − b) over free SVs; the admissible-interval
    // midpoint when every SV sits on a box bound. Both derive from the
    // identity f(x_i) − b = y_i·(G_i + 1).
    let mut bias_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        if alpha[t] > SV_THRESHOLD && alpha[t] < cfg.c - SV_THRESHOLD {
            bias_sum += -y[t] * grad[t];
            free += 1;
        }
    }
    let bias = if free > 0 {
        bias_sum / free as f64
    } else {
        (m_up + m_low) / 2.0
    };

    let decision: Vec<f64> = (0..n).map(|t| y[t] * (grad[t] + 1.0) + bias).collect();
    let sv_indices: Vec<usize> = (0..n).filter(|&t| alpha[t] > SV_THRESHOLD).collect();
    let dual_objective: f64 =
        (0..n).map(|t| alpha[t] - 0.5 * alpha[t] * (grad[t] + 1.0)).sum();

    let svs: Vec<Sample> = sv_indices.iter().map(|&t| ds.samples()[t].clone()).collect();
    let coef: Vec<f64> = sv_indices.iter().map(|&t| y[t] * alpha[t]).collect();

    let model = SvmModel { svs, coef, bias, kernel: cfg.kernel, c: cfg.c, converged };
    let detail = TrainDetail {
        alpha,
        decision,
        sv_indices,
        iterations,
        gap,
        dual_objective,
        converged,
    };
    Ok((model, detail))
}

impl SvmModel {
    /// Assembles a model directly from parts, validating the invariants the
    /// solver guarantees (matching lengths, ±1 labels, nonzero coefficients
    /// whose sign equals the label, |coef| ≤ C).
    pub fn from_parts(
        svs: Vec<Sample>,
        coef: Vec<f64>,
        bias: f64,
        kernel: KernelSpec,
        c: f64,
        converged: bool,
    ) -> Result<SvmModel> {
        kernel.validate()?;
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {c}")));
        }
        if svs.len() != coef.len() {
            return Err(Error::Config(format!(
                "{} support vectors but {} coefficients",
                svs.len(),
                coef.len()
            )));
        }
        for (s, &w) in svs.iter().zip(&coef) {
            if w == 0.0 || !w.is_finite() {
                return Err(Error::Config(format!("coefficient {w} is not a nonzero real")));
            }
            if w.abs() > c * (1.0 + 1e-12) {
                return Err(Error::Config(format!("|coef| = {} exceeds C = {c}", w.abs())));
            }
            if (w > 0.0) != (s.label() == 1) {
                return Err(Error::Config(
                    "coefficient sign must match the support vector's label".into(),
                ));
            }
        }
        Ok(SvmModel { svs, coef, bias, kernel, c, converged })
    }

    pub fn svs(&self) -> &[Sample] {
        &self.svs
    }

    pub fn coef(&self) -> &[f64] {
        &self.coef
    }

    pub fn sv_count(&self) -> usize {
        self.svs.len()
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// Functional margin f(x) = Σ coef_i·K(sv_i, x) + bias.
    pub fn decision_value(&self, x: &SparseVector) -> f64 {
        self.svs
            .iter()
            .zip(&self.coef)
            .map(|(s, &w)| w * self.kernel.eval(s.features(), x))
            .sum::<f64>()
            + self.bias
    }

    /// sign(f(x)) with f(x) = 0 mapped to +1.
    pub fn predict(&self, x: &SparseVector) -> i8 {
        if self.decision_value(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    /// Fraction of `test` samples whose prediction matches their label.
    pub fn accuracy(&self, test: &Dataset) -> Result<f64> {
        if test.is_empty() {
            return Err(Error::Config("accuracy requires a nonempty test set".into()));
        }
        let correct = test
            .samples()
            .iter()
            .filter(|s| self.predict(s.features()) == s.label())
            .count();
        Ok(correct as f64 / test.len() as f64)
    }

    /// Self-describing JSON document. Floats serialize in shortest
    /// round-trip decimal form, so `from_json(to_json(m))` reproduces every
    /// coefficient bit-for-bit.
    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            kernel: self.kernel,
            c: self.c,
            bias: self.bias,
            converged: self.converged,
            svs: self
                .svs
                .iter()
                .zip(&self.coef)
                .map(|(s, &w)| SvDoc {
                    label: s.label(),
                    coef: w,
                    features: s.features().entries().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<SvmModel> {
        let doc: ModelDoc = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), msg: format!("model JSON: {e}") })?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Config(format!(
                "not a model file (format {:?}, expected {MODEL_FORMAT:?})",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Config(format!("unsupported model version {}", doc.version)));
        }
        let mut svs = Vec::with_capacity(doc.svs.len());
        let mut coef = Vec::with_capacity(doc.svs.len());
        for sv in doc.svs {
            svs.push(Sample::new(SparseVector::new(sv.features)?, sv.label)?);
            coef.push(sv.coef);
        }
        SvmModel::from_parts(svs, coef, doc.bias, doc.kernel, doc.c, doc.converged)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<SvmModel> {
        SvmModel::from_json(&std::fs::read_to_string(path)?)
    }
}

const MODEL_FORMAT: &str = "bcsvm-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u32,
    kernel: KernelSpec,
    c: f64,
    bias: f64,
    converged: bool,
    svs: Vec<SvDoc>,
}

#[derive(Serialize, Deserialize)]
struct SvDoc {
    label: i8,
    coef: f64,
    features: Vec<(u32, f64)>,
}
