//! Python bindings: datasets, the SMO solver, cascade training and the
//! exact retention-probability calculator, exposed as the `bcsvm_py`
//! extension module. Build with `cargo build -p bcsvm-py --release` and
//! rename the produced `libbcsvm_py.so` to `bcsvm_py.so` anywhere on
//! `sys.path` (python/smoke_test.py automates this).

use bcsvm::analysis::{self, RetentionCensus};
use bcsvm::cascade::{CascadeOptions, CascadePlan, LayerReport, MergeKind, PartitionKind};
use bcsvm::{Error, KernelSpec, SolverConfig};
use num_bigint::BigUint;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Training(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn kernel_spec(kernel: &str, gamma: Option<f64>, degree: u32, coef0: f64, dim: u32) -> PyResult<KernelSpec> {
    let gamma = gamma.unwrap_or_else(|| if dim == 0 { 1.0 } else { 1.0 / f64::from(dim) });
    match kernel {
        "linear" => Ok(KernelSpec::Linear),
        "rbf" => Ok(KernelSpec::Rbf { gamma }),
        "poly" => Ok(KernelSpec::Poly { gamma, degree, coef0 }),
        other => Err(PyValueError::new_err(format!(
            "unknown kernel {other:?}; expected \"linear\", \"rbf\" or \"poly\""
        ))),
    }
}

fn partition_kind(partition: &str) -> PyResult<PartitionKind> {
    match partition {
        "random" => Ok(PartitionKind::Random),
        "balanced" => Ok(PartitionKind::Balanced),
        other => Err(PyValueError::new_err(format!(
            "unknown partition {other:?}; expected \"random\" or \"balanced\""
        ))),
    }
}

fn merge_kind(merge: &str) -> PyResult<MergeKind> {
    match merge {
        "pooled" => Ok(MergeKind::Pooled),
        "pairwise" => Ok(MergeKind::Pairwise),
        other => Err(PyValueError::new_err(format!(
            "unknown merge {other:?}; expected \"pooled\" or \"pairwise\""
        ))),
    }
}

fn layer_dict<'py>(py: Python<'py>, report: &LayerReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("layer_index", report.layer_index)?;
    d.set_item("group_count", report.group_count)?;
    d.set_item("subset_sizes", report.subset_sizes.clone())?;
    d.set_item("sv_counts", report.sv_counts.clone())?;
    d.set_item("merged_size", report.merged_size)?;
    d.set_item("total_seconds", report.total_seconds)?;
    Ok(d)
}

fn census_from_parts(psv: u64, nsv: u64, pn: u64, nn: u64, pds: u64, nds: u64, m: u64) -> RetentionCensus {
    RetentionCensus {
        p_sv: psv,
        n_sv: nsv,
        p_noise: pn,
        n_noise: nn,
        p_common: pds,
        n_common: nds,
        m,
    }
}

/// A labelled sparse dataset (+1/−1).
#[pyclass(frozen)]
struct Dataset {
    inner: bcsvm::Dataset,
}

#[pymethods]
impl Dataset {
    /// Parses LIBSVM text. `remap_01` reads 0/1 labels as −1/+1.
    #[staticmethod]
    #[pyo3(signature = (text, remap_01 = false))]
    fn from_libsvm(text: &str, remap_01: bool) -> PyResult<Self> {
        Ok(Dataset { inner: bcsvm::Dataset::parse_libsvm(text, remap_01).map_err(to_py)? })
    }

    /// Builds a dataset from dense rows and ±1 labels.
    #[staticmethod]
    fn from_dense(rows: Vec<Vec<f64>>, labels: Vec<i8>) -> PyResult<Self> {
        if rows.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let samples = rows
            .iter()
            .zip(&labels)
            .map(|(row, &y)| {
                bcsvm::Sample::new(bcsvm::SparseVector::from_dense(row), y).map_err(to_py)
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Dataset { inner: bcsvm::Dataset::new(samples) })
    }

    fn to_libsvm(&self) -> String {
        self.inner.write_libsvm()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> u32 {
        self.inner.dim()
    }

    #[getter]
    fn positive_count(&self) -> usize {
        self.inner.positive_count()
    }

    #[getter]
    fn negative_count(&self) -> usize {
        self.inner.negative_count()
    }

    /// The i-th sample as (entries, label) with 1-based feature indices.
    fn sample(&self, i: usize) -> PyResult<(Vec<(u32, f64)>, i8)> {
        let s = self
            .inner
            .samples()
            .get(i)
            .ok_or_else(|| PyValueError::new_err(format!("index {i} out of range")))?;
        Ok((s.features().entries().to_vec(), s.label()))
    }

    /// Deterministic Fisher–Yates permutation of the samples.
    fn shuffle(&self, seed: u64) -> Dataset {
        Dataset { inner: self.inner.shuffle(seed) }
    }

    /// Splits into `k` contiguous same-size-ish groups after a seeded shuffle.
    fn partition_random(&self, k: usize, seed: u64) -> PyResult<Vec<Dataset>> {
        let parts = self.inner.partition_random(k, seed).map_err(to_py)?;
        Ok(parts.into_iter().map(|inner| Dataset { inner }).collect())
    }

    /// Splits into `k` groups, each matching the full set's class ratio.
    fn partition_balanced(&self, k: usize, seed: u64) -> PyResult<Vec<Dataset>> {
        let parts = self.inner.partition_balanced(k, seed).map_err(to_py)?;
        Ok(parts.into_iter().map(|inner| Dataset { inner }).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} samples, dim {}, {}+/{}-)",
            self.inner.len(),
            self.inner.dim(),
            self.inner.positive_count(),
            self.inner.negative_count()
        )
    }
}

/// A trained kernel SVM.
#[pyclass(frozen)]
struct SvmModel {
    inner: bcsvm::SvmModel,
}

#[pymethods]
impl SvmModel {
    #[getter]
    fn sv_count(&self) -> usize {
        self.inner.sv_count()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.inner.bias()
    }

    /// f(x) = Σ coefᵢ·K(svᵢ, x) + b for a dense feature vector.
    fn decision_value(&self, x: Vec<f64>) -> f64 {
        self.inner.decision_value(&bcsvm::SparseVector::from_dense(&x))
    }

    /// Predicted label (+1 or −1) for a dense feature vector.
    fn predict(&self, x: Vec<f64>) -> i8 {
        self.inner.predict(&bcsvm::SparseVector::from_dense(&x))
    }

    fn accuracy(&self, test: &Dataset) -> PyResult<f64> {
        self.inner.accuracy(&test.inner).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(SvmModel { inner: bcsvm::SvmModel::load(path).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("SvmModel({} SVs, bias {:.6})", self.inner.sv_count(), self.inner.bias())
    }
}

fn solver_config(
    ds: &Dataset,
    kernel: &str,
    gamma: Option<f64>,
    degree: u32,
    coef0: f64,
    cost: f64,
    tol: f64,
) -> PyResult<SolverConfig> {
    Ok(SolverConfig {
        c: cost,
        tol,
        kernel: kernel_spec(kernel, gamma, degree, coef0, ds.inner.dim())?,
        ..SolverConfig::default()
    })
}

/// Trains a single SVM on the whole dataset. `gamma` defaults to 1/dim.
#[pyfunction]
#[pyo3(signature = (ds, kernel = "rbf", gamma = None, degree = 3, coef0 = 0.0, cost = 1.0, tol = 1e-3))]
fn train(
    ds: &Dataset,
    kernel: &str,
    gamma: Option<f64>,
    degree: u32,
    coef0: f64,
    cost: f64,
    tol: f64,
) -> PyResult<SvmModel> {
    let cfg = solver_config(ds, kernel, gamma, degree, coef0, cost, tol)?;
    Ok(SvmModel { inner: bcsvm::smo_train(&ds.inner, &cfg).map_err(to_py)? })
}

/// Cascade training. Returns (model, per-layer report dicts).
#[pyfunction]
#[pyo3(signature = (ds, layers, seed = 0, partition = "balanced", merge = "pooled",
                    kernel = "rbf", gamma = None, degree = 3, coef0 = 0.0, cost = 1.0,
                    tol = 1e-3, workers = None))]
#[allow(clippy::too_many_arguments)]
fn run_cascade<'py>(
    py: Python<'py>,
    ds: &Dataset,
    layers: Vec<usize>,
    seed: u64,
    partition: &str,
    merge: &str,
    kernel: &str,
    gamma: Option<f64>,
    degree: u32,
    coef0: f64,
    cost: f64,
    tol: f64,
    workers: Option<usize>,
) -> PyResult<(SvmModel, Vec<Bound<'py, PyDict>>)> {
    let cfg = solver_config(ds, kernel, gamma, degree, coef0, cost, tol)?;
    let plan = CascadePlan { layers, partition: partition_kind(partition)?, merge: merge_kind(merge)? };
    let opts = CascadeOptions { workers, ..CascadeOptions::default() };
    let (model, reports) =
        bcsvm::cascade::run_cascade_opts(&ds.inner, &plan, &cfg, seed, &opts).map_err(to_py)?;
    let dicts = reports.iter().map(|r| layer_dict(py, r)).collect::<PyResult<Vec<_>>>()?;
    Ok((SvmModel { inner: model }, dicts))
}

/// Exact binomial coefficient C(n, k) as a Python int.
#[pyfunction]
fn binomial(n: u64, k: i64) -> BigUint {
    analysis::binomial(n, k)
}

/// Probability that a random group keeps a global positive SV trainable,
/// as an exact (numerator, denominator) pair plus its float value.
#[pyfunction]
#[pyo3(signature = (psv, nsv, pn, nn, pds, nds, m))]
fn retention_prob_random(
    psv: u64,
    nsv: u64,
    pn: u64,
    nn: u64,
    pds: u64,
    nds: u64,
    m: u64,
) -> PyResult<(BigUint, BigUint, f64)> {
    let c = census_from_parts(psv, nsv, pn, nn, pds, nds, m);
    rational_triple(analysis::retention_prob_random(&c).map_err(to_py)?)
}

/// Same event under class-balanced grouping.
#[pyfunction]
#[pyo3(signature = (psv, nsv, pn, nn, pds, nds, m))]
fn retention_prob_balanced(
    psv: u64,
    nsv: u64,
    pn: u64,
    nn: u64,
    pds: u64,
    nds: u64,
    m: u64,
) -> PyResult<(BigUint, BigUint, f64)> {
    let c = census_from_parts(psv, nsv, pn, nn, pds, nds, m);
    rational_triple(analysis::retention_prob_balanced(&c).map_err(to_py)?)
}

fn rational_triple(r: num_rational::BigRational) -> PyResult<(BigUint, BigUint, f64)> {
    use num_traits::ToPrimitive;
    let num = r.numer().to_biguint().ok_or_else(|| {
        PyRuntimeError::new_err("negative probability numerator; this is a bug")
    })?;
    let den = r.denom().to_biguint().ok_or_else(|| {
        PyRuntimeError::new_err("negative probability denominator; this is a bug")
    })?;
    let value = r.to_f64().unwrap_or(f64::NAN);
    Ok((num, den, value))
}

/// Compares the two grouping strategies' event-space sizes C(T,t) vs
/// C(pT,p)·C(nT,n). Returns (lhs, rhs, strictly_greater).
#[pyfunction]
#[pyo3(signature = (pt, nt, m))]
fn denominator_inequality(pt: u64, nt: u64, m: u64) -> PyResult<(BigUint, BigUint, bool)> {
    let c = census_from_parts(0, 0, 0, 0, pt, nt, m);
    analysis::denominator_inequality(&c).map_err(to_py)
}

/// Trains the direct baseline, then measures per-seed what fraction of its
/// SVs survive the cascade's first merge and its final model.
#[pyfunction]
#[pyo3(signature = (ds, layers, partition, seeds, kernel = "rbf", gamma = None,
                    degree = 3, coef0 = 0.0, cost = 1.0, tol = 1e-3))]
#[allow(clippy::too_many_arguments)]
fn measure_retention<'py>(
    py: Python<'py>,
    ds: &Dataset,
    layers: Vec<usize>,
    partition: &str,
    seeds: Vec<u64>,
    kernel: &str,
    gamma: Option<f64>,
    degree: u32,
    coef0: f64,
    cost: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = solver_config(ds, kernel, gamma, degree, coef0, cost, tol)?;
    let plan = CascadePlan::pooled(layers, partition_kind(partition)?);
    let m = analysis::measure_retention(&ds.inner, &plan, &cfg, &seeds).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("global_sv_ids", m.global_sv_ids)?;
    let runs: Vec<(u64, f64, f64)> =
        m.runs.iter().map(|r| (r.seed, r.layer1_fraction, r.final_fraction)).collect();
    out.set_item("runs", runs)?;
    Ok(out)
}

#[pymodule]
fn bcsvm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<SvmModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(run_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(binomial, m)?)?;
    m.add_function(wrap_pyfunction!(retention_prob_random, m)?)?;
    m.add_function(wrap_pyfunction!(retention_prob_balanced, m)?)?;
    m.add_function(wrap_pyfunction!(denominator_inequality, m)?)?;
    m.add_function(wrap_pyfunction!(measure_retention, m)?)?;
    Ok(())
}
