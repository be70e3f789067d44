//! Python bindings for the bornlab laboratory: the main assignment
//! evaluators, exact fine-graining, frequency analysis, property checks, and
//! scenario execution.

use std::str::FromStr;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use bornlab::assignments::{Assignment, State};
use bornlab::exact::{parse_rational, ProbabilityTag, QuadRational as QuadInner};
use bornlab::linalg::{CMat, CVec, HermitianOperator};
use bornlab::properties::{build_cell, build_property_matrix, LabConfig, Property};

fn err(e: bornlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_cvec(entries: Vec<Complex64>) -> PyResult<CVec> {
    CVec::new(entries).map_err(err)
}

fn to_unit(entries: Vec<Complex64>) -> PyResult<CVec> {
    CVec::unit(entries).map_err(err)
}

fn to_operator(rows: Vec<Vec<Complex64>>) -> PyResult<HermitianOperator> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("operator must be a nonempty square matrix"));
    }
    let m = CMat::from_fn(d, d, |i, j| rows[i][j]);
    HermitianOperator::new(m).map_err(err)
}

fn to_tags(texts: Vec<String>) -> PyResult<Vec<ProbabilityTag>> {
    texts.iter().map(|t| ProbabilityTag::parse(t).map_err(err)).collect()
}

/// Exact element a + b*sqrt(2) of the quadratic field.
#[pyclass(name = "QuadRational", skip_from_py_object)]
#[derive(Clone)]
struct PyQuadRational {
    inner: QuadInner,
}

#[pymethods]
impl PyQuadRational {
    /// Parses `p/q`, `p/q + r/s*sqrt2`, or `sqrt2`.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self { inner: QuadInner::from_str(text).map_err(err)? })
    }

    #[staticmethod]
    fn sqrt2() -> Self {
        Self { inner: QuadInner::sqrt2() }
    }

    fn __add__(&self, other: &PyQuadRational) -> Self {
        Self { inner: &self.inner + &other.inner }
    }

    fn __sub__(&self, other: &PyQuadRational) -> Self {
        Self { inner: &self.inner - &other.inner }
    }

    /// Exact scaling by a rational written as `p/q`.
    fn scale(&self, q: &str) -> PyResult<Self> {
        let q = parse_rational(q).map_err(err)?;
        Ok(Self { inner: self.inner.scale(&q) })
    }

    fn to_float(&self) -> f64 {
        self.inner.to_f64()
    }

    fn is_rational(&self) -> bool {
        self.inner.is_rational()
    }

    fn __eq__(&self, other: &PyQuadRational) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("QuadRational({})", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// Tr[rho A] for a pure state vector and an effect matrix.
#[pyfunction]
fn born_probability(state: Vec<Complex64>, effect: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let psi = State::pure(to_unit(state)?).map_err(err)?;
    let a = to_operator(effect)?;
    bornlab::assignments::born_eval(&psi, &a).map_err(err)
}

/// (Tr[A]/d)^2.
#[pyfunction]
fn trace_squared(effect: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let a = to_operator(effect)?;
    bornlab::assignments::trace_squared_eval(&a).map_err(err)
}

/// Quartic-ratio outcome weights of a two-dimensional state over the
/// computational basis.
#[pyfunction]
fn deutsch_quartic_weights(state: Vec<Complex64>) -> PyResult<Vec<f64>> {
    if state.len() != 2 {
        return Err(PyValueError::new_err("the quartic rule is defined for dimension two"));
    }
    let psi = State::pure(to_unit(state)?).map_err(err)?;
    let basis = bornlab::linalg::computational_context(2).map_err(err)?;
    bornlab::assignments::quartic_weights(&psi, &basis).map_err(err)
}

/// Patch-rule value of one tagged outcome; tags use `p/q` / `a+b*sqrt2`.
#[pyfunction]
fn zurek_patch(tags: Vec<String>, index: usize) -> PyResult<f64> {
    let tags = to_tags(tags)?;
    bornlab::assignments::zurek_patch_eval(&tags, index).map_err(err)
}

/// Hemisphere step frame function of a two-dimensional unit vector.
#[pyfunction]
fn bloch_hemisphere(state: Vec<Complex64>) -> PyResult<f64> {
    let x = to_cvec(state)?;
    bornlab::assignments::bloch_hemisphere_eval(&x).map_err(err)
}

/// Exactly additive two-slope function; returns (exact string, float).
#[pyfunction]
fn two_slope(x: &str, c1: &str, c2: &str) -> PyResult<(String, f64)> {
    let x = QuadInner::from_str(x).map_err(err)?;
    let c1 = parse_rational(c1).map_err(err)?;
    let c2 = parse_rational(c2).map_err(err)?;
    let (exact, real) = bornlab::assignments::two_slope_report(&x, &c1, &c2);
    Ok((exact.to_string(), real))
}

/// Swap-symmetry outcome probabilities (all `1/n`) as exact strings, after
/// the rank-n uniqueness check.
#[pyfunction]
fn swap_probabilities(n: usize) -> PyResult<Vec<String>> {
    let d = bornlab::derivations::swap_derivation(n).map_err(err)?;
    Ok(d.probabilities.iter().map(|p| p.to_string()).collect())
}

/// Exact fine-grained weights (m/n, (n-m)/n) as strings.
#[pyfunction]
fn fine_grain(m: u64, n: u64) -> PyResult<(String, String)> {
    let (a, b) = bornlab::derivations::fine_grain(m as usize, n as usize).map_err(err)?;
    Ok((a.to_string(), b.to_string()))
}

/// Multiplicative conditional chain value, as an exact string.
#[pyfunction]
fn zurek_chain(m: u64, n: u64) -> PyResult<String> {
    Ok(bornlab::derivations::zurek_chain(m as usize, n as usize).map_err(err)?.to_string())
}

/// (equal-amplitude residual, unequal-amplitude control residual) of the
/// matched swap pair on an n-branch correlated state.
#[pyfunction]
fn envariance_residual(n: usize) -> PyResult<(f64, f64)> {
    if n < 2 {
        return Err(PyValueError::new_err("need at least two branches"));
    }
    let equal = bornlab::derivations::BipartiteState::equal_amplitude(n).map_err(err)?;
    let u = bornlab::derivations::swap_unitary(n, 0, 1).map_err(err)?;
    let r_equal = bornlab::derivations::envariance_check(&equal, &u, &u).map_err(err)?;
    let norm: f64 = (1..=n).map(|i| i as f64).sum();
    let amps: Vec<f64> = (1..=n).map(|i| (i as f64 / norm).sqrt()).collect();
    let control = bornlab::derivations::BipartiteState::correlated(&amps).map_err(err)?;
    let r_control = bornlab::derivations::envariance_check(&control, &u, &u).map_err(err)?;
    Ok((r_equal, r_control))
}

/// |<x1|x2>| * |1 - <E1|E2>|, the obstruction to an entangling unitary.
#[pyfunction]
fn orthogonality_witness(
    x1: Vec<Complex64>,
    x2: Vec<Complex64>,
    e0: Vec<Complex64>,
    e1: Vec<Complex64>,
    e2: Vec<Complex64>,
) -> PyResult<f64> {
    bornlab::derivations::orthogonality_witness(
        &to_cvec(x1)?,
        &to_cvec(x2)?,
        &to_cvec(e0)?,
        &to_cvec(e1)?,
        &to_cvec(e2)?,
    )
    .map_err(err)
}

/// Deviation norm of the frequency operator on N copies; equals
/// sqrt(p(1-p)/N).
#[pyfunction]
fn frequency_deviation(p: f64, copies: u64) -> PyResult<f64> {
    let spec = bornlab::frequency::FrequencySpec::new(vec![p, 1.0 - p], 0, copies).map_err(err)?;
    Ok(bornlab::frequency::frequency_deviation_norm(&spec))
}

/// Brute-force deviation norm on the expanded d^N product space.
#[pyfunction]
fn frequency_bruteforce(state: Vec<Complex64>, target: usize, copies: u32) -> PyResult<f64> {
    let psi = to_unit(state)?;
    bornlab::frequency::frequency_apply_bruteforce(&psi, target, copies).map_err(err)
}

/// Frequency variance at N copies under (single-state, mixture-of-runs)
/// readings of a two-component mixture.
#[pyfunction]
fn mixed_variance(weights: Vec<f64>, qvalues: Vec<f64>, copies: u64) -> PyResult<(f64, f64)> {
    let grid = [copies, copies * 2, copies * 4, copies * 8];
    let gap = bornlab::frequency::mixed_variance_gap(&weights, &qvalues, &grid).map_err(err)?;
    Ok((gap.iid_series.points[0].1, gap.mixture_series.points[0].1))
}

/// Haar-distributed unitary as a nested list, deterministic in the seed.
#[pyfunction]
fn haar_unitary(dim: usize, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let u = bornlab::linalg::haar_random_unitary(dim, seed).map_err(err)?;
    Ok((0..dim).map(|i| (0..dim).map(|j| u[(i, j)]).collect()).collect())
}

/// One property verdict as a JSON string.
#[pyfunction]
#[pyo3(signature = (assignment, property, dims=vec![2, 3, 4, 5], trials=60, tol=1e-9, seed=0))]
fn check_property(
    assignment: &str,
    property: &str,
    dims: Vec<usize>,
    trials: u32,
    tol: f64,
    seed: u64,
) -> PyResult<String> {
    let a = Assignment::from_name(assignment).map_err(err)?;
    let p = Property::from_name(property).map_err(err)?;
    let verdict = build_cell(&a, p, &dims, trials, tol, seed);
    serde_json::to_string_pretty(&verdict).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// The full assignments x properties matrix as a JSON string.
#[pyfunction]
#[pyo3(signature = (assignments, properties, dims=vec![2, 3, 4, 5], trials=60, seed=0))]
fn property_matrix_json(
    assignments: Vec<String>,
    properties: Vec<String>,
    dims: Vec<usize>,
    trials: u32,
    seed: u64,
) -> PyResult<String> {
    let assignments = assignments
        .iter()
        .map(|n| Assignment::from_name(n))
        .collect::<bornlab::Result<Vec<_>>>()
        .map_err(err)?;
    let properties = properties
        .iter()
        .map(|n| Property::from_name(n))
        .collect::<bornlab::Result<Vec<_>>>()
        .map_err(err)?;
    let cfg = LabConfig { dims, trials, tol: 1e-9, seed };
    let matrix = build_property_matrix(&assignments, &properties, &cfg);
    serde_json::to_string_pretty(&matrix).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs a scenario file and writes the report bundle; returns the exit code
/// (0 completion, 1 expectation mismatch).
#[pyfunction]
#[pyo3(signature = (path, out_dir, jobs=0))]
fn run_scenario_file(path: &str, out_dir: &str, jobs: usize) -> PyResult<i32> {
    let text = std::fs::read_to_string(path).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let spec = bornlab::scenario::parse_scenario(&text).map_err(err)?;
    let (_, code) =
        bornlab::runner::execute(&spec, std::path::Path::new(out_dir), jobs, false).map_err(err)?;
    Ok(code)
}

/// Alphabetized listing of assignment, property, and harness identifiers.
#[pyfunction]
fn list_catalog() -> String {
    bornlab::runner::list_catalog()
}

#[pymodule]
fn bornlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuadRational>()?;
    m.add_function(wrap_pyfunction!(born_probability, m)?)?;
    m.add_function(wrap_pyfunction!(trace_squared, m)?)?;
    m.add_function(wrap_pyfunction!(deutsch_quartic_weights, m)?)?;
    m.add_function(wrap_pyfunction!(zurek_patch, m)?)?;
    m.add_function(wrap_pyfunction!(bloch_hemisphere, m)?)?;
    m.add_function(wrap_pyfunction!(two_slope, m)?)?;
    m.add_function(wrap_pyfunction!(swap_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(fine_grain, m)?)?;
    m.add_function(wrap_pyfunction!(zurek_chain, m)?)?;
    m.add_function(wrap_pyfunction!(envariance_residual, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonality_witness, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_variance, m)?)?;
    m.add_function(wrap_pyfunction!(haar_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(check_property, m)?)?;
    m.add_function(wrap_pyfunction!(property_matrix_json, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario_file, m)?)?;
    m.add_function(wrap_pyfunction!(list_catalog, m)?)?;
    m.add("__version__", bornlab::ARTIFACT_VERSION)?;
    Ok(())
}
