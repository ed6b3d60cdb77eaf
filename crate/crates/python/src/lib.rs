// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings. Matrices cross the boundary as lists of rows.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cvmbqc::multimode::{self, CompileOptions, CouplingKind};
use cvmbqc::program::MeasurementProgram;
use cvmbqc::sim::{self, GaussianState, MeasurementOutcomePolicy};
use cvmbqc::{single_mode, symplectic};

fn to_py(e: cvmbqc::Error) -> PyErr {
    match e {
        cvmbqc::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

#[pyclass(name = "SymplecticMap", module = "cvmbqc_py", frozen)]
struct PySymplecticMap {
    inner: symplectic::SymplecticMap,
}

#[pymethods]
impl PySymplecticMap {
    #[new]
    #[pyo3(signature = (matrix, displacement=None))]
    fn new(matrix: Vec<Vec<f64>>, displacement: Option<Vec<f64>>) -> PyResult<Self> {
        let m = self::matrix(&matrix)?;
        let d = displacement.map(DVector::from_vec).unwrap_or_else(|| DVector::zeros(m.nrows()));
        symplectic::SymplecticMap::new(m, d).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self { inner: symplectic::SymplecticMap::identity(n) }
    }

    #[staticmethod]
    fn fourier() -> Self {
        Self { inner: symplectic::fourier() }
    }

    #[staticmethod]
    fn squeeze(r: f64) -> Self {
        Self { inner: symplectic::squeeze(r) }
    }

    #[staticmethod]
    fn random(n: usize, seed: u64) -> PyResult<Self> {
        symplectic::random_symplectic(n, seed).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        rows(self.inner.matrix())
    }

    #[getter]
    fn displacement(&self) -> Vec<f64> {
        self.inner.displacement().iter().copied().collect()
    }

    /// `self ∘ other`.
    fn compose(&self, other: &PySymplecticMap) -> PyResult<Self> {
        self.inner.compose(&other.inner).map(|inner| Self { inner }).map_err(to_py)
    }

    fn inverse(&self) -> Self {
        Self { inner: self.inner.inverse() }
    }

    fn max_abs_diff(&self, other: &PySymplecticMap) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("SymplecticMap(modes={})", self.inner.modes())
    }
}

#[pyclass(name = "Program", module = "cvmbqc_py", frozen)]
struct PyProgram {
    inner: MeasurementProgram,
}

#[pymethods]
impl PyProgram {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        MeasurementProgram::from_json(text).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn ancilla_count(&self) -> usize {
        self.inner.graph.ancilla_count()
    }

    /// `(node id, angle)` pairs in schedule order.
    #[getter]
    fn schedule(&self) -> Vec<(usize, f64)> {
        self.inner.schedule.iter().map(|e| (e.node_id, e.angle)).collect()
    }

    #[getter]
    fn target(&self) -> PyResult<PySymplecticMap> {
        self.inner.target().map(|inner| PySymplecticMap { inner }).map_err(to_py)
    }

    /// Runs once; `seed=None` pins every outcome to zero. The input is the
    /// vacuum unless `mean`/`cov` are given.
    #[pyo3(signature = (db, seed=None, mean=None, cov=None))]
    fn run<'py>(
        &self,
        py: Python<'py>,
        db: f64,
        seed: Option<u64>,
        mean: Option<Vec<f64>>,
        cov: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let dim = 2 * self.inner.modes();
        let mean = mean.map(DVector::from_vec).unwrap_or_else(|| DVector::zeros(dim));
        let cov = match cov {
            Some(c) => matrix(&c)?,
            None => GaussianState::vacuum(self.inner.modes()).cov().clone(),
        };
        let input = GaussianState::new(mean, cov).map_err(to_py)?;
        let policy = match seed {
            Some(seed) => MeasurementOutcomePolicy::Sampled { seed },
            None => MeasurementOutcomePolicy::PinnedZero,
        };
        let program = &self.inner;
        let out = py.detach(|| sim::run_program(program, &input, sim::db_to_r(db), policy)).map_err(to_py)?;
        let dict = PyDict::new(py);
        dict.set_item("mean", out.state.mean().iter().copied().collect::<Vec<f64>>())?;
        dict.set_item("cov", rows(out.state.cov()))?;
        let outcomes: Vec<(usize, f64)> = out.outcomes.iter().map(|o| (o.node_id, o.outcome)).collect();
        dict.set_item("outcomes", outcomes)?;
        Ok(dict)
    }

    /// `(effective map error, excess trace)` at `db`.
    #[pyo3(signature = (db=130.0))]
    fn verify(&self, py: Python<'_>, db: f64) -> PyResult<(f64, f64)> {
        let program = &self.inner;
        let (target, effective) = py
            .detach(|| {
                let target = program.target()?;
                sim::extract_effective_map(program, sim::db_to_r(db)).map(|e| (target, e))
            })
            .map_err(to_py)?;
        Ok((effective.error(target.matrix()), effective.excess_trace()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Program(modes={}, ancillas={}, measurements={})",
            self.inner.modes(),
            self.inner.graph.ancilla_count(),
            self.inner.schedule.len()
        )
    }
}

/// Compiles `target`; returns the program and the synthesis report as JSON.
#[pyfunction]
#[pyo3(signature = (target, free_param=None, coupling="qnd"))]
fn compile(
    py: Python<'_>,
    target: &PySymplecticMap,
    free_param: Option<f64>,
    coupling: &str,
) -> PyResult<(PyProgram, String)> {
    let coupling = match coupling {
        "qnd" => CouplingKind::Qnd,
        "teleport" => CouplingKind::Teleport,
        other => return Err(PyValueError::new_err(format!("unknown coupling {other:?}"))),
    };
    let options = CompileOptions { free_param, coupling };
    let map = &target.inner;
    let compiled = py.detach(|| multimode::compile(map, &options)).map_err(to_py)?;
    let report = serde_json::to_string(&compiled.report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((PyProgram { inner: compiled.program }, report))
}

/// `[κ₁, κ₂, κ₃, κ₄]` of a single-mode target.
#[pyfunction]
#[pyo3(signature = (target, kappa1=None))]
fn decompose_four_step(target: &PySymplecticMap, kappa1: Option<f64>) -> PyResult<[f64; 4]> {
    single_mode::decompose_four_step(&target.inner, kappa1).map(|p| p.kappas).map_err(to_py)
}

#[pyfunction]
fn db_to_r(db: f64) -> f64 {
    sim::db_to_r(db)
}

#[pymodule]
fn cvmbqc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymplecticMap>()?;
    m.add_class::<PyProgram>()?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_four_step, m)?)?;
    m.add_function(wrap_pyfunction!(db_to_r, m)?)?;
    Ok(())
}
