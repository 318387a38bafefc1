//! Python bindings for `quadcal`.

use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use quadcal::cli::ProfileView;
use quadcal::error::Error;
use quadcal::surd::{self, CfKind, QuadPoly};
use quadcal::verify::{self, MemoSource, ProfileData, TheoremId};
use quadcal::{arith, units};
use serde_json::Value;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvariantViolation(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

/// (P + sqrt(D)) / Q in canonical form.
#[pyclass(name = "QuadSurd", module = "quadcal", frozen, eq, hash)]
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PyQuadSurd(surd::QuadSurd);

#[pymethods]
impl PyQuadSurd {
    #[new]
    fn new(p: BigInt, q: BigInt, d: BigInt) -> PyResult<Self> {
        surd::QuadSurd::new(p, q, d).map(Self).map_err(to_py)
    }

    /// sqrt(n)
    #[staticmethod]
    fn sqrt_of(n: BigInt) -> PyResult<Self> {
        surd::QuadSurd::sqrt_of(n).map(Self).map_err(to_py)
    }

    /// Larger root of a*X^2 + b*X + c.
    #[staticmethod]
    fn from_poly(a: BigInt, b: BigInt, c: BigInt) -> PyResult<Self> {
        let f = QuadPoly::new(a, b, c).map_err(to_py)?;
        Ok(Self(surd::QuadSurd::from_poly(&f)))
    }

    #[getter]
    fn p(&self) -> BigInt {
        self.0.p().clone()
    }

    #[getter]
    fn q(&self) -> BigInt {
        self.0.q().clone()
    }

    #[getter]
    fn d(&self) -> BigInt {
        self.0.d().clone()
    }

    /// (a, b, c) of the primitive minimal polynomial.
    fn poly(&self) -> (BigInt, BigInt, BigInt) {
        let f = self.0.to_poly();
        (f.a, f.b, f.c)
    }

    fn floor(&self) -> BigInt {
        self.0.floor()
    }

    fn is_reduced(&self) -> bool {
        self.0.is_reduced()
    }

    fn is_m_reduced(&self) -> bool {
        self.0.is_m_reduced()
    }

    fn step_plus(&self) -> (BigInt, Self) {
        let (a, next) = self.0.step_plus();
        (a, Self(next))
    }

    fn step_minus(&self) -> (BigInt, Self) {
        let (a, next) = self.0.step_minus();
        (a, Self(next))
    }

    fn neg_inv_conjugate(&self) -> Self {
        Self(self.0.neg_inv_conjugate())
    }

    fn __float__(&self) -> f64 {
        self.0.approx()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("QuadSurd({}, {}, {})", self.0.p(), self.0.q(), self.0.d())
    }
}

/// Continued fraction of `w` as {"kind", "preperiod", "period"}.
#[pyfunction]
#[pyo3(signature = (w, minus = false))]
fn expand<'py>(py: Python<'py>, w: &PyQuadSurd, minus: bool) -> PyResult<Bound<'py, PyAny>> {
    let kind = if minus { CfKind::Minus } else { CfKind::Plus };
    let e = surd::expand(&w.0, kind).map_err(to_py)?;
    serialize(py, &e)
}

/// Full profile of one discriminant, same keys as `quadcal profile --json`.
#[pyfunction]
fn profile<'py>(py: Python<'py>, d: BigInt) -> PyResult<Bound<'py, PyAny>> {
    let data = py.detach(|| ProfileData::compute(&d)).map_err(to_py)?;
    serialize(py, &ProfileView::from(&data))
}

/// (t, u, norm) with eps = (t + u sqrt(D)) / 2.
#[pyfunction]
fn fundamental_unit(d: BigInt) -> PyResult<(BigInt, BigInt, i8)> {
    let e = units::fundamental_unit(&d).map_err(to_py)?;
    Ok((e.t, e.u, e.norm))
}

#[pyfunction]
fn class_number_via_formula(d: BigInt) -> PyResult<u64> {
    units::class_number_via_formula(&d).map_err(to_py)
}

#[pyfunction]
fn kronecker(a: BigInt, n: BigInt) -> i32 {
    arith::kronecker(&a, &n)
}

#[pyfunction]
fn is_prime(n: BigInt) -> PyResult<bool> {
    arith::is_prime(&n).map_err(to_py)
}

/// Run a verify selection; returns {"records", "checked", "passed", "failed", "skipped", "notes"}.
#[pyfunction]
#[pyo3(signature = (theorem_id, max, jobs = 1))]
fn verify_theorem<'py>(py: Python<'py>, theorem_id: &str, max: u64, jobs: usize) -> PyResult<Bound<'py, PyAny>> {
    let ids = TheoremId::parse_selection(theorem_id)
        .ok_or_else(|| PyValueError::new_err(format!("unknown theorem id '{theorem_id}'")))?;
    let report = py
        .detach(|| verify::run(&ids, max, jobs, &MemoSource::new()))
        .map_err(to_py)?;
    let out = serde_json::json!({
        "records": report.records,
        "checked": report.checked(),
        "passed": report.passed(),
        "failed": report.failed(),
        "skipped": report.skipped,
        "notes": report.notes,
    });
    json_to_py(py, &out)
}

/// Conjecture records for all eligible pairs up to `limit`.
#[pyfunction]
#[pyo3(signature = (limit, jobs = 1))]
fn scan_conjecture<'py>(py: Python<'py>, limit: u64, jobs: usize) -> PyResult<Bound<'py, PyAny>> {
    let records = py
        .detach(|| verify::scan_conjecture(limit, &MemoSource::new(), jobs))
        .map_err(to_py)?;
    serialize(py, &records)
}

#[pymodule]
#[pyo3(name = "quadcal")]
pub fn quadcal_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuadSurd>()?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_unit, m)?)?;
    m.add_function(wrap_pyfunction!(class_number_via_formula, m)?)?;
    m.add_function(wrap_pyfunction!(kronecker, m)?)?;
    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(scan_conjecture, m)?)?;
    Ok(())
}
