//! Python bindings. Rationals cross the boundary as "p/q" strings so that
//! nothing is rounded; reports cross as JSON text.

use ghz_esr::model::{census, combination_distribution, detection_probability, Restriction};
use ghz_esr::{
    classify, conditional_probability, enumerate_contexts, enumerate_ghz_microstates, qm_probability,
    reproduce as reproduce_report, search_models, total_probability, verify_ac, verify_dm,
    BuiltinModel, Error, MeasurementContext, MicroState, OutcomeAssignment, PartitionElement,
    SearchSpec, Sign,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn assignment(context: &str, outcomes: Vec<i64>) -> PyResult<OutcomeAssignment> {
    let context: MeasurementContext = context.parse().map_err(to_py)?;
    let signs = outcomes.into_iter().map(Sign::from_value).collect::<Result<Vec<_>, _>>().map_err(to_py)?;
    OutcomeAssignment::new(context, signs).map_err(to_py)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report serializes")
}

/// A finite detection model over the 128 GHZ-compatible states.
#[pyclass(name = "Model", module = "ghz_esr_py", frozen)]
struct PyModel {
    inner: ghz_esr::Model,
}

#[pymethods]
impl PyModel {
    /// One of the built-in models: "M3", "M1" or "M2".
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        let which: BuiltinModel = name.parse().map_err(to_py)?;
        Ok(PyModel { inner: which.build() })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel { inner: ghz_esr::Model::from_json_str(text).map_err(to_py)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    /// Detection probability of a context, optionally restricted to one
    /// partition element (e.g. "I&II&III").
    #[pyo3(signature = (context, element=None))]
    fn detection_probability(&self, context: &str, element: Option<&str>) -> PyResult<String> {
        let context: MeasurementContext = context.parse().map_err(to_py)?;
        let restrict = element
            .map(|e| e.parse::<PartitionElement>().map(Restriction::Element))
            .transpose()
            .map_err(to_py)?;
        Ok(detection_probability(&self.inner, &context, restrict).to_string())
    }

    /// None when the context is never detected.
    fn conditional_probability(&self, context: &str, outcomes: Vec<i64>) -> PyResult<Option<String>> {
        let a = assignment(context, outcomes)?;
        Ok(conditional_probability(&self.inner, &a).ok().map(|r| r.to_string()))
    }

    fn total_probability(&self, context: &str, outcomes: Vec<i64>) -> PyResult<String> {
        let a = assignment(context, outcomes)?;
        Ok(total_probability(&self.inner, &a).to_string())
    }

    /// Verification report as JSON; `check` is "ac" or "dm".
    fn verify(&self, check: &str) -> PyResult<String> {
        match check {
            "ac" => Ok(json(&verify_ac(&self.inner))),
            "dm" => Ok(json(&verify_dm(&self.inner))),
            other => Err(PyValueError::new_err(format!("unknown check {other:?} (expected \"ac\" or \"dm\")"))),
        }
    }

    /// (d-distributions, m-specifications, combinations).
    fn census(&self) -> (usize, usize, usize) {
        let c = census(&self.inner);
        (c.ddistributions, c.mspecifications, c.combinations)
    }

    /// List of (slots, probability, surviving triads); the all-undetected
    /// marker has six "U" slots.
    fn combinations(&self) -> Vec<(Vec<String>, String, usize)> {
        combination_distribution(&self.inner)
            .into_iter()
            .map(|(c, mass)| {
                let slots = match c.tokens() {
                    Some(t) => t.iter().map(|s| s.to_string()).collect(),
                    None => vec!["U".to_string(); 6],
                };
                (slots, mass.to_string(), c.surviving_triads())
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Model({:?})", self.inner.name())
    }

    fn __eq__(&self, other: &PyModel) -> bool {
        self.inner == other.inner
    }
}

/// The 128 GHZ-compatible states as lists of nine signs.
#[pyfunction]
fn states() -> Vec<Vec<i8>> {
    enumerate_ghz_microstates().iter().map(|s| s.values().to_vec()).collect()
}

/// Partition label of a state given as nine signs.
#[pyfunction]
fn partition_element(values: Vec<i64>) -> PyResult<String> {
    let s = MicroState::from_values(&values).map_err(to_py)?;
    Ok(classify(&s).map_err(to_py)?.to_string())
}

/// The 63 measurement contexts in canonical order.
#[pyfunction]
fn contexts() -> Vec<String> {
    enumerate_contexts().iter().map(|c| c.to_string()).collect()
}

#[pyfunction]
#[pyo3(name = "qm_probability")]
fn py_qm_probability(context: &str, outcomes: Vec<i64>) -> PyResult<String> {
    Ok(qm_probability(&assignment(context, outcomes)?).to_string())
}

/// Models satisfying a JSON search spec, in canonical order.
#[pyfunction]
fn search(spec_json: &str) -> PyResult<Vec<PyModel>> {
    let spec = SearchSpec::from_json_str(spec_json).map_err(to_py)?;
    Ok(search_models(&spec).map_err(to_py)?.map(|inner| PyModel { inner }).collect())
}

/// Reproduction report for a built-in model as JSON.
#[pyfunction]
fn reproduce(name: &str) -> PyResult<String> {
    let which: BuiltinModel = name.parse().map_err(to_py)?;
    Ok(json(&reproduce_report(which)))
}

#[pymodule]
fn ghz_esr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(states, m)?)?;
    m.add_function(wrap_pyfunction!(partition_element, m)?)?;
    m.add_function(wrap_pyfunction!(contexts, m)?)?;
    m.add_function(wrap_pyfunction!(py_qm_probability, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
