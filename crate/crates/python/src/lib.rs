//! Python bindings: diagrams, builders, rewriting, exploration and checking.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use zxforge::circuits;
use zxforge::explore::{Identity, Limits, State, StateSpace};
use zxforge::ltl;
use zxforge::matcher;
use zxforge::rule::{builtin_rule, HVariant};
use zxforge::tensor::{equal_up_to_scalar, tensor as dense};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Diagram", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDiagram(zxforge::Diagram);

#[pymethods]
impl PyDiagram {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        zxforge::Diagram::from_json(text).map(PyDiagram).map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn normalize(&self) -> Self {
        PyDiagram(self.0.normalize())
    }

    /// Hex string identifying the isomorphism class.
    fn canonical_key(&self) -> String {
        zxforge::canonical_key(&self.0.normalize()).as_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    #[getter]
    fn spiders(&self) -> usize {
        self.0.spider_count()
    }

    #[getter]
    fn hboxes(&self) -> usize {
        self.0.hbox_count()
    }

    #[getter]
    fn boundaries(&self) -> usize {
        self.0.boundary_count()
    }

    #[getter]
    fn wires(&self) -> usize {
        self.0.wire_count()
    }

    fn __repr__(&self) -> String {
        format!("Diagram({})", self.0.summary())
    }
}

#[pyfunction]
fn ghz(n: usize) -> PyResult<PyDiagram> {
    circuits::ghz(n).map(PyDiagram).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (a=0, b=0))]
fn teleportation(a: u8, b: u8) -> PyResult<PyDiagram> {
    circuits::teleportation(a, b).map(PyDiagram).map_err(value_err)
}

#[pyfunction]
fn qft2() -> PyDiagram {
    PyDiagram(circuits::qft2())
}

#[pyfunction]
fn kn_hadamard(n: usize) -> PyDiagram {
    PyDiagram(circuits::kn_hadamard(n))
}

#[pyfunction]
fn pauli_pushing() -> PyDiagram {
    PyDiagram(circuits::pauli_pushing())
}

#[pyfunction]
fn from_gates(text: &str) -> PyResult<PyDiagram> {
    let gl = circuits::GateList::from_json(text).map_err(value_err)?;
    circuits::from_gates(&gl).map(PyDiagram).map_err(value_err)
}

/// Flattened tensor entries as `(re, im)` pairs, boundaries in name order.
#[pyfunction]
fn tensor(d: &PyDiagram) -> PyResult<(Vec<String>, Vec<(f64, f64)>)> {
    let m = dense(&d.0).map_err(value_err)?;
    Ok((m.boundaries.clone(), m.entries.iter().map(|z| (z.re, z.im)).collect()))
}

#[pyfunction]
#[pyo3(signature = (d1, d2, tol=1e-9))]
fn equivalent(d1: &PyDiagram, d2: &PyDiagram, tol: f64) -> PyResult<bool> {
    let (m1, m2) = (dense(&d1.0).map_err(value_err)?, dense(&d2.0).map_err(value_err)?);
    if m1.boundaries != m2.boundaries {
        return Ok(false);
    }
    equal_up_to_scalar(&m1, &m2, tol).map_err(value_err)
}

/// Every one-step rewrite of `d` by a catalogue pattern rule.
#[pyfunction]
fn rewrites(rule: &str, d: &PyDiagram) -> PyResult<Vec<PyDiagram>> {
    let r = builtin_rule(rule).ok_or_else(|| value_err(format!("unknown pattern rule {rule:?}")))?;
    let out = matcher::rewrites(&r, &d.0).map_err(value_err)?;
    Ok(out.into_iter().map(PyDiagram).collect())
}

#[pyclass(name = "RuleSet", skip_from_py_object)]
#[derive(Clone)]
struct PyRuleSet(zxforge::RuleSet);

#[pymethods]
impl PyRuleSet {
    #[new]
    #[pyo3(signature = (names, h_variant="all-h"))]
    fn new(names: Vec<String>, h_variant: &str) -> PyResult<Self> {
        let h = match h_variant {
            "all-h" => HVariant::AllH,
            "toggle" => HVariant::Toggle,
            other => return Err(value_err(format!("unknown h variant {other:?}"))),
        };
        zxforge::RuleSet::select(&names, h).map(PyRuleSet).map_err(value_err)
    }

    fn add_rule_json(&mut self, text: &str) -> PyResult<()> {
        self.0.push_rule_text(text).map_err(value_err)
    }

    fn set_budget(&mut self, name: &str, value: i64) -> PyResult<()> {
        self.0.set_budget(name, value).map_err(value_err)
    }

    fn set_token(&mut self, rule: &str, token: &str) -> PyResult<()> {
        self.0.set_token(rule, token).map_err(value_err)
    }

    fn names(&self) -> Vec<String> {
        self.0.names().into_iter().map(String::from).collect()
    }
}

#[pyclass(name = "StateSpace", frozen)]
struct PyStateSpace(StateSpace);

#[pymethods]
impl PyStateSpace {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn exhaustive(&self) -> bool {
        self.0.exhaustive
    }

    fn final_ids(&self) -> Vec<usize> {
        self.0.final_ids()
    }

    fn diagram(&self, id: usize) -> PyResult<PyDiagram> {
        if id >= self.0.len() {
            return Err(value_err(format!("no state {id}")));
        }
        Ok(PyDiagram(self.0.state(id).diagram().clone()))
    }

    fn transitions(&self) -> Vec<(usize, String, usize)> {
        self.0.transitions.iter().map(|t| (t.from, t.rule.clone(), t.to)).collect()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn to_dot(&self) -> String {
        self.0.to_dot()
    }

    /// `(holds, counterexample)` where the counterexample is
    /// `(states, rules, loop_start)`.
    #[allow(clippy::type_complexity)]
    fn check(&self, formula: &str) -> PyResult<(bool, Option<(Vec<usize>, Vec<String>, usize)>)> {
        let v = ltl::check_str(&self.0, formula).map_err(value_err)?;
        Ok((v.holds, v.counterexample.map(|l| (l.states, l.rules, l.loop_start))))
    }
}

#[pyfunction]
#[pyo3(signature = (d, rules, tokens=Vec::new(), max_states=1_000_000, threads=1, anonymous_boundaries=false))]
fn explore(
    py: Python<'_>,
    d: &PyDiagram,
    rules: &PyRuleSet,
    tokens: Vec<String>,
    max_states: usize,
    threads: usize,
    anonymous_boundaries: bool,
) -> PyResult<PyStateSpace> {
    let identity = if anonymous_boundaries { Identity::AnonymousBoundaries } else { Identity::Labelled };
    let init = State::with_identity(&d.0, rules.0.initial_budgets(), tokens, identity);
    let limits = Limits { max_states, ..Limits::default() };
    let rs = rules.0.clone();
    py.detach(move || zxforge::explore(&rs, init, limits, threads))
        .map(PyStateSpace)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
pub fn zxforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDiagram>()?;
    m.add_class::<PyRuleSet>()?;
    m.add_class::<PyStateSpace>()?;
    m.add_function(wrap_pyfunction!(ghz, m)?)?;
    m.add_function(wrap_pyfunction!(teleportation, m)?)?;
    m.add_function(wrap_pyfunction!(qft2, m)?)?;
    m.add_function(wrap_pyfunction!(kn_hadamard, m)?)?;
    m.add_function(wrap_pyfunction!(pauli_pushing, m)?)?;
    m.add_function(wrap_pyfunction!(from_gates, m)?)?;
    m.add_function(wrap_pyfunction!(tensor, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(rewrites, m)?)?;
    m.add_function(wrap_pyfunction!(explore, m)?)?;
    Ok(())
}
