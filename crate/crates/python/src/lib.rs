//! Python bindings. Probabilities and utilities cross the boundary as
//! `fractions.Fraction`; agents and items are referred to by id.

use std::fmt::Display;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fairlot::birkhoff::{birkhoff_decompose as decompose, BistochasticMatrix};
use fairlot::eps::{eps_outcome as eps, EpsMode};
use fairlot::fairness::{self, RemovalSemantics, SdEfficiency};
use fairlot::io::{format_rational, parse_rational};
use fairlot::model::sd_compare as compare;
use fairlot::oracle::{sd_improvement, Budget};
use fairlot::pslottery::{self, Rule};
use fairlot::{DeterministicAllocation, Instance, Lottery, RandomAllocation, Rational};

fn value_error(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    parse_rational(&obj.str()?.to_string()).map_err(value_error)
}

fn fraction<'py>(py: Python<'py>, x: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((format_rational(x),))
}

fn fraction_rows<'py>(
    py: Python<'py>,
    rows: &[Vec<Rational>],
) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
    rows.iter()
        .map(|r| r.iter().map(|x| fraction(py, x)).collect())
        .collect()
}

fn rational_rows(rows: &[Vec<Bound<'_, PyAny>>]) -> PyResult<Vec<Vec<Rational>>> {
    rows.iter()
        .map(|r| r.iter().map(rational).collect())
        .collect()
}

/// An additive allocation problem with exact utilities.
#[pyclass(name = "Instance", module = "fairlot", frozen)]
struct PyInstance {
    inner: Instance,
}

#[pymethods]
impl PyInstance {
    /// `utilities[i][o]` accepts ints, `Fraction`s, or strings such as "3/4".
    #[new]
    #[pyo3(signature = (utilities, agents=None, items=None))]
    fn new(
        utilities: Vec<Vec<Bound<'_, PyAny>>>,
        agents: Option<Vec<String>>,
        items: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let rows = rational_rows(&utilities)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let defaults = Instance::from_utilities(rows.clone()).map_err(value_error)?;
        let agents = agents.unwrap_or_else(|| defaults.agents().to_vec());
        let items = items.unwrap_or_else(|| defaults.items().to_vec());
        if agents.len() != n || items.len() != m {
            return Err(PyValueError::new_err(
                "ids must match the utility table's shape",
            ));
        }
        let inner = Instance::new(agents, items, rows).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn agents(&self) -> Vec<String> {
        self.inner.agents().to_vec()
    }

    #[getter]
    fn items(&self) -> Vec<String> {
        self.inner.items().to_vec()
    }

    #[getter]
    fn utilities<'py>(&self, py: Python<'py>) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
        fraction_rows(py, self.inner.utilities())
    }

    fn is_binary(&self) -> bool {
        self.inner.is_binary()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(agents={:?}, items={:?})",
            self.inner.agents(),
            self.inner.items()
        )
    }
}

fn agent_index(inst: &Instance, obj: &Bound<'_, PyAny>) -> PyResult<usize> {
    let id = obj.str()?.to_string();
    inst.agent_index(&id)
        .ok_or_else(|| PyValueError::new_err(format!("unknown agent {id:?}")))
}

/// Reads `{item: agent}` or a list of agent ids in item order.
fn assignment(inst: &Instance, obj: &Bound<'_, PyAny>) -> PyResult<DeterministicAllocation> {
    let m = inst.num_items();
    let mut owners = vec![usize::MAX; m];
    if let Ok(map) = obj.cast::<PyDict>() {
        for (k, v) in map.iter() {
            let id = k.str()?.to_string();
            let o = inst
                .item_index(&id)
                .ok_or_else(|| PyValueError::new_err(format!("unknown item {id:?}")))?;
            owners[o] = agent_index(inst, &v)?;
        }
        if let Some(o) = owners.iter().position(|&i| i == usize::MAX) {
            return Err(PyValueError::new_err(format!(
                "item {:?} has no owner",
                inst.items()[o]
            )));
        }
    } else {
        let list: Vec<Bound<'_, PyAny>> = obj.extract()?;
        if list.len() != m {
            return Err(PyValueError::new_err(format!(
                "expected {m} owners, got {}",
                list.len()
            )));
        }
        for (o, v) in list.iter().enumerate() {
            owners[o] = agent_index(inst, v)?;
        }
    }
    DeterministicAllocation::new(owners, inst.num_agents()).map_err(value_error)
}

fn assignment_dict<'py>(
    py: Python<'py>,
    inst: &Instance,
    a: &DeterministicAllocation,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (o, &i) in a.owners().iter().enumerate() {
        d.set_item(&inst.items()[o], &inst.agents()[i])?;
    }
    Ok(d)
}

fn matrix(inst: &Instance, rows: &[Vec<Bound<'_, PyAny>>]) -> PyResult<RandomAllocation> {
    let rows = rational_rows(rows)?;
    if rows.len() != inst.num_agents() || rows.iter().any(|r| r.len() != inst.num_items()) {
        return Err(PyValueError::new_err(
            "matrix shape does not match the instance",
        ));
    }
    RandomAllocation::new(rows).map_err(value_error)
}

type PyLottery<'py> = Vec<(Bound<'py, PyAny>, Bound<'py, PyDict>)>;

fn lottery_out<'py>(py: Python<'py>, inst: &Instance, l: &Lottery) -> PyResult<PyLottery<'py>> {
    l.entries()
        .iter()
        .map(|(w, a)| Ok((fraction(py, w)?, assignment_dict(py, inst, a)?)))
        .collect()
}

fn lottery_in(
    inst: &Instance,
    entries: &[(Bound<'_, PyAny>, Bound<'_, PyAny>)],
) -> PyResult<Lottery> {
    let entries = entries
        .iter()
        .map(|(w, a)| Ok((rational(w)?, assignment(inst, a)?)))
        .collect::<PyResult<Vec<_>>>()?;
    Lottery::new(entries).map_err(value_error)
}

fn removal(name: &str) -> PyResult<RemovalSemantics> {
    match name {
        "both" => Ok(RemovalSemantics::BothBundles),
        "envied" => Ok(RemovalSemantics::EnviedBundleOnly),
        other => Err(PyValueError::new_err(format!(
            "removal must be 'both' or 'envied', got {other:?}"
        ))),
    }
}

/// PS outcome, ties broken by item id.
#[pyfunction]
fn ps_outcome<'py>(
    py: Python<'py>,
    instance: &PyInstance,
) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
    let inst = &instance.inner;
    let profile = inst.ordinal_profile().strictified_by(inst.lex_rank());
    let (p, _) = fairlot::ps::ps_outcome(&profile).map_err(value_error)?;
    fraction_rows(py, p.rows())
}

#[pyfunction]
#[pyo3(signature = (instance, skip_zero=false))]
fn eps_outcome<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    skip_zero: bool,
) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
    let mode = if skip_zero {
        EpsMode::SkipZero
    } else {
        EpsMode::Standard
    };
    let out = eps(&instance.inner, mode).map_err(value_error)?;
    fraction_rows(py, out.allocation.rows())
}

/// Lottery as `[(weight, {item: agent})]`. `rule` is "ps", "eps" or "eps-skip-zero".
#[pyfunction]
#[pyo3(signature = (instance, rule="ps", reduce=false))]
fn ps_lottery<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    rule: &str,
    reduce: bool,
) -> PyResult<PyLottery<'py>> {
    let rule = match rule {
        "ps" => Rule::Ps,
        "eps" => Rule::Eps,
        "eps-skip-zero" => Rule::EpsSkipZero,
        other => return Err(PyValueError::new_err(format!("unknown rule {other:?}"))),
    };
    let out = pslottery::ps_lottery(&instance.inner, rule).map_err(value_error)?;
    let lottery = if reduce {
        pslottery::reduce_support(&out.lottery)
    } else {
        out.lottery
    };
    lottery_out(py, &instance.inner, &lottery)
}

/// Shrinks a lottery to at most nm + 1 allocations with the same expectation.
#[pyfunction]
fn reduce_support<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    lottery: Vec<(Bound<'py, PyAny>, Bound<'py, PyAny>)>,
) -> PyResult<PyLottery<'py>> {
    let l = lottery_in(&instance.inner, &lottery)?;
    lottery_out(py, &instance.inner, &pslottery::reduce_support(&l))
}

#[pyfunction]
fn expected_allocation<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    lottery: Vec<(Bound<'py, PyAny>, Bound<'py, PyAny>)>,
) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
    let l = lottery_in(&instance.inner, &lottery)?;
    fraction_rows(py, l.expected_allocation().rows())
}

/// `[(weight, columns)]` where row `r` of the permutation sits in `columns[r]`.
#[pyfunction]
fn birkhoff_decompose<'py>(
    py: Python<'py>,
    matrix: Vec<Vec<Bound<'py, PyAny>>>,
) -> PyResult<Vec<(Bound<'py, PyAny>, Vec<usize>)>> {
    let m = BistochasticMatrix::new(rational_rows(&matrix)?).map_err(value_error)?;
    decompose(&m)
        .iter()
        .map(|e| Ok((fraction(py, &e.weight)?, e.permutation.columns().to_vec())))
        .collect()
}

/// SD relation of bundles `x` and `y` for `agent`: "dominates", "dominated",
/// "equivalent" or "incomparable".
#[pyfunction]
fn sd_compare(
    instance: &PyInstance,
    agent: &Bound<'_, PyAny>,
    x: Vec<Bound<'_, PyAny>>,
    y: Vec<Bound<'_, PyAny>>,
) -> PyResult<String> {
    let inst = &instance.inner;
    let i = agent_index(inst, agent)?;
    let m = inst.num_items();
    let x: Vec<Rational> = x.iter().map(rational).collect::<PyResult<_>>()?;
    let y: Vec<Rational> = y.iter().map(rational).collect::<PyResult<_>>()?;
    if x.len() != m || y.len() != m {
        return Err(PyValueError::new_err(format!("bundles need {m} entries")));
    }
    Ok(compare(&inst.ordinal_profile(), i, &x, &y).to_string())
}

#[pyfunction]
fn check_ef(instance: &PyInstance, matrix_rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<bool> {
    let p = matrix(&instance.inner, &matrix_rows)?;
    Ok(fairness::check_ef(&p, &instance.inner)
        .map_err(value_error)?
        .is_pass())
}

#[pyfunction]
fn check_sd_ef(instance: &PyInstance, matrix_rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<bool> {
    let p = matrix(&instance.inner, &matrix_rows)?;
    let profile = instance.inner.ordinal_profile();
    Ok(fairness::check_sd_ef(&p, &profile)
        .map_err(value_error)?
        .is_pass())
}

/// Acyclicity test on strict profiles, SD-improvement LP otherwise.
#[pyfunction]
fn check_sd_efficient(
    instance: &PyInstance,
    matrix_rows: Vec<Vec<Bound<'_, PyAny>>>,
) -> PyResult<bool> {
    let p = matrix(&instance.inner, &matrix_rows)?;
    let profile = instance.inner.ordinal_profile();
    Ok(
        match fairness::check_sd_efficient(&p, &profile).map_err(value_error)? {
            SdEfficiency::Efficient { .. } => true,
            SdEfficiency::Cycle { .. } => false,
            SdEfficiency::RequiresOracle => {
                sd_improvement(&p, &profile).map_err(value_error)?.is_none()
            }
        },
    )
}

#[pyfunction]
#[pyo3(signature = (instance, assignment, removal="both"))]
fn check_ef1(
    instance: &PyInstance,
    assignment: &Bound<'_, PyAny>,
    removal: &str,
) -> PyResult<bool> {
    check_efk(instance, assignment, 1, removal)
}

#[pyfunction]
#[pyo3(signature = (instance, assignment, k, removal="both"))]
fn check_efk(
    instance: &PyInstance,
    assignment: &Bound<'_, PyAny>,
    k: i64,
    removal: &str,
) -> PyResult<bool> {
    let a = self::assignment(&instance.inner, assignment)?;
    let v = fairness::check_efk(&a, &instance.inner, k, self::removal(removal)?)
        .map_err(value_error)?;
    Ok(v.is_pass())
}

#[pyfunction]
fn check_sd_ef1(instance: &PyInstance, assignment: &Bound<'_, PyAny>) -> PyResult<bool> {
    let a = self::assignment(&instance.inner, assignment)?;
    let profile = instance.inner.ordinal_profile();
    Ok(fairness::check_sd_ef1(&a, &profile)
        .map_err(value_error)?
        .is_pass())
}

#[pyfunction]
fn check_strong_ef1(instance: &PyInstance, assignment: &Bound<'_, PyAny>) -> PyResult<bool> {
    let a = self::assignment(&instance.inner, assignment)?;
    Ok(fairness::check_strong_ef1(&a, &instance.inner)
        .map_err(value_error)?
        .is_pass())
}

/// Recursively balanced picking with ceil(m/n) rounds, ties broken by item id.
#[pyfunction]
fn check_rb(instance: &PyInstance, assignment: &Bound<'_, PyAny>) -> PyResult<bool> {
    let inst = &instance.inner;
    let a = self::assignment(inst, assignment)?;
    let profile = inst.ordinal_profile().strictified_by(inst.lex_rank());
    let c = inst.num_items().div_ceil(inst.num_agents());
    Ok(fairness::check_rb(&a, &profile, c)
        .map_err(value_error)?
        .is_pass())
}

/// Pareto optimality among deterministic allocations, by enumeration.
#[pyfunction]
fn check_po(instance: &PyInstance, assignment: &Bound<'_, PyAny>) -> PyResult<bool> {
    let a = self::assignment(&instance.inner, assignment)?;
    let budget = Budget::from_env().map_err(value_error)?;
    let v = fairness::check_po_bruteforce(&a, &instance.inner, budget).map_err(value_error)?;
    Ok(v.is_pass())
}

#[pymodule]
#[pyo3(name = "fairlot")]
fn fairlot_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(ps_outcome, m)?)?;
    m.add_function(wrap_pyfunction!(eps_outcome, m)?)?;
    m.add_function(wrap_pyfunction!(ps_lottery, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_support, m)?)?;
    m.add_function(wrap_pyfunction!(expected_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(birkhoff_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(sd_compare, m)?)?;
    m.add_function(wrap_pyfunction!(check_ef, m)?)?;
    m.add_function(wrap_pyfunction!(check_sd_ef, m)?)?;
    m.add_function(wrap_pyfunction!(check_sd_efficient, m)?)?;
    m.add_function(wrap_pyfunction!(check_ef1, m)?)?;
    m.add_function(wrap_pyfunction!(check_efk, m)?)?;
    m.add_function(wrap_pyfunction!(check_sd_ef1, m)?)?;
    m.add_function(wrap_pyfunction!(check_strong_ef1, m)?)?;
    m.add_function(wrap_pyfunction!(check_rb, m)?)?;
    m.add_function(wrap_pyfunction!(check_po, m)?)?;
    Ok(())
}
