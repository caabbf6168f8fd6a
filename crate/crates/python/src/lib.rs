//! Python bindings. Structured results come back as plain dicts and lists.

use causalcast::augment::{kernelsynth as ks_draw, sample_kernel, tsmixup as ts_mix, TsMixupConfig};
use causalcast::chronoslite::{self, ForecastBundle, ForecastConfig};
use causalcast::citest::{self, GpdcConfig};
use causalcast::discovery::{self, DiscoveryConfig};
use causalcast::evalstats;
use causalcast::panel::TimeSeriesPanel;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString, PyTuple};
use serde_json::Value;

fn err(e: causalcast::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if obj.is_none() {
        Ok(Value::Null)
    } else if obj.is_instance_of::<PyBool>() {
        Ok(Value::Bool(obj.extract()?))
    } else if obj.is_instance_of::<PyInt>() {
        Ok(Value::from(obj.extract::<i64>()?))
    } else if obj.is_instance_of::<PyFloat>() {
        Ok(serde_json::Number::from_f64(obj.extract()?).map(Value::Number).unwrap_or(Value::Null))
    } else if obj.is_instance_of::<PyString>() {
        Ok(Value::String(obj.extract()?))
    } else if let Ok(d) = obj.cast::<PyDict>() {
        let mut m = serde_json::Map::new();
        for (k, v) in d.iter() {
            m.insert(k.extract::<String>()?, from_py(&v)?);
        }
        Ok(Value::Object(m))
    } else if obj.is_instance_of::<PyList>() || obj.is_instance_of::<PyTuple>() {
        obj.try_iter()?.map(|x| from_py(&x?)).collect::<PyResult<Vec<_>>>().map(Value::Array)
    } else {
        Err(PyValueError::new_err(format!("unsupported value {obj}")))
    }
}

fn ser<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?)
}

/// Builds a config from its serde default overlaid with keyword arguments.
fn config<T: serde::de::DeserializeOwned>(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<T> {
    let v = match kwargs {
        Some(d) => from_py(d.as_any())?,
        None => Value::Object(Default::default()),
    };
    serde_json::from_value(v).map_err(|e| PyValueError::new_err(format!("bad option: {e}")))
}

/// Uniform binning of mean-scaled values into tokens 1..=bins; PAD = bins+1, EOS = bins+2.
#[pyclass(name = "Quantizer", from_py_object)]
#[derive(Clone)]
struct PyQuantizer(chronoslite::Quantizer);

#[pymethods]
impl PyQuantizer {
    #[new]
    #[pyo3(signature = (bins=64, lo=-15.0, hi=15.0))]
    fn new(bins: usize, lo: f64, hi: f64) -> PyResult<Self> {
        chronoslite::Quantizer::new(bins, lo, hi).map(PyQuantizer).map_err(err)
    }
    fn quantize(&self, v: f64) -> u32 {
        self.0.quantize(v)
    }
    fn dequantize(&self, t: u32) -> PyResult<f64> {
        self.0.dequantize(t).map_err(err)
    }
    fn tokenize(&self, scaled: Vec<f64>) -> Vec<u32> {
        self.0.tokenize(&scaled)
    }
    #[getter]
    fn centers(&self) -> Vec<f64> {
        self.0.centers().to_vec()
    }
    #[getter]
    fn edges(&self) -> Vec<f64> {
        self.0.edges().to_vec()
    }
    #[getter]
    fn vocab_size(&self) -> usize {
        self.0.vocab_size()
    }
    #[getter]
    fn bin_width(&self) -> f64 {
        self.0.bin_width()
    }
}

/// Returns `(scale, scaled_values)`.
#[pyfunction]
fn mean_scale(values: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
    let s = chronoslite::mean_scale(&values).map_err(err)?;
    Ok((s.scale, s.values))
}

#[pyfunction]
fn distance_correlation(u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    if u.len() != v.len() {
        return Err(PyValueError::new_err("u and v differ in length"));
    }
    Ok(citest::distance_correlation(&u, &v))
}

#[pyfunction]
#[pyo3(signature = (x, y, z=None))]
fn parcorr_test<'py>(
    py: Python<'py>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Option<Vec<Vec<f64>>>,
) -> PyResult<Bound<'py, PyAny>> {
    let z = z.unwrap_or_default();
    let zr: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
    ser(py, &citest::parcorr_test(&x, &y, &zr).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (x, y, z=None, n_perm=199, seed=0))]
fn gpdc_test<'py>(
    py: Python<'py>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Option<Vec<Vec<f64>>>,
    n_perm: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let z = z.unwrap_or_default();
    let zr: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
    let cfg = GpdcConfig { n_perm, ..GpdcConfig::default() };
    let r = py.detach(|| citest::gpdc_test(&x, &y, &zr, &cfg, seed)).map_err(err)?;
    ser(py, &r)
}

/// `data` maps variable names to equal-length columns. Keyword arguments
/// override the discovery defaults (tau_max, alpha_pc, alpha_mci, ci_test,
/// n_perm, max_cond_dim, mode, seed). Returns the graph as a dict.
#[pyfunction]
#[pyo3(signature = (data, **kwargs))]
fn discover<'py>(
    py: Python<'py>,
    data: &Bound<'py, PyDict>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: DiscoveryConfig = config(kwargs)?;
    let data = data
        .iter()
        .map(|(k, v)| Ok((k.extract::<String>()?, v.extract::<Vec<f64>>()?)))
        .collect::<PyResult<Vec<_>>>()?;
    let names: Vec<&str> = data.iter().map(|(n, _)| n.as_str()).collect();
    let panel = TimeSeriesPanel::from_columns(&names, data.iter().map(|(_, c)| c.clone()).collect()).map_err(err)?;
    let g = py.detach(|| discovery::discover(&panel, &cfg)).map_err(err)?;
    let v: Value =
        serde_json::from_str(&g.to_json().map_err(err)?).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Rolling-origin forecasts; keyword arguments override the forecast
/// defaults. Returns a list of bundle dicts.
#[pyfunction]
#[pyo3(signature = (series, labels=None, **kwargs))]
fn rolling_forecast<'py>(
    py: Python<'py>,
    series: Vec<f64>,
    labels: Option<Vec<String>>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: ForecastConfig = config(kwargs)?;
    let bundles = py.detach(|| chronoslite::rolling_forecast(&series, labels.as_deref(), &cfg, &[])).map_err(err)?;
    to_py(py, &Value::Array(bundles.iter().map(ForecastBundle::to_json_value).collect()))
}

fn bundles_from(list: &Bound<'_, PyAny>) -> PyResult<Vec<ForecastBundle>> {
    match from_py(list)? {
        Value::Array(a) => a.into_iter().map(|b| ForecastBundle::from_json_value(b).map_err(err)).collect(),
        _ => Err(PyValueError::new_err("bundles must be a list")),
    }
}

/// Coverage, posteriors, calibration, errors, widths and anomaly flags.
/// `actuals` is indexed by each bundle's `origin_index`.
#[pyfunction]
#[pyo3(signature = (actuals, bundles, level=0.9, alpha=0.05))]
fn evaluate<'py>(
    py: Python<'py>,
    actuals: Vec<f64>,
    bundles: &Bound<'py, PyAny>,
    level: f64,
    alpha: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let b = bundles_from(bundles)?;
    ser(py, &evalstats::evaluate(&actuals, &b, level, alpha).map_err(err)?)
}

#[pyfunction]
fn beta_posterior<'py>(py: Python<'py>, k: usize, n: usize) -> PyResult<Bound<'py, PyAny>> {
    ser(py, &evalstats::beta_posterior(k, n).map_err(err)?)
}

#[pyfunction]
fn binomial_calibration<'py>(py: Python<'py>, violations: usize, n: usize, p: f64) -> PyResult<Bound<'py, PyAny>> {
    ser(py, &evalstats::binomial_calibration(violations, n, p).map_err(err)?)
}

/// Returns `(lower, upper)` tail probabilities with add-one continuity.
#[pyfunction]
fn tail_probabilities(samples: Vec<f64>, obs: f64) -> (f64, f64) {
    evalstats::tail_probabilities(&samples, obs)
}

/// One KernelSynth series; returns `(values, kernel_description)`.
#[pyfunction]
#[pyo3(signature = (length=256, max_terms=5, seed=0))]
fn kernelsynth(length: usize, max_terms: usize, seed: u64) -> PyResult<(Vec<f64>, String)> {
    let expr = sample_kernel(max_terms, causalcast::seed::derive_seed(seed, 0)).map_err(err)?;
    let v = ks_draw(length, &expr, causalcast::seed::derive_seed(seed, 1)).map_err(err)?;
    Ok((v, expr.describe()))
}

/// One TSMixup sample from `pool`; keyword arguments override max_series,
/// dirichlet_alpha and length_range.
#[pyfunction]
#[pyo3(signature = (pool, seed=0, **kwargs))]
fn tsmixup<'py>(
    py: Python<'py>,
    pool: Vec<Vec<f64>>,
    seed: u64,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: TsMixupConfig = config(kwargs)?;
    let m = ts_mix(&pool, &cfg, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("values", m.values)?;
    d.set_item("weights", m.weights)?;
    d.set_item("sources", m.sources)?;
    d.set_item("offsets", m.offsets)?;
    Ok(d.into_any())
}

#[pymodule]
#[pyo3(name = "causalcast")]
fn py_causalcast(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuantizer>()?;
    m.add_function(wrap_pyfunction!(mean_scale, m)?)?;
    m.add_function(wrap_pyfunction!(distance_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(parcorr_test, m)?)?;
    m.add_function(wrap_pyfunction!(gpdc_test, m)?)?;
    m.add_function(wrap_pyfunction!(discover, m)?)?;
    m.add_function(wrap_pyfunction!(rolling_forecast, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(beta_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_calibration, m)?)?;
    m.add_function(wrap_pyfunction!(tail_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(kernelsynth, m)?)?;
    m.add_function(wrap_pyfunction!(tsmixup, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
