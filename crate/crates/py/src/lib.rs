//! Python bindings: fields, atlases, sections, group sections and the
//! numerical drivers. Structured results are handed back as JSON strings.

use std::sync::Arc;

use mapgroups::atlas::Atlas as CoreAtlas;
use mapgroups::flow::{boundary_samples, shrink_domain as core_shrink, FlowField, LevelSetDomain};
use mapgroups::io::{to_json, FieldFile, GroupSectionFile, SectionFile};
use mapgroups::ladder::{critical_order_estimate, evolve as core_evolve, EvolveOptions, TimeSampledCurve};
use mapgroups::lie::{exp_section, GroupSection as CoreGroupSection, MatrixGroup};
use mapgroups::probe::suite_rng;
use mapgroups::section::{hilbert_inner, Section as CoreSection};
use mapgroups::sobolev::{
    hs_norm, min_norm_extension, rellich_spectrum as core_rellich, restrict, BandlimitedField as CoreField, BoxRegion,
    GridDomain, SobolevOrder, WeightConvention,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: mapgroups::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn order(s: f64, convention: &str) -> PyResult<SobolevOrder> {
    let c = WeightConvention::parse(convention).map_err(err)?;
    Ok(SobolevOrder::new(s).map_err(err)?.with_convention(c))
}

/// Band-limited real field on the torus.
#[pyclass(name = "BandlimitedField", module = "mapgroups", from_py_object)]
#[derive(Clone)]
pub struct PyField {
    inner: CoreField,
}

#[pymethods]
impl PyField {
    #[staticmethod]
    #[pyo3(signature = (m, modes, components = 1, decay = 1.0, seed = 0))]
    fn random(m: usize, modes: usize, components: usize, decay: f64, seed: u64) -> PyResult<Self> {
        let mut rng = suite_rng(seed, "python-field");
        Ok(PyField { inner: CoreField::random(m, modes, components, decay, &mut rng).map_err(err)? })
    }

    #[staticmethod]
    fn constant(m: usize, modes: usize, value: Vec<f64>) -> PyResult<Self> {
        Ok(PyField { inner: CoreField::constant(m, modes, &value).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn components(&self) -> usize {
        self.inner.components()
    }

    fn eval(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!("expected a point in dimension {}", self.inner.dim())));
        }
        Ok(self.inner.eval(&x))
    }

    #[pyo3(signature = (s, convention = "paper-s/2"))]
    fn hs_norm(&self, s: f64, convention: &str) -> PyResult<f64> {
        hs_norm(&self.inner, order(s, convention)?).map_err(err)
    }

    /// Minimum-norm re-extension of the restriction to the cube
    /// `(lo, hi)^m`; returns the extension and its norm.
    #[pyo3(signature = (lo, hi, resolution, s, modes, convention = "paper-s/2"))]
    fn restrict_and_extend(
        &self,
        lo: f64,
        hi: f64,
        resolution: usize,
        s: f64,
        modes: usize,
        convention: &str,
    ) -> PyResult<(PyField, f64)> {
        let grid =
            GridDomain::boxed(BoxRegion::cube(lo, hi, self.inner.dim()).map_err(err)?, resolution).map_err(err)?;
        let sampled = restrict(&self.inner, &grid).map_err(err)?.without_spectral();
        let o = order(s, convention)?;
        let ext = min_norm_extension(&sampled, o, modes).map_err(err)?;
        let n = hs_norm(&ext, o).map_err(err)?;
        Ok((PyField { inner: ext }, n))
    }

    #[pyo3(signature = (convention = "paper-s/2"))]
    fn to_json(&self, convention: &str) -> PyResult<String> {
        let c = WeightConvention::parse(convention).map_err(err)?;
        to_json(&FieldFile::bandlimited(&self.inner, c)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "BandlimitedField(m={}, modes={}, components={})",
            self.inner.dim(),
            self.inner.modes(),
            self.inner.components()
        )
    }
}

/// Finite atlas of a built-in manifold.
#[pyclass(name = "Atlas", module = "mapgroups", from_py_object)]
#[derive(Clone)]
pub struct PyAtlas {
    inner: Arc<CoreAtlas>,
}

#[pymethods]
impl PyAtlas {
    #[new]
    fn new(name: &str, resolution: usize) -> PyResult<Self> {
        Ok(PyAtlas { inner: Arc::new(CoreAtlas::builtin(name, resolution).map_err(err)?) })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Atlas({:?}, charts={})", self.inner.name(), self.inner.len())
    }
}

/// Vector-valued section stored chart by chart.
#[pyclass(name = "Section", module = "mapgroups", from_py_object)]
#[derive(Clone)]
pub struct PySection {
    inner: CoreSection,
}

#[pymethods]
impl PySection {
    #[staticmethod]
    fn from_field(atlas: &PyAtlas, field: &PyField) -> PyResult<Self> {
        Ok(PySection { inner: CoreSection::from_global_field(atlas.inner.clone(), &field.inner).map_err(err)? })
    }

    #[staticmethod]
    fn constant(atlas: &PyAtlas, value: Vec<f64>) -> PyResult<Self> {
        Ok(PySection { inner: CoreSection::constant(atlas.inner.clone(), &value).map_err(err)? })
    }

    #[getter]
    fn components(&self) -> usize {
        self.inner.components()
    }

    fn point_eval(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.point_eval(&x).map_err(err)
    }

    fn sup_norm(&self) -> PyResult<f64> {
        self.inner.sup_norm().map_err(err)
    }

    fn compatibility_defect(&self) -> f64 {
        self.inner.compatibility_defect()
    }

    #[pyo3(signature = (s, modes, convention = "paper-s/2"))]
    fn norm(&self, s: f64, modes: usize, convention: &str) -> PyResult<f64> {
        Ok(hilbert_inner(&self.inner, &self.inner, order(s, convention)?, modes).map_err(err)?.max(0.0).sqrt())
    }

    fn scale(&self, a: f64) -> Self {
        PySection { inner: self.inner.scale(a) }
    }

    fn __add__(&self, other: &PySection) -> PyResult<Self> {
        Ok(PySection { inner: self.inner.linear_combination(1.0, &other.inner, 1.0).map_err(err)? })
    }

    #[pyo3(signature = (convention = "paper-s/2"))]
    fn to_json(&self, convention: &str) -> PyResult<String> {
        let c = WeightConvention::parse(convention).map_err(err)?;
        to_json(&SectionFile::from_section(&self.inner, c)).map_err(err)
    }
}

/// Section with values in a matrix Lie group.
#[pyclass(name = "GroupSection", module = "mapgroups", from_py_object)]
#[derive(Clone)]
pub struct PyGroupSection {
    inner: CoreGroupSection,
}

#[pymethods]
impl PyGroupSection {
    #[staticmethod]
    fn identity(atlas: &PyAtlas, group: &str) -> PyResult<Self> {
        let g = MatrixGroup::parse(group).map_err(err)?;
        Ok(PyGroupSection { inner: CoreGroupSection::identity(atlas.inner.clone(), g) })
    }

    /// Pointwise exponential of an algebra-valued section.
    #[staticmethod]
    fn exp(group: &str, xi: &PySection) -> PyResult<Self> {
        let g = MatrixGroup::parse(group).map_err(err)?;
        Ok(PyGroupSection { inner: exp_section(g, &xi.inner).map_err(err)? })
    }

    #[getter]
    fn group(&self) -> &'static str {
        self.inner.group().name()
    }

    fn log(&self) -> PyResult<PySection> {
        Ok(PySection { inner: self.inner.log_section().map_err(err)? })
    }

    fn __mul__(&self, other: &PyGroupSection) -> PyResult<Self> {
        Ok(PyGroupSection { inner: self.inner.multiply(&other.inner).map_err(err)? })
    }

    fn inverse(&self) -> Self {
        PyGroupSection { inner: self.inner.invert() }
    }

    fn max_distance(&self, other: &PyGroupSection) -> PyResult<f64> {
        self.inner.max_distance(&other.inner).map_err(err)
    }

    fn relation_defect(&self) -> f64 {
        self.inner.relation_defect()
    }

    /// Row-major matrix at node `node` of chart `chart`.
    fn value(&self, chart: usize, node: usize) -> PyResult<Vec<Vec<f64>>> {
        if chart >= self.inner.pieces().len() || node >= self.inner.pieces()[chart].len() {
            return Err(PyValueError::new_err("chart or node index out of range"));
        }
        let g = self.inner.value(chart, node);
        Ok((0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect())
    }

    #[pyo3(signature = (convention = "paper-s/2"))]
    fn to_json(&self, convention: &str) -> PyResult<String> {
        let c = WeightConvention::parse(convention).map_err(err)?;
        to_json(&GroupSectionFile::from_section(&self.inner, c)).map_err(err)
    }
}

/// Evolution `η(1)` of the regularity ODE for a curve given by equally
/// spaced samples on `[0, 1]`.
#[pyfunction]
#[pyo3(signature = (group, samples, steps = 64))]
fn evolve(group: &str, samples: Vec<PySection>, steps: usize) -> PyResult<PyGroupSection> {
    let g = MatrixGroup::parse(group).map_err(err)?;
    let curve = TimeSampledCurve::new(g, samples.into_iter().map(|s| s.inner).collect()).map_err(err)?;
    Ok(PyGroupSection { inner: core_evolve(&curve, EvolveOptions::new(steps)).map_err(err)? })
}

/// Singular values of the inclusion `H^s ⊂ H^t` on the torus, descending.
#[pyfunction]
#[pyo3(signature = (s, t, m, modes, convention = "paper-s/2"))]
fn rellich_spectrum(s: f64, t: f64, m: usize, modes: usize, convention: &str) -> PyResult<Vec<f64>> {
    Ok(core_rellich(order(s, convention)?, order(t, convention)?, m, modes).map_err(err)?.sigmas())
}

/// JSON record of the critical-order fit for the decay field of rate `alpha`.
#[pyfunction]
#[pyo3(signature = (alpha, convention = "paper-s/2", cutoffs = vec![1000, 10000, 100000]))]
fn critical_order(alpha: f64, convention: &str, cutoffs: Vec<usize>) -> PyResult<String> {
    let c = WeightConvention::parse(convention).map_err(err)?;
    to_json(&critical_order_estimate(alpha, &cutoffs, c).map_err(err)?).map_err(err)
}

/// JSON shrink certificate for a built-in domain; negative `t0` enlarges.
#[pyfunction]
#[pyo3(signature = (domain, t0 = 0.1, samples = 200, steps = 64, seed = 7))]
fn shrink_domain(domain: &str, t0: f64, samples: usize, steps: usize, seed: u64) -> PyResult<String> {
    let d = LevelSetDomain::builtin(domain).map_err(err)?;
    let field = FlowField::standard(d.clone()).map_err(err)?;
    let mut rng = suite_rng(seed, "shrink-domain");
    let points = boundary_samples(&d, samples, &mut rng).map_err(err)?;
    to_json(&core_shrink(&field, t0, &points, steps).map_err(err)?).map_err(err)
}

#[pymodule]
#[pyo3(name = "mapgroups")]
fn mapgroups_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyAtlas>()?;
    m.add_class::<PySection>()?;
    m.add_class::<PyGroupSection>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(rellich_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(critical_order, m)?)?;
    m.add_function(wrap_pyfunction!(shrink_domain, m)?)?;
    Ok(())
}
