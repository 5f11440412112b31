//! Python bindings for the carnot toolkit.
//!
//! The module mirrors the Rust API at the granularity a notebook wants:
//! groups and their arithmetic, homogeneous subgroups and complementary
//! couples, homogeneous distances, intrinsic graph maps with their
//! Jacobians, spherical factors and Federer-density blow-ups. Points travel
//! as plain lists of floats in exponential coordinates; reports come back
//! as dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use carnot::algebra::{BracketEntry, GradedAlgebra, Point};
use carnot::graph;
use carnot::groupspec;
use carnot::measure::{self, SphericalBudget, VolumeMethod};
use carnot::metric;
use carnot::splitting;

fn err(e: carnot::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn as_point(alg: &GradedAlgebra, coords: Vec<f64>) -> PyResult<Point> {
    alg.point(coords).map_err(err)
}

/// A graded nilpotent Lie group in exponential coordinates.
#[pyclass(frozen, skip_from_py_object, module = "carnot_py")]
#[derive(Clone)]
struct Algebra {
    inner: GradedAlgebra,
}

#[pymethods]
impl Algebra {
    /// Build from layer dimensions and sparse brackets `(i, j, k, c)`
    /// meaning `[e_i, e_j] = … + c·e_k` (1-based indices).
    #[new]
    #[pyo3(signature = (layers, brackets=Vec::new()))]
    fn new(layers: Vec<usize>, brackets: Vec<(usize, usize, usize, f64)>) -> PyResult<Self> {
        let entries: Vec<BracketEntry> = brackets
            .into_iter()
            .map(|(i, j, k, c)| BracketEntry { i, j, k, c })
            .collect();
        Ok(Algebra { inner: GradedAlgebra::new(layers, &entries).map_err(err)? })
    }

    /// Built-in group by name: `heisenberg1`/`h1`, `heisenberg2`/`h2`, `engel`.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        Ok(Algebra { inner: carnot::fixtures::algebra_by_name(name).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn step(&self) -> usize {
        self.inner.step()
    }

    #[getter]
    fn hom_dim(&self) -> usize {
        self.inner.hom_dim()
    }

    #[getter]
    fn layers(&self) -> Vec<usize> {
        self.inner.layer_dims().to_vec()
    }

    fn multiply(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        let (x, y) = (as_point(&self.inner, x)?, as_point(&self.inner, y)?);
        Ok(self.inner.multiply(&x, &y).into_coords())
    }

    fn inverse(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.inverse(&as_point(&self.inner, x)?).into_coords())
    }

    fn dilate(&self, t: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = as_point(&self.inner, x)?;
        Ok(self.inner.dilate(t, &x).map_err(err)?.into_coords())
    }

    fn __repr__(&self) -> String {
        format!("Algebra(dim={}, step={}, hom_dim={})", self.inner.dim(), self.inner.step(), self.inner.hom_dim())
    }
}

/// A homogeneous (graded) subgroup, stored as a per-layer orthonormal basis.
#[pyclass(frozen, skip_from_py_object, module = "carnot_py")]
#[derive(Clone)]
struct Subgroup {
    inner: splitting::HomogeneousSubgroup,
}

#[pymethods]
impl Subgroup {
    #[new]
    fn new(algebra: &Algebra, vectors: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Subgroup {
            inner: splitting::HomogeneousSubgroup::new(&algebra.inner, &vectors).map_err(err)?,
        })
    }

    #[getter]
    fn top_dim(&self) -> usize {
        self.inner.top_dim()
    }

    #[getter]
    fn hom_dim(&self) -> usize {
        self.inner.hom_dim()
    }

    #[getter]
    fn basis(&self) -> Vec<Vec<f64>> {
        self.inner.basis().to_vec()
    }

    /// Ambient coordinates of the point with the given intrinsic coordinates.
    fn embed(&self, u: Vec<f64>) -> Vec<f64> {
        self.inner.embed(&u)
    }

    /// Intrinsic coordinates of (the span projection of) an ambient point.
    fn coords_of(&self, x: Vec<f64>) -> Vec<f64> {
        self.inner.coords_of(&x)
    }

    fn off_span_residual(&self, x: Vec<f64>) -> f64 {
        self.inner.off_span_residual(&x)
    }

    fn __repr__(&self) -> String {
        format!("Subgroup(top_dim={}, hom_dim={})", self.inner.top_dim(), self.inner.hom_dim())
    }
}

/// A complementary couple `(W, V)`: every `g` factors uniquely as `w·v`.
#[pyclass(frozen, skip_from_py_object, module = "carnot_py")]
#[derive(Clone)]
struct Couple {
    algebra: GradedAlgebra,
    inner: splitting::ComplementaryCouple,
}

#[pymethods]
impl Couple {
    #[new]
    fn new(algebra: &Algebra, w: &Subgroup, v: &Subgroup) -> PyResult<Self> {
        let inner =
            splitting::ComplementaryCouple::new(&algebra.inner, w.inner.clone(), v.inner.clone())
                .map_err(err)?;
        Ok(Couple { algebra: algebra.inner.clone(), inner })
    }

    /// Factor `g = w·v`; returns the pair of ambient coordinate lists.
    fn project(&self, g: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let g = as_point(&self.algebra, g)?;
        let (w, v) = self.inner.project(&self.algebra, &g);
        Ok((w.into_coords(), v.into_coords()))
    }

    #[getter]
    fn w(&self) -> Subgroup {
        Subgroup { inner: self.inner.w().clone() }
    }

    #[getter]
    fn v(&self) -> Subgroup {
        Subgroup { inner: self.inner.v().clone() }
    }

    fn __repr__(&self) -> String {
        format!(
            "Couple(w_top_dim={}, v_top_dim={})",
            self.inner.w().top_dim(),
            self.inner.v().top_dim()
        )
    }
}

/// A homogeneous distance.
#[pyclass(frozen, skip_from_py_object, module = "carnot_py")]
#[derive(Clone)]
struct Distance {
    inner: metric::Distance,
}

#[pymethods]
impl Distance {
    /// Per-layer weighted max norm (the default distance).
    #[staticmethod]
    fn d_inf() -> Self {
        Distance { inner: metric::Distance::d_inf() }
    }

    /// `(|z|^4 + 16 t^2)^{1/4}` on first Heisenberg-type coordinates.
    #[staticmethod]
    fn cygan_koranyi() -> Self {
        Distance { inner: metric::Distance::cygan_koranyi() }
    }

    fn norm(&self, algebra: &Algebra, x: Vec<f64>) -> PyResult<f64> {
        let compiled = self.inner.compiled(&algebra.inner).map_err(err)?;
        Ok(compiled.norm(&as_point(&algebra.inner, x)?))
    }

    fn distance(&self, algebra: &Algebra, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        let compiled = self.inner.compiled(&algebra.inner).map_err(err)?;
        Ok(compiled.distance(&as_point(&algebra.inner, x)?, &as_point(&algebra.inner, y)?))
    }

    fn __repr__(&self) -> String {
        format!("Distance({:?})", self.inner)
    }
}

/// An intrinsic graph map `φ: W → V` for a complementary couple.
#[pyclass(frozen, skip_from_py_object, module = "carnot_py")]
struct Map {
    algebra: GradedAlgebra,
    inner: graph::IntrinsicMap,
}

#[pymethods]
impl Map {
    /// Built-in map by name: `zero`, `linear:a`, `parabola`.
    #[staticmethod]
    fn by_name(algebra: &Algebra, couple: &Couple, spec: &str) -> PyResult<Self> {
        let inner = graph::map_by_name(&algebra.inner, &couple.inner, spec).map_err(err)?;
        Ok(Map { algebra: algebra.inner.clone(), inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    /// Value `φ(w)` (ambient coordinates) at intrinsic W-coordinates.
    fn eval(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        let w_pt =
            as_point(&self.algebra, self.inner.couple().w().embed(&w))?;
        Ok(self.inner.eval(&self.algebra, &w_pt).map_err(err)?.into_coords())
    }

    /// Graph point `w·φ(w)` (ambient coordinates) at intrinsic W-coordinates.
    fn graph_point(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        let w_pt =
            as_point(&self.algebra, self.inner.couple().w().embed(&w))?;
        Ok(self.inner.graph_point(&self.algebra, &w_pt).map_err(err)?.into_coords())
    }

    /// Intrinsic area-formula Jacobian at intrinsic W-coordinates.
    fn jacobian_at(&self, w: Vec<f64>) -> PyResult<f64> {
        measure::intrinsic_jacobian_at(&self.algebra, &self.inner, &w).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Map({})", self.inner.name())
    }
}

/// A named group spec resolved into algebra, distance and subgroups —
/// either a built-in fixture name or a path to a JSON group spec.
#[pyclass(frozen, skip_from_py_object, module = "carnot_py")]
struct Group {
    inner: groupspec::ResolvedGroup,
}

#[pymethods]
impl Group {
    #[staticmethod]
    fn resolve(name_or_path: &str) -> PyResult<Self> {
        Ok(Group { inner: groupspec::resolve(name_or_path).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn algebra(&self) -> Algebra {
        Algebra { inner: self.inner.algebra.clone() }
    }

    #[getter]
    fn distance(&self) -> Distance {
        Distance { inner: self.inner.distance.clone() }
    }

    #[getter]
    fn subgroup_names(&self) -> Vec<String> {
        self.inner.subgroups.keys().cloned().collect()
    }

    fn subgroup(&self, name: &str) -> PyResult<Subgroup> {
        Ok(Subgroup { inner: self.inner.subgroup(name).map_err(err)?.clone() })
    }

    fn couple(&self, w: &str, v: &str) -> PyResult<Couple> {
        Ok(Couple {
            algebra: self.inner.algebra.clone(),
            inner: self.inner.couple(w, v).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Group({})", self.inner.name)
    }
}

/// Unit-ball slice volume of a subgroup through a center point.
#[pyfunction]
#[pyo3(signature = (algebra, subgroup, distance, z=None, method="grid", n=200_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn slice_volume<'py>(
    py: Python<'py>,
    algebra: &Algebra,
    subgroup: &Subgroup,
    distance: &Distance,
    z: Option<Vec<f64>>,
    method: &str,
    n: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let z = as_point(&algebra.inner, z.unwrap_or_else(|| vec![0.0; algebra.inner.dim()]))?;
    let method: VolumeMethod = method.parse().map_err(err)?;
    let est = measure::slice_volume(&algebra.inner, &subgroup.inner, &z, &distance.inner, method, n, seed)
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("value", est.value)?;
    out.set_item("std_error", est.std_error)?;
    out.set_item("n_samples", est.n_samples)?;
    out.set_item("method", est.method)?;
    Ok(out)
}

/// Maximal unit-ball slice volume of `W` over ball centers (the spherical
/// factor of the tangent plane).
#[pyfunction]
#[pyo3(signature = (algebra, subgroup, distance, seed, search_samples=None, final_budget=None))]
fn spherical_factor<'py>(
    py: Python<'py>,
    algebra: &Algebra,
    subgroup: &Subgroup,
    distance: &Distance,
    seed: u64,
    search_samples: Option<usize>,
    final_budget: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut budget = SphericalBudget::default();
    if let Some(s) = search_samples {
        budget.search_samples = s;
    }
    if let Some(f) = final_budget {
        budget.final_budget = f;
    }
    let sf = measure::spherical_factor(&algebra.inner, &subgroup.inner, &distance.inner, &budget, seed)
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("beta", sf.beta)?;
    out.set_item("center_value", sf.center_value)?;
    out.set_item("error_bound", sf.error_bound)?;
    out.set_item("argmax", sf.argmax.coords().to_vec())?;
    Ok(out)
}

/// Federer-density blow-up of the graph measure of `map` at an ambient
/// graph point: per-scale sup estimates, extrapolation, and the comparison
/// against the tangent spherical factor.
#[pyfunction]
#[pyo3(signature = (algebra, map, distance, point, seed, centers=64, samples=2000, t_schedule=None))]
#[allow(clippy::too_many_arguments)]
fn federer_density<'py>(
    py: Python<'py>,
    algebra: &Algebra,
    map: &Map,
    distance: &Distance,
    point: Vec<f64>,
    seed: u64,
    centers: usize,
    samples: usize,
    t_schedule: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let x = as_point(&algebra.inner, point)?;
    let schedule = t_schedule.unwrap_or_else(measure::default_blowup_schedule);
    let rep = measure::federer_density(
        &algebra.inner,
        &map.inner,
        &distance.inner,
        &x,
        &schedule,
        centers,
        samples,
        seed,
    )
    .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("point", rep.point.coords().to_vec())?;
    out.set_item("exponent", rep.exponent)?;
    out.set_item("extrapolated", rep.extrapolated)?;
    out.set_item("tangent_beta", rep.tangent_beta)?;
    out.set_item("relative_gap", rep.relative_gap)?;
    let per_t = PyList::empty(py);
    for s in &rep.per_t {
        let row = PyDict::new(py);
        row.set_item("t", s.t)?;
        row.set_item("sup_estimate", s.sup_estimate)?;
        row.set_item("std_error", s.std_error)?;
        per_t.append(row)?;
    }
    out.set_item("per_t", per_t)?;
    Ok(out)
}

/// Jacobian ratio of the level set of a scalar map (`coord:j` or
/// `x-plus-ysq`) through an ambient point, for the splitting `(W, V)`.
#[pyfunction]
fn level_set_ratio(
    algebra: &Algebra,
    f: &str,
    v: &Subgroup,
    w: &Subgroup,
    point: Vec<f64>,
) -> PyResult<f64> {
    let f = measure::scalar_map_by_name(&algebra.inner, f).map_err(err)?;
    let x = as_point(&algebra.inner, point)?;
    measure::level_set_jacobian_ratio(&algebra.inner, &f, &v.inner, &w.inner, &x).map_err(err)
}

#[pymodule]
fn carnot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Algebra>()?;
    m.add_class::<Subgroup>()?;
    m.add_class::<Couple>()?;
    m.add_class::<Distance>()?;
    m.add_class::<Map>()?;
    m.add_class::<Group>()?;
    m.add_function(wrap_pyfunction!(slice_volume, m)?)?;
    m.add_function(wrap_pyfunction!(spherical_factor, m)?)?;
    m.add_function(wrap_pyfunction!(federer_density, m)?)?;
    m.add_function(wrap_pyfunction!(level_set_ratio, m)?)?;
    Ok(())
}
