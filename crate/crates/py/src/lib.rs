//! Python module `spiral_anchor`: planar maps, branch continuation, the
//! center-bundle system and the reaction-diffusion simulator.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use spiral_anchor::center_bundle::{self as cb, CenterBundleSystem, FlowOptions, PerturbationFn};
use spiral_anchor::continuation::{self as cont, ContinuationOptions, FixedPointFamily};
use spiral_anchor::planar_map::{self as pm, MapSpec, Point, Window};
use spiral_anchor::rd_sim::{self as rd, BellShape, GaussianBell, ModelSpec, Preset, RunOptions, Species};
use spiral_anchor_cli::config::Config;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Fixed-point map `P(x, λ)` with offset ξ.
#[pyclass(name = "Map", module = "spiral_anchor", frozen)]
struct PyMap {
    spec: MapSpec,
}

#[pymethods]
impl PyMap {
    #[staticmethod]
    fn eb() -> Self {
        Self { spec: pm::eb_map() }
    }

    #[staticmethod]
    fn eb_revisited() -> Self {
        Self {
            spec: pm::eb_map_revisited(),
        }
    }

    /// The `[map]` section of a run configuration.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = Config::parse(text).map_err(value_err)?;
        let map = cfg.map.ok_or_else(|| value_err("missing [map] section"))?;
        Ok(Self {
            spec: map.build().map_err(value_err)?,
        })
    }

    #[getter]
    fn xi(&self) -> (f64, f64) {
        (self.spec.xi[0], self.spec.xi[1])
    }

    fn eval_p(&self, x: (f64, f64), lam: (f64, f64)) -> (f64, f64) {
        let p = self.spec.eval_p(&Point::new(x.0, x.1), [lam.0, lam.1]);
        (p[0], p[1])
    }

    /// Transverse fold candidates `(x1, x2, row, kernel_angle)` in a square window.
    #[pyo3(signature = (half_width = 8.0, resolution = 400))]
    fn fold_candidates(&self, half_width: f64, resolution: usize) -> PyResult<Vec<(f64, f64, usize, f64)>> {
        let report = pm::transverse_fold_candidates(&self.spec, &Window::square(half_width), resolution)
            .map_err(value_err)?;
        Ok(report
            .candidates
            .iter()
            .map(|c| (c.x[0], c.x[1], c.row, c.kernel_angle))
            .collect())
    }

    /// Branches through 0 and ξ of the fixed points of `P` on `‖λ‖ = rho`.
    #[pyo3(signature = (rho, general = false, escape_radius = None))]
    fn diagram(&self, rho: f64, general: bool, escape_radius: Option<f64>) -> PyResult<PyDiagram> {
        let fam = FixedPointFamily::new(&self.spec, rho, general).map_err(value_err)?;
        let mut opts = ContinuationOptions::default();
        if escape_radius.is_some() {
            opts.escape_radius = escape_radius;
        }
        let diagram = cont::bifurcation_diagram(&fam, &opts).map_err(runtime_err)?;
        Ok(PyDiagram { diagram })
    }

    fn __repr__(&self) -> String {
        format!("Map(xi={:?})", self.spec.xi)
    }
}

#[pyclass(name = "Diagram", module = "spiral_anchor", frozen)]
struct PyDiagram {
    diagram: cont::Diagram,
}

#[pymethods]
impl PyDiagram {
    /// `(curve, kind, x_star, s_star)`; `x_star` is `None` for ∞-catastrophes.
    #[getter]
    fn events(&self) -> Vec<(String, String, Option<(f64, f64)>, f64)> {
        self.diagram
            .events
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    cont::CatastropheKind::Fold => "fold",
                    cont::CatastropheKind::Infinity => "infinity",
                };
                (e.curve.clone(), kind.to_string(), e.x_star.map(|x| (x[0], x[1])), e.s_star)
            })
            .collect()
    }

    #[getter]
    fn fold_count(&self) -> usize {
        self.diagram.fold_count()
    }

    #[getter]
    fn infinity_count(&self) -> usize {
        self.diagram.infinity_count()
    }

    #[getter]
    fn same_curve(&self) -> bool {
        self.diagram.same_curve
    }

    /// `(name, class)` for every branch.
    #[getter]
    fn classes(&self) -> Vec<(String, String)> {
        self.diagram
            .branches
            .iter()
            .map(|b| (b.name.clone(), b.class.name().to_string()))
            .collect()
    }

    /// Wedge angles, `nu1`, `nu2` and the overlap verdict.
    fn wedges<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(w) = &self.diagram.wedges else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        d.set_item("phi_0_minus", w.phi_0_minus.value())?;
        d.set_item("phi_0_plus", w.phi_0_plus.value())?;
        d.set_item("phi_xi_minus", w.phi_xi_minus.value())?;
        d.set_item("phi_xi_plus", w.phi_xi_plus.value())?;
        d.set_item("nu1", w.nu1)?;
        d.set_item("nu2", w.nu2)?;
        d.set_item("overlap", w.overlap.overlaps())?;
        Ok(Some(d))
    }

    fn summary(&self) -> String {
        self.diagram.summary_table()
    }
}

/// Center-bundle system `ṗ = v e^{it} + Σ λ_j H_j(p − ξ_j)`.
#[pyclass(name = "CenterBundle", module = "spiral_anchor", frozen)]
struct PyCenterBundle {
    sys: CenterBundleSystem,
}

#[pymethods]
impl PyCenterBundle {
    /// `perturbations[j]` lists `(k, l, c)` for the terms `c w^k w̄^l` of `H_j`.
    #[new]
    fn new(
        v: Complex64,
        centers: Vec<Complex64>,
        perturbations: Vec<Vec<(u32, u32, Complex64)>>,
        lambdas: Vec<f64>,
    ) -> PyResult<Self> {
        let hs = perturbations
            .into_iter()
            .map(|terms| terms.into_iter().fold(PerturbationFn::new(), |h, (k, l, c)| h.with_term(k, l, c)))
            .collect();
        let sys = CenterBundleSystem::new(v, centers, hs, lambdas).map_err(value_err)?;
        Ok(Self { sys })
    }

    fn time_2pi_map(&self, z: Complex64) -> PyResult<Complex64> {
        cb::time_2pi_map(&self.sys, z, &FlowOptions::default()).map_err(runtime_err)
    }

    fn anchoring_coefficient(&self, j: usize) -> PyResult<Complex64> {
        self.sys.anchoring_coefficient(j).map_err(value_err)
    }

    /// Perturbed rotating wave: center, Floquet moduli and stability.
    #[pyo3(signature = (guess = Complex64::new(0.0, 0.0), dt = None))]
    fn find_wave<'py>(&self, py: Python<'py>, guess: Complex64, dt: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let opts = dt.map_or_else(FlowOptions::default, FlowOptions::with_dt);
        let orbit = cb::find_perturbed_wave(&self.sys, guess, &opts).map_err(runtime_err)?;
        let d = PyDict::new(py);
        d.set_item("center", orbit.center)?;
        d.set_item("z", orbit.z)?;
        d.set_item("moduli", orbit.floquet.moduli().to_vec())?;
        d.set_item("stability", orbit.floquet.stability.name())?;
        d.set_item("closure_error", orbit.closure_error())?;
        Ok(d)
    }
}

/// Reaction-diffusion model with Gaussian perturbations.
#[pyclass(name = "Model", module = "spiral_anchor", frozen)]
struct PyModel {
    spec: ModelSpec,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn fhn_two_bells() -> Self {
        Self {
            spec: ModelSpec::fhn_two_bells(),
        }
    }

    #[staticmethod]
    fn fhn_four_bells() -> Self {
        Self {
            spec: ModelSpec::fhn_four_bells(),
        }
    }

    /// FitzHugh-Nagumo with one bell `amplitude·exp(rate r²)` in the `u` equation.
    #[staticmethod]
    fn fhn_single_bell(amplitude: f64, center: (f64, f64), rate: f64) -> PyResult<Self> {
        let spec = ModelSpec::fhn(vec![GaussianBell {
            amplitude,
            center: [center.0, center.1],
            shape: BellShape::Rate(rate),
            target: Species::U,
        }]);
        spec.validate().map_err(value_err)?;
        Ok(Self { spec })
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, widths = (1.0, 1.0)))]
    fn oregonator(alpha: (f64, f64), widths: (f64, f64)) -> Self {
        Self {
            spec: ModelSpec::oregonator([alpha.0, alpha.1], [widths.0, widths.1]),
        }
    }

    /// The `[model]` section of a run configuration.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = Config::parse(text).map_err(value_err)?;
        let spec = cfg.model.ok_or_else(|| value_err("missing [model] section"))?;
        spec.validate().map_err(value_err)?;
        Ok(Self { spec })
    }

    #[getter]
    fn bell_centers(&self) -> Vec<(f64, f64)> {
        self.spec.bell_centers().iter().map(|c| (c[0], c[1])).collect()
    }

    #[getter]
    fn rest_state(&self) -> (f64, f64) {
        self.spec.kinetics.rest_state()
    }
}

/// Runs `model` from the cross-field stimulus; returns the tip series and the anchoring verdict.
#[pyfunction]
#[pyo3(signature = (model, duration, n = 100, l = 30.0, dt = None, stimulus = (0.0, 0.0), mirrored = false))]
fn simulate<'py>(
    py: Python<'py>,
    model: &PyModel,
    duration: f64,
    n: usize,
    l: f64,
    dt: Option<f64>,
    stimulus: (f64, f64),
    mirrored: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut opts = RunOptions::preset(Preset::Desk, &model.spec);
    opts.grid = rd::Grid::new(n, l).map_err(value_err)?;
    opts.duration = duration;
    opts.stimulus = [stimulus.0, stimulus.1];
    opts.mirrored = mirrored;
    if let Some(dt) = dt {
        opts.dt = dt;
    }
    let spec = model.spec.clone();
    let res = py
        .detach(move || rd::run_experiment(&spec, &opts))
        .map_err(value_err)?;
    if let Some(e) = &res.aborted {
        return Err(runtime_err(e));
    }
    let d = PyDict::new(py);
    d.set_item("samples", res.tips.samples.iter().map(|s| (s[0], s[1], s[2])).collect::<Vec<_>>())?;
    d.set_item("center", res.tips.center().map(|c| (c[0], c[1])))?;
    d.set_item("period", res.tips.period())?;
    d.set_item("anchored", res.tips.anchored())?;
    d.set_item("min_bell_distance", res.min_bell_distance)?;
    d.set_item("note", res.tips.note.clone())?;
    Ok(d)
}

/// Anchoring center of a `(t, x1, x2)` tip series.
#[pyfunction]
#[pyo3(signature = (samples, transient_fraction = 0.5))]
fn anchoring_center<'py>(
    py: Python<'py>,
    samples: Vec<(f64, f64, f64)>,
    transient_fraction: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s: Vec<[f64; 3]> = samples.into_iter().map(|(t, x, y)| [t, x, y]).collect();
    let r = rd::anchoring_center(&s, transient_fraction).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("center", (r.center[0], r.center[1]))?;
    d.set_item("period", r.period)?;
    d.set_item("radius", r.radius)?;
    d.set_item("anchored", r.anchored)?;
    d.set_item("drift", (r.drift[0], r.drift[1]))?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "spiral_anchor")]
fn spiral_anchor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMap>()?;
    m.add_class::<PyDiagram>()?;
    m.add_class::<PyCenterBundle>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(anchoring_center, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
