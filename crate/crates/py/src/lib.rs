//! Python bindings. Rationals cross the boundary as strings ("1/3", "0.5")
//! or Python numbers; reports come back as `dict[str, str]`.

use std::collections::BTreeMap;

use netgeom::ahlfors::ahlfors_check;
use netgeom::exact::{format_rational, parse_rational};
use netgeom::growth::{ball_count_table, fit_growth, parse_radii, select_centers, CenterSelection};
use netgeom::hausdorff::hausdorff_estimate;
use netgeom::measure::{quantize_measure, AtomicMeasure};
use netgeom::nets::{check_net, greedy_net, lipschitz_sandwich, NetOrder, PairSampling};
use netgeom::pipeline::{load_measure, load_space, run_pipeline, PipelinePlan};
use netgeom::regularize::{default_k, regularize_degrees, verify_regularization};
use netgeom::space_file::write_space_file;
use netgeom::{BallKind, BallSpec, FiniteMetricSpace, Graph, PointId, Rational, Record};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: netgeom::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rational(v: &Bound<'_, PyAny>) -> PyResult<Rational> {
    parse_rational(&v.str()?.to_string()).map_err(err)
}

fn ball_kind(s: &str) -> PyResult<BallKind> {
    s.parse().map_err(err)
}

type Summary = BTreeMap<String, String>;

fn record_dict(r: &Record) -> Summary {
    r.fields().iter().cloned().collect()
}

/// Finite metric space with exact rational distances.
#[pyclass(module = "netgeom_py", frozen)]
struct Space {
    inner: FiniteMetricSpace,
}

#[pymethods]
impl Space {
    /// Build from a space file path or an inline spec such as "kind=grid dims=8x8".
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Space { inner: load_space(spec).map_err(err)? })
    }

    /// Explicit space from a lower-triangular distance table (row i has i entries).
    #[staticmethod]
    fn from_lower_triangle(rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Self> {
        let rows = rows
            .iter()
            .map(|row| row.iter().map(rational).collect::<PyResult<Vec<_>>>())
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Space { inner: FiniteMetricSpace::from_lower_triangle(&rows).map_err(err)? })
    }

    /// Graph metric on an edge list, scaled by `step`.
    #[staticmethod]
    #[pyo3(signature = (n_vertices, edges, step = None))]
    fn from_edges(n_vertices: usize, edges: Vec<(usize, usize)>, step: Option<Bound<'_, PyAny>>) -> PyResult<Self> {
        let graph = Graph::from_edges(n_vertices, edges).map_err(err)?;
        let step = match step {
            Some(s) => rational(&s)?,
            None => Rational::from_integer(1),
        };
        Ok(Space { inner: FiniteMetricSpace::from_graph(graph, step).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.n_points()
    }

    fn distance(&self, x: usize, y: usize) -> PyResult<String> {
        self.inner.distance(PointId(x), PointId(y)).map(|d| format_rational(&d)).map_err(err)
    }

    fn diameter(&self) -> String {
        format_rational(&self.inner.diameter())
    }

    #[pyo3(signature = (center, radius, kind = "open"))]
    fn ball(&self, center: usize, radius: Bound<'_, PyAny>, kind: &str) -> PyResult<Vec<usize>> {
        let spec = BallSpec::new(PointId(center), rational(&radius)?, ball_kind(kind)?).map_err(err)?;
        Ok(self.inner.ball_members(&spec).map_err(err)?.into_iter().map(|p| p.0).collect())
    }

    #[pyo3(signature = (center, radius, kind = "open"))]
    fn ball_card(&self, center: usize, radius: Bound<'_, PyAny>, kind: &str) -> PyResult<u64> {
        let spec = BallSpec::new(PointId(center), rational(&radius)?, ball_kind(kind)?).map_err(err)?;
        self.inner.ball_card(&spec).map_err(err)
    }

    /// Returns (passed, triples_checked).
    #[pyo3(signature = (samples = 2000, seed = 0, ultrametric = false))]
    fn verify_metric(&self, samples: usize, seed: u64, ultrametric: bool) -> PyResult<(bool, u64)> {
        let r = self.inner.verify_metric(samples, seed, ultrametric).map_err(err)?;
        Ok((r.passed(), r.triples_checked))
    }

    fn to_text(&self) -> String {
        write_space_file(&self.inner)
    }
}

/// Greedy δ-net of a space.
#[pyclass(module = "netgeom_py", frozen)]
struct Net {
    inner: netgeom::nets::Net,
}

#[pymethods]
impl Net {
    #[new]
    #[pyo3(signature = (space, delta, order = "index", seed = 0))]
    fn new(space: &Space, delta: Bound<'_, PyAny>, order: &str, seed: u64) -> PyResult<Self> {
        let order = match order {
            "index" => NetOrder::Index,
            "seeded" => NetOrder::Seeded(seed),
            "farthest" => NetOrder::FarthestPoint,
            other => return Err(PyValueError::new_err(format!("unknown order {other:?}"))),
        };
        let inner = greedy_net(&space.inner, &rational(&delta)?, &order).map_err(err)?;
        Ok(Net { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn points(&self) -> Vec<usize> {
        self.inner.carrier.iter().map(|p| p.0).collect()
    }

    #[getter]
    fn covering_radius(&self) -> String {
        format_rational(&self.inner.covering_radius)
    }

    /// Exhaustive separation and covering check against every point of `space`.
    fn check(&self, space: &Space) -> PyResult<bool> {
        let all: Vec<PointId> = space.inner.points().collect();
        Ok(check_net(&space.inner, &self.inner, &all).map_err(err)?.passed())
    }

    /// Bi-Lipschitz comparison of the δ-graph metric with the ambient metric.
    #[pyo3(signature = (space, sources = 0, seed = 0))]
    fn sandwich(&self, space: &Space, sources: usize, seed: u64) -> PyResult<BTreeMap<String, String>> {
        let sampling = match sources {
            0 => PairSampling::All,
            count => PairSampling::Sources { count, seed },
        };
        let report = lipschitz_sandwich(&space.inner, &self.inner, &sampling).map_err(err)?;
        Ok(record_dict(&report.to_record().with("passed", report.passed())))
    }
}

/// Finitely supported measure, one atom per point.
#[pyclass(module = "netgeom_py", frozen)]
struct Measure {
    inner: AtomicMeasure,
}

#[pymethods]
impl Measure {
    #[new]
    fn new(masses: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let masses = masses.iter().map(rational).collect::<PyResult<Vec<_>>>()?;
        Ok(Measure { inner: AtomicMeasure::from_masses(masses).map_err(err)? })
    }

    /// "counting:M" or a measure file, resolved against `space`.
    #[staticmethod]
    fn load(spec: &str, space: &Space) -> PyResult<Self> {
        Ok(Measure { inner: load_measure(spec, &space.inner).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn total(&self) -> String {
        format_rational(&self.inner.total())
    }

    fn mass_of(&self, points: Vec<usize>) -> PyResult<String> {
        let set: Vec<PointId> = points.into_iter().map(PointId).collect();
        self.inner.mass_of(&set).map(|m| format_rational(&m)).map_err(err)
    }

    /// Quantize to density 1/M and report the error checks.
    #[pyo3(signature = (m, samples = 1000, seed = 0))]
    fn quantize(&self, m: u64, samples: usize, seed: u64) -> PyResult<BTreeMap<String, String>> {
        let q = quantize_measure(&self.inner, m, false).map_err(err)?;
        let subset = q.max_subset_error(&self.inner, samples, seed).map_err(err)?;
        let bracketing = q.bracketing_violations(&self.inner).len();
        let passed = bracketing == 0 && q.total_mass_ok(&self.inner) && subset.passed();
        let r = Record::new()
            .with("carrier_len", q.carrier_len())
            .with("total", format_rational(&q.total()))
            .with("bracketing_violations", bracketing)
            .with("max_subset_error", format_rational(&subset.max_error))
            .with("bound", format_rational(&subset.bound))
            .with("passed", passed);
        Ok(record_dict(&r))
    }
}

/// Ball counts over `radii` and a least-squares fit of log count against log r.
#[pyfunction]
#[pyo3(signature = (space, radii, ball = "open", centers = "bulk", interval = None))]
fn growth(
    space: &Space,
    radii: &str,
    ball: &str,
    centers: &str,
    interval: Option<(Bound<'_, PyAny>, Bound<'_, PyAny>)>,
) -> PyResult<BTreeMap<String, String>> {
    let radii = parse_radii(radii).map_err(err)?;
    let (lo, hi) = match (&interval, radii.first(), radii.last()) {
        (Some((a, b)), _, _) => (rational(a)?, rational(b)?),
        (None, Some(a), Some(b)) => (*a, *b),
        _ => return Err(PyValueError::new_err("no radii")),
    };
    let selection: CenterSelection = centers.parse().map_err(err)?;
    let centers = select_centers(&space.inner, &selection, &hi).map_err(err)?;
    let table = ball_count_table(&space.inner, &centers, &radii, ball_kind(ball)?).map_err(err)?;
    Ok(record_dict(&fit_growth(&table, &lo, &hi).map_err(err)?.to_record()))
}

/// Ahlfors regularity check; `targets` = (k_min, K_max) turns it into a pass/fail test.
#[pyfunction]
#[pyo3(signature = (space, measure, radii, lambda_, bound = None, ball = "open", centers = "bulk", targets = None))]
#[allow(clippy::too_many_arguments)]
fn ahlfors(
    space: &Space,
    measure: &Measure,
    radii: &str,
    lambda_: f64,
    bound: Option<Bound<'_, PyAny>>,
    ball: &str,
    centers: &str,
    targets: Option<(f64, f64)>,
) -> PyResult<BTreeMap<String, String>> {
    let radii = parse_radii(radii).map_err(err)?;
    let max = *radii.last().ok_or_else(|| PyValueError::new_err("no radii"))?;
    let bound = match bound {
        Some(b) => rational(&b)?,
        None => max * Rational::from_integer(2),
    };
    let selection: CenterSelection = centers.parse().map_err(err)?;
    let centers = select_centers(&space.inner, &selection, &max).map_err(err)?;
    let report = ahlfors_check(&space.inner, &measure.inner, lambda_, &bound, &centers, &radii, ball_kind(ball)?, targets)
        .map_err(err)?;
    Ok(record_dict(&report.to_record()))
}

/// Net covering sums `(delta, net_size, sum)` over a ladder, largest δ first.
#[pyfunction]
fn hausdorff(space: &Space, lambda_: f64, ladder: Vec<Bound<'_, PyAny>>) -> PyResult<Vec<(String, usize, f64)>> {
    let mut ladder = ladder.iter().map(rational).collect::<PyResult<Vec<_>>>()?;
    ladder.sort_by(|a, b| b.cmp(a));
    ladder.dedup();
    let target: Vec<PointId> = space.inner.points().collect();
    let levels = hausdorff_estimate(&space.inner, lambda_, &ladder, &target).map_err(err)?;
    Ok(levels.iter().map(|l| (format_rational(&l.delta), l.net_size, l.sum)).collect())
}

/// Spiked-graph degree regularization; returns the summary, union edges and projection.
#[pyfunction]
#[pyo3(signature = (n_vertices, edges, k = None))]
fn regularize(
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    k: Option<usize>,
) -> PyResult<(Summary, Vec<(usize, usize)>, Vec<usize>)> {
    let graph = Graph::from_edges(n_vertices, edges).map_err(err)?;
    let k = k.unwrap_or_else(|| default_k(&graph));
    let result = regularize_degrees(&graph, k).map_err(err)?;
    let check = verify_regularization(&result);
    let mut summary = check.to_record();
    summary.push("k", k).push("target_degree", result.target_degree);
    Ok((record_dict(&summary), result.spiked.union.edges(), result.spiked.projection.clone()))
}

/// Run a TOML plan; returns (passed, report text). Nothing is written to disk.
#[pyfunction]
fn pipeline(plan_toml: &str) -> PyResult<(bool, String)> {
    let plan = PipelinePlan::from_toml(plan_toml).map_err(err)?;
    let report = run_pipeline(&plan).map_err(err)?;
    Ok((report.passed(), report.to_text()))
}

#[pymodule]
fn netgeom_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Space>()?;
    m.add_class::<Net>()?;
    m.add_class::<Measure>()?;
    m.add_function(wrap_pyfunction!(growth, m)?)?;
    m.add_function(wrap_pyfunction!(ahlfors, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(regularize, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline, m)?)?;
    Ok(())
}
