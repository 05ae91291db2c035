//! Python bindings: distributions, trimming plans and condition checks,
//! trimmed sums, Bernstein bounds, Monte Carlo experiments and config runs.

use std::fmt::Display;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use trimlaw_core::bounds::{self, BernsteinInput};
use trimlaw_core::distributions::{Atom, Breakpoint, DistributionSpec, Quantile};
use trimlaw_core::expcli::{self, CliError, Overrides};
use trimlaw_core::grid;
use trimlaw_core::montecarlo::{self, ConvergenceTrace, ExperimentConfig, Resources};
use trimlaw_core::trimming::{
    self, ConditionId, ConditionReport, PlanPoint, PsiFunction, ThresholdRule, TrimRule,
};

fn value_error(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A nonnegative law with infinite mean.
#[pyclass(frozen, skip_from_py_object, module = "trimlaw")]
#[derive(Clone)]
struct Distribution {
    inner: DistributionSpec,
}

#[pymethods]
impl Distribution {
    #[staticmethod]
    #[pyo3(signature = (alpha, scale = 1.0))]
    fn pareto(alpha: f64, scale: f64) -> PyResult<Self> {
        let inner = DistributionSpec::pareto(alpha, scale).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// 1 - F(x) = 1/ln x beyond `threshold`.
    #[staticmethod]
    #[pyo3(signature = (threshold = std::f64::consts::E))]
    fn log_tail(threshold: f64) -> PyResult<Self> {
        let inner = DistributionSpec::log_tail(threshold).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Atoms at 2^{k^2} with F = 1 - 1/(k+1)^2 there.
    #[staticmethod]
    fn step_example() -> Self {
        Self {
            inner: DistributionSpec::step_example(),
        }
    }

    /// `atoms` is a list of (location, mass) pairs.
    #[staticmethod]
    fn atomic(atoms: Vec<(f64, f64)>) -> PyResult<Self> {
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(location, mass)| Atom { location, mass })
            .collect();
        let inner = DistributionSpec::atomic(&atoms).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// `breakpoints` is a list of (x, F(x), continuous) triples.
    #[staticmethod]
    fn tabulated(breakpoints: Vec<(f64, f64, bool)>, tail_alpha: f64) -> PyResult<Self> {
        let points = breakpoints
            .into_iter()
            .map(|(x, cdf, continuous)| Breakpoint { x, cdf, continuous })
            .collect();
        let inner = DistributionSpec::tabulated(points, tail_alpha).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn point_mass(location: f64) -> PyResult<Self> {
        let inner = DistributionSpec::point_mass(location).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.inner.cdf_left(x)
    }

    fn survival(&self, x: f64) -> f64 {
        self.inner.survival(x)
    }

    fn atom_mass(&self, x: f64) -> f64 {
        self.inner.atom_mass(x)
    }

    /// inf{x : F(x) >= y}; `inf` at y = 1.
    fn quantile(&self, y: f64) -> PyResult<f64> {
        match self.inner.quantile(y).map_err(value_error)? {
            Quantile::Finite(x) => Ok(x),
            Quantile::Infinite => Ok(f64::INFINITY),
        }
    }

    fn truncated_moment(&self, t: f64) -> f64 {
        self.inner.truncated_moment(t)
    }

    fn is_fixed_point(&self, t: f64) -> bool {
        self.inner.is_fixed_point(t)
    }

    /// Inverse transform of u in (0, 1).
    fn sample(&self, u: f64) -> f64 {
        self.inner.sample(u)
    }

    fn __repr__(&self) -> String {
        format!("Distribution({:?})", self.inner)
    }
}

fn plan_point_dict<'py>(py: Python<'py>, p: &PlanPoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", p.n)?;
    d.set_item("t", p.t)?;
    d.set_item("ln_t", p.ln_t)?;
    d.set_item("ln_d", p.ln_d)?;
    d.set_item("a_minus", p.a_minus)?;
    d.set_item("a_plus", p.a_plus)?;
    d.set_item("b", p.b)?;
    d.set_item("b_clamped", p.b_clamped)?;
    d.set_item("gamma", p.gamma)?;
    d.set_item("gamma_tilde", p.gamma_tilde)?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &ConditionReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", r.id.as_str())?;
    d.set_item("verdict", r.verdict.as_str())?;
    d.set_item("tolerance", r.tolerance)?;
    d.set_item("final_value", r.final_value)?;
    d.set_item("trend", r.trend)?;
    d.set_item("rows", r.rows.clone())?;
    d.set_item("clamped", r.clamped.clone())?;
    d.set_item("diagnostics", r.diagnostics.clone())?;
    d.set_item("text", r.to_text())?;
    Ok(d)
}

fn psi_power(rho: f64) -> PyResult<PsiFunction> {
    PsiFunction::power(rho).map_err(value_error)
}

/// Thresholds t_n, trimming counts b_n and the derived sequences.
#[pyclass(frozen, skip_from_py_object, module = "trimlaw")]
#[derive(Clone)]
struct TrimmingPlan {
    inner: trimming::TrimmingPlan,
}

#[pymethods]
impl TrimmingPlan {
    /// t_n = coefficient * n^exponent with the theorem b_n; `proof` selects
    /// ln n in the second argument of the max.
    #[staticmethod]
    #[pyo3(signature = (distribution, exponent, epsilon, grid, coefficient = 1.0, proof = false))]
    fn theorem_1_1(
        distribution: &Distribution,
        exponent: f64,
        epsilon: f64,
        grid: Vec<u64>,
        coefficient: f64,
        proof: bool,
    ) -> PyResult<Self> {
        let rule = ThresholdRule::Power {
            exponent,
            coefficient,
        };
        let d = distribution.inner.clone();
        let inner = if proof {
            trimming::TrimmingPlan::theorem_1_1_proof(d, rule, epsilon, &grid)
        } else {
            trimming::TrimmingPlan::theorem_1_1(d, rule, epsilon, &grid)
        }
        .map_err(value_error)?;
        Ok(Self { inner })
    }

    /// The squared-powers law with t_n at atom floor(n^{1/4 - eps/2}).
    #[staticmethod]
    fn step_example(epsilon: f64, grid: Vec<u64>) -> PyResult<Self> {
        let inner = trimming::TrimmingPlan::theorem_1_1(
            DistributionSpec::step_example(),
            ThresholdRule::step_example(epsilon),
            epsilon,
            &grid,
        )
        .map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn default(distribution: &Distribution, epsilon: f64, grid: Vec<u64>) -> PyResult<Self> {
        let inner =
            trimming::TrimmingPlan::default_rule(distribution.inner.clone(), epsilon, &grid)
                .map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Power threshold with b_n = ceil(a^- + factor * c(a^-, n)), psi = n^rho.
    #[staticmethod]
    #[pyo3(signature = (distribution, exponent, epsilon, grid, factor = 1.0, rho = 1.125, rho_tilde = 2.0))]
    fn correction(
        distribution: &Distribution,
        exponent: f64,
        epsilon: f64,
        grid: Vec<u64>,
        factor: f64,
        rho: f64,
        rho_tilde: f64,
    ) -> PyResult<Self> {
        let inner = trimming::TrimmingPlan::general(
            distribution.inner.clone(),
            ThresholdRule::power(exponent),
            TrimRule::Correction { factor },
            epsilon,
            psi_power(rho)?,
            psi_power(rho_tilde)?,
            &grid,
        )
        .map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn distribution(&self) -> Distribution {
        Distribution {
            inner: self.inner.distribution.clone(),
        }
    }

    fn point<'py>(&self, py: Python<'py>, n: u64) -> PyResult<Bound<'py, PyDict>> {
        plan_point_dict(py, &self.inner.point(n).map_err(value_error)?)
    }

    /// Judge one hypothesis ("1.2", "2.2", ...) on `grid`.
    #[pyo3(signature = (condition, grid, tolerance = 1e-2))]
    fn check<'py>(
        &self,
        py: Python<'py>,
        condition: &str,
        grid: Vec<u64>,
        tolerance: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let id: ConditionId = condition.parse().map_err(value_error)?;
        let report =
            trimming::check_condition(&self.inner, id, &grid, tolerance).map_err(value_error)?;
        report_dict(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "TrimmingPlan(kind={}, distribution={}, epsilon={})",
            self.inner.kind.as_str(),
            self.inner.distribution.name(),
            self.inner.epsilon
        )
    }
}

fn trace_dict<'py>(py: Python<'py>, tr: &ConvergenceTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("replication", tr.replication)?;
    let col = |f: fn(&montecarlo::TraceRow) -> f64| tr.rows.iter().map(f).collect::<Vec<f64>>();
    d.set_item("n", tr.rows.iter().map(|r| r.n).collect::<Vec<u64>>())?;
    d.set_item("b_n", tr.rows.iter().map(|r| r.b_n).collect::<Vec<u64>>())?;
    d.set_item("n_gt", tr.rows.iter().map(|r| r.n_gt).collect::<Vec<u64>>())?;
    d.set_item("s_n", col(|r| r.s_n))?;
    d.set_item("s_trimmed", col(|r| r.s_trimmed))?;
    d.set_item("t_truncated", col(|r| r.t_truncated))?;
    d.set_item("t_n", col(|r| r.t_n))?;
    d.set_item("d_n", col(|r| r.d_n))?;
    d.set_item("ratio_trimmed", col(|r| r.ratio_trimmed))?;
    d.set_item("ratio_truncated", col(|r| r.ratio_truncated))?;
    Ok(d)
}

/// Replicated sample paths of one plan, evaluated at checkpoints.
#[pyclass(frozen, module = "trimlaw")]
struct Experiment {
    inner: montecarlo::Experiment,
}

#[pymethods]
impl Experiment {
    #[new]
    #[pyo3(signature = (plan, checkpoints, replications, seed, threads = None, test_mode = false))]
    fn new(
        plan: &TrimmingPlan,
        checkpoints: Vec<u64>,
        replications: u32,
        seed: u64,
        threads: Option<usize>,
        test_mode: bool,
    ) -> PyResult<Self> {
        let mut config = ExperimentConfig::new(plan.inner.clone(), checkpoints, replications, seed);
        config.test_mode = test_mode;
        config.resources = Resources {
            threads,
            memory_budget_mb: None,
        };
        let inner = montecarlo::Experiment::new(config).map_err(value_error)?;
        Ok(Self { inner })
    }

    fn sample_path(&self, replication: u64) -> Vec<f64> {
        self.inner.sample_path(replication)
    }

    /// One dict of per-checkpoint columns per replication.
    fn run<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let traces = py.detach(|| self.inner.run_all()).map_err(value_error)?;
        traces.iter().map(|tr| trace_dict(py, tr)).collect()
    }

    /// Median |ratio_trimmed - 1|, violation counts and the Bernstein bound
    /// per checkpoint.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let agg = py
            .detach(|| self.inner.run_all().and_then(|t| self.inner.aggregate(&t)))
            .map_err(value_error)?;
        agg.rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("n", r.n)?;
                d.set_item("median_ratio_trimmed", r.ratio_trimmed.median())?;
                d.set_item("median_abs_dev_trimmed", r.abs_dev_trimmed.median())?;
                d.set_item(
                    "median_untrimmed_running_max",
                    r.untrimmed_running_max.median(),
                )?;
                d.set_item("exceedance_violations", r.exceedance_violations)?;
                d.set_item("exceedance_bound_log10", r.exceedance_bound.log10)?;
                Ok(d)
            })
            .collect()
    }
}

/// Sum of `values` without its `b` largest entries.
#[pyfunction]
fn trimmed_sum(values: Vec<f64>, b: usize) -> PyResult<f64> {
    montecarlo::trimmed_sum(&values, b).map_err(value_error)
}

/// Sum of the entries not exceeding `t`.
#[pyfunction]
fn truncated_sum(values: Vec<f64>, t: f64) -> f64 {
    montecarlo::truncated_sum(&values, t)
}

/// (number of entries > t, number >= t)
#[pyfunction]
fn exceedance_counts(values: Vec<f64>, t: f64) -> (u64, u64) {
    montecarlo::exceedance_counts(&values, t)
}

/// 2 exp(-t^2 / (2 V + (2/3) M t)), unclamped.
#[pyfunction]
fn bernstein_max_tail(t: f64, variance: f64, m: f64, n: u64) -> PyResult<f64> {
    let input = BernsteinInput { t, variance, m, n };
    Ok(bounds::bernstein_max_tail(&input).map_err(value_error)?.raw)
}

#[pyfunction]
fn bernstein_relative(kappa: f64, mean_total: f64, k: f64) -> PyResult<f64> {
    Ok(bounds::bernstein_relative(kappa, mean_total, k)
        .map_err(value_error)?
        .raw)
}

/// Correction c_{eps,psi}(k, n) with psi = n^rho.
#[pyfunction]
#[pyo3(signature = (k, n, epsilon, rho = 1.125))]
fn c_eps_psi(k: f64, n: u64, epsilon: f64, rho: f64) -> PyResult<f64> {
    trimming::c_eps_psi(k, n, epsilon, &psi_power(rho)?).map_err(value_error)
}

#[pyfunction]
fn geometric_grid(start: u64, stop: u64, per_decade: u32) -> PyResult<Vec<u64>> {
    grid::geometric_grid(start, stop, per_decade).map_err(value_error)
}

/// Run a TOML experiment config; returns the verdicts and written files.
#[pyfunction]
#[pyo3(signature = (path, out_dir = None, seed = None, replications = None))]
fn run_config<'py>(
    py: Python<'py>,
    path: PathBuf,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    replications: Option<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let overrides = Overrides {
        seed,
        replications,
        out_dir,
        ..Overrides::default()
    };
    let spec = expcli::parse_config(&path, &overrides).map_err(value_error)?;
    let outcome = py.detach(|| expcli::run(&spec)).map_err(|e| match e {
        CliError::Io { .. } => PyOSError::new_err(e.to_string()),
        e => value_error(e),
    })?;
    let d = PyDict::new(py);
    d.set_item("out_dir", &outcome.out_dir)?;
    let verdicts = PyDict::new(py);
    for (id, v) in &outcome.manifest.verdicts {
        verdicts.set_item(id, v.as_str())?;
    }
    d.set_item("verdicts", verdicts)?;
    d.set_item(
        "files",
        outcome
            .manifest
            .files
            .iter()
            .map(|f| f.name.clone())
            .collect::<Vec<_>>(),
    )?;
    d.set_item("pointwise_violation", outcome.pointwise_violation())?;
    Ok(d)
}

#[pymodule]
fn trimlaw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Distribution>()?;
    m.add_class::<TrimmingPlan>()?;
    m.add_class::<Experiment>()?;
    m.add_function(wrap_pyfunction!(trimmed_sum, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_sum, m)?)?;
    m.add_function(wrap_pyfunction!(exceedance_counts, m)?)?;
    m.add_function(wrap_pyfunction!(bernstein_max_tail, m)?)?;
    m.add_function(wrap_pyfunction!(bernstein_relative, m)?)?;
    m.add_function(wrap_pyfunction!(c_eps_psi, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_grid, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add(
        "CONDITION_IDS",
        ConditionId::ALL
            .iter()
            .map(|c| c.as_str())
            .collect::<Vec<_>>(),
    )?;
    Ok(())
}
