use num::bigint::BigUint;
use num::ToPrimitive;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use quadfix::asreg::{example_closed_forms, RateCalc, SigmaVariant};
use quadfix::config::Config;
use quadfix::engine::{self, Trajectory};
use quadfix::meta::{Counterfunction, MetaParams};
use quadfix::verify::{self, Combinator};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_counterfunction(json: &str) -> PyResult<Counterfunction> {
    let f: Counterfunction =
        serde_json::from_str(json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    f.validate().map_err(err)?;
    Ok(f)
}

/// A fully built problem: operator, map family, step-size schedule and
/// the derived instance bounds, constructed from the same JSON document
/// the CLI takes.
#[pyclass]
struct Instance {
    cfg: Config,
    inst: engine::ProblemInstance,
}

#[pymethods]
impl Instance {
    #[new]
    fn new(config_json: &str) -> PyResult<Self> {
        let cfg = Config::from_json(config_json).map_err(err)?;
        let inst = cfg.build_instance().map_err(err)?;
        Ok(Instance { cfg, inst })
    }

    /// Derived bounds (K, Q, bA, bU, bP, gamma, l).
    fn bounds(&self) -> PyResult<(u64, u64, u64, u64, u64, f64, u64)> {
        let b = &self.inst.bounds;
        Ok((b.k_bound, b.q, b.b_a, b.b_u, b.b_p, b.gamma, b.l))
    }

    /// Coordinates of the iterate x_n.
    fn point(&self, n: u64) -> PyResult<Vec<f64>> {
        let mut traj = Trajectory::new(&self.inst);
        Ok(traj.point(n).map_err(err)?.iter().copied().collect())
    }

    /// Composite residual, individual residuals and the l-step gap at n.
    fn residuals(&self, n: u64) -> PyResult<(f64, Vec<f64>, f64)> {
        let mut traj = Trajectory::new(&self.inst);
        let r = engine::residuals(&mut traj, n).map_err(err)?;
        Ok((r.r_tilde, r.r_i, r.gap_l))
    }

    /// Rate table row for precision rank k under the given sigma variant.
    /// Values saturate to None above `cap`.
    #[pyo3(signature = (k, variant="c4c2star", cap=1_000_000_000))]
    fn rates(&self, k: u64, variant: &str, cap: u64) -> PyResult<Vec<Option<u64>>> {
        let variant = SigmaVariant::parse(variant).map_err(err)?;
        let calc = RateCalc::new(&self.inst.bounds, &self.inst.schedule, cap);
        let tau = self.inst.family.tau_rate().map_err(err)?;
        let kb = BigUint::from(k);
        let to_opt = |v: quadfix::ratekit::ExtNat| v.as_big().and_then(|b| b.to_u64());
        Ok(vec![
            to_opt(calc.psi_upper(&kb)),
            to_opt(calc.psi(&kb).map_err(err)?),
            to_opt(calc.sigma_gap(variant, &kb).map_err(err)?),
            to_opt(calc.phi(variant, &kb).map_err(err)?),
            to_opt(calc.phi_tilde(variant, &tau, &kb).map_err(err)?),
        ])
    }

    /// Metastability bound Omega(k, f), or None when it saturates.
    #[pyo3(signature = (k, counterfunction_json, variant="c4c2star", cap=1_000_000_000))]
    fn omega(
        &self,
        k: u64,
        counterfunction_json: &str,
        variant: &str,
        cap: u64,
    ) -> PyResult<Option<u64>> {
        let f = parse_counterfunction(counterfunction_json)?;
        let variant = SigmaVariant::parse(variant).map_err(err)?;
        let calc = RateCalc::new(&self.inst.bounds, &self.inst.schedule, cap);
        let tau = self.inst.family.tau_rate().map_err(err)?;
        let params = MetaParams::new(&calc, variant, tau);
        let v = params.omega(&BigUint::from(k), &f).map_err(err)?;
        Ok(v.as_big().and_then(|b| b.to_u64()))
    }

    /// Least N with the window [N, f~(N)] inside one 1/(k+1) ball, or
    /// None if the search budget runs out.
    #[pyo3(signature = (k, counterfunction_json, budget=100_000))]
    fn find_metastable_n(
        &self,
        k: u64,
        counterfunction_json: &str,
        budget: u64,
    ) -> PyResult<Option<u64>> {
        let f = parse_counterfunction(counterfunction_json)?;
        verify::find_metastable_n(&self.inst, k, &f, budget).map_err(err)
    }

    /// (passes, failures, skipped) for the asymptotic-regularity sweep.
    #[pyo3(signature = (kmax=10, budget=100_000, variant="c4c2star"))]
    fn verify_asreg(&self, kmax: u64, budget: u64, variant: &str) -> PyResult<(u64, u64, u64)> {
        let variant = SigmaVariant::parse(variant).map_err(err)?;
        let r = verify::verify_asreg(&self.inst, variant, kmax, budget).map_err(err)?;
        let s = r.summary();
        Ok((s.passes, s.failures, s.skipped))
    }

    /// (passes, failures, skipped) for the Cauchy-gap sweep.
    #[pyo3(signature = (kmax=10, budget=100_000, variant="c4c2star"))]
    fn verify_gap(&self, kmax: u64, budget: u64, variant: &str) -> PyResult<(u64, u64, u64)> {
        let variant = SigmaVariant::parse(variant).map_err(err)?;
        let r = verify::verify_cauchy_gap(&self.inst, variant, kmax, budget).map_err(err)?;
        let s = r.summary();
        Ok((s.passes, s.failures, s.skipped))
    }

    /// Max deviation from Yamada's hybrid steepest descent recursion.
    #[pyo3(signature = (steps=10_000))]
    fn check_embedding(&self, steps: u64) -> PyResult<f64> {
        engine::check_embedding(&self.inst, steps).map_err(err)
    }

    /// (checks, violations) from the per-step inequality monitors.
    #[pyo3(signature = (steps=1_000, probes=4, seed=42))]
    fn run_monitors(&self, steps: u64, probes: usize, seed: u64) -> PyResult<(u64, usize)> {
        let stats = engine::run_with_monitors(&self.inst, steps, probes, seed).map_err(err)?;
        Ok((stats.checks, stats.violations.len()))
    }

    /// KKT reference solution when the config declares an affine oracle.
    fn oracle_point(&self) -> PyResult<Vec<f64>> {
        match &self.cfg.oracle {
            Some(quadfix::config::OracleCfg::Affine { span, offset }) => {
                let x = engine::kkt_oracle(&self.inst.a, &self.inst.u, span, offset)
                    .map_err(err)?;
                Ok(x.coords().iter().copied().collect())
            }
            _ => Err(PyValueError::new_err("config has no affine oracle")),
        }
    }
}

/// Closed-form rates (Phi*, PhiTilde*) for the harmonic example schedule;
/// None where a value exceeds `cap`.
#[pyfunction]
#[pyo3(signature = (j, l, k_bound, b_a, gamma, k, cap=u64::MAX))]
fn closed_form_rates(
    j: u64,
    l: u64,
    k_bound: u64,
    b_a: u64,
    gamma: f64,
    k: u64,
    cap: u64,
) -> (Option<u64>, Option<u64>) {
    let (a, b) = example_closed_forms(j, l, k_bound, b_a, gamma, &BigUint::from(k), cap);
    (
        a.as_big().and_then(|v| v.to_u64()),
        b.as_big().and_then(|v| v.to_u64()),
    )
}

/// Randomized exact-rational recurrence oracle; returns
/// (passes, failures, skipped).
#[pyfunction]
#[pyo3(signature = (combinator, cases=100, seed=42, kmax=10))]
fn xu_lemma_oracle(combinator: &str, cases: u32, seed: u64, kmax: u64) -> PyResult<(u64, u64, u64)> {
    let comb = match combinator {
        "sigma0" => Combinator::Sigma0,
        "sigma0star" => Combinator::Sigma0Star,
        "xumeta" => Combinator::XuMetaSigma,
        "xumetastar" => Combinator::XuMetaSigmaStar,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown combinator {other:?}; expected sigma0 | sigma0star | xumeta | xumetastar"
            )))
        }
    };
    let s = verify::xu_lemma_oracle(comb, cases, seed, kmax).summary();
    Ok((s.passes, s.failures, s.skipped))
}

#[pymodule]
fn quadfix_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_function(wrap_pyfunction!(closed_form_rates, m)?)?;
    m.add_function(wrap_pyfunction!(xu_lemma_oracle, m)?)?;
    Ok(())
}
