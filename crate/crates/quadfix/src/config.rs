//! JSON configuration for the CLI: space, operator, family, schedule,
//! bound overrides, run and verification settings.

use crate::engine::ProblemInstance;
use crate::hilbert::{HilbertPoint, SpdOperator};
use crate::meta::Counterfunction;
use crate::nonexp::{CyclicFamily, NonexpansiveOp};
use crate::ratekit::{Rate2, RateTable};
use crate::sched::{table_rate, Schedule};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num::bigint::BigUint;
use num::ToPrimitive;
use serde::Deserialize;
use std::sync::Arc;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub space: SpaceCfg,
    #[serde(rename = "operatorA")]
    pub operator_a: OperatorCfg,
    pub family: FamilyCfg,
    pub schedule: ScheduleCfg,
    #[serde(rename = "bounds-overrides", default)]
    pub bounds_overrides: BoundsOverrides,
    #[serde(default)]
    pub run: RunCfg,
    #[serde(default)]
    pub verify: VerifyCfg,
    #[serde(default)]
    pub oracle: Option<OracleCfg>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceCfg {
    pub dim: usize,
    pub u: Vec<f64>,
    pub x0: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorCfg {
    pub matrix: Vec<Vec<f64>>,
    #[serde(rename = "gammaOverride", default)]
    pub gamma_override: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapCfg {
    Identity,
    Halfspace { a: Vec<f64>, b: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Affine { span: Vec<Vec<f64>>, offset: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyCfg {
    pub maps: Vec<MapCfg>,
    pub p: Vec<f64>,
    /// Optional tabulated tau modulus (required for rates when l > 1).
    #[serde(default)]
    pub tau: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleCfg {
    Example {
        gamma: f64,
        l: u64,
    },
    Custom {
        alpha: Vec<f64>,
        gamma: f64,
        l: u64,
        sigma1: Vec<u64>,
        #[serde(default)]
        sigma2: Option<Vec<u64>>,
        /// Rows indexed by m, columns by k.
        #[serde(default, rename = "sigma2star")]
        sigma2_star: Option<Vec<Vec<u64>>>,
        #[serde(default)]
        sigma3: Option<Vec<u64>>,
        #[serde(default)]
        sigma4: Option<Vec<u64>>,
    },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsOverrides {
    #[serde(rename = "kBound", default)]
    pub k_bound: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunCfg {
    pub steps: u64,
    #[serde(default = "default_probes")]
    pub probes: usize,
}

fn default_probes() -> usize {
    4
}

impl Default for RunCfg {
    fn default() -> Self {
        RunCfg {
            steps: 1_000,
            probes: 4,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCfg {
    #[serde(default = "default_kmax")]
    pub kmax: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default)]
    pub counterfunction: Option<Counterfunction>,
    /// Precision rank for the metastability suite.
    #[serde(default)]
    pub k: u64,
}

fn default_kmax() -> u64 {
    10
}
fn default_budget() -> u64 {
    100_000
}
fn default_variant() -> String {
    "c4c2star".into()
}

impl Default for VerifyCfg {
    fn default() -> Self {
        VerifyCfg {
            kmax: default_kmax(),
            budget: default_budget(),
            variant: default_variant(),
            counterfunction: None,
            k: 0,
        }
    }
}

/// Reference solution for the solve/oracle commands: either an affine
/// feasible set (KKT system) or a ball with A = I (nearest point).
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OracleCfg {
    Affine { span: Vec<Vec<f64>>, offset: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

struct Table2(Vec<Vec<u64>>);

impl Rate2 for Table2 {
    fn eval(&self, m: &BigUint, k: &BigUint) -> Option<BigUint> {
        let m = m.to_usize()?;
        let k = k.to_usize()?;
        self.0.get(m)?.get(k).map(|&v| BigUint::from(v))
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        if let Some(f) = &cfg.verify.counterfunction {
            f.validate()?;
        }
        Ok(cfg)
    }

    pub fn build_map(&self, m: &MapCfg) -> Result<NonexpansiveOp> {
        match m {
            MapCfg::Identity => Ok(NonexpansiveOp::Identity),
            MapCfg::Halfspace { a, b } => NonexpansiveOp::halfspace(a.clone(), *b),
            MapCfg::Ball { center, radius } => NonexpansiveOp::ball(center.clone(), *radius),
            MapCfg::Box { lo, hi } => NonexpansiveOp::boxed(lo.clone(), hi.clone()),
            MapCfg::Affine { span, offset } => NonexpansiveOp::affine(span.clone(), offset.clone()),
        }
    }

    pub fn build_schedule(&self) -> Result<Schedule> {
        match &self.schedule {
            ScheduleCfg::Example { gamma, l } => Schedule::example(*gamma, *l),
            ScheduleCfg::Custom {
                alpha,
                gamma,
                l,
                sigma1,
                sigma2,
                sigma2_star,
                sigma3,
                sigma4,
            } => Schedule::custom(
                alpha.clone(),
                Arc::new(RateTable(sigma1.clone())),
                sigma2.clone().map(table_rate),
                sigma2_star
                    .clone()
                    .map(|t| Arc::new(Table2(t)) as crate::ratekit::Rate2Ref),
                sigma3.clone().map(table_rate),
                sigma4.clone().map(table_rate),
                *l,
                *gamma,
            ),
        }
    }

    pub fn build_instance(&self) -> Result<ProblemInstance> {
        let d = self.space.dim;
        let rows = self.operator_a.matrix.len();
        if rows != d || self.operator_a.matrix.iter().any(|r| r.len() != d) {
            return Err(Error::Config(format!(
                "operator matrix must be {d}x{d}"
            )));
        }
        let flat: Vec<f64> = self
            .operator_a
            .matrix
            .iter()
            .flat_map(|r| r.iter().copied())
            .collect();
        let matrix = DMatrix::from_row_slice(d, d, &flat);
        let a = SpdOperator::new(matrix, self.operator_a.gamma_override)?;
        let u = HilbertPoint::new(self.space.u.clone())?;
        let x0 = HilbertPoint::new(self.space.x0.clone())?;
        let maps = self
            .family
            .maps
            .iter()
            .map(|m| self.build_map(m))
            .collect::<Result<Vec<_>>>()?;
        let p = HilbertPoint::new(self.family.p.clone())?;
        let tau = self.family.tau.clone().map(table_rate);
        let family = CyclicFamily::new(maps, p, tau)?;
        let schedule = self.build_schedule()?;
        ProblemInstance::new(a, u, family, schedule, x0, self.bounds_overrides.k_bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"{
        "space": {"dim": 1, "u": [0.5], "x0": [0.0]},
        "operatorA": {"matrix": [[1.0]]},
        "family": {"maps": [{"kind": "identity"}], "p": [0.0]},
        "schedule": {"kind": "example", "gamma": 1.0, "l": 1},
        "run": {"steps": 100},
        "verify": {"kmax": 5, "budget": 10000, "variant": "c4c2star"}
    }"#;

    #[test]
    fn parses_and_builds_demo() {
        let cfg = Config::from_json(DEMO).unwrap();
        let inst = cfg.build_instance().unwrap();
        assert_eq!(inst.dim(), 1);
        assert_eq!(inst.bounds.k_bound, 1);
        assert_eq!(inst.bounds.q, 0);
    }

    #[test]
    fn rejects_malformed_and_mismatched() {
        assert!(Config::from_json("{").is_err());
        assert!(Config::from_json("{\"space\": {}}").is_err());
        let bad_dim = DEMO.replace("\"dim\": 1", "\"dim\": 2");
        let cfg = Config::from_json(&bad_dim).unwrap();
        assert!(cfg.build_instance().is_err());
    }

    #[test]
    fn custom_schedule_round_trip() {
        let text = r#"{
            "space": {"dim": 1, "u": [0.5], "x0": [0.0]},
            "operatorA": {"matrix": [[1.0]]},
            "family": {"maps": [{"kind": "identity"}], "p": [0.0]},
            "schedule": {"kind": "custom", "alpha": [1.0, 0.5, 0.25], "gamma": 1.0, "l": 1,
                         "sigma1": [0, 1, 2], "sigma3": [0, 1, 2]},
            "verify": {"counterfunction": {"kind": "table", "values": [5, 3, 8]}}
        }"#;
        let cfg = Config::from_json(text).unwrap();
        let sched = cfg.build_schedule().unwrap();
        assert_eq!(sched.alpha(1).unwrap(), 0.5);
        assert!(sched.sigma2.is_none());
        let inst = cfg.build_instance().unwrap();
        assert_eq!(inst.bounds.l, 1);
    }

    #[test]
    fn counterfunction_table_must_be_nonempty() {
        let text = DEMO.replace(
            "\"variant\": \"c4c2star\"",
            "\"variant\": \"c4c2star\", \"counterfunction\": {\"kind\": \"table\", \"values\": []}",
        );
        assert!(Config::from_json(&text).is_err());
    }
}
