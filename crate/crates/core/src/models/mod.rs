//! Named model registry.
//!
//! Each concrete model builds a solver-ready problem from a flat parameter
//! map; the CLI and config layer select one by name at runtime.

pub mod forex;
pub mod labor;

use std::collections::BTreeMap;

use crate::band::BandProblem;
use crate::error::{Error, Result};
use crate::threshold::ThresholdProblem;

use forex::{DelayedCostForm, ForexParams};
use labor::LaborParams;

/// Which solver a built problem is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Threshold,
    Band,
}

/// A problem built by a registered model.
pub enum BuiltProblem {
    Threshold(ThresholdProblem),
    Band(BandProblem),
}

/// A named model that can build its problem from a parameter map.
pub trait ModelSpec: Send + Sync {
    fn name(&self) -> &'static str;
    fn solver_kind(&self) -> SolverKind;
    fn param_names(&self) -> &'static [&'static str];
    /// Name of the implementation-delay parameter in the map.
    fn delay_param(&self) -> &'static str;
    /// Reference parameter set (the worked examples).
    fn default_params(&self) -> BTreeMap<String, f64>;
    fn build(&self, params: &BTreeMap<String, f64>) -> Result<BuiltProblem>;
}

fn require(params: &BTreeMap<String, f64>, key: &str, model: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::Config(format!("model '{model}' needs parameter '{key}'")))
}

struct ForexSpec;

impl ModelSpec for ForexSpec {
    fn name(&self) -> &'static str {
        "forex"
    }

    fn solver_kind(&self) -> SolverKind {
        SolverKind::Threshold
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["c", "lambda", "alpha", "delta", "legacy_r"]
    }

    fn delay_param(&self) -> &'static str {
        "delta"
    }

    fn default_params(&self) -> BTreeMap<String, f64> {
        [("c", 150.0), ("lambda", 50.0), ("alpha", 0.2), ("delta", 1.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    fn build(&self, params: &BTreeMap<String, f64>) -> Result<BuiltProblem> {
        let mut p = ForexParams::new(
            require(params, "c", "forex")?,
            require(params, "lambda", "forex")?,
            require(params, "alpha", "forex")?,
            require(params, "delta", "forex")?,
        )?;
        if params.get("legacy_r").copied().unwrap_or(0.0) != 0.0 {
            p = p.with_r_form(DelayedCostForm::Legacy);
        }
        Ok(BuiltProblem::Threshold(p.build()?))
    }
}

struct LaborSpec;

impl ModelSpec for LaborSpec {
    fn name(&self) -> &'static str {
        "labor"
    }

    fn solver_kind(&self) -> SolverKind {
        SolverKind::Band
    }

    fn param_names(&self) -> &'static [&'static str] {
        &[
            "b", "r", "mu", "sigma", "delta", "A", "w", "delta_lag", "c1", "c2", "c3", "c4",
        ]
    }

    fn delay_param(&self) -> &'static str {
        "delta_lag"
    }

    fn default_params(&self) -> BTreeMap<String, f64> {
        [
            ("b", 0.03),
            ("r", 0.06),
            ("mu", 0.75),
            ("sigma", 0.35),
            ("delta", 0.1),
            ("A", 5.0),
            ("w", 2.0),
            ("delta_lag", 0.5),
            ("c1", 0.05),
            ("c2", 0.1),
            ("c3", 2.0),
            ("c4", 1.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    fn build(&self, params: &BTreeMap<String, f64>) -> Result<BuiltProblem> {
        let p = LaborParams {
            demand_drift: require(params, "b", "labor")?,
            discount_rate: require(params, "r", "labor")?,
            monopoly_exponent: require(params, "mu", "labor")?,
            sigma: require(params, "sigma", "labor")?,
            quit_rate: require(params, "delta", "labor")?,
            productivity: require(params, "A", "labor")?,
            wage: require(params, "w", "labor")?,
            delay: require(params, "delta_lag", "labor")?,
            c1: require(params, "c1", "labor")?,
            c2: require(params, "c2", "labor")?,
            c3: require(params, "c3", "labor")?,
            c4: require(params, "c4", "labor")?,
        };
        Ok(BuiltProblem::Band(p.build()?))
    }
}

/// Name-keyed registry of the built-in models.
pub struct ModelRegistry {
    entries: Vec<Box<dyn ModelSpec>>,
}

impl ModelRegistry {
    pub fn builtin() -> Self {
        Self {
            entries: vec![Box::new(ForexSpec), Box::new(LaborSpec)],
        }
    }

    pub fn get(&self, name: &str) -> Result<&dyn ModelSpec> {
        self.entries
            .iter()
            .map(|e| e.as_ref())
            .find(|e| e.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model '{name}' (available: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_both_models() {
        let reg = ModelRegistry::builtin();
        assert_eq!(reg.names(), vec!["forex", "labor"]);
        for name in reg.names() {
            let spec = reg.get(name).unwrap();
            let built = spec.build(&spec.default_params()).unwrap();
            match (spec.solver_kind(), built) {
                (SolverKind::Threshold, BuiltProblem::Threshold(_)) => {}
                (SolverKind::Band, BuiltProblem::Band(_)) => {}
                _ => panic!("solver kind mismatch for {name}"),
            }
        }
        assert!(reg.get("nope").is_err());
    }

    #[test]
    fn missing_parameter_is_config_error() {
        let reg = ModelRegistry::builtin();
        let spec = reg.get("forex").unwrap();
        let mut params = spec.default_params();
        params.remove("alpha");
        assert!(matches!(spec.build(&params), Err(Error::Config(_))));
    }
}
