use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::btl::PenaltySpec;
use crate::tol;

/// Edge probability of the Erdos-Renyi design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PRule {
    /// `min(1, ln(n)^3 / n)`.
    LogCubed,
    Fixed(f64),
}

impl PRule {
    pub fn p(&self, n: usize) -> f64 {
        match *self {
            PRule::LogCubed => {
                let l = (n as f64).ln();
                (l * l * l / n as f64).min(1.0)
            }
            PRule::Fixed(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    MeanShift,
    Ridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhichRho {
    Exact,
    L2,
    Both,
}

/// Settings shared by all studies. Missing JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    pub p_rule: PRule,
    /// Comparisons per edge.
    #[serde(rename = "L")]
    pub l: u32,
    pub score_range: (f64, f64),
    pub gsq: f64,
    pub penalty: PenaltyKind,
    pub reps: usize,
    pub seed: u64,
    pub which_rho: WhichRho,
    /// Sup-norm size of the alternating-minimization start perturbation.
    pub ao_gap: f64,
    pub ao_steps: usize,
    /// Replace the objective by its quadratic model at the joint minimizer.
    pub ao_surrogate: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_list: vec![100, 200, 400],
            p_rule: PRule::LogCubed,
            l: 1,
            score_range: (0.0, 2.0),
            gsq: tol::DEFAULT_GSQ,
            penalty: PenaltyKind::MeanShift,
            reps: 20,
            seed: 0,
            which_rho: WhichRho::Both,
            ao_gap: 0.001,
            ao_steps: 25,
            ao_surrogate: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |name: &'static str, value: f64| {
            Err(ExperimentError::InvalidConfig(format!("{name} = {value}")))
        };
        if self.reps == 0 {
            return bad("reps", 0.0);
        }
        if self.n_list.is_empty() {
            return Err(ExperimentError::InvalidConfig("n_list is empty".into()));
        }
        for &n in &self.n_list {
            if n < 2 {
                return bad("n", n as f64);
            }
            let p = self.p_rule.p(n);
            if !(p > 0.0 && p <= 1.0) {
                return bad("p", p);
            }
        }
        let (lo, hi) = self.score_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ExperimentError::InvalidConfig(format!(
                "score_range = ({lo}, {hi})"
            )));
        }
        if self.l == 0 {
            return bad("L", 0.0);
        }
        if !(self.gsq > 0.0 && self.gsq.is_finite()) {
            return bad("gsq", self.gsq);
        }
        if !(self.ao_gap > 0.0 && self.ao_gap.is_finite()) {
            return bad("ao_gap", self.ao_gap);
        }
        if self.ao_steps < 4 {
            return bad("ao_steps", self.ao_steps as f64);
        }
        Ok(())
    }

    pub fn penalty_spec(&self) -> PenaltySpec {
        match self.penalty {
            PenaltyKind::MeanShift => PenaltySpec::MeanShift(self.gsq),
            PenaltyKind::Ridge => PenaltySpec::Ridge(self.gsq),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_rule_values() {
        let p = PRule::LogCubed.p(100);
        assert!((p - 100f64.ln().powi(3) / 100.0).abs() < 1e-15);
        assert_eq!(PRule::LogCubed.p(20), 1.0);
        assert_eq!(PRule::Fixed(0.3).p(1000), 0.3);
    }

    #[test]
    fn json_defaults_and_validation() {
        let c = ExperimentConfig::from_json(
            r#"{"n_list": [10], "reps": 3, "p_rule": {"fixed": 0.5}, "L": 2}"#,
        )
        .unwrap();
        assert_eq!(c.n_list, vec![10]);
        assert_eq!(c.l, 2);
        assert_eq!(c.p_rule, PRule::Fixed(0.5));
        assert_eq!(c.score_range, (0.0, 2.0));
        assert!(ExperimentConfig::from_json(r#"{"reps": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"score_range": [2.0, 0.0]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"p_rule": {"fixed": 0.0}}"#).is_err());
    }
}
