//! Overridable defaults, loadable from a JSON file. Every section and field
//! is optional; missing values keep their defaults.

use serde::{Deserialize, Serialize};

use crate::dvs::DvsWeights;
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::fit::FitConfig;
use crate::map::{BevRange, ClassBudgets};
use crate::raster::{GridSpec, MaskLossWeights};
use crate::simplify::SimplifyConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub range: BevRange,
    pub budgets: ClassBudgets,
    pub simplify: SimplifyConfig,
    pub dvs_weights: DvsWeights,
    pub mask_weights: MaskLossWeights,
    pub grid: GridSpec,
    pub eval: EvalConfig,
    pub fit: FitConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.range.validate()?;
        self.budgets.validate()?;
        self.simplify.validate()?;
        self.dvs_weights.validate()?;
        self.grid.validate()?;
        self.eval.validate()?;
        self.fit.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override() {
        let cfg = Config::from_json(
            r#"{"dvs_weights": {"alpha2": 0.0}, "eval": {"thresholds": [0.5, 1.0, 1.5]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.dvs_weights.alpha1, 5.0);
        assert_eq!(cfg.dvs_weights.alpha2, 0.0);
        assert_eq!(cfg.eval.thresholds, vec![0.5, 1.0, 1.5]);
        assert_eq!(cfg.eval.sample_step, 0.1);
        assert_eq!(cfg.grid.height, 64);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(Config::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(Config::from_json(r#"{"simplify": {"area_threshold": -1}}"#).is_err());
    }
}
