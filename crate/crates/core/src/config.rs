//! Numerical tolerances. Defaults are fixed so that runs are reproducible;
//! tests may override individual values through `FSIM_TOL_OVERRIDES`.

use serde::{Deserialize, Serialize};

pub const OVERRIDE_ENV: &str = "FSIM_TOL_OVERRIDES";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Decision band on Lie-derivative values.
    pub classify: f64,
    /// Minimum |Yf - Xf| for the sliding field.
    pub denominator: f64,
    /// Transversality as sin of the minimum angle.
    pub transversality: f64,
    /// |ζ| below which a fixed point counts as a loop.
    pub loop_zeta: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Residual |g| targeted by event location.
    pub event: f64,
    /// Base step for first derivatives of maps.
    pub fd_step: f64,
    /// Base step for second derivatives of maps.
    pub fd_step_second: f64,
    /// Maximum polyline segment length in chart units.
    pub max_seg: f64,
    /// Residual |P(p) - p| accepted for fixed points.
    pub fixed_point: f64,
    /// Band around |ψ'| = 1 flagged as saddle-node.
    pub saddle_node: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            classify: 1e-7,
            denominator: 1e-10,
            transversality: 1e-4,
            loop_zeta: 1e-6,
            rtol: 1e-10,
            atol: 1e-12,
            event: 1e-12,
            fd_step: 1e-4,
            fd_step_second: 1e-2,
            max_seg: 1e-2,
            fixed_point: 1e-9,
            saddle_node: 1e-3,
        }
    }
}

impl Tolerances {
    /// Defaults with any fields given in the JSON object `text` replaced.
    pub fn with_overrides(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("{OVERRIDE_ENV}: {e}"))
    }

    /// Defaults, overridden from the environment when the variable is set.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(OVERRIDE_ENV) {
            Ok(text) if !text.trim().is_empty() => Self::with_overrides(&text),
            _ => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override_keeps_defaults() {
        let t = Tolerances::with_overrides(r#"{"classify": 1e-5}"#).unwrap();
        assert_eq!(t.classify, 1e-5);
        assert_eq!(t.rtol, 1e-10);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(Tolerances::with_overrides(r#"{"nope": 1}"#).is_err());
    }
}
