//! Run settings from a `key = value` file, overridden by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatmap::{DEFAULT_MIN_CONFIDENCE, DEFAULT_SIGMA};
use crate::hypothesis::{SelectConfig, DEFAULT_IOU_THRESHOLD, DEFAULT_LAMBDA, DEFAULT_PRESENCE_TAU};
use crate::model::GroupBWalls;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub lambda: f64,
    pub iou_threshold: f64,
    pub presence_tau: f64,
    pub sigma: f64,
    pub min_confidence: f64,
    pub b_walls: GroupBWalls,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            lambda: DEFAULT_LAMBDA,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            presence_tau: DEFAULT_PRESENCE_TAU,
            sigma: DEFAULT_SIGMA,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
            b_walls: GroupBWalls::default(),
            seed: 0,
            jobs: 0,
        }
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidInput(m) => Error::schema(path, m),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Settings = toml::from_str(text).map_err(|e| Error::invalid(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid(format!(
                "lambda {} must be finite and >= 0",
                self.lambda
            )));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "iou threshold {} outside (0, 1)",
                self.iou_threshold
            )));
        }
        if !(0.0..1.0).contains(&self.presence_tau) {
            return Err(Error::invalid(format!(
                "presence tau {} outside [0, 1)",
                self.presence_tau
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid(format!("sigma {} must be positive", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::invalid(format!(
                "min confidence {} outside [0, 1]",
                self.min_confidence
            )));
        }
        Ok(())
    }

    pub fn select_config(&self) -> SelectConfig {
        SelectConfig {
            lambda: self.lambda,
            iou_threshold: self.iou_threshold,
            presence_tau: self.presence_tau,
            min_confidence: self.min_confidence,
            b_walls: self.b_walls,
        }
    }
}
