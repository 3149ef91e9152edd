//! JSON file formats: measurement plugins, correlation tensors and Bell
//! functionals. Every loader validates the module invariants before handing
//! the data on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::construction::{Povm, Scenario};
use crate::error::{Error, Result};
use crate::keyrate::Correlation;
use crate::locality::BellFunctional;
use crate::matrix::ComplexMatrix;

/// Measurement plugin file:
/// `{ "dim": n, "settings": [ { "outcomes": [ [[re,im], ...], ... ] } ] }`,
/// each outcome a dim×dim matrix given as a row-major list of [re, im] pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub dim: usize,
    pub settings: Vec<MeasurementSetting>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub outcomes: Vec<Vec<[f64; 2]>>,
}

impl MeasurementFile {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measurement file serializes")
    }

    /// Validates the POVM invariants and converts each setting.
    pub fn into_povms(self) -> Result<Vec<Povm>> {
        let dim = self.dim;
        if dim == 0 {
            return Err(Error::InvalidFile("dimension must be positive".into()));
        }
        self.settings
            .into_iter()
            .enumerate()
            .map(|(idx, setting)| {
                let effects = setting
                    .outcomes
                    .into_iter()
                    .enumerate()
                    .map(|(o, flat)| {
                        if flat.len() != dim * dim {
                            return Err(Error::InvalidFile(format!(
                                "setting {idx} outcome {o}: expected {} entries, got {}",
                                dim * dim,
                                flat.len()
                            )));
                        }
                        ComplexMatrix::new(
                            dim,
                            dim,
                            flat.into_iter()
                                .map(|[re, im]| Complex64::new(re, im))
                                .collect(),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Povm::new(effects)
            })
            .collect()
    }

    /// Serializes existing POVMs, e.g. to generate plugin templates.
    pub fn from_povms(povms: &[Povm]) -> Result<Self> {
        let dim = povms
            .first()
            .map(|p| p.dim())
            .ok_or_else(|| Error::InvalidFile("no settings".into()))?;
        let settings = povms
            .iter()
            .map(|p| MeasurementSetting {
                outcomes: p
                    .effects()
                    .iter()
                    .map(|e| e.data().iter().map(|z| [z.re, z.im]).collect())
                    .collect(),
            })
            .collect();
        Ok(Self { dim, settings })
    }
}

/// Correlation file: `{ "scenario": {...}, "p": [x][y][a][b] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationFile {
    pub scenario: Scenario,
    pub p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl CorrelationFile {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("correlation file serializes")
    }

    /// Validated conversion.
    pub fn into_correlation(self) -> Result<Correlation> {
        Correlation::new(self.scenario, self.p)
    }

    pub fn from_correlation(corr: &Correlation) -> Self {
        Self {
            scenario: corr.scenario().clone(),
            p: corr.values().clone(),
        }
    }
}

/// Bell functional file: `{ "scenario": {...}, "c": [x][y][a][b] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalFile {
    pub scenario: Scenario,
    pub c: Vec<Vec<Vec<Vec<f64>>>>,
}

impl FunctionalFile {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("functional file serializes")
    }

    pub fn into_functional(self) -> Result<BellFunctional> {
        BellFunctional::new(self.scenario, self.c)
    }
}
