//! Wire format for circuit files.
//!
//! The JSON schema is deliberately explicit: complex numbers are `[re, im]`
//! pairs, the interferometer is a nested row-major matrix of those pairs,
//! and `detected_modes` counts from 1, which is how lab mode labels usually
//! arrive. Unknown fields are rejected so typos fail loudly instead of
//! silently running a different circuit.

use anyhow::{bail, Context};
use fockwalk::gaussian::{CircuitSpec, CutoffMode, Squeeze};
use fockwalk::mat::CMat;
use fockwalk::C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqueezeParam {
    pub r: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CutoffModeFile {
    Local,
    GlobalPhotons(usize),
    ProbabilityMass(f64),
}

fn default_cutoff_mode() -> CutoffModeFile {
    CutoffModeFile::Local
}

/// On-disk circuit description. See `CircuitFile::into_spec` for the
/// conversion rules.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub modes: usize,
    pub squeeze_params: Vec<SqueezeParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interferometer: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_transmissivity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacements: Option<Vec<[f64; 2]>>,
    pub cutoffs: Vec<usize>,
    /// One-based mode labels; omitted means "detect everything".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detected_modes: Option<Vec<usize>>,
    #[serde(default = "default_cutoff_mode")]
    pub cutoff_mode: CutoffModeFile,
}

impl CircuitFile {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("circuit file is not valid JSON for the schema")
    }

    /// Convert to the engine's circuit description (zero-based modes,
    /// complex scalars) and run its structural validation.
    pub fn into_spec(self) -> anyhow::Result<CircuitSpec> {
        let interferometer = match self.interferometer {
            None => None,
            Some(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    bail!("interferometer must be square");
                }
                Some(CMat::from_fn(n, n, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
            }
        };
        let detected_modes = match self.detected_modes {
            None => (0..self.modes).collect(),
            Some(labels) => {
                let mut ids = Vec::with_capacity(labels.len());
                for label in labels {
                    if label == 0 {
                        bail!("detected_modes counts from 1");
                    }
                    ids.push(label - 1);
                }
                ids
            }
        };
        let spec = CircuitSpec {
            modes: self.modes,
            squeeze: self.squeeze_params.into_iter().map(|s| Squeeze { r: s.r, phase: s.phase }).collect(),
            interferometer,
            loss: self.loss_transmissivity,
            displacements: self
                .displacements
                .map(|ds| ds.into_iter().map(|[re, im]| C64::new(re, im)).collect()),
            cutoffs: self.cutoffs,
            detected_modes,
            cutoff_mode: match self.cutoff_mode {
                CutoffModeFile::Local => CutoffMode::Local,
                CutoffModeFile::GlobalPhotons(n) => CutoffMode::GlobalPhotons(n),
                CutoffModeFile::ProbabilityMass(x) => CutoffMode::ProbabilityMass(x),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}
