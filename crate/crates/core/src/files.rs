//! JSON file formats for states, measurement families, multiparty states
//! and protocols.
//!
//! Complex scalars are two-element arrays `[re, im]`; matrices are arrays
//! of row arrays. Parsing and validation are separate stages: the `*File`
//! types only mirror the JSON shape, and turning them into domain values
//! runs the full invariant checks.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::locc::{LocalOp, Protocol, ProtocolStep};
use crate::measurement::{BistochasticFlag, Povm};
use crate::multiparty::{MultipartyState, TensorSpace};
use crate::state::DensityMatrix;

/// `{ "dim": n, "matrix": [[ [re,im], … ], …] }`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: ComplexMatrix,
}

impl StateFile {
    pub fn from_state(state: &DensityMatrix) -> Self {
        StateFile {
            dim: state.dim(),
            matrix: state.matrix().clone(),
        }
    }

    pub fn into_state(self, cfg: &Config) -> Result<DensityMatrix> {
        if self.matrix.rows() != self.dim || self.matrix.cols() != self.dim {
            return Err(Error::DimMismatch {
                context: "state file dim field vs matrix",
                left: self.dim,
                right: self.matrix.rows(),
            });
        }
        DensityMatrix::new(self.matrix, cfg)
    }
}

/// `{ "dim": n, "operators": [matrix, …] }`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmFile {
    pub dim: usize,
    pub operators: Vec<ComplexMatrix>,
}

impl PovmFile {
    pub fn from_povm(povm: &Povm) -> Self {
        PovmFile {
            dim: povm.dim(),
            operators: povm.operators().to_vec(),
        }
    }

    pub fn into_povm(self, cfg: &Config) -> Result<(Povm, BistochasticFlag)> {
        for op in &self.operators {
            if op.rows() != self.dim || op.cols() != self.dim {
                return Err(Error::DimMismatch {
                    context: "povm file dim field vs operator",
                    left: self.dim,
                    right: op.rows(),
                });
            }
        }
        Povm::new(self.operators, cfg)
    }
}

/// `{ "factors": [d1, …, dn], "matrix": … }`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultipartyStateFile {
    pub factors: Vec<usize>,
    pub matrix: ComplexMatrix,
}

impl MultipartyStateFile {
    pub fn from_state(ms: &MultipartyState) -> Self {
        MultipartyStateFile {
            factors: ms.space().factor_dims().to_vec(),
            matrix: ms.state().matrix().clone(),
        }
    }

    pub fn into_state(self, cfg: &Config) -> Result<MultipartyState> {
        let space = TensorSpace::new(self.factors, cfg)?;
        let state = DensityMatrix::new(self.matrix, cfg)?;
        MultipartyState::new(space, state)
    }
}

/// One step of a protocol file. `agent` is 1-based; `kind` is `"unitary"`
/// or `"measurement"`; `payload` is the default operation and `adaptive`
/// maps outcome-history keys (`"0,1"`) to overriding operations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolStepFile {
    pub agent: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<PayloadFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<BTreeMap<String, PayloadFile>>,
}

/// A payload is either a single matrix (unitary) or an array of matrices
/// (measurement family).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayloadFile {
    Unitary(ComplexMatrix),
    Measurement(Vec<ComplexMatrix>),
}

/// `{ "factors": [...], "steps": [...] }`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub factors: Vec<usize>,
    pub steps: Vec<ProtocolStepFile>,
}

impl ProtocolFile {
    pub fn into_protocol(self, cfg: &Config) -> Result<Protocol> {
        let space = TensorSpace::new(self.factors, cfg)?;
        let mut steps = Vec::with_capacity(self.steps.len());
        for (index, step) in self.steps.into_iter().enumerate() {
            steps.push(convert_step(step, cfg).map_err(|e| e.at_step(index, &[]))?);
        }
        Protocol::new(space, steps, cfg)
    }
}

fn convert_step(step: ProtocolStepFile, cfg: &Config) -> Result<ProtocolStep> {
    if step.agent == 0 {
        return Err(Error::AgentOutOfRange {
            agent: 0,
            parties: 0,
        });
    }
    let agent = step.agent - 1; // files are 1-based
    let expect_measurement = match step.kind.as_str() {
        "unitary" => false,
        "measurement" => true,
        _ => {
            return Err(Error::Config {
                reason: "step kind must be \"unitary\" or \"measurement\"",
            })
        }
    };
    let convert = |p: PayloadFile| -> Result<LocalOp> {
        match (p, expect_measurement) {
            (PayloadFile::Unitary(u), false) => Ok(LocalOp::Unitary(u)),
            (PayloadFile::Measurement(ops), true) => Ok(LocalOp::Measurement(Povm::new(ops, cfg)?.0)),
            _ => Err(Error::Config {
                reason: "payload shape does not match the declared kind",
            }),
        }
    };
    let default = step.payload.map(convert).transpose()?;
    let adaptive = step
        .adaptive
        .unwrap_or_default()
        .into_iter()
        .map(|(k, v)| Ok((k, convert(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    if adaptive.is_empty() {
        let op = default.ok_or(Error::Config {
            reason: "step needs a payload or an adaptive map",
        })?;
        Ok(ProtocolStep::fixed(agent, op))
    } else {
        ProtocolStep::adaptive(agent, adaptive, default)
    }
}

/// Load and parse a JSON file. I/O and syntax problems come back as
/// `Err(String)` so callers can report them distinctly from invariant
/// failures.
pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Serialize a value as pretty JSON into a file.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> std::result::Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

/// A vector-or-state operand for majorization comparisons: either a plain
/// JSON array of reals or a state file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VectorOrState {
    Vector(Vec<f64>),
    State(StateFile),
}
