use alloc::string::String;

use crate::world::{ObjectId, ViewpointId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error("environment generation failed after {attempts} attempts: {constraint}")]
    Unsolvable { attempts: u32, constraint: String },
    #[error("unknown viewpoint {0}")]
    UnknownViewpoint(ViewpointId),
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("unknown environment {0}")]
    UnknownEnvironment(u32),
    #[error("unknown episode {0}")]
    UnknownEpisode(u64),
    #[error("viewpoint {to} is unreachable from {from}")]
    Unreachable { from: ViewpointId, to: ViewpointId },
    #[error("no start viewpoint is {min}..={max} steps from any object; achievable range is {achievable}")]
    DistanceRange {
        min: u32,
        max: u32,
        achievable: String,
    },
    #[error("template set is empty")]
    EmptyTemplateSet,
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("training diverged at epoch {epoch}, step {step} (loss {loss})")]
    Divergence {
        epoch: usize,
        step: usize,
        loss: f64,
    },
    #[error("no candidate region among the visited viewpoints")]
    NoCandidates,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unknown toggle `{0}`")]
    UnknownToggle(String),
}
