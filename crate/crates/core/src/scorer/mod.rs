//! Region/language matching model: positional encodings, batch assembly,
//! forward pass with analytic gradients, and the training loop with negative
//! viewpoint augmentation.

mod batch;
mod model;
mod params;
pub mod tensor;
mod train;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use batch::{
    assemble_batch, assemble_mixed_batch, nearest_viewpoints, padded_text, positional_encoding,
    viewpoint_mean_feature, BatchOptions, CoordinateFrame, Labels, PosEnc4, RegionRef,
    ViewpointBatch,
};
pub use model::{
    bce_with_logit, forward, forward_logits, loss, loss_and_grad, sigmoid, LOGIT_CLAMP,
};
pub use params::{ScorerDims, ScorerParams, TENSOR_NAMES};
pub use train::{
    region_labels, sample_training_viewpoint, train, TrainConfig, TrainReport, TrainSample,
    TrainStats,
};

use crate::world::ViewpointId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub viewpoint_id: ViewpointId,
    pub region_index: usize,
    pub score: f64,
}

/// Scores of every candidate region scored during one inference, ordered by
/// `(viewpoint_id, region_index)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub entries: Vec<ScoreEntry>,
}

impl ScoreTable {
    pub fn insert(&mut self, entry: ScoreEntry) {
        let key = (entry.viewpoint_id, entry.region_index);
        match self
            .entries
            .binary_search_by(|e| (e.viewpoint_id, e.region_index).cmp(&key))
        {
            Ok(i) => self.entries[i] = entry,
            Err(i) => self.entries.insert(i, entry),
        }
    }

    pub fn get(&self, viewpoint_id: ViewpointId, region_index: usize) -> Option<f64> {
        self.entries
            .binary_search_by(|e| {
                (e.viewpoint_id, e.region_index).cmp(&(viewpoint_id, region_index))
            })
            .ok()
            .map(|i| self.entries[i].score)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Highest score; ties go to the lowest `(viewpoint_id, region_index)`.
    pub fn argmax(&self) -> Option<ScoreEntry> {
        self.entries
            .iter()
            .copied()
            .fold(None, |best, e| match best {
                Some(b) if b.score >= e.score => Some(b),
                _ => Some(e),
            })
    }
}
