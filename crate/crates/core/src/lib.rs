//! Remote referring-expression grounding on synthetic topological worlds.
//!
//! The crate is `no_std` (with `alloc`) and contains every algorithmic piece:
//! procedural environments and noisy region proposals ([`world`]), template
//! referring expressions ([`language`]), the trainable region/language scorer
//! with analytic gradients ([`scorer`]), frontier exploration and
//! viewpoint-grouped inference ([`agent`]), and the navigation/grounding
//! metrics plus the ablation runner ([`eval`]). File formats, the CLI and
//! parallel drivers live in the `rrex-lab` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agent;
pub mod benchmark;
mod error;
pub mod eval;
pub mod geom;
pub mod language;
mod rng;
pub mod scorer;
pub mod world;

pub use error::{Error, Result};
pub use rng::{rng_from_seed, substream, Rng};

/// Version tag written into every serialized document.
pub const SCHEMA_VERSION: u32 = 1;
