//! Nested-lattice decode-and-forward for two-hop Gaussian networks whose
//! additive interference is known at a node other than the one it hits.
//!
//! * [`lattice`]: self-similar chains `Λ ⊆ Λc ⊆ Λq`, quantization, codebooks, lists.
//! * [`channel`]: interference generators and the hop laws of both models.
//! * [`model1`]: interference at the relay, known at the destination (list decoding).
//! * [`model2`]: interference at the destination, known at the source (pre-cancellation).
//! * [`rates`]: closed-form rates, the half-bit gap, and the nesting planner.
//! * [`sim`], [`config`], [`output`], [`verify`]: the Monte Carlo harness.

pub mod channel;
pub mod config;
pub mod error;
pub mod lattice;
pub mod model1;
pub mod model2;
pub mod output;
pub mod rates;
pub mod sim;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
