//! Tokenizer-aware tooling for token-internal position training data and
//! position-based Chinese spelling correction.
//!
//! The crate is organised in four layers:
//!
//! - [`tokenizer`]: vocabulary loading, byte-level surface decoding, the UTF-8
//!   gate and a greedy BPE encoder used for pruning and token counting.
//! - [`dataset`]: per-token (TIPA) and per-sentence (MTIPA) position mapping
//!   records and their JSONL form.
//! - [`csc`]: conversion between equal-length correction pairs and
//!   `{position, incorrect, correction}` edit lists.
//! - [`metrics`]: position-based and traditional scoring.
//!
//! The [`cli`] module wires these into the `tipa` binary.

pub mod cli;
pub mod csc;
pub mod dataset;
pub mod metrics;
pub mod tokenizer;

mod json;
