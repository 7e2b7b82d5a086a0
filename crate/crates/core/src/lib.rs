//! Score expansion: split a symbolic piece at a phrase boundary, open an
//! artificial gap, fill it with an [`expansion::Infiller`] and measure how
//! well the boundary survives.
//!
//! The pipeline is
//!
//! ```text
//! MIDI bytes --parse_midi--> Score --quantize--> QuantizedScore --encode--> TokenSequence
//!     --split_at_boundary--> (past, future) --Infiller--> new
//!     --boundary_analysis--> grooving and register similarities
//! ```
//!
//! See the crate's `examples/` directory for one runnable program per stage.

pub mod cli;
pub mod expansion;
pub mod fixtures;
pub mod harness;
pub mod metrics;
pub mod midi;
pub mod tokenizer;

pub use expansion::{expand, split_at_boundary, ExpansionRequest, Infiller};
pub use metrics::{boundary_analysis, BoundaryAnalysis};
pub use midi::{parse_midi, quantize, write_midi, NoteEvent, QuantizedScore, Score};
pub use tokenizer::{decode, encode, Token, TokenSequence};
