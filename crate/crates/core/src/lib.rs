//! Symbolic music tokenization engine.
//!
//! Reads and writes Standard MIDI Files, downsamples scores onto fixed
//! grids, converts them to token sequences under several grammars, learns
//! and applies byte pair encoding over those sequences, scores sequences for
//! grammar violations and analyzes the geometry of embedding matrices.

pub mod bpe;
pub mod corpus;
pub mod geometry;
pub mod metrics;
pub mod midi;
pub mod score;
pub mod tokenizer;
