//! Standard MIDI File reading and writing.
//!
//! Only tick-based format 0 and format 1 files are accepted. Parsed files are
//! converted straight into a [`Score`](crate::score::Score): note on/off pairs
//! are matched first-in first-out per channel and pitch, a velocity-0 note on
//! counts as a note off, and notes still open at the end of a track are closed
//! with a one-tick duration.

mod read;
mod vlq;
mod write;

pub use read::parse_smf;
pub use vlq::{decode_vlq, encode_vlq, VLQ_MAX};
pub use write::write_smf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MidiError {
    #[error("unexpected end of data at byte {offset}")]
    Truncated { offset: usize },

    #[error("malformed variable-length quantity at byte {offset}")]
    MalformedVlq { offset: usize },

    #[error("value {0} does not fit in a variable-length quantity")]
    VlqOutOfRange(u64),

    #[error("expected {expected:?} chunk at byte {offset}")]
    BadMagic {
        offset: usize,
        expected: &'static str,
    },

    #[error("header chunk too short at byte {offset}")]
    BadHeader { offset: usize },

    #[error("unsupported SMF format {format} at byte {offset}")]
    UnsupportedFormat { format: u16, offset: usize },

    #[error("SMPTE time division is not supported (byte {offset})")]
    SmpteDivision { offset: usize },

    #[error("ticks per beat must be positive (byte {offset})")]
    ZeroDivision { offset: usize },

    #[error("data byte without running status at byte {offset}")]
    MissingStatus { offset: usize },

    #[error("invalid status byte {status:#04x} at byte {offset}")]
    InvalidStatus { status: u8, offset: usize },

    #[error("data byte {value:#04x} has its high bit set at byte {offset}")]
    InvalidDataByte { value: u8, offset: usize },

    #[error("invalid time signature at byte {offset}")]
    InvalidTimeSignature { offset: usize },

    #[error("delta time {delta} exceeds the variable-length quantity range")]
    TickOverflow { delta: u64 },

    #[error("score cannot be written: {0}")]
    InvalidScore(String),
}

impl MidiError {
    /// Byte offset in the input where parsing failed, when known.
    pub fn offset(&self) -> Option<usize> {
        match *self {
            MidiError::Truncated { offset }
            | MidiError::MalformedVlq { offset }
            | MidiError::BadMagic { offset, .. }
            | MidiError::BadHeader { offset }
            | MidiError::UnsupportedFormat { offset, .. }
            | MidiError::SmpteDivision { offset }
            | MidiError::ZeroDivision { offset }
            | MidiError::MissingStatus { offset }
            | MidiError::InvalidStatus { offset, .. }
            | MidiError::InvalidDataByte { offset, .. }
            | MidiError::InvalidTimeSignature { offset } => Some(offset),
            MidiError::VlqOutOfRange(_)
            | MidiError::TickOverflow { .. }
            | MidiError::InvalidScore(_) => None,
        }
    }
}
