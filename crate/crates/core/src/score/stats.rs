use std::collections::HashMap;

use thiserror::Error;

use super::{Score, Tick};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("ratio is undefined for a score without notes")]
    EmptyScore,
    #[error("positions per bar must be positive")]
    ZeroPositions,
}

/// Fraction of notes sharing onset, offset and velocity with at least one
/// other note of the same track.
///
/// With `align = Some(positions_per_bar)`, onsets and offsets are first
/// rounded to that many positions per 4/4 bar (32 for 32nd notes, 16 for
/// 16th notes).
pub fn simultaneous_note_ratio(score: &Score, align: Option<u32>) -> Result<f64, StatsError> {
    if align == Some(0) {
        return Err(StatsError::ZeroPositions);
    }
    let total = score.note_count();
    if total == 0 {
        return Err(StatsError::EmptyScore);
    }
    let tpb = u128::from(score.ticks_per_beat.max(1));
    let snap = |tick: Tick| -> Tick {
        match align {
            None => tick,
            Some(ppb) => {
                // grid step = 4 * tpb / ppb ticks, kept rational
                let num = u128::from(tick) * u128::from(ppb);
                let den = 4 * tpb;
                let idx = (2 * num + den) / (2 * den);
                (idx * den / u128::from(ppb)) as Tick
            }
        }
    };

    let mut shared = 0usize;
    for track in &score.tracks {
        let mut groups: HashMap<(Tick, Tick, u8), usize> = HashMap::new();
        for n in &track.notes {
            *groups
                .entry((snap(n.onset), snap(n.offset()), n.velocity))
                .or_default() += 1;
        }
        shared += groups.values().filter(|&&c| c >= 2).sum::<usize>();
    }
    Ok(shared as f64 / total as f64)
}
