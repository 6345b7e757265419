use super::vlq::{push_vlq, VLQ_MAX};
use super::MidiError;
use crate::score::{Score, Tick, Track, DRUM_CHANNEL};

/// Non-drum channels in assignment order.
const MELODIC_CHANNELS: [u8; 15] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15];

/// Serializes a score as a format 1 Standard MIDI File.
///
/// Every track becomes its own chunk; tempo and time-signature events go in
/// the first chunk. A score without tracks is written as a single chunk that
/// holds only the tempo/time-signature maps.
pub fn write_smf(score: &Score) -> Result<Vec<u8>, MidiError> {
    validate(score)?;

    let chunk_count = score.tracks.len().max(1);
    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&(chunk_count as u16).to_be_bytes());
    out.extend_from_slice(&score.ticks_per_beat.to_be_bytes());

    let mut melodic = 0usize;
    if score.tracks.is_empty() {
        write_chunk(&mut out, meta_events(score))?;
    }
    for (i, track) in score.tracks.iter().enumerate() {
        let channel = if track.is_drum {
            DRUM_CHANNEL
        } else {
            let c = MELODIC_CHANNELS[melodic % MELODIC_CHANNELS.len()];
            melodic += 1;
            c
        };
        let mut events = if i == 0 {
            meta_events(score)
        } else {
            Vec::new()
        };
        events.extend(track_events(track, channel));
        write_chunk(&mut out, events)?;
    }
    Ok(out)
}

/// (tick, ordering class, tie-break, bytes)
type Event = (Tick, u8, usize, Vec<u8>);

fn meta_events(score: &Score) -> Vec<Event> {
    let mut events = Vec::new();
    for (i, tempo) in score.tempos.iter().enumerate() {
        let t = tempo.micros_per_beat.to_be_bytes();
        events.push((tempo.tick, 0, i, vec![0xFF, 0x51, 0x03, t[1], t[2], t[3]]));
    }
    for (i, ts) in score.time_signatures.iter().enumerate() {
        let exp = ts.denominator.trailing_zeros() as u8;
        events.push((
            ts.tick,
            0,
            score.tempos.len() + i,
            vec![0xFF, 0x58, 0x04, ts.numerator, exp, 24, 8],
        ));
    }
    events
}

fn track_events(track: &Track, channel: u8) -> Vec<Event> {
    let mut notes = track.notes.clone();
    notes.sort_by_key(|n| (n.onset, n.pitch, n.duration, n.velocity));

    let mut events = vec![(0, 1, 0, vec![0xC0 | channel, track.program])];
    for (i, n) in notes.iter().enumerate() {
        // offs sort before ons on the same tick so back-to-back notes pair correctly
        events.push((n.offset(), 2, i, vec![0x80 | channel, n.pitch, 0x40]));
        events.push((n.onset, 3, i, vec![0x90 | channel, n.pitch, n.velocity]));
    }
    events
}

fn write_chunk(out: &mut Vec<u8>, mut events: Vec<Event>) -> Result<(), MidiError> {
    events.sort_by_key(|a| (a.0, a.1, a.2));
    let mut body = Vec::new();
    let mut now: Tick = 0;
    for (tick, _, _, bytes) in &events {
        push_delta(&mut body, tick - now)?;
        body.extend_from_slice(bytes);
        now = *tick;
    }
    body.extend_from_slice(&[0x00, 0xFF, 0x2F, 0x00]);

    let len = u32::try_from(body.len())
        .map_err(|_| MidiError::InvalidScore("track chunk larger than 4 GiB".into()))?;
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&body);
    Ok(())
}

fn push_delta(out: &mut Vec<u8>, delta: Tick) -> Result<(), MidiError> {
    if delta > u64::from(VLQ_MAX) {
        return Err(MidiError::TickOverflow { delta });
    }
    push_vlq(out, delta as u32);
    Ok(())
}

fn validate(score: &Score) -> Result<(), MidiError> {
    let invalid = |msg: String| Err(MidiError::InvalidScore(msg));
    if score.ticks_per_beat == 0 || score.ticks_per_beat & 0x8000 != 0 {
        return invalid(format!(
            "ticks per beat {} outside 1..=32767",
            score.ticks_per_beat
        ));
    }
    if score.tracks.len() > usize::from(u16::MAX) {
        return invalid("more than 65535 tracks".into());
    }
    for ts in &score.time_signatures {
        if !ts.denominator.is_power_of_two() {
            return invalid(format!(
                "time signature denominator {} is not a power of two",
                ts.denominator
            ));
        }
    }
    for tempo in &score.tempos {
        if tempo.micros_per_beat > 0xFF_FFFF {
            return invalid(format!(
                "tempo {} does not fit in 24 bits",
                tempo.micros_per_beat
            ));
        }
    }
    for track in &score.tracks {
        if track.program > 127 {
            return invalid(format!("program {} above 127", track.program));
        }
        for n in &track.notes {
            if n.pitch > 127 || n.velocity == 0 || n.velocity > 127 || n.duration == 0 {
                return invalid(format!("invalid note {n:?}"));
            }
        }
    }
    Ok(())
}
