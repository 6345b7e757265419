use std::collections::{BTreeMap, HashMap, VecDeque};

use super::vlq::decode_at;
use super::MidiError;
use crate::score::{Note, Score, Tempo, Tick, TimeSignature, Track, DRUM_CHANNEL};

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    /// Offset of `data[0]` in the whole file.
    base: usize,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [u8], base: usize) -> Self {
        Self { data, pos: 0, base }
    }

    fn offset(&self) -> usize {
        self.base + self.pos
    }

    fn at_end(&self) -> bool {
        self.pos >= self.data.len()
    }

    fn peek(&self) -> Result<u8, MidiError> {
        self.data
            .get(self.pos)
            .copied()
            .ok_or(MidiError::Truncated {
                offset: self.offset(),
            })
    }

    fn u8(&mut self) -> Result<u8, MidiError> {
        let b = self.peek()?;
        self.pos += 1;
        Ok(b)
    }

    fn data_byte(&mut self) -> Result<u8, MidiError> {
        let offset = self.offset();
        let b = self.u8()?;
        if b & 0x80 != 0 {
            return Err(MidiError::InvalidDataByte { value: b, offset });
        }
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or(MidiError::Truncated {
                offset: self.base + self.data.len(),
            })?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, MidiError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32, MidiError> {
        let (v, n) = decode_at(&self.data[self.pos.min(self.data.len())..], self.offset())?;
        self.pos += n;
        Ok(v)
    }
}

/// Parses a Standard MIDI File into a [`Score`].
///
/// Each track chunk yields one [`Track`] per MIDI channel carrying notes, in
/// channel order. A chunk without notes yields a single empty track. Tempo
/// and time-signature events are collected from every chunk.
pub fn parse_smf(bytes: &[u8]) -> Result<Score, MidiError> {
    let mut cur = Cursor::new(bytes, 0);
    if cur.take(4).ok() != Some(b"MThd".as_slice()) {
        return Err(MidiError::BadMagic {
            offset: 0,
            expected: "MThd",
        });
    }
    let header_len = cur.u32()? as usize;
    if header_len < 6 {
        return Err(MidiError::BadHeader { offset: 4 });
    }
    let header = cur.take(header_len)?;
    let format = u16::from_be_bytes([header[0], header[1]]);
    if format > 1 {
        return Err(MidiError::UnsupportedFormat { format, offset: 8 });
    }
    let division = u16::from_be_bytes([header[4], header[5]]);
    if division & 0x8000 != 0 {
        return Err(MidiError::SmpteDivision { offset: 12 });
    }
    if division == 0 {
        return Err(MidiError::ZeroDivision { offset: 12 });
    }

    let mut score = Score {
        ticks_per_beat: division,
        tracks: Vec::new(),
        time_signatures: Vec::new(),
        tempos: Vec::new(),
    };

    while !cur.at_end() {
        let chunk_start = cur.offset();
        let id = cur.take(4)?;
        let len = cur.u32()? as usize;
        let body_start = cur.offset();
        let body = cur.take(len)?;
        if id == b"MTrk" {
            parse_track(body, body_start, &mut score)?;
        } else if id == b"MThd" {
            return Err(MidiError::BadMagic {
                offset: chunk_start,
                expected: "MTrk",
            });
        }
    }

    score.normalize_maps();
    Ok(score)
}

#[derive(Default)]
struct ChunkState {
    open: HashMap<(u8, u8), VecDeque<(Tick, u8)>>,
    notes: BTreeMap<u8, Vec<Note>>,
    programs: BTreeMap<u8, u8>,
    first_program: Option<(u8, u8)>,
}

impl ChunkState {
    fn note_on(&mut self, tick: Tick, channel: u8, pitch: u8, velocity: u8) {
        self.open
            .entry((channel, pitch))
            .or_default()
            .push_back((tick, velocity));
        self.notes.entry(channel).or_default();
    }

    fn note_off(&mut self, tick: Tick, channel: u8, pitch: u8) {
        let Some(queue) = self.open.get_mut(&(channel, pitch)) else {
            return;
        };
        if let Some((onset, velocity)) = queue.pop_front() {
            let duration = tick.saturating_sub(onset).max(1);
            self.notes
                .entry(channel)
                .or_default()
                .push(Note::new(onset, duration, pitch, velocity));
        }
    }

    fn program_change(&mut self, channel: u8, program: u8) {
        self.programs.entry(channel).or_insert(program);
        self.first_program.get_or_insert((channel, program));
    }

    fn finish(mut self) -> Vec<Track> {
        let mut still_open: Vec<_> = self.open.drain().collect();
        still_open.sort_by_key(|(k, _)| *k);
        for ((channel, pitch), queue) in still_open {
            for (onset, velocity) in queue {
                self.notes
                    .entry(channel)
                    .or_default()
                    .push(Note::new(onset, 1, pitch, velocity));
            }
        }
        if self.notes.is_empty() {
            let (channel, program) = self.first_program.unwrap_or((0, 0));
            return vec![Track::new(program, channel == DRUM_CHANNEL)];
        }
        self.notes
            .into_iter()
            .map(|(channel, notes)| {
                let mut track = Track {
                    program: self.programs.get(&channel).copied().unwrap_or(0),
                    is_drum: channel == DRUM_CHANNEL,
                    notes,
                };
                track.sort_notes();
                track
            })
            .collect()
    }
}

fn parse_track(body: &[u8], base: usize, score: &mut Score) -> Result<(), MidiError> {
    let mut cur = Cursor::new(body, base);
    let mut tick: Tick = 0;
    let mut running: Option<u8> = None;
    let mut state = ChunkState::default();

    while !cur.at_end() {
        tick = tick.saturating_add(u64::from(cur.vlq()?));
        let status_offset = cur.offset();
        let first = cur.peek()?;
        let status = if first & 0x80 != 0 {
            cur.pos += 1;
            first
        } else {
            running.ok_or(MidiError::MissingStatus {
                offset: status_offset,
            })?
        };

        match status {
            0xFF => {
                running = None;
                let kind = cur.u8()?;
                let len = cur.vlq()? as usize;
                let data_offset = cur.offset();
                let data = cur.take(len)?;
                match kind {
                    0x2F => break,
                    0x51 if len == 3 => score.tempos.push(Tempo {
                        tick,
                        micros_per_beat: u32::from_be_bytes([0, data[0], data[1], data[2]]),
                    }),
                    0x58 if len >= 2 => {
                        let denominator = 1u32.checked_shl(u32::from(data[1])).ok_or(
                            MidiError::InvalidTimeSignature {
                                offset: data_offset,
                            },
                        )?;
                        score.time_signatures.push(TimeSignature {
                            tick,
                            numerator: data[0],
                            denominator,
                        });
                    }
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = cur.vlq()? as usize;
                cur.take(len)?;
            }
            0x80..=0xEF => {
                running = Some(status);
                let channel = status & 0x0F;
                match status & 0xF0 {
                    0x80 => {
                        let pitch = cur.data_byte()?;
                        cur.data_byte()?;
                        state.note_off(tick, channel, pitch);
                    }
                    0x90 => {
                        let pitch = cur.data_byte()?;
                        let velocity = cur.data_byte()?;
                        if velocity == 0 {
                            state.note_off(tick, channel, pitch);
                        } else {
                            state.note_on(tick, channel, pitch, velocity);
                        }
                    }
                    0xC0 => {
                        let program = cur.data_byte()?;
                        state.program_change(channel, program);
                    }
                    0xD0 => {
                        cur.data_byte()?;
                    }
                    _ => {
                        cur.data_byte()?;
                        cur.data_byte()?;
                    }
                }
            }
            _ => {
                return Err(MidiError::InvalidStatus {
                    status,
                    offset: status_offset,
                })
            }
        }
    }

    score.tracks.extend(state.finish());
    Ok(())
}
