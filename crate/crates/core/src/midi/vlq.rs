use super::MidiError;

/// Largest value a four-byte variable-length quantity can hold.
pub const VLQ_MAX: u32 = 0x0FFF_FFFF;

/// Decodes a variable-length quantity from the start of `bytes`.
///
/// Returns the value and the number of bytes consumed.
pub fn decode_vlq(bytes: &[u8]) -> Result<(u32, usize), MidiError> {
    decode_at(bytes, 0)
}

/// Same as [`decode_vlq`] but reports errors relative to `base`.
pub(crate) fn decode_at(bytes: &[u8], base: usize) -> Result<(u32, usize), MidiError> {
    let mut value = 0u32;
    for i in 0..4 {
        let Some(&b) = bytes.get(i) else {
            return Err(MidiError::Truncated { offset: base + i });
        };
        value = (value << 7) | u32::from(b & 0x7F);
        if b & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    Err(MidiError::MalformedVlq { offset: base })
}

/// Encodes `value` in the shortest variable-length form.
pub fn encode_vlq(value: u32) -> Result<Vec<u8>, MidiError> {
    if value > VLQ_MAX {
        return Err(MidiError::VlqOutOfRange(u64::from(value)));
    }
    let mut out = Vec::with_capacity(4);
    push_vlq(&mut out, value);
    Ok(out)
}

pub(crate) fn push_vlq(out: &mut Vec<u8>, value: u32) {
    debug_assert!(value <= VLQ_MAX);
    let mut groups = [0u8; 4];
    let mut n = 0;
    let mut v = value;
    loop {
        groups[n] = (v & 0x7F) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let cont = if i > 0 { 0x80 } else { 0 };
        out.push(groups[i] | cont);
    }
}
