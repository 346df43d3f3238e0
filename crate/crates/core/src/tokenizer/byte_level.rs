//! The byte <-> unicode alphabet used by byte-level BPE vocabulary files.
//!
//! Printable ASCII (`!`..=`~`) and the Latin-1 ranges `¡`..=`¬` and `®`..=`ÿ`
//! map to themselves. The remaining 68 byte values are assigned, in ascending
//! byte order, to the code points starting at U+0100. Space (0x20) therefore
//! becomes `Ġ` (U+0120) and newline (0x0A) becomes `Ċ` (U+010A).

use std::collections::HashMap;
use std::sync::OnceLock;

use thiserror::Error;

/// A character that has no preimage in the byte-level alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("character {ch:?} (U+{:04X}) is not in the byte-level alphabet", *.ch as u32)]
pub struct UnmappedChar {
    pub ch: char,
}

struct Alphabet {
    forward: [char; 256],
    reverse: HashMap<char, u8>,
}

fn alphabet() -> &'static Alphabet {
    static ALPHABET: OnceLock<Alphabet> = OnceLock::new();
    ALPHABET.get_or_init(|| {
        let fixed = |b: u8| matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        let mut forward = ['\0'; 256];
        let mut shifted = 0u32;
        for b in 0..=255u8 {
            forward[b as usize] = if fixed(b) {
                char::from(b)
            } else {
                let c = char::from_u32(256 + shifted).expect("U+0100..U+0143 are scalar values");
                shifted += 1;
                c
            };
        }
        let reverse = forward.iter().enumerate().map(|(b, &c)| (c, b as u8)).collect();
        Alphabet { forward, reverse }
    })
}

/// The printable character standing in for byte `b`.
pub fn byte_to_char(b: u8) -> char {
    alphabet().forward[b as usize]
}

/// The byte represented by `c`, if `c` belongs to the alphabet.
pub fn char_to_byte(c: char) -> Option<u8> {
    alphabet().reverse.get(&c).copied()
}

/// Renders raw bytes as a byte-level surface string.
pub fn bytes_to_surface(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| byte_to_char(b)).collect()
}

/// Decodes a vocabulary surface to raw bytes.
///
/// For byte-level vocabularies every character is mapped back through the
/// alphabet; otherwise the surface is taken as text and UTF-8 encoded.
pub fn decode_surface(surface: &str, byte_level: bool) -> Result<Vec<u8>, UnmappedChar> {
    if !byte_level {
        return Ok(surface.as_bytes().to_vec());
    }
    surface.chars().map(|ch| char_to_byte(ch).ok_or(UnmappedChar { ch })).collect()
}
