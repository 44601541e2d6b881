use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BitStream;
use crate::error::{Error, Result};

/// Maps each 7-bit character to its 8-bit code, most significant bit first.
pub fn encode_text(text: &str) -> Result<BitStream> {
    let mut out = BitStream::new();
    for (position, ch) in text.chars().enumerate() {
        if !ch.is_ascii() {
            return Err(Error::Encoding { ch, position });
        }
        out.push_uint(ch as u64, 8);
    }
    Ok(out)
}

fn bytes_of(bits: &BitStream) -> Result<Vec<u8>> {
    if !bits.len().is_multiple_of(8) {
        return Err(Error::Framing(format!(
            "{} bits is not a whole number of 8-bit characters",
            bits.len()
        )));
    }
    Ok(bits
        .bits()
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b)))
        .collect())
}

/// Inverse of [`encode_text`].
pub fn decode_bits(bits: &BitStream) -> Result<String> {
    let bytes = bytes_of(bits)?;
    if let Some(i) = bytes.iter().position(|b| !b.is_ascii()) {
        return Err(Error::Framing(format!(
            "byte {:#04x} at character {i} is not a 7-bit code",
            bytes[i]
        )));
    }
    Ok(bytes.into_iter().map(char::from).collect())
}

/// Like [`decode_bits`] but renders non-ASCII or control bytes as `?`, for
/// printing possibly corrupted receptions.
pub fn decode_bits_lossy(bits: &BitStream) -> Result<String> {
    Ok(bytes_of(bits)?
        .into_iter()
        .map(|b| {
            if b.is_ascii_graphic() || b == b' ' {
                char::from(b)
            } else {
                '?'
            }
        })
        .collect())
}

/// `n` uniformly random bits from `seed`.
pub fn random_bits(n: usize, seed: u64) -> BitStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    (0..n).map(|_| rng.random::<bool>()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_character() {
        assert_eq!(encode_text("H").unwrap().to_string(), "01001000");
        assert_eq!(decode_bits(&"01001000".parse().unwrap()).unwrap(), "H");
    }

    #[test]
    fn empty_text() {
        assert!(encode_text("").unwrap().is_empty());
        assert_eq!(decode_bits(&BitStream::new()).unwrap(), "");
    }

    #[test]
    fn message_round_trip() {
        let bits = encode_text("Hello,NVLink!").unwrap();
        assert_eq!(bits.len(), 104);
        assert_eq!(decode_bits(&bits).unwrap(), "Hello,NVLink!");
    }

    #[test]
    fn rejects_wide_characters() {
        assert!(matches!(
            encode_text("héllo"),
            Err(Error::Encoding { ch: 'é', position: 1 })
        ));
    }

    #[test]
    fn partial_byte_is_a_framing_error() {
        assert!(matches!(decode_bits(&"0100100".parse().unwrap()), Err(Error::Framing(_))));
        assert!(decode_bits(&"11001000".parse().unwrap()).is_err());
        assert_eq!(decode_bits_lossy(&"11001000".parse().unwrap()).unwrap(), "?");
    }

    #[test]
    fn random_bits_are_seeded() {
        assert_eq!(random_bits(64, 3), random_bits(64, 3));
        assert_ne!(random_bits(64, 3), random_bits(64, 4));
        let ones = random_bits(10_000, 1).count_ones();
        assert!((4_800..5_200).contains(&ones), "{ones}");
    }
}
