use super::BitStream;
use crate::error::{Error, Result};
use crate::sim::defaults::{LENGTH_FIELD_BITS, PREAMBLE_LEN};

/// How the receiver learns the payload length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Framing {
    /// An unsigned big-endian length field of `field_bits` follows the preamble.
    LengthHeader { field_bits: usize },
    /// No header; both ends agree on the payload length beforehand.
    Fixed { payload_bits: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameFormat {
    pub preamble_len: usize,
    pub framing: Framing,
}

impl Default for FrameFormat {
    fn default() -> Self {
        Self {
            preamble_len: PREAMBLE_LEN,
            framing: Framing::LengthHeader {
                field_bits: LENGTH_FIELD_BITS,
            },
        }
    }
}

impl FrameFormat {
    pub fn validate(&self) -> Result<()> {
        if self.preamble_len == 0 {
            return Err(Error::config("preamble_len", "must be at least 1"));
        }
        if let Framing::LengthHeader { field_bits } = self.framing {
            if !(1..=63).contains(&field_bits) {
                return Err(Error::config(
                    "length_field_bits",
                    format!("must be within 1..=63, got {field_bits}"),
                ));
            }
        }
        Ok(())
    }

    pub fn header_bits(&self) -> usize {
        match self.framing {
            Framing::LengthHeader { field_bits } => field_bits,
            Framing::Fixed { .. } => 0,
        }
    }

    pub fn frame_len(&self, payload_bits: usize) -> usize {
        self.preamble_len + self.header_bits() + payload_bits
    }
}

/// `preamble ∥ length ∥ payload`.
pub fn build_frame(payload: &BitStream, format: &FrameFormat) -> Result<BitStream> {
    format.validate()?;
    let mut frame = BitStream::new();
    frame.extend(std::iter::repeat_n(true, format.preamble_len));
    match format.framing {
        Framing::LengthHeader { field_bits } => {
            if (payload.len() as u128) >= (1u128 << field_bits) {
                return Err(Error::Framing(format!(
                    "payload of {} bits does not fit a {field_bits}-bit length field",
                    payload.len()
                )));
            }
            frame.push_uint(payload.len() as u64, field_bits);
        }
        Framing::Fixed { payload_bits } => {
            if payload.len() != payload_bits {
                return Err(Error::Framing(format!(
                    "fixed framing expects {payload_bits} payload bits, got {}",
                    payload.len()
                )));
            }
        }
    }
    frame.extend(payload.iter());
    Ok(frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Searching { run: usize },
    Header { value: u64, read: usize },
    Payload { remaining: usize },
    Complete,
}

/// What the scanner is doing after consuming a bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanStep {
    Searching,
    Header,
    Payload,
    Complete,
}

/// Incremental frame decoder fed one decided bit per slot.
///
/// The frame starts at the first run of `preamble_len` ones; everything
/// after it is interpreted positionally, so ones inside the header or payload
/// cannot restart synchronization.
#[derive(Debug, Clone)]
pub struct FrameScanner {
    format: FrameFormat,
    consumed: usize,
    state: State,
    start: Option<usize>,
    length: Option<usize>,
    payload: BitStream,
}

impl FrameScanner {
    pub fn new(format: FrameFormat) -> Self {
        Self {
            format,
            consumed: 0,
            state: State::Searching { run: 0 },
            start: None,
            length: None,
            payload: BitStream::new(),
        }
    }

    /// Index of the first preamble bit, once found.
    pub fn start(&self) -> Option<usize> {
        self.start
    }

    /// Payload length, once known.
    pub fn length(&self) -> Option<usize> {
        self.length
    }

    /// Bits still needed to finish the frame, once the payload length is known.
    pub fn remaining(&self) -> Option<usize> {
        match self.state {
            State::Payload { remaining } => Some(remaining),
            State::Complete => Some(0),
            _ => None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.state == State::Complete
    }

    pub fn payload(&self) -> &BitStream {
        &self.payload
    }

    pub fn into_payload(self) -> BitStream {
        self.payload
    }

    fn enter_payload(&mut self, length: usize) -> ScanStep {
        self.length = Some(length);
        if length == 0 {
            self.state = State::Complete;
            ScanStep::Complete
        } else {
            self.state = State::Payload { remaining: length };
            ScanStep::Payload
        }
    }

    pub fn push(&mut self, bit: bool) -> ScanStep {
        let index = self.consumed;
        self.consumed += 1;
        match self.state {
            State::Searching { run } => {
                let run = if bit { run + 1 } else { 0 };
                if run < self.format.preamble_len {
                    self.state = State::Searching { run };
                    return ScanStep::Searching;
                }
                self.start = Some(index + 1 - run);
                match self.format.framing {
                    Framing::LengthHeader { .. } => {
                        self.state = State::Header { value: 0, read: 0 };
                        ScanStep::Header
                    }
                    Framing::Fixed { payload_bits } => self.enter_payload(payload_bits),
                }
            }
            State::Header { value, read } => {
                let value = (value << 1) | u64::from(bit);
                let read = read + 1;
                if read < self.format.header_bits() {
                    self.state = State::Header { value, read };
                    ScanStep::Header
                } else {
                    self.enter_payload(value as usize)
                }
            }
            State::Payload { remaining } => {
                self.payload.push(bit);
                if remaining == 1 {
                    self.state = State::Complete;
                    ScanStep::Complete
                } else {
                    self.state = State::Payload { remaining: remaining - 1 };
                    ScanStep::Payload
                }
            }
            State::Complete => ScanStep::Complete,
        }
    }

    /// Error describing why the scanner has not completed after `total` bits.
    pub(crate) fn incomplete_error(&self, total: usize) -> Error {
        match self.state {
            State::Searching { .. } => Error::SyncTimeout { slots: total },
            State::Header { read, .. } => Error::Truncated {
                needed: self.format.header_bits() - read,
                available: 0,
            },
            State::Payload { remaining } => Error::Truncated {
                needed: remaining,
                available: 0,
            },
            State::Complete => unreachable!("complete scanner has no error"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedFrame {
    /// Index of the first preamble bit.
    pub start: usize,
    pub payload: BitStream,
}

/// Finds and decodes the first frame in a finite bit sequence.
pub fn decode_frame(bits: &[bool], format: &FrameFormat) -> Result<DecodedFrame> {
    format.validate()?;
    let mut scanner = FrameScanner::new(*format);
    for (i, &bit) in bits.iter().enumerate() {
        let step = scanner.push(bit);
        if step == ScanStep::Complete {
            break;
        }
        if let Some(needed) = scanner.remaining() {
            let available = bits.len() - i - 1;
            if needed > available {
                return Err(Error::Truncated { needed, available });
            }
        }
    }
    if !scanner.is_complete() {
        return Err(scanner.incomplete_error(bits.len()));
    }
    Ok(DecodedFrame {
        start: scanner.start().expect("complete frame has a start"),
        payload: scanner.into_payload(),
    })
}
