//! Covert channel over link congestion.
//!
//! The sender on GPU0 signals a `1` by pulling a large buffer from GPU1 during
//! a slot and stays idle for a `0`. The receiver on GPU1 times a small copy
//! from GPU0 once per slot (or several times, majority-voted) and compares
//! the latency with a threshold. Frames open with a run of ones followed by
//! an optional length header.

mod bits;
mod channel;
mod codec;
mod frame;
mod metrics;

pub use bits::BitStream;
pub use channel::{
    classify_sample, receiver_run, sender_run, transmit, ChannelConfig, ReceivedFrame, SlotObservation,
    SymbolErrors, Transmission,
};
pub use codec::{decode_bits, decode_bits_lossy, encode_text, random_bits};
pub use frame::{build_frame, decode_frame, DecodedFrame, FrameFormat, FrameScanner, Framing, ScanStep};
pub use metrics::{compute_metrics, ChannelMetrics};
