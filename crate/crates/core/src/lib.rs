//! Entropically secure encryption with keys shorter than the message.
//!
//! Pipeline: a [`Distribution`] over messages is compressed with a trimmed
//! Shannon code ([`code`]), each codeword is padded to a fixed block length
//! with fresh random bits ([`pad`]), and the block is XOR-ed with a pad drawn
//! from a small-bias family over GF(2^s) ([`bias`], [`cipher`]). The
//! [`verify`] module checks the result exactly against the uniform block
//! distribution.
//!
//! Keys are one-time: [`cipher::OneTimeKey`] is consumed by encryption.

pub mod bias;
pub mod bits;
pub mod cipher;
pub mod code;
pub mod dist;
pub mod error;
pub mod pad;
pub mod verify;

pub use bias::{BiasKey, FieldParams};
pub use bits::BitString;
pub use cipher::{derive_params, keygen, CipherParams, CiphertextEnvelope, Margin, OneTimeKey, Scheme};
pub use code::{CodeKind, Codebook};
pub use dist::{Distribution, Rational, Symbol, DEFAULT_BUDGET};
pub use error::{Error, Result};
pub use pad::{BitSource, PaddedBlock};
pub use verify::{PadFamily, Verdict, VerifyReport};
