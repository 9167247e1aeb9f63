//! Parameter derivation and the one-time XOR cipher over padded blocks.
//!
//! Encryption of a message `m` is `pad(K) XOR (codeword(m) || r)` with fresh
//! padding `r`, where `pad` is the small-bias family from [`crate::bias`]
//! and the codeword comes from the escape-trimmed Shannon code.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::bias::{bias_bound, aghp_pad, required_s, BiasKey, FieldParams, MODULUS_TABLE_ID};
use crate::bits::BitString;
use crate::code::{trimmed_shannon, Codebook};
use crate::dist::{format_rational, Distribution, Rational, Symbol};
use crate::error::{Error, Result};
use crate::pad::{induced_min_entropy, randomize, strip, BitSource, PaddedBlock};

pub const ENVELOPE_MAGIC: [u8; 4] = *b"ECS1";
pub const ENVELOPE_VERSION: u8 = 1;
const KEY_MAGIC: &str = "ECSK";

/// Additive constant in the theoretical key length `2 log2(1/eps) + margin`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Margin {
    /// Entropic security for every input distribution.
    #[default]
    Four,
    /// Indistinguishability with an explicit witness distribution.
    Five,
}

impl Margin {
    pub fn value(self) -> u32 {
        match self {
            Margin::Four => 4,
            Margin::Five => 5,
        }
    }

    pub fn from_value(v: u32) -> Option<Self> {
        match v {
            4 => Some(Margin::Four),
            5 => Some(Margin::Five),
            _ => None,
        }
    }
}

/// `ceil(2 log2(1/eps)) + margin`, exact: the smallest `k` with
/// `2^k * num^2 >= den^2`, plus the margin.
pub fn theoretical_key_bits(epsilon: &Rational, margin: Margin) -> u32 {
    let num2 = epsilon.numer() * epsilon.numer();
    let den2 = epsilon.denom() * epsilon.denom();
    let mut k = 0u32;
    while (&num2 << k) < den2 {
        k += 1;
    }
    k + margin.value()
}

/// Everything derived from a distribution and a security level.
#[derive(Clone, Debug, PartialEq)]
pub struct CipherParams {
    /// Message bit length; `None` for abstract alphabets.
    pub n: Option<usize>,
    pub alphabet_size: usize,
    /// Block length: longest escape-trimmed codeword.
    pub l: usize,
    /// `max_i p_i 2^|w_i|`; the block min-entropy is `l - log2(max_term)`.
    pub max_term: Rational,
    pub epsilon: Rational,
    /// Smallest `c >= 0` with `max_term <= 4^c`.
    pub delta_exponent: u32,
    /// `epsilon / 2^delta_exponent`.
    pub delta_target: Rational,
    pub field: FieldParams,
    /// Constructive key length `2s`.
    pub k_impl: u32,
    /// `ceil(2 log2(1/eps)) + 4`.
    pub k_paper: u32,
    /// `ceil(2 log2(1/eps)) + 5`.
    pub k_indist: u32,
    pub margin: Margin,
}

impl CipherParams {
    pub fn s(&self) -> u32 {
        self.field.s()
    }

    pub fn min_entropy_bits(&self) -> f64 {
        self.l as f64 - crate::dist::log2_rational(&self.max_term)
    }

    /// Theoretical key length under the selected margin.
    pub fn k_theory(&self) -> u32 {
        match self.margin {
            Margin::Four => self.k_paper,
            Margin::Five => self.k_indist,
        }
    }

    /// Constructive minus theoretical key length.
    pub fn key_gap(&self) -> i64 {
        self.k_impl as i64 - self.k_theory() as i64
    }

    /// `(l - 1) / 2^s`, the family bias bound actually achieved.
    pub fn family_bias_bound(&self) -> Rational {
        bias_bound(self.l as u64, self.s())
    }

    /// Labeled values in a stable order, for reports.
    pub fn report_fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n", self.n.map_or("*".into(), |n| n.to_string())),
            ("alphabet_size", self.alphabet_size.to_string()),
            ("l", self.l.to_string()),
            ("max_term", format_rational(&self.max_term)),
            ("min_entropy", format!("{:.6}", self.min_entropy_bits())),
            ("epsilon", format_rational(&self.epsilon)),
            ("delta_exponent", self.delta_exponent.to_string()),
            ("delta_target", format_rational(&self.delta_target)),
            ("family_bias_bound", format_rational(&self.family_bias_bound())),
            ("s", self.s().to_string()),
            ("modulus", format!("{:#x}", self.field.modulus())),
            ("k_impl", self.k_impl.to_string()),
            ("k_paper", self.k_paper.to_string()),
            ("k_indist", self.k_indist.to_string()),
            ("margin", self.margin.value().to_string()),
            ("key_gap", self.key_gap().to_string()),
        ]
    }
}

/// Smallest `c >= 0` with `value <= 4^c`.
fn quarter_exponent(value: &Rational) -> u32 {
    let mut c = 0u32;
    let num = value.numer();
    let den = value.denom();
    while num > &(den << (2 * c)) {
        c += 1;
    }
    c
}

/// A codebook together with its derived parameters.
#[derive(Clone, Debug)]
pub struct Scheme {
    codebook: Codebook,
    params: CipherParams,
}

impl Scheme {
    /// Builds the escape-trimmed Shannon code for `d`, computes the exact
    /// block min-entropy and sizes the field so the pad family is
    /// `delta_target`-biased.
    pub fn new(d: &Distribution, epsilon: &Rational, margin: Margin) -> Result<Self> {
        if !epsilon.is_positive() || epsilon >= &Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} must lie in (0, 1)",
                format_rational(epsilon)
            )));
        }
        let codebook = trimmed_shannon(d)?;
        let l = codebook.l_max();
        let me = induced_min_entropy(&codebook, d)?;
        let delta_exponent = quarter_exponent(&me.max_term);
        let delta_target = epsilon / Rational::from_integer(BigInt::one() << delta_exponent);
        let s = required_s(l as u64, &delta_target)?;
        let field = FieldParams::new(s)?;
        let params = CipherParams {
            n: d.n(),
            alphabet_size: d.len(),
            l,
            max_term: me.max_term,
            epsilon: epsilon.clone(),
            delta_exponent,
            delta_target,
            field,
            k_impl: 2 * s,
            k_paper: theoretical_key_bits(epsilon, Margin::Four),
            k_indist: theoretical_key_bits(epsilon, Margin::Five),
            margin,
        };
        Ok(Self { codebook, params })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn params(&self) -> &CipherParams {
        &self.params
    }

    /// Encrypts one message. The key handle is consumed.
    pub fn encrypt(&self, key: OneTimeKey, message: &Symbol, src: &mut impl BitSource) -> Result<CiphertextEnvelope> {
        let key = key.0;
        self.check_key(&key)?;
        let block = randomize(&self.codebook, message, src)?;
        let payload = encrypt_ds(&block, &key, &self.params.field)?;
        Ok(CiphertextEnvelope {
            version: ENVELOPE_VERSION,
            l: self.params.l as u16,
            s: self.params.s() as u16,
            modulus_id: MODULUS_TABLE_ID,
            payload: payload.0,
        })
    }

    /// Decrypts an envelope. Header fields are checked against the scheme
    /// before the key is touched.
    pub fn decrypt(&self, key: &BiasKey, env: &CiphertextEnvelope) -> Result<Symbol> {
        self.check_envelope(env)?;
        self.check_key(key)?;
        let block = decrypt_ds(&PaddedBlock(env.payload.clone()), key, &self.params.field)?;
        strip(&self.codebook, &block)
    }

    pub fn check_envelope(&self, env: &CiphertextEnvelope) -> Result<()> {
        let mismatch = |what: &str, got: String, want: String| {
            Err(Error::ParamMismatch(format!("envelope {what} = {got}, expected {want}")))
        };
        if env.version != ENVELOPE_VERSION {
            return mismatch("version", env.version.to_string(), ENVELOPE_VERSION.to_string());
        }
        if env.l as usize != self.params.l {
            return mismatch("l", env.l.to_string(), self.params.l.to_string());
        }
        if env.s as u32 != self.params.s() {
            return mismatch("s", env.s.to_string(), self.params.s().to_string());
        }
        if env.modulus_id != MODULUS_TABLE_ID {
            return mismatch("modulus id", env.modulus_id.to_string(), MODULUS_TABLE_ID.to_string());
        }
        if env.payload.len() != self.params.l {
            return mismatch("payload length", env.payload.len().to_string(), self.params.l.to_string());
        }
        Ok(())
    }

    fn check_key(&self, key: &BiasKey) -> Result<()> {
        if key.s != self.params.s() {
            return Err(Error::ParamMismatch(format!(
                "key has {} bits, parameters need {}",
                key.len_bits(),
                self.params.k_impl
            )));
        }
        Ok(())
    }
}

pub fn derive_params(d: &Distribution, epsilon: &Rational, margin: Margin) -> Result<CipherParams> {
    Scheme::new(d, epsilon, margin).map(|s| s.params)
}

/// A key that can encrypt exactly one message. Not `Clone`: encryption
/// consumes it.
pub struct OneTimeKey(BiasKey);

impl OneTimeKey {
    pub fn new(key: BiasKey) -> Self {
        Self(key)
    }

    pub fn key(&self) -> &BiasKey {
        &self.0
    }
}

impl fmt::Debug for OneTimeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("OneTimeKey").field(&self.0).finish()
    }
}

/// Draws `2s` bits, the first `s` becoming `x` and the rest `y`.
pub fn keygen(params: &CipherParams, src: &mut impl BitSource) -> Result<OneTimeKey> {
    let bits = src.take_bits(2 * params.s() as usize)?;
    BiasKey::from_bits(&bits).map(OneTimeKey)
}

/// `block XOR pad(key)`.
pub fn encrypt_ds(block: &PaddedBlock, key: &BiasKey, field: &FieldParams) -> Result<PaddedBlock> {
    if key.s != field.s() {
        return Err(Error::ParamMismatch(format!("key degree {} vs field degree {}", key.s, field.s())));
    }
    let pad = aghp_pad(key, block.len(), field);
    Ok(PaddedBlock(block.0.xor(&pad)?))
}

/// Same map as [`encrypt_ds`]; XOR is an involution.
pub fn decrypt_ds(block: &PaddedBlock, key: &BiasKey, field: &FieldParams) -> Result<PaddedBlock> {
    encrypt_ds(block, key, field)
}

/// Serialized ciphertext: a self-describing header plus the `l`-bit payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiphertextEnvelope {
    pub version: u8,
    pub l: u16,
    pub s: u16,
    pub modulus_id: u8,
    pub payload: BitString,
}

impl CiphertextEnvelope {
    /// Big-endian layout: magic, version, l, s, modulus id, payload bit
    /// length, payload bits MSB-first zero-padded to a byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.payload.len().div_ceil(8));
        out.extend_from_slice(&ENVELOPE_MAGIC);
        out.push(self.version);
        out.extend_from_slice(&self.l.to_be_bytes());
        out.extend_from_slice(&self.s.to_be_bytes());
        out.push(self.modulus_id);
        out.extend_from_slice(&(self.payload.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.payload.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Envelope(m.to_string());
        if bytes.len() < 12 {
            return Err(bad("truncated header"));
        }
        if bytes[..4] != ENVELOPE_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = bytes[4];
        if version != ENVELOPE_VERSION {
            return Err(Error::Envelope(format!("unsupported version {version}")));
        }
        let l = u16::from_be_bytes([bytes[5], bytes[6]]);
        let s = u16::from_be_bytes([bytes[7], bytes[8]]);
        let modulus_id = bytes[9];
        let bit_len = u16::from_be_bytes([bytes[10], bytes[11]]);
        if bit_len != l {
            return Err(Error::Envelope(format!("payload length {bit_len} differs from l = {l}")));
        }
        let payload = BitString::from_bytes(&bytes[12..], bit_len as usize)
            .map_err(|e| Error::Envelope(format!("payload: {e}")))?;
        Ok(Self {
            version,
            l,
            s,
            modulus_id,
            payload,
        })
    }
}

/// Key file text: `ECSK 1 <s> <hex of the 2s key bits, MSB-first, zero-padded>`.
pub fn key_to_text(key: &BiasKey) -> String {
    format!("{KEY_MAGIC} 1 {} {}\n", key.s, hex::encode(key.to_bits().to_bytes()))
}

pub fn key_from_text(text: &str) -> Result<BiasKey> {
    let bad = |m: String| Error::Key(m);
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .ok_or_else(|| bad("empty key file".into()))?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != KEY_MAGIC || fields[1] != "1" {
        return Err(bad(format!("bad key header `{line}`")));
    }
    let s: u32 = fields[2]
        .parse()
        .ok()
        .filter(|s| (1..=64).contains(s))
        .ok_or_else(|| bad(format!("bad field degree `{}`", fields[2])))?;
    let bytes = hex::decode(fields[3]).map_err(|e| bad(format!("bad hex: {e}")))?;
    let bits = BitString::from_bytes(&bytes, 2 * s as usize)
        .map_err(|e| bad(format!("key bits: {e}")))?;
    BiasKey::from_bits(&bits)
}
