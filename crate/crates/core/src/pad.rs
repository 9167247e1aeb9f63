//! Randomized prefix-free code: every codeword is padded to `l` bits with
//! fresh uniform bits, which flattens the induced block distribution.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
#[cfg(feature = "os-rng")]
use rand::rngs::OsRng;
use rand::{SeedableRng, TryRngCore};
use rand_chacha::ChaCha20Rng;

use crate::bits::BitString;
use crate::code::Codebook;
use crate::dist::{log2_rational, Distribution, Rational, Symbol};
use crate::error::{check_budget, Error, Result};

/// A stream of uniform random bits.
pub trait BitSource {
    fn next_bit(&mut self) -> Result<bool>;

    fn take_bits(&mut self, n: usize) -> Result<BitString> {
        let mut out = BitString::new();
        for _ in 0..n {
            out.push(self.next_bit()?);
        }
        Ok(out)
    }
}

impl<T: BitSource + ?Sized> BitSource for Box<T> {
    fn next_bit(&mut self) -> Result<bool> {
        (**self).next_bit()
    }

    fn take_bits(&mut self, n: usize) -> Result<BitString> {
        (**self).take_bits(n)
    }
}

/// Bits drawn MSB-first from 64-bit words of a (possibly fallible) RNG.
pub struct RngBits<R> {
    rng: R,
    word: u64,
    left: u32,
}

impl<R: TryRngCore> RngBits<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, word: 0, left: 0 }
    }
}

impl<R: TryRngCore> BitSource for RngBits<R>
where
    R::Error: std::fmt::Display,
{
    fn next_bit(&mut self) -> Result<bool> {
        if self.left == 0 {
            self.word = self
                .rng
                .try_next_u64()
                .map_err(|e| Error::Randomness(e.to_string()))?;
            self.left = 64;
        }
        self.left -= 1;
        Ok((self.word >> self.left) & 1 == 1)
    }
}

/// Operating-system randomness; the production source for keys and padding.
#[cfg(feature = "os-rng")]
pub fn os_bits() -> RngBits<OsRng> {
    RngBits::new(OsRng)
}

/// Deterministic ChaCha20 stream for reproducible runs.
pub fn seeded_bits(seed: u64) -> RngBits<ChaCha20Rng> {
    RngBits::new(ChaCha20Rng::seed_from_u64(seed))
}

/// Seeded stream when `seed` is given, operating-system randomness otherwise.
#[cfg(feature = "os-rng")]
pub fn bit_source(seed: Option<u64>) -> Box<dyn BitSource> {
    match seed {
        Some(s) => Box::new(seeded_bits(s)),
        None => Box::new(os_bits()),
    }
}

/// A fixed, finite bit transcript. Running past its end is an error.
#[derive(Clone, Debug)]
pub struct Transcript {
    bits: BitString,
    pos: usize,
}

impl Transcript {
    pub fn new(bits: BitString) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

impl BitSource for Transcript {
    fn next_bit(&mut self) -> Result<bool> {
        let bit = self
            .bits
            .get(self.pos)
            .ok_or_else(|| Error::Randomness("transcript exhausted".into()))?;
        self.pos += 1;
        Ok(bit)
    }
}

/// An `l`-bit block: a codeword followed by random padding.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PaddedBlock(pub BitString);

impl PaddedBlock {
    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn randomize(cb: &Codebook, sym: &Symbol, src: &mut impl BitSource) -> Result<PaddedBlock> {
    let word = cb.encode(sym)?;
    let padding = src.take_bits(cb.l_max() - word.len())?;
    Ok(PaddedBlock(word.concat(&padding)))
}

/// Recovers the symbol whose codeword prefixes the block.
pub fn strip(cb: &Codebook, block: &PaddedBlock) -> Result<Symbol> {
    cb.decode_prefix(&block.0).map(|(sym, _)| sym)
}

/// Block distribution induced by padding, restricted to its support.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedDistribution {
    pub l: usize,
    /// Nonzero masses keyed by the block read as an integer (first bit most significant).
    pub mass: BTreeMap<u64, Rational>,
}

impl InducedDistribution {
    /// Mass of a block; zero outside the support.
    pub fn mass_of(&self, block: u64) -> Rational {
        self.mass.get(&block).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.mass.values().sum()
    }

    pub fn max_mass(&self) -> Rational {
        self.mass.values().max().cloned().unwrap_or_else(Rational::zero)
    }
}

/// Probability of each rank of `cb` under `d`.
pub(crate) fn rank_probs(cb: &Codebook, d: &Distribution) -> Result<Vec<Rational>> {
    cb.symbols()
        .iter()
        .map(|s| {
            d.prob_of(s)
                .cloned()
                .ok_or_else(|| Error::UnknownSymbol(s.to_string()))
        })
        .collect()
}

/// Each block `w || r` gets `p(a) * 2^-(l - |w|)`; only prefixed blocks are listed.
pub fn induced_distribution(cb: &Codebook, d: &Distribution, budget: u64) -> Result<InducedDistribution> {
    let l = cb.l_max();
    if l > 63 {
        return Err(Error::BudgetExceeded {
            needed: 1u128 << l.min(127),
            budget,
        });
    }
    let support: u128 = cb.words().iter().map(|w| 1u128 << (l - w.len())).sum();
    check_budget(support, budget)?;
    let probs = rank_probs(cb, d)?;
    let mut mass = BTreeMap::new();
    for (word, p) in cb.words().iter().zip(&probs) {
        let free = l - word.len();
        let base = word.to_u64().expect("l <= 63") << free;
        let each = p / Rational::from_integer(BigInt::from(1u64) << free);
        for r in 0..(1u64 << free) {
            mass.insert(base | r, each.clone());
        }
    }
    Ok(InducedDistribution { l, mass })
}

/// Exact min-entropy of the induced distribution without enumerating it:
/// `h_min = l - log2(max_term)` with `max_term = max_i p_i * 2^|w_i|`.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedMinEntropy {
    pub l: usize,
    pub max_term: Rational,
    /// `log2(max_term)`, for display.
    pub slack_bits: f64,
}

impl InducedMinEntropy {
    pub fn h_min(&self) -> f64 {
        self.l as f64 - self.slack_bits
    }
}

pub fn induced_min_entropy(cb: &Codebook, d: &Distribution) -> Result<InducedMinEntropy> {
    let probs = rank_probs(cb, d)?;
    let max_term = cb
        .words()
        .iter()
        .zip(&probs)
        .map(|(w, p)| p * Rational::from_integer(BigInt::from(1u64) << w.len()))
        .max()
        .expect("nonempty codebook");
    Ok(InducedMinEntropy {
        l: cb.l_max(),
        slack_bits: log2_rational(&max_term),
        max_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::code::{build_trimmed, CodeKind};
    use crate::dist::{ratio, DEFAULT_BUDGET};
    use num_traits::One;

    fn explicit(ws: &[&str]) -> Codebook {
        let symbols = (0..ws.len() as u64).map(Symbol::Index).collect();
        Codebook::from_words(CodeKind::Explicit, symbols, ws.iter().map(|w| bits(w)).collect()).unwrap()
    }

    fn skewed() -> Distribution {
        Distribution::indexed(vec![ratio(13, 16), ratio(1, 8), ratio(1, 16)]).unwrap()
    }

    #[test]
    fn randomize_examples() {
        let trimmed = build_trimmed(&explicit(&["0", "10", "11"]));
        let mut none = Transcript::new(BitString::new());
        assert_eq!(randomize(&trimmed, &Symbol::Index(1), &mut none).unwrap().0, bits("010"));

        let cb = explicit(&["0", "10", "11"]);
        let mut one = Transcript::new(bits("1"));
        assert_eq!(randomize(&cb, &Symbol::Index(0), &mut one).unwrap().0, bits("01"));

        let mut empty = Transcript::new(BitString::new());
        assert!(matches!(randomize(&cb, &Symbol::Index(0), &mut empty), Err(Error::Randomness(_))));
    }

    #[test]
    fn padding_is_balanced() {
        // 10^4 draws, each block has probability 1/2: sd = 50, 3 sd = 150 < 300.
        let cb = explicit(&["0", "10", "11"]);
        let mut src = seeded_bits(7);
        let zeros = (0..10_000)
            .filter(|_| randomize(&cb, &Symbol::Index(0), &mut src).unwrap().0 == bits("00"))
            .count();
        assert!((4700..=5300).contains(&zeros), "{zeros}");
    }

    #[test]
    fn strip_examples() {
        let cb = explicit(&["0", "10", "11"]);
        assert_eq!(strip(&cb, &PaddedBlock(bits("01"))).unwrap(), Symbol::Index(0));
        assert_eq!(strip(&cb, &PaddedBlock(bits("11"))).unwrap(), Symbol::Index(2));
        let partial = explicit(&["0", "10"]);
        assert!(matches!(strip(&partial, &PaddedBlock(bits("11"))), Err(Error::Undecodable(_))));
    }

    #[test]
    fn induced_skewed_example() {
        let cb = explicit(&["0", "10", "11"]);
        let pi = induced_distribution(&cb, &skewed(), DEFAULT_BUDGET).unwrap();
        assert_eq!(pi.l, 2);
        assert_eq!(pi.mass_of(0b00), ratio(13, 32));
        assert_eq!(pi.mass_of(0b01), ratio(13, 32));
        assert_eq!(pi.mass_of(0b10), ratio(1, 8));
        assert_eq!(pi.mass_of(0b11), ratio(1, 16));
        assert!(pi.total().is_one());
    }

    #[test]
    fn induced_zero_mass_outside_codewords() {
        let cb = explicit(&["0", "10"]);
        let d = Distribution::indexed(vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        let pi = induced_distribution(&cb, &d, DEFAULT_BUDGET).unwrap();
        assert_eq!(pi.mass_of(0b11), Rational::zero());
        assert_eq!(pi.mass.len(), 3);
    }

    #[test]
    fn induced_uniform_on_complete_code() {
        let cb = explicit(&["00", "01", "10", "11"]);
        let d = Distribution::indexed(vec![ratio(1, 4); 4]).unwrap();
        let pi = induced_distribution(&cb, &d, DEFAULT_BUDGET).unwrap();
        assert!(pi.mass.values().all(|m| m == &ratio(1, 4)));
    }

    #[test]
    fn claim_matches_table() {
        let cb = explicit(&["0", "10", "11"]);
        let me = induced_min_entropy(&cb, &skewed()).unwrap();
        assert_eq!(me.max_term, ratio(13, 8));
        // 2 - log2(13/8) = 1.29956028...
        assert!((me.h_min() - 1.299_560_281_858_908).abs() < 1e-12);
        let pi = induced_distribution(&cb, &skewed(), DEFAULT_BUDGET).unwrap();
        assert_eq!(pi.max_mass() * Rational::from_integer(4.into()), me.max_term);
    }
}
