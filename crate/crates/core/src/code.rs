//! Shannon codes, trie trimming and the escape-trimmed code.
//!
//! A [`Codebook`] holds one codeword per symbol, indexed by rank (the
//! distribution's sorted order, rank 0 being the most probable symbol).
//! Every codebook is prefix-free by construction, so decoding is a walk
//! down a binary trie.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::bits::BitString;
use crate::dist::{Distribution, Rational, Symbol};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeKind {
    /// First `ceil(log2 1/p)` digits of the cumulative probability.
    RawShannon,
    /// Raw Shannon code with every single-child trie node contracted.
    TreeTrimmed,
    /// `0 || inner` for short words, `1 || rank` for long ones.
    TrimmedEscape,
    /// Caller-supplied table.
    Explicit,
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeKind::RawShannon => "raw_shannon",
            CodeKind::TreeTrimmed => "tree_trimmed",
            CodeKind::TrimmedEscape => "trimmed_escape",
            CodeKind::Explicit => "explicit",
        })
    }
}

/// `ceil(log2 n)` computed as the bit length of `n - 1`. `ceil_log2(1) == 0`.
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n >= 1);
    64 - (n - 1).leading_zeros()
}

/// Smallest `m >= 0` with `2^m >= 1/p`, by exact integer comparison.
pub fn shannon_length(p: &Rational) -> u32 {
    assert!(
        p > &Rational::zero() && p <= &Rational::one(),
        "probability out of (0, 1]"
    );
    let (num, den) = (p.numer(), p.denom());
    let mut m = 0u32;
    let mut scaled = num.clone();
    while &scaled < den {
        scaled <<= 1;
        m += 1;
    }
    m
}

/// The first `len` fractional binary digits of `q` in `[0, 1)`.
pub fn binary_expansion(q: &Rational, len: usize) -> BitString {
    assert!(
        q >= &Rational::zero() && q < &Rational::one(),
        "binary_expansion needs 0 <= q < 1"
    );
    let den = q.denom();
    let mut rem: BigInt = q.numer().clone();
    let mut out = BitString::new();
    for _ in 0..len {
        rem <<= 1;
        if &rem >= den {
            out.push(true);
            rem -= den;
        } else {
            out.push(false);
        }
    }
    out
}

pub fn is_prefix_free(words: &[BitString]) -> bool {
    Trie::build(words).is_ok()
}

/// `sum 2^-|w|` over the words, exactly.
pub fn kraft_sum(words: &[BitString]) -> Rational {
    let max = words.iter().map(BitString::len).max().unwrap_or(0);
    let num: BigInt = words
        .iter()
        .map(|w| BigInt::one() << (max - w.len()))
        .sum();
    Rational::new(num, BigInt::one() << max)
}

#[derive(Clone, Debug, Default)]
struct Node {
    child: [Option<u32>; 2],
    leaf: Option<usize>,
}

/// Binary decoding trie; leaves carry ranks.
#[derive(Clone, Debug)]
struct Trie {
    nodes: Vec<Node>,
}

impl Trie {
    fn build(words: &[BitString]) -> Result<Self> {
        let mut nodes = vec![Node::default()];
        let conflict = |a: usize, b: usize| {
            Err(Error::NotPrefixFree(words[a].to_string(), words[b].to_string()))
        };
        for (rank, word) in words.iter().enumerate() {
            let mut at = 0usize;
            for bit in word.iter() {
                if let Some(other) = nodes[at].leaf {
                    return conflict(other, rank);
                }
                at = match nodes[at].child[bit as usize] {
                    Some(c) => c as usize,
                    None => {
                        nodes.push(Node::default());
                        let c = nodes.len() - 1;
                        nodes[at].child[bit as usize] = Some(c as u32);
                        c
                    }
                };
            }
            if let Some(other) = nodes[at].leaf {
                return conflict(other, rank);
            }
            if nodes[at].child.iter().any(Option::is_some) {
                let longer = words
                    .iter()
                    .position(|w| w.len() > word.len() && w.starts_with(word))
                    .expect("interior node has a descendant word");
                return conflict(rank, longer);
            }
            nodes[at].leaf = Some(rank);
        }
        Ok(Self { nodes })
    }

    /// Rank and length of the codeword prefixing `stream`, if any.
    fn decode(&self, stream: &[bool]) -> Option<(usize, usize)> {
        let mut at = 0usize;
        for (depth, &bit) in stream.iter().enumerate() {
            if let Some(rank) = self.nodes[at].leaf {
                return Some((rank, depth));
            }
            at = self.nodes[at].child[bit as usize]? as usize;
        }
        self.nodes[at].leaf.map(|rank| (rank, stream.len()))
    }
}

/// A prefix-free map from symbols to codewords, stored by rank.
#[derive(Clone, Debug)]
pub struct Codebook {
    kind: CodeKind,
    symbols: Vec<Symbol>,
    words: Vec<BitString>,
    ranks: HashMap<Symbol, usize>,
    l_max: usize,
    escape_width: Option<usize>,
    trie: Trie,
}

impl Codebook {
    /// Builds a codebook from a rank-ordered table. Fails unless the words
    /// are prefix-free and the symbols distinct.
    pub fn from_words(kind: CodeKind, symbols: Vec<Symbol>, words: Vec<BitString>) -> Result<Self> {
        if symbols.len() != words.len() {
            return Err(Error::InvalidParameter(format!(
                "{} symbols but {} codewords",
                symbols.len(),
                words.len()
            )));
        }
        let trie = Trie::build(&words)?;
        let mut ranks = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if ranks.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate symbol `{s}`")));
            }
        }
        let l_max = words.iter().map(BitString::len).max().unwrap_or(0);
        Ok(Self {
            kind,
            symbols,
            words,
            ranks,
            l_max,
            escape_width: None,
            trie,
        })
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    /// Alphabet size `L`.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Longest codeword length `l`.
    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Symbols in rank order.
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Codewords in rank order.
    pub fn words(&self) -> &[BitString] {
        &self.words
    }

    pub fn rank_of(&self, sym: &Symbol) -> Option<usize> {
        self.ranks.get(sym).copied()
    }

    pub fn encode(&self, sym: &Symbol) -> Result<&BitString> {
        self.rank_of(sym)
            .map(|r| &self.words[r])
            .ok_or_else(|| Error::UnknownSymbol(sym.to_string()))
    }

    /// Rank and codeword length of the unique codeword prefixing `stream`.
    pub fn decode_rank(&self, stream: &BitString) -> Result<(usize, usize)> {
        let undecodable = || Error::Undecodable(stream.to_string());
        match self.escape_width {
            // Two-case decoder: a leading 1 is followed by a fixed-width rank.
            Some(width) if stream.get(0) == Some(true) => {
                if stream.len() < width + 1 {
                    return Err(undecodable());
                }
                let rank = stream.slice(1, width + 1).to_u64().ok_or_else(undecodable)? as usize;
                if rank < self.len() && self.words[rank].len() == width + 1 && self.words[rank].get(0) == Some(true) {
                    Ok((rank, width + 1))
                } else {
                    Err(undecodable())
                }
            }
            _ => self.trie.decode(stream.as_slice()).ok_or_else(undecodable),
        }
    }

    pub fn decode_prefix(&self, stream: &BitString) -> Result<(Symbol, usize)> {
        let (rank, used) = self.decode_rank(stream)?;
        Ok((self.symbols[rank].clone(), used))
    }

    pub fn is_prefix_free(&self) -> bool {
        is_prefix_free(&self.words)
    }

    pub fn kraft_sum(&self) -> Rational {
        kraft_sum(&self.words)
    }
}

/// Raw Shannon code: rank `i` gets the first `shannon_length(p_i)` digits of
/// `Q_i = sum_{j<i} p_j`.
pub fn build_shannon(d: &Distribution) -> Result<Codebook> {
    if d.len() < 2 {
        return Err(Error::DegenerateAlphabet(d.len()));
    }
    let mut cumulative = Rational::zero();
    let mut symbols = Vec::with_capacity(d.len());
    let mut words = Vec::with_capacity(d.len());
    for (sym, p) in d.sorted() {
        words.push(binary_expansion(&cumulative, shannon_length(p) as usize));
        symbols.push(sym.clone());
        cumulative += p;
    }
    Codebook::from_words(CodeKind::RawShannon, symbols, words)
}

/// Contracts every trie node with exactly one child, deleting the digit on
/// that edge from all codewords below it.
pub fn trim_tree(cb: &Codebook) -> Codebook {
    let mut out = vec![BitString::new(); cb.len()];
    let members: Vec<(usize, usize)> = (0..cb.len()).map(|r| (r, 0)).collect();
    if !members.is_empty() {
        contract(&cb.words, members, &mut BitString::new(), &mut out);
    }
    Codebook::from_words(CodeKind::TreeTrimmed, cb.symbols.clone(), out)
        .expect("contraction preserves prefix-freeness")
}

// `members` are (rank, offset) pairs: the words below the current node and
// how many of their digits have been consumed.
fn contract(words: &[BitString], members: Vec<(usize, usize)>, path: &mut BitString, out: &mut [BitString]) {
    if let [(rank, _)] = members[..] {
        out[rank] = path.clone();
        return;
    }
    let (zeros, ones): (Vec<_>, Vec<_>) = members
        .into_iter()
        .map(|(r, off)| (r, off + 1, words[r].get(off).expect("prefix-free input")))
        .partition(|&(_, _, bit)| !bit);
    let strip = |v: Vec<(usize, usize, bool)>| v.into_iter().map(|(r, off, _)| (r, off)).collect::<Vec<_>>();
    match (zeros.is_empty(), ones.is_empty()) {
        (true, false) => contract(words, strip(ones), path, out),
        (false, true) => contract(words, strip(zeros), path, out),
        _ => {
            path.push(false);
            contract(words, strip(zeros), path, out);
            path.pop();
            path.push(true);
            contract(words, strip(ones), path, out);
            path.pop();
        }
    }
}

/// Escape-trimmed code: `0 || w` when `|w| <= ceil(log2 L)`, otherwise
/// `1 || rank` with the zero-based rank in `ceil(log2 L)` bits.
pub fn build_trimmed(cb: &Codebook) -> Codebook {
    let width = ceil_log2(cb.len() as u64) as usize;
    let words = cb
        .words
        .iter()
        .enumerate()
        .map(|(rank, w)| {
            if w.len() <= width {
                BitString::from_bits(std::iter::once(false)).concat(w)
            } else {
                BitString::from_bits(std::iter::once(true)).concat(&BitString::from_u64(rank as u64, width))
            }
        })
        .collect();
    let mut out = Codebook::from_words(CodeKind::TrimmedEscape, cb.symbols.clone(), words)
        .expect("escape code over a prefix-free code is prefix-free");
    out.escape_width = Some(width);
    out
}

/// The full chain: raw Shannon, tree trimming, escape trimming.
pub fn trimmed_shannon(d: &Distribution) -> Result<Codebook> {
    Ok(build_trimmed(&trim_tree(&build_shannon(d)?)))
}
