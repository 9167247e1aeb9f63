//! Exact probability models over finite alphabets.
//!
//! Probabilities are kept as reduced big rationals everywhere; floats only
//! show up in the `*_approx` / `bits` fields meant for reports.

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::bits::BitString;
use crate::error::{check_budget, Error, Result};

pub type Rational = BigRational;

/// Default cap on enumerated terms (alphabet sizes, support sizes, key spaces).
pub const DEFAULT_BUDGET: u64 = 1 << 26;

const HEADER_MAGIC: &str = "ECSD";
const FORMAT_VERSION: &str = "1";

/// One letter of an alphabet: an `n`-bit message or an opaque index.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Symbol {
    Bits(BitString),
    Index(u64),
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Symbol::Bits(a), Symbol::Bits(b)) => a.cmp(b),
            (Symbol::Index(a), Symbol::Index(b)) => a.cmp(b),
            (Symbol::Bits(_), Symbol::Index(_)) => Less,
            (Symbol::Index(_), Symbol::Bits(_)) => Greater,
        }
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Bits(b) => write!(f, "{b}"),
            Symbol::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Builds a rational from two machine integers. Panics if `den == 0`.
pub fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `NUM/DEN` (non-negative integers, DEN > 0) or `2^-c`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some(exp) = s.strip_prefix("2^-") {
        let c: u32 = exp.parse().ok()?;
        return Some(Rational::new(BigInt::one(), BigInt::one() << c));
    }
    let (num, den) = s.split_once('/')?;
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() || num.is_negative() || den.is_negative() {
        return None;
    }
    Some(Rational::new(num, den))
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Approximate `log2(n)` for an arbitrarily large positive integer.
pub fn log2_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 53 {
        return (n.iter_u64_digits().next().unwrap_or(0) as f64).log2();
    }
    let shift = bits - 53;
    let top: BigUint = n >> shift;
    (top.iter_u64_digits().next().unwrap_or(0) as f64).log2() + shift as f64
}

/// Approximate `log2(r)` for a positive rational.
pub fn log2_rational(r: &Rational) -> f64 {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    log2_biguint(num) - log2_biguint(den)
}

pub fn to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    log2_rational(r).exp2()
}

/// Exact `2^k` as a rational.
pub fn pow2(k: u32) -> Rational {
    Rational::from_integer(BigInt::one() << k)
}

/// Min-entropy summary: the exact maximum probability plus a float
/// `-log2(max_prob)` for display.
#[derive(Debug, Clone, PartialEq)]
pub struct MinEntropy {
    pub max_prob: Rational,
    pub bits: f64,
}

/// Exact-rational distribution over a finite alphabet.
#[derive(Clone, Debug)]
pub struct Distribution {
    symbols: Vec<Symbol>,
    probs: Vec<Rational>,
    n: Option<usize>,
    sorted_order: Vec<usize>,
    index: HashMap<Symbol, usize>,
}

impl Distribution {
    /// Validates and builds a distribution. `n` is the common bit length of
    /// `Bits` symbols; `None` marks an abstract (indexed) alphabet.
    pub fn new(n: Option<usize>, entries: Vec<(Symbol, Rational)>) -> Result<Self> {
        let (symbols, probs): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let err = |i: usize, msg: String| Error::Parse { line: i + 1, msg };
        if symbols.is_empty() {
            return Err(err(0, "empty alphabet".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, (sym, p)) in symbols.iter().zip(&probs).enumerate() {
            match (sym, n) {
                (Symbol::Bits(b), Some(n)) if b.len() != n => {
                    return Err(err(i, format!("symbol `{b}` has length {}, expected {n}", b.len())))
                }
                (Symbol::Bits(_), None) => {
                    return Err(err(i, "bit-string symbol in an abstract alphabet".into()))
                }
                (Symbol::Index(_), Some(_)) => {
                    return Err(err(i, "index symbol in a bit-string alphabet".into()))
                }
                _ => {}
            }
            if !p.is_positive() {
                return Err(err(i, format!("probability of `{sym}` must be positive")));
            }
            if index.insert(sym.clone(), i).is_some() {
                return Err(err(i, format!("duplicate symbol `{sym}`")));
            }
        }
        let sum: Rational = probs.iter().sum();
        if !sum.is_one() {
            return Err(err(
                symbols.len() - 1,
                format!("probabilities sum to {}, expected 1", format_rational(&sum)),
            ));
        }
        let mut sorted_order: Vec<usize> = (0..symbols.len()).collect();
        sorted_order.sort_by(|&a, &b| probs[b].cmp(&probs[a]).then_with(|| symbols[a].cmp(&symbols[b])));
        Ok(Self {
            symbols,
            probs,
            n,
            sorted_order,
            index,
        })
    }

    /// Parses the `ECSD 1 <n|*> <L>` text format. Errors carry 1-based line
    /// numbers of the input.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != HEADER_MAGIC || fields[1] != FORMAT_VERSION {
            return Err(perr(hline, format!("bad header `{header}`, expected `ECSD 1 <n|*> <L>`")));
        }
        let n = match fields[2] {
            "*" => None,
            s => Some(
                s.parse::<usize>()
                    .ok()
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| perr(hline, format!("bad message length `{s}`")))?,
            ),
        };
        let count: usize = fields[3]
            .parse()
            .ok()
            .filter(|&l| l >= 1)
            .ok_or_else(|| perr(hline, format!("bad alphabet size `{}`", fields[3])))?;

        let mut entries = Vec::with_capacity(count);
        let mut line_numbers = Vec::with_capacity(count);
        let mut seen: HashMap<Symbol, usize> = HashMap::new();
        let mut sum = Rational::zero();
        let mut last_line = hline;
        for (lno, line) in lines {
            last_line = lno;
            if entries.len() == count {
                return Err(perr(lno, format!("more than {count} symbol lines")));
            }
            let (sym_text, prob_text) = line
                .split_once(' ')
                .ok_or_else(|| perr(lno, format!("malformed line `{line}`, expected `SYMBOL NUM/DEN`")))?;
            let sym = match n {
                Some(n) => {
                    let b = BitString::parse(sym_text)
                        .filter(|b| b.len() == n)
                        .ok_or_else(|| perr(lno, format!("symbol `{sym_text}` is not a {n}-bit string")))?;
                    Symbol::Bits(b)
                }
                None => Symbol::Index(
                    sym_text
                        .parse()
                        .map_err(|_| perr(lno, format!("symbol `{sym_text}` is not a decimal index")))?,
                ),
            };
            let prob = parse_probability(prob_text).map_err(|m| perr(lno, m))?;
            if let Some(prev) = seen.insert(sym.clone(), lno) {
                return Err(perr(lno, format!("duplicate symbol `{sym}` (first on line {prev})")));
            }
            sum += &prob;
            entries.push((sym, prob));
            line_numbers.push(lno);
        }
        if entries.len() != count {
            return Err(perr(
                last_line,
                format!("expected {count} symbol lines, found {}", entries.len()),
            ));
        }
        if !sum.is_one() {
            return Err(perr(
                last_line,
                format!("probabilities sum to {}, expected 1", format_rational(&sum)),
            ));
        }
        Self::new(n, entries).map_err(|e| match e {
            Error::Parse { line, msg } => Error::Parse {
                line: line_numbers.get(line.wrapping_sub(1)).copied().unwrap_or(line),
                msg,
            },
            other => other,
        })
    }

    /// Renders the distribution in the file format accepted by [`Distribution::parse`].
    pub fn to_text(&self) -> String {
        let n = self.n.map_or("*".to_string(), |n| n.to_string());
        let mut out = format!("{HEADER_MAGIC} {FORMAT_VERSION} {n} {}\n", self.len());
        for (s, p) in self.symbols.iter().zip(&self.probs) {
            out.push_str(&format!("{s} {}\n", format_rational(p)));
        }
        out
    }

    /// Parses a message literal for this alphabet: an `n`-digit bit string or
    /// `0x` hex (read as the low `n` bits) for bit alphabets, a decimal index
    /// otherwise. The symbol must belong to the alphabet.
    pub fn parse_symbol(&self, text: &str) -> Result<Symbol> {
        let text = text.trim();
        let bad = || Error::UnknownSymbol(text.to_string());
        let sym = match self.n {
            Some(n) => {
                let b = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
                    Some(h) if n <= 64 => {
                        let v = u64::from_str_radix(h, 16).map_err(|_| bad())?;
                        if n < 64 && v >> n != 0 {
                            return Err(bad());
                        }
                        BitString::from_u64(v, n)
                    }
                    _ => BitString::parse(text).filter(|b| b.len() == n).ok_or_else(bad)?,
                };
                Symbol::Bits(b)
            }
            None => Symbol::Index(text.parse().map_err(|_| bad())?),
        };
        if self.index.contains_key(&sym) {
            Ok(sym)
        } else {
            Err(bad())
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    /// Indices ordered by non-increasing probability, ties by ascending symbol.
    pub fn sorted_order(&self) -> &[usize] {
        &self.sorted_order
    }

    /// `(symbol, probability)` pairs in sorted order (rank 1 first).
    pub fn sorted(&self) -> impl Iterator<Item = (&Symbol, &Rational)> + '_ {
        self.sorted_order
            .iter()
            .map(move |&i| (&self.symbols[i], &self.probs[i]))
    }

    pub fn prob_of(&self, sym: &Symbol) -> Option<&Rational> {
        self.index.get(sym).map(|&i| &self.probs[i])
    }

    pub fn max_prob(&self) -> &Rational {
        &self.probs[self.sorted_order[0]]
    }

    pub fn min_entropy(&self) -> MinEntropy {
        let max_prob = self.max_prob().clone();
        let bits = -log2_rational(&max_prob);
        MinEntropy {
            max_prob,
            bits: if bits == 0.0 { 0.0 } else { bits },
        }
    }

    /// Decides `h_min > threshold_bits - log2(slack)` exactly, i.e.
    /// `max_prob * 2^threshold_bits < 1 / slack`.
    pub fn min_entropy_exceeds(&self, threshold_bits: u32, slack: &Rational) -> bool {
        assert!(slack.is_positive(), "slack must be positive");
        let lhs = self.max_prob().numer() * slack.numer() << threshold_bits;
        let rhs = self.max_prob().denom() * slack.denom();
        lhs < rhs
    }

    /// Product distribution over concatenated bit-string symbols.
    pub fn product(&self, other: &Distribution, budget: u64) -> Result<Distribution> {
        let (Some(n1), Some(n2)) = (self.n, other.n) else {
            return Err(Error::InvalidParameter(
                "products need bit-string alphabets".into(),
            ));
        };
        check_budget(self.len() as u128 * other.len() as u128, budget)?;
        let mut entries = Vec::with_capacity(self.len() * other.len());
        for (a, pa) in self.symbols.iter().zip(&self.probs) {
            for (b, pb) in other.symbols.iter().zip(&other.probs) {
                let (Symbol::Bits(a), Symbol::Bits(b)) = (a, b) else {
                    unreachable!("bit alphabets hold bit symbols")
                };
                entries.push((Symbol::Bits(a.concat(b)), pa * pb));
            }
        }
        Distribution::new(Some(n1 + n2), entries)
    }

    /// The `m`-fold i.i.d. extension over `{0,1}^(n*m)`.
    pub fn product_extend(&self, m: usize, budget: u64) -> Result<Distribution> {
        if m == 0 {
            return Err(Error::InvalidParameter("extension power must be positive".into()));
        }
        if self.n.is_none() {
            return Err(Error::InvalidParameter(
                "products need bit-string alphabets".into(),
            ));
        }
        let total = (self.len() as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        check_budget(total, budget)?;
        let mut out = self.clone();
        for _ in 1..m {
            out = out.product(self, budget)?;
        }
        Ok(out)
    }

    /// Bernoulli(`p_one`) over a single bit.
    pub fn bernoulli(p_one: Rational) -> Result<Distribution> {
        let p_zero = Rational::one() - &p_one;
        Distribution::new(
            Some(1),
            vec![
                (Symbol::Bits(BitString::from_u64(0, 1)), p_zero),
                (Symbol::Bits(BitString::from_u64(1, 1)), p_one),
            ],
        )
    }

    /// Uniform over `{0,1}^n`.
    pub fn uniform_bits(n: usize) -> Result<Distribution> {
        assert!(n < 32, "uniform_bits is meant for small n");
        let size = 1u64 << n;
        let p = ratio(1, size);
        Distribution::new(
            Some(n),
            (0..size)
                .map(|v| (Symbol::Bits(BitString::from_u64(v, n)), p.clone()))
                .collect(),
        )
    }

    /// Abstract alphabet `0..probs.len()` with the given probabilities.
    pub fn indexed(probs: Vec<Rational>) -> Result<Distribution> {
        Distribution::new(
            None,
            probs
                .into_iter()
                .enumerate()
                .map(|(i, p)| (Symbol::Index(i as u64), p))
                .collect(),
        )
    }

    /// Least common denominator of all probabilities.
    pub fn common_denominator(&self) -> BigUint {
        self.probs
            .iter()
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()))
            .magnitude()
            .clone()
    }
}

/// Two distributions are equal when they assign the same probability to
/// the same symbols, regardless of listing order.
impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.len() == other.len()
            && self
                .symbols
                .iter()
                .zip(&self.probs)
                .all(|(s, p)| other.prob_of(s) == Some(p))
    }
}

fn parse_probability(text: &str) -> std::result::Result<Rational, String> {
    let (num, den) = text
        .trim()
        .split_once('/')
        .ok_or_else(|| format!("probability `{text}` is not NUM/DEN"))?;
    let num: BigInt = num
        .parse()
        .map_err(|_| format!("bad numerator in `{text}`"))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| format!("bad denominator in `{text}`"))?;
    if den.sign() != Sign::Plus {
        return Err(format!("denominator in `{text}` must be positive"));
    }
    if num.sign() != Sign::Plus {
        return Err(format!("probability `{text}` must be positive"));
    }
    Ok(Rational::new(num, den))
}
