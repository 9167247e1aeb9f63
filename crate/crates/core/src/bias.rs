//! Small-bias pad families over GF(2^s).
//!
//! The key is a pair `(x, y)` of field elements. Pad bit `i` is the inner
//! product `<x^i, y>` over GF(2), so for a nonzero parity mask `a` the
//! parity of the pad is `<p_a(x), y>` with `p_a(z) = sum a_i z^i`. That is
//! unbiased unless `x` is a root of `p_a`, which gives bias at most
//! `(l - 1) / 2^s`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed};

use crate::bits::BitString;
use crate::dist::Rational;
use crate::error::{check_budget, Error, Result};

pub const MAX_DEGREE: u32 = 64;

/// Identifier of the modulus table carried in ciphertext envelopes.
pub const MODULUS_TABLE_ID: u8 = 1;

/// Smallest irreducible polynomial of each degree with constant term 1,
/// as a bit mask including the leading term. Index `s - 1`.
const LOW_WEIGHT_MODULI: [u128; 64] = include!("moduli.in");

/// Carry-less product of two 64-bit polynomials.
pub fn clmul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    let a = a as u128;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

fn degree(p: u128) -> i32 {
    127 - p.leading_zeros() as i32
}

/// Remainder of polynomial division over GF(2).
pub fn poly_mod(mut a: u128, m: u128) -> u128 {
    assert!(m != 0);
    let dm = degree(m);
    while a != 0 && degree(a) >= dm {
        a ^= m << (degree(a) - dm);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_mod(a, b);
        a = b;
        b = r;
    }
    a
}

fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    poly_mod(clmul(a as u64, b as u64), m)
}

/// Ben-Or test: `f` of degree `d` is irreducible iff
/// `gcd(x^(2^i) - x mod f, f) = 1` for every `1 <= i <= d/2`.
pub fn is_irreducible(f: u128) -> bool {
    let d = degree(f);
    if d < 1 || d > MAX_DEGREE as i32 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let x = 0b10u128;
    let mut power = x;
    for _ in 1..=d / 2 {
        power = mulmod(power, power, f);
        if poly_gcd(f, power ^ x) != 1 {
            return false;
        }
    }
    true
}

/// Scans degree-`s` polynomials with constant term 1 in increasing order and
/// returns the first irreducible one.
pub fn find_irreducible(s: u32) -> Result<u128> {
    if !(1..=MAX_DEGREE).contains(&s) {
        return Err(Error::InvalidParameter(format!("field degree {s} out of range 1..=64")));
    }
    let lead = 1u128 << s;
    (0..lead)
        .step_by(2)
        .map(|low| lead | low | 1)
        .find(|&f| is_irreducible(f))
        .ok_or_else(|| Error::InvalidParameter(format!("no irreducible of degree {s}")))
}

/// Tabulated modulus for degree `s`.
pub fn irreducible_poly(s: u32) -> Result<u128> {
    if !(1..=MAX_DEGREE).contains(&s) {
        return Err(Error::InvalidParameter(format!("field degree {s} out of range 1..=64")));
    }
    Ok(LOW_WEIGHT_MODULI[s as usize - 1])
}

/// GF(2^s) described by its degree and modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldParams {
    s: u32,
    modulus: u128,
}

impl FieldParams {
    /// Field with the tabulated modulus.
    pub fn new(s: u32) -> Result<Self> {
        Ok(Self {
            s,
            modulus: irreducible_poly(s)?,
        })
    }

    /// Field with a caller-chosen modulus, checked for irreducibility.
    pub fn with_modulus(modulus: u128) -> Result<Self> {
        if !is_irreducible(modulus) {
            return Err(Error::InvalidParameter(format!("{modulus:#x} is not irreducible")));
        }
        Ok(Self {
            s: degree(modulus) as u32,
            modulus,
        })
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    /// Number of field elements, `2^s`, as u128.
    pub fn order(&self) -> u128 {
        1u128 << self.s
    }

    pub fn element_mask(&self) -> u64 {
        if self.s == 64 {
            u64::MAX
        } else {
            (1u64 << self.s) - 1
        }
    }
}

pub fn gf_mul(a: u64, b: u64, fp: &FieldParams) -> u64 {
    debug_assert!(a & !fp.element_mask() == 0 && b & !fp.element_mask() == 0);
    poly_mod(clmul(a, b), fp.modulus) as u64
}

/// Secret key `(x, y)`, `2s` bits in total.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct BiasKey {
    pub x: u64,
    pub y: u64,
    pub s: u32,
}

impl std::fmt::Debug for BiasKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BiasKey {{ s: {}, .. }}", self.s)
    }
}

impl BiasKey {
    pub fn new(x: u64, y: u64, s: u32) -> Result<Self> {
        let fp_mask = if s >= 64 { u64::MAX } else { (1u64 << s) - 1 };
        if !(1..=MAX_DEGREE).contains(&s) || x & !fp_mask != 0 || y & !fp_mask != 0 {
            return Err(Error::Key(format!("key halves must fit in {s} bits")));
        }
        Ok(Self { x, y, s })
    }

    /// Key length in bits.
    pub fn len_bits(&self) -> u32 {
        2 * self.s
    }

    /// `x` then `y`, each MSB-first in `s` bits.
    pub fn to_bits(&self) -> BitString {
        BitString::from_u64(self.x, self.s as usize).concat(&BitString::from_u64(self.y, self.s as usize))
    }

    pub fn from_bits(bits: &BitString) -> Result<Self> {
        if bits.len() % 2 != 0 || bits.is_empty() || bits.len() > 128 {
            return Err(Error::Key(format!("{} key bits is not 2s for 1 <= s <= 64", bits.len())));
        }
        let s = bits.len() / 2;
        let x = bits.slice(0, s).to_u64().expect("s <= 64");
        let y = bits.slice(s, 2 * s).to_u64().expect("s <= 64");
        Self::new(x, y, s as u32)
    }
}

/// Pad bits packed into an integer, bit 0 of the pad most significant. `l <= 64`.
pub fn pad_word(key: &BiasKey, l: usize, fp: &FieldParams) -> u64 {
    assert!(l <= 64);
    let mut power = 1u64;
    let mut word = 0u64;
    for _ in 0..l {
        word = (word << 1) | (power & key.y).count_ones() as u64 & 1;
        power = gf_mul(power, key.x, fp);
    }
    word
}

/// The `l`-bit pad `(<x^0, y>, <x^1, y>, ..., <x^(l-1), y>)`.
pub fn aghp_pad(key: &BiasKey, l: usize, fp: &FieldParams) -> BitString {
    let mut power = 1u64;
    let mut out = BitString::new();
    for _ in 0..l {
        out.push((power & key.y).count_ones() % 2 == 1);
        power = gf_mul(power, key.x, fp);
    }
    out
}

/// Multiset of pads over all `2^(2s)` keys as `(pad, count)` pairs.
pub fn pad_histogram(l: usize, fp: &FieldParams, budget: u64) -> Result<Vec<(u64, u64)>> {
    assert!(l <= 63);
    let keys = fp.order().checked_mul(fp.order()).unwrap_or(u128::MAX);
    check_budget(keys, budget)?;
    let side = 1u64 << fp.s;
    let mut counts = std::collections::HashMap::new();
    for x in 0..side {
        let powers: Vec<u64> = std::iter::successors(Some(1u64), |&p| Some(gf_mul(p, x, fp)))
            .take(l)
            .collect();
        for y in 0..side {
            let word = powers
                .iter()
                .fold(0u64, |w, &p| (w << 1) | ((p & y).count_ones() & 1) as u64);
            *counts.entry(word).or_insert(0u64) += 1;
        }
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// Exact bias of the whole pad family: the largest `|E[(-1)^<a, pad>]|`
/// over nonzero masks `a`, by enumerating every key and every mask.
pub fn family_bias_exact(s: u32, l: usize, budget: u64) -> Result<Rational> {
    if l == 0 || l > 20 {
        return Err(Error::InvalidParameter(format!("bias oracle needs 1 <= l <= 20, got {l}")));
    }
    let fp = FieldParams::new(s)?;
    let keys = fp.order() * fp.order();
    check_budget(keys.saturating_mul((1u128 << l) - 1), budget)?;
    let hist = pad_histogram(l, &fp, budget)?;
    let best = (1u64..1 << l)
        .map(|mask| {
            hist.iter()
                .map(|&(pad, count)| {
                    if (pad & mask).count_ones() % 2 == 0 {
                        count as i128
                    } else {
                        -(count as i128)
                    }
                })
                .sum::<i128>()
                .unsigned_abs()
        })
        .max()
        .unwrap_or(0);
    Ok(Rational::new(BigInt::from(best), BigInt::from(keys)))
}

/// Smallest `s >= 1` with `(l - 1) <= delta * 2^s`.
pub fn required_s(l: u64, delta: &Rational) -> Result<u32> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!("block length {l} < 2")));
    }
    if !delta.is_positive() || delta > &Rational::one() {
        return Err(Error::InvalidParameter("delta must lie in (0, 1]".into()));
    }
    let need = BigUint::from(l - 1) * delta.denom().magnitude();
    let num = delta.numer().magnitude();
    (1..=MAX_DEGREE)
        .find(|&s| need <= num << s)
        .ok_or_else(|| Error::InvalidParameter(format!("block length {l} needs a field degree above 64")))
}

/// Bias bound `(l - 1) / 2^s` of the pad family.
pub fn bias_bound(l: u64, s: u32) -> Rational {
    Rational::new(BigInt::from(l.saturating_sub(1)), BigInt::one() << s)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::dist::{ratio, DEFAULT_BUDGET};
    use num_traits::Zero;

    // Irreducibility by trial division against every polynomial of degree
    // 1..=d/2. Independent of the Ben-Or test above.
    fn trial_division_irreducible(f: u128) -> bool {
        let d = degree(f);
        if d < 1 {
            return false;
        }
        for g in 2u128..(1u128 << (d / 2 + 1)) {
            if degree(g) >= 1 && degree(g) <= d / 2 && poly_mod(f, g) == 0 {
                return false;
            }
        }
        true
    }

    #[test]
    fn table_is_the_search_result() {
        for s in 1..=MAX_DEGREE {
            assert_eq!(irreducible_poly(s).unwrap(), find_irreducible(s).unwrap(), "s = {s}");
        }
    }

    #[test]
    fn ben_or_agrees_with_trial_division() {
        for f in 2u128..(1 << 13) {
            assert_eq!(is_irreducible(f), trial_division_irreducible(f), "{f:#b}");
        }
        for s in 1..=16 {
            let m = irreducible_poly(s).unwrap();
            assert!(trial_division_irreducible(m));
            // Everything smaller with constant term 1 is reducible.
            for low in (1..m ^ (1 << s)).step_by(2) {
                assert!(!trial_division_irreducible((1 << s) | low), "s={s} low={low:#b}");
            }
        }
    }

    #[test]
    fn small_moduli() {
        assert_eq!(irreducible_poly(1).unwrap(), 0b11);
        assert_eq!(irreducible_poly(2).unwrap(), 0b111);
        assert_eq!(irreducible_poly(3).unwrap(), 0b1011);
        assert_eq!(irreducible_poly(8).unwrap(), 0x11b);
        assert!(irreducible_poly(0).is_err());
        assert!(irreducible_poly(65).is_err());
    }

    #[test]
    fn multiplication_examples() {
        let f2 = FieldParams::new(2).unwrap();
        assert_eq!(gf_mul(0b10, 0b10, &f2), 0b11);
        let f8 = FieldParams::new(8).unwrap();
        for a in 0..256 {
            assert_eq!(gf_mul(a, 1, &f8), a);
            assert_eq!(gf_mul(a, 0, &f8), 0);
        }
        // AES field: {57} * {83} = {c1}.
        assert_eq!(gf_mul(0x57, 0x83, &f8), 0xc1);
        let f64 = FieldParams::new(64).unwrap();
        assert_eq!(gf_mul(u64::MAX, 1, &f64), u64::MAX);
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for s in 1..=6 {
            let fp = FieldParams::new(s).unwrap();
            let n = 1u64 << s;
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(gf_mul(a, b, &fp), gf_mul(b, a, &fp));
                    for c in 0..n {
                        assert_eq!(gf_mul(gf_mul(a, b, &fp), c, &fp), gf_mul(a, gf_mul(b, c, &fp), &fp));
                        assert_eq!(gf_mul(a, b ^ c, &fp), gf_mul(a, b, &fp) ^ gf_mul(a, c, &fp));
                    }
                }
            }
        }
    }

    #[test]
    fn inverses_exist() {
        for s in 1..=8 {
            let fp = FieldParams::new(s).unwrap();
            for a in 1..(1u64 << s) {
                assert!((1..(1u64 << s)).any(|b| gf_mul(a, b, &fp) == 1), "s={s} a={a}");
            }
        }
    }

    #[test]
    fn pad_examples() {
        let fp = FieldParams::new(3).unwrap();
        let key = BiasKey::new(0, 0b101, 3).unwrap();
        assert_eq!(aghp_pad(&key, 4, &fp), bits("1000"));
        let key = BiasKey::new(0b110, 0, 3).unwrap();
        assert_eq!(aghp_pad(&key, 5, &fp), bits("00000"));

        // GF(4): x^0 = 01, x^1 = 10, x^2 = 11; y = 11 gives parities 1, 1, 0.
        let f2 = FieldParams::new(2).unwrap();
        let key = BiasKey::new(0b10, 0b11, 2).unwrap();
        assert_eq!(aghp_pad(&key, 3, &f2), bits("110"));
        assert_eq!(pad_word(&key, 3, &f2), 0b110);
    }

    #[test]
    fn pads_are_linear_in_y() {
        let fp = FieldParams::new(4).unwrap();
        for x in 0..16 {
            for y1 in 0..16 {
                for y2 in 0..16 {
                    let p = |y| pad_word(&BiasKey::new(x, y, 4).unwrap(), 9, &fp);
                    assert_eq!(p(y1 ^ y2), p(y1) ^ p(y2));
                }
            }
        }
    }

    // Bias of mask `a` equals (#roots of p_a in GF(2^s)) / 2^s: when
    // p_a(x) != 0 the parity is a nonzero linear form in y.
    fn root_count_bias(s: u32, l: usize) -> Rational {
        let fp = FieldParams::new(s).unwrap();
        let best = (1u64..1 << l)
            .map(|mask| {
                (0..1u64 << s)
                    .filter(|&x| {
                        let mut acc = 0u64;
                        let mut power = 1u64;
                        for i in 0..l {
                            if (mask >> (l - 1 - i)) & 1 == 1 {
                                acc ^= power;
                            }
                            power = gf_mul(power, x, &fp);
                        }
                        acc == 0
                    })
                    .count() as u64
            })
            .max()
            .unwrap();
        ratio(best, 1 << s)
    }

    #[test]
    fn exact_bias_examples() {
        assert_eq!(family_bias_exact(2, 1, DEFAULT_BUDGET).unwrap(), Rational::zero());
        // z^2 + z has both roots 0 and 1 in GF(4).
        assert_eq!(family_bias_exact(2, 3, DEFAULT_BUDGET).unwrap(), ratio(1, 2));
        assert_eq!(root_count_bias(2, 3), ratio(1, 2));
        // The modulus z^3 + z + 1 splits completely in GF(8).
        assert_eq!(family_bias_exact(3, 4, DEFAULT_BUDGET).unwrap(), ratio(3, 8));
        assert_eq!(root_count_bias(3, 4), ratio(3, 8));
        for s in 1..=4 {
            for l in 1..=7 {
                let exact = family_bias_exact(s, l, DEFAULT_BUDGET).unwrap();
                assert_eq!(exact, root_count_bias(s, l), "s={s} l={l}");
                assert!(exact <= bias_bound(l as u64, s));
            }
        }
        assert!(matches!(family_bias_exact(10, 20, DEFAULT_BUDGET), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn required_degree() {
        assert_eq!(required_s(5, &ratio(1, 4)).unwrap(), 4);
        assert_eq!(required_s(2, &ratio(1, 1)).unwrap(), 1);
        assert_eq!(required_s(1 << 40, &ratio(1, 1)).unwrap(), 40);
        assert!(required_s(1 << 40, &ratio(1, 1 << 30)).is_err());
        assert!(required_s(1, &ratio(1, 2)).is_err());
        assert!(required_s(4, &Rational::zero()).is_err());
    }

    #[test]
    fn key_bits_round_trip() {
        let key = BiasKey::new(0b10, 0b10, 2).unwrap();
        assert_eq!(key.to_bits(), bits("1010"));
        assert_eq!(BiasKey::from_bits(&bits("1010")).unwrap(), key);
        assert!(BiasKey::from_bits(&bits("101")).is_err());
        assert!(BiasKey::new(4, 0, 2).is_err());
    }
}
