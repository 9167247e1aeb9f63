//! Exact and sampled checks that ciphertext blocks are close to uniform.
//!
//! Exact mode enumerates every (message, padding, key) triple with integer
//! weights over a common denominator, so all distances are exact rationals.
//! Sampled mode scales past the enumeration budget but only estimates.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::AddAssign;
use std::time::Duration;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::Binomial;

use crate::bias::{pad_histogram, pad_word, BiasKey, FieldParams};
use crate::bits::BitString;
use crate::cipher::{CipherParams, Scheme};
use crate::code::Codebook;
use crate::dist::{format_rational, to_f64, Distribution, Rational};
use crate::error::{check_budget, Error, Result};
use crate::pad::rank_probs;

/// Largest block length the exact tables accept.
pub const MAX_EXACT_BLOCK_BITS: usize = 30;
/// Largest block length the sampler accepts.
pub const MAX_SAMPLED_BLOCK_BITS: usize = 63;
const SAMPLE_CHUNK: u64 = 1 << 14;
const BOOTSTRAP_ROUNDS: usize = 200;
const MAX_WORKERS: usize = 8;

/// Which pads are XOR-ed onto the padded block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PadFamily {
    /// The small-bias family, one pad per key `(x, y)`.
    SmallBias(FieldParams),
    /// A single fixed pad. With `0` this leaves the block in the clear.
    Constant(u64),
    /// Every `l`-bit string with equal weight.
    OneTimePad,
}

impl PadFamily {
    pub fn label(&self) -> String {
        match self {
            PadFamily::SmallBias(fp) => format!("small_bias(s={})", fp.s()),
            PadFamily::Constant(p) => format!("constant({p:#x})"),
            PadFamily::OneTimePad => "one_time_pad".into(),
        }
    }

    /// `(pad, multiplicity)` pairs over the whole key space.
    fn histogram(&self, l: usize, budget: u64) -> Result<Vec<(u64, u64)>> {
        match self {
            PadFamily::SmallBias(fp) => pad_histogram(l, fp, budget),
            PadFamily::Constant(p) => {
                if l < 64 && p >> l != 0 {
                    return Err(Error::InvalidParameter(format!("constant pad {p:#x} exceeds {l} bits")));
                }
                Ok(vec![(*p, 1)])
            }
            PadFamily::OneTimePad => {
                check_budget(1u128 << l, budget)?;
                Ok((0..1u64 << l).map(|p| (p, 1)).collect())
            }
        }
    }
}

/// A distribution over `l`-bit blocks as integer weights over a shared total.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDistribution {
    l: usize,
    /// Indexed by the block read as an integer, first bit most significant.
    weights: Vec<BigUint>,
    total: BigUint,
}

impl BlockDistribution {
    pub fn uniform(l: usize) -> Result<Self> {
        check_exact_len(l)?;
        Ok(Self {
            l,
            weights: vec![BigUint::from(1u8); 1 << l],
            total: BigUint::from(1u8) << l,
        })
    }

    /// All mass on one block.
    pub fn point(l: usize, block: u64) -> Result<Self> {
        check_exact_len(l)?;
        let mut weights = vec![BigUint::zero(); 1 << l];
        *weights
            .get_mut(block as usize)
            .ok_or_else(|| Error::InvalidParameter(format!("block {block:#x} exceeds {l} bits")))? = BigUint::from(1u8);
        Ok(Self {
            l,
            weights,
            total: BigUint::from(1u8),
        })
    }

    pub fn from_weights(l: usize, weights: Vec<BigUint>) -> Result<Self> {
        check_exact_len(l)?;
        if weights.len() != 1 << l {
            return Err(Error::LengthMismatch {
                expected: 1 << l,
                actual: weights.len(),
            });
        }
        let total: BigUint = weights.iter().sum();
        if total.is_zero() {
            return Err(Error::InvalidParameter("all weights are zero".into()));
        }
        Ok(Self { l, weights, total })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn mass(&self, block: u64) -> Rational {
        match self.weights.get(block as usize) {
            Some(w) => Rational::new(BigInt::from(w.clone()), BigInt::from(self.total.clone())),
            None => Rational::zero(),
        }
    }

    /// Sum of all masses; exactly one for any distribution built here.
    pub fn total_mass(&self) -> Rational {
        let sum: BigUint = self.weights.iter().sum();
        Rational::new(BigInt::from(sum), BigInt::from(self.total.clone()))
    }

    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| !w.is_zero()).count()
    }
}

fn check_exact_len(l: usize) -> Result<()> {
    if l > MAX_EXACT_BLOCK_BITS {
        return Err(Error::BudgetExceeded {
            needed: 1u128 << l.min(127),
            budget: 1 << MAX_EXACT_BLOCK_BITS,
        });
    }
    Ok(())
}

/// Half the L1 distance between two weight vectors with their own totals.
fn weighted_sd(a: &[BigUint], ta: &BigUint, b: &[BigUint], tb: &BigUint) -> Rational {
    let ta_i = BigInt::from(ta.clone());
    let tb_i = BigInt::from(tb.clone());
    let mut acc = BigUint::zero();
    for (x, y) in a.iter().zip(b) {
        let lhs = BigInt::from(x.clone()) * &tb_i;
        let rhs = BigInt::from(y.clone()) * &ta_i;
        acc += (lhs - rhs).magnitude();
    }
    Rational::new(BigInt::from(acc), BigInt::from(2u8) * ta_i * tb_i)
}

/// `1/2 * sum_y |p(y) - q(y)|`, exact.
pub fn statistical_distance(p: &BlockDistribution, q: &BlockDistribution) -> Result<Rational> {
    if p.l != q.l {
        return Err(Error::LengthMismatch {
            expected: p.l,
            actual: q.l,
        });
    }
    Ok(weighted_sd(&p.weights, &p.total, &q.weights, &q.total))
}

/// Padded blocks with nonzero mass and their integer weights. Each block
/// `w || r` of rank `i` weighs `num_i * (D / den_i) * 2^|w|` out of `D * 2^l`.
fn support_weights(cb: &Codebook, d: &Distribution, budget: u64) -> Result<(Vec<(u64, BigUint)>, BigUint)> {
    let l = cb.l_max();
    check_exact_len(l)?;
    let support: u128 = cb.words().iter().map(|w| 1u128 << (l - w.len())).sum();
    check_budget(support, budget)?;
    let common = d.common_denominator();
    let probs = rank_probs(cb, d)?;
    let mut out = Vec::with_capacity(support as usize);
    for (word, p) in cb.words().iter().zip(&probs) {
        let free = l - word.len();
        let scaled = p.numer().magnitude() * (&common / p.denom().magnitude());
        let weight = scaled << word.len();
        let base = word.to_u64().expect("l <= 30") << free;
        out.extend((0..1u64 << free).map(|r| (base | r, weight.clone())));
    }
    Ok((out, common << l))
}

/// The block distribution before any pad is applied.
pub fn induced_block_distribution(cb: &Codebook, d: &Distribution, budget: u64) -> Result<BlockDistribution> {
    exact_output_distribution(cb, d, &PadFamily::Constant(0), budget)
}

trait Accumulator: Clone + Send + Sync {
    fn empty() -> Self;
    fn add_scaled(&mut self, w: &Self, count: u64);
    fn into_biguint(self) -> BigUint;
}

impl Accumulator for u128 {
    fn empty() -> Self {
        0
    }

    fn add_scaled(&mut self, w: &Self, count: u64) {
        *self += w * count as u128;
    }

    fn into_biguint(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Accumulator for BigUint {
    fn empty() -> Self {
        Zero::zero()
    }

    fn add_scaled(&mut self, w: &Self, count: u64) {
        if count == 1 {
            self.add_assign(w);
        } else {
            self.add_assign(w * count);
        }
    }

    fn into_biguint(self) -> BigUint {
        self
    }
}

fn worker_count(jobs: usize) -> usize {
    std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(MAX_WORKERS)
        .min(jobs.max(1))
}

/// `out[b ^ pad] += weight(b) * count(pad)`, split over pad chunks. Integer
/// sums make the result independent of the split.
fn xor_convolve<T: Accumulator>(l: usize, support: &[(u64, T)], pads: &[(u64, u64)]) -> Vec<BigUint> {
    let workers = worker_count(pads.len());
    let run = |chunk: &[(u64, u64)]| {
        let mut acc = vec![T::empty(); 1 << l];
        for &(pad, count) in chunk {
            for (block, w) in support {
                acc[(block ^ pad) as usize].add_scaled(w, count);
            }
        }
        acc
    };
    let partials: Vec<Vec<T>> = if workers <= 1 {
        vec![run(pads)]
    } else {
        let size = pads.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = pads.chunks(size).map(|c| scope.spawn(move || run(c))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    let mut out = vec![BigUint::zero(); 1 << l];
    for part in partials {
        for (o, p) in out.iter_mut().zip(part) {
            *o += p.into_biguint();
        }
    }
    out
}

/// Exact distribution of `pad XOR (codeword || padding)` over message,
/// padding and pad choice.
pub fn exact_output_distribution(
    cb: &Codebook,
    d: &Distribution,
    pads: &PadFamily,
    budget: u64,
) -> Result<BlockDistribution> {
    let l = cb.l_max();
    let (support, block_total) = support_weights(cb, d, budget)?;
    let hist = pads.histogram(l, budget)?;
    check_budget(support.len() as u128 * hist.len() as u128, budget)?;
    check_budget(1u128 << l, budget)?;
    let keys: u64 = hist.iter().map(|&(_, c)| c).sum();
    let total = &block_total * keys;

    let weights = if total.bits() < 128 {
        let narrow: Vec<(u64, u128)> = support
            .iter()
            .map(|(b, w)| (*b, w.to_u128().expect("below total")))
            .collect();
        xor_convolve(l, &narrow, &hist)
    } else {
        xor_convolve(l, &support, &hist)
    };
    debug_assert_eq!(weights.iter().sum::<BigUint>(), total);
    Ok(BlockDistribution { l, weights, total })
}

/// Mass grouped by decoded symbol rank, plus blocks no codeword prefixes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolDistribution {
    pub ranks: Vec<BigUint>,
    pub residual: BigUint,
    pub total: BigUint,
}

impl SymbolDistribution {
    pub fn mass_of_rank(&self, rank: usize) -> Rational {
        Rational::new(BigInt::from(self.ranks[rank].clone()), BigInt::from(self.total.clone()))
    }

    pub fn residual_mass(&self) -> Rational {
        Rational::new(BigInt::from(self.residual.clone()), BigInt::from(self.total.clone()))
    }

    fn outcomes(&self) -> Vec<BigUint> {
        let mut v = self.ranks.clone();
        v.push(self.residual.clone());
        v
    }
}

/// Decoded rank for every `l`-bit block, `None` where decoding fails.
fn decode_table(cb: &Codebook) -> Vec<Option<usize>> {
    let l = cb.l_max();
    (0..1u64 << l)
        .map(|b| cb.decode_rank(&BitString::from_u64(b, l)).ok().map(|(rank, _)| rank))
        .collect()
}

/// Pushes a block distribution through prefix decoding.
pub fn pushforward_g_prime(g: &BlockDistribution, cb: &Codebook) -> Result<SymbolDistribution> {
    if g.l != cb.l_max() {
        return Err(Error::LengthMismatch {
            expected: cb.l_max(),
            actual: g.l,
        });
    }
    Ok(pushforward_with(g, cb.len(), &decode_table(cb)))
}

fn pushforward_with(g: &BlockDistribution, ranks: usize, table: &[Option<usize>]) -> SymbolDistribution {
    let mut out = SymbolDistribution {
        ranks: vec![BigUint::zero(); ranks],
        residual: BigUint::zero(),
        total: g.total.clone(),
    };
    for (w, slot) in g.weights.iter().zip(table) {
        match slot {
            Some(r) => out.ranks[*r] += w,
            None => out.residual += w,
        }
    }
    out
}

pub fn symbol_distance(p: &SymbolDistribution, q: &SymbolDistribution) -> Result<Rational> {
    if p.ranks.len() != q.ranks.len() {
        return Err(Error::LengthMismatch {
            expected: p.ranks.len(),
            actual: q.ranks.len(),
        });
    }
    Ok(weighted_sd(&p.outcomes(), &p.total, &q.outcomes(), &q.total))
}

/// Block-level and symbol-level distances to the uniform witness.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    /// `SD(ciphertext block, uniform block)`.
    pub block_sd: Rational,
    /// Same distance after both sides are pushed through decoding.
    pub symbol_sd: Rational,
}

impl ChainReport {
    /// Post-processing never increases statistical distance.
    pub fn holds(&self) -> bool {
        self.symbol_sd <= self.block_sd
    }
}

pub fn data_processing_check(scheme: &Scheme, d: &Distribution, budget: u64) -> Result<ChainReport> {
    let cb = scheme.codebook();
    let out = exact_output_distribution(cb, d, &PadFamily::SmallBias(scheme.params().field), budget)?;
    chain_for(cb, &out)
}

fn chain_for(cb: &Codebook, out: &BlockDistribution) -> Result<ChainReport> {
    let uniform = BlockDistribution::uniform(out.l)?;
    let table = decode_table(cb);
    let block_sd = statistical_distance(out, &uniform)?;
    let symbol_sd = symbol_distance(
        &pushforward_with(out, cb.len(), &table),
        &pushforward_with(&uniform, cb.len(), &table),
    )?;
    Ok(ChainReport { block_sd, symbol_sd })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Sampled estimates never certify.
    Uncertified,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Uncertified => "UNCERTIFIED",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Evidence {
    Exact {
        sd: Rational,
        /// (block, pad) pairs enumerated.
        terms: u128,
        keys: u64,
    },
    Sampled {
        samples: u64,
        seed: u64,
        /// Plug-in estimate; biased upward.
        estimate: f64,
        radius: f64,
        bootstrap_sigma: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub params: CipherParams,
    pub pads: String,
    pub evidence: Evidence,
    pub verdict: Verdict,
    pub chain: Option<ChainReport>,
    pub warnings: Vec<String>,
    /// Filled in by callers that can read a clock.
    pub wall_time: Option<Duration>,
}

const SECURITY_NOTE: &str = "distance to a fixed uniform witness bounds every adversary's advantage, \
which implies entropic security for all functions of the message";

impl VerifyReport {
    pub fn sd_exact(&self) -> Option<&Rational> {
        match &self.evidence {
            Evidence::Exact { sd, .. } => Some(sd),
            Evidence::Sampled { .. } => None,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// `key`, `value` pairs in output order.
    pub fn fields(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .params
            .report_fields()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        out.push(("pads".into(), self.pads.clone()));
        let delta = to_f64(&self.params.delta_target);
        match &self.evidence {
            Evidence::Exact { sd, terms, keys } => {
                out.push(("mode".into(), "exact".into()));
                out.push(("keys".into(), keys.to_string()));
                out.push(("terms".into(), terms.to_string()));
                out.push(("sd_exact".into(), format_rational(sd)));
                out.push(("sd_exact_float".into(), format!("{:.6e}", to_f64(sd))));
                out.push(("sd_over_delta".into(), format!("{:.6}", to_f64(sd) / delta)));
            }
            Evidence::Sampled {
                samples,
                seed,
                estimate,
                radius,
                bootstrap_sigma,
            } => {
                out.push(("mode".into(), "monte_carlo".into()));
                out.push(("samples".into(), samples.to_string()));
                out.push(("seed".into(), seed.to_string()));
                out.push(("sd_estimate".into(), format!("{estimate:.6e}")));
                out.push(("sd_radius".into(), format!("{radius:.6e}")));
                out.push(("bootstrap_sigma".into(), format!("{bootstrap_sigma:.6e}")));
                out.push(("sd_over_delta".into(), format!("{:.6}", estimate / delta)));
            }
        }
        if let Some(chain) = &self.chain {
            out.push(("chain_block_sd".into(), format_rational(&chain.block_sd)));
            out.push(("chain_symbol_sd".into(), format_rational(&chain.symbol_sd)));
            out.push(("chain_holds".into(), chain.holds().to_string()));
        }
        if let Some(t) = self.wall_time {
            out.push(("wall_time_ms".into(), format!("{:.3}", t.as_secs_f64() * 1e3)));
        }
        out.push(("verdict".into(), self.verdict.as_str().into()));
        out
    }

    /// One `key=value` pair per line. Wall time is left out so equal inputs
    /// give byte-identical output.
    pub fn render_machine(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            if k == "wall_time_ms" {
                continue;
            }
            let _ = writeln!(s, "{k}={v}");
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning={w}");
        }
        s
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            match k.as_str() {
                "sd_exact_float" | "verdict" => {}
                "sd_exact" => {
                    let f = to_f64(self.sd_exact().expect("exact"));
                    let _ = writeln!(s, "sd_exact = {v} (~{f:.6e})");
                }
                "sd_estimate" => {
                    let _ = writeln!(s, "sd_estimate = {v} (plug-in, biased upward)");
                }
                _ => {
                    let _ = writeln!(s, "{k} = {v}");
                }
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "note: {SECURITY_NOTE}");
        let _ = writeln!(s, "{}", self.verdict.as_str());
        s
    }
}

/// Exact `SD(ciphertext, uniform)`; passes iff it is at most epsilon.
pub fn check_indistinguishability(
    scheme: &Scheme,
    d: &Distribution,
    pads: &PadFamily,
    chain: bool,
    budget: u64,
) -> Result<VerifyReport> {
    let cb = scheme.codebook();
    let l = cb.l_max();
    let out = exact_output_distribution(cb, d, pads, budget)?;
    let sd = statistical_distance(&out, &BlockDistribution::uniform(l)?)?;
    let keys = (out.total() / (d.common_denominator() << l))
        .to_u64()
        .expect("key count fits");
    let support: u128 = cb.words().iter().map(|w| 1u128 << (l - w.len())).sum();
    let verdict = if sd <= scheme.params().epsilon {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let chain = if chain { Some(chain_for(cb, &out)?) } else { None };
    Ok(VerifyReport {
        params: scheme.params().clone(),
        pads: pads.label(),
        evidence: Evidence::Exact {
            sd,
            terms: support * keys as u128,
            keys,
        },
        verdict,
        chain,
        warnings: Vec::new(),
        wall_time: None,
    })
}

/// Draws `samples` independent ciphertexts, each with a fresh message,
/// padding and pad, and reports the plug-in distance to uniform.
///
/// Sample `j` uses ChaCha20 stream `j / 2^14` of `seed`, so the result does
/// not depend on how chunks are spread over threads.
pub fn monte_carlo_sd(
    scheme: &Scheme,
    d: &Distribution,
    pads: &PadFamily,
    samples: u64,
    seed: u64,
) -> Result<VerifyReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let cb = scheme.codebook();
    let l = cb.l_max();
    if l > MAX_SAMPLED_BLOCK_BITS {
        return Err(Error::InvalidParameter(format!("block length {l} exceeds {MAX_SAMPLED_BLOCK_BITS}")));
    }
    if let PadFamily::Constant(p) = pads {
        if p >> l != 0 {
            return Err(Error::InvalidParameter(format!("constant pad {p:#x} exceeds {l} bits")));
        }
    }
    let probs: Vec<f64> = rank_probs(cb, d)?.iter().map(to_f64).collect();
    let chooser = WeightedIndex::new(&probs).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let words: Vec<(u64, usize)> = cb
        .words()
        .iter()
        .map(|w| (w.to_u64().expect("l <= 63"), w.len()))
        .collect();
    let mask = |bits: usize| if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };

    let sample_chunk = |chunk: u64| -> HashMap<u64, u64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let start = chunk * SAMPLE_CHUNK;
        let end = (start + SAMPLE_CHUNK).min(samples);
        let mut counts = HashMap::new();
        for _ in start..end {
            let (word, len) = words[chooser.sample(&mut rng)];
            let free = l - len;
            let padding = rng.next_u64() & mask(free);
            let block = if free == 0 { word } else { (word << free) | padding };
            let pad = match pads {
                PadFamily::SmallBias(fp) => {
                    let m = fp.element_mask();
                    let key = BiasKey::new(rng.next_u64() & m, rng.next_u64() & m, fp.s()).expect("masked");
                    pad_word(&key, l, fp)
                }
                PadFamily::Constant(p) => *p,
                PadFamily::OneTimePad => rng.next_u64() & mask(l),
            };
            *counts.entry(block ^ pad).or_insert(0u64) += 1;
        }
        counts
    };

    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let workers = worker_count(chunks as usize) as u64;
    let partials: Vec<HashMap<u64, u64>> = if workers <= 1 {
        (0..chunks).map(sample_chunk).collect()
    } else {
        std::thread::scope(|scope| {
            let run = &sample_chunk;
            let handles: Vec<_> = (0..workers)
                .map(|w| scope.spawn(move || (w..chunks).step_by(workers as usize).map(run).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    };
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for part in partials {
        for (k, v) in part {
            *counts.entry(k).or_insert(0) += v;
        }
    }
    let mut cells: Vec<(u64, u64)> = counts.into_iter().collect();
    cells.sort_unstable();
    let freqs: Vec<f64> = cells.iter().map(|&(_, c)| c as f64 / samples as f64).collect();

    let estimate = plug_in_sd(&freqs, l);
    let spread: f64 = 0.5
        * freqs
            .iter()
            .map(|f| (f * (1.0 - f) / samples as f64).sqrt())
            .sum::<f64>();
    let bootstrap_sigma = bootstrap_sigma(&freqs, samples, l, seed);
    let radius = spread + 3.0 * bootstrap_sigma;

    let mut warnings = vec!["plug-in estimate is biased upward; sampled results are never certified".to_string()];
    if samples == 1 {
        warnings.push("a single sample gives a degenerate estimate near 1 - 2^-l".into());
    }
    if (samples as f64) < 100.0 * (l as f64).exp2() {
        warnings.push(format!("fewer than 100 * 2^l = {} samples", 100.0 * (l as f64).exp2()));
    }
    Ok(VerifyReport {
        params: scheme.params().clone(),
        pads: pads.label(),
        evidence: Evidence::Sampled {
            samples,
            seed,
            estimate,
            radius,
            bootstrap_sigma,
        },
        verdict: Verdict::Uncertified,
        chain: None,
        warnings,
        wall_time: None,
    })
}

/// `1/2 * sum |f - 2^-l|` over observed cells plus unseen cells at `2^-l` each.
fn plug_in_sd(freqs: &[f64], l: usize) -> f64 {
    let u = (-(l as f64)).exp2();
    let unseen = (l as f64).exp2() - freqs.len() as f64;
    0.5 * (freqs.iter().map(|f| (f - u).abs()).sum::<f64>() + unseen * u)
}

/// Standard deviation of the plug-in estimate under multinomial resampling
/// of the observed frequencies.
fn bootstrap_sigma(freqs: &[f64], samples: u64, l: usize, seed: u64) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut stats = Vec::with_capacity(BOOTSTRAP_ROUNDS);
    let mut resampled = vec![0f64; freqs.len()];
    for _ in 0..BOOTSTRAP_ROUNDS {
        let mut left = samples;
        let mut mass_left = 1.0f64;
        for (slot, &f) in resampled.iter_mut().zip(freqs) {
            let p = if mass_left > 0.0 { (f / mass_left).clamp(0.0, 1.0) } else { 0.0 };
            let k = if left == 0 || p == 0.0 {
                0
            } else if p >= 1.0 {
                left
            } else {
                Binomial::new(left, p).expect("p in (0, 1)").sample(&mut rng)
            };
            *slot = k as f64 / samples as f64;
            left -= k;
            mass_left -= f;
        }
        stats.push(plug_in_sd(&resampled, l));
    }
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    (stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (stats.len() - 1) as f64).sqrt()
}
