use ecs_core::bias::{aghp_pad, gf_mul, pad_word, BiasKey, FieldParams};
use ecs_core::bits::BitString;
use ecs_core::cipher::{key_from_text, key_to_text, keygen, theoretical_key_bits, CiphertextEnvelope, Margin, Scheme};
use ecs_core::code::{build_shannon, build_trimmed, ceil_log2, shannon_length, trim_tree, trimmed_shannon, Codebook};
use ecs_core::dist::{ratio, Distribution, Rational, Symbol, DEFAULT_BUDGET};
use ecs_core::pad::{induced_distribution, induced_min_entropy, randomize, seeded_bits, strip, Transcript};
use ecs_core::verify::{
    check_indistinguishability, data_processing_check, exact_output_distribution, induced_block_distribution,
    monte_carlo_sd, statistical_distance, BlockDistribution, Evidence, PadFamily, Verdict,
};
use num_bigint::{BigInt, BigUint};
use num_traits::One;
use proptest::prelude::*;

/// Integer weights `w_i` normalised to `w_i / sum`.
fn normalise(weights: &[u64]) -> Vec<Rational> {
    let total: u64 = weights.iter().sum();
    weights.iter().map(|&w| ratio(w, total)).collect()
}

fn indexed() -> impl Strategy<Value = Distribution> {
    prop::collection::vec(1u64..1000, 2..40).prop_map(|w| Distribution::indexed(normalise(&w)).unwrap())
}

fn small_indexed() -> impl Strategy<Value = Distribution> {
    prop::collection::vec(1u64..64, 2..7).prop_map(|w| Distribution::indexed(normalise(&w)).unwrap())
}

fn bit_alphabet(max_n: usize) -> impl Strategy<Value = Distribution> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(1u64..100, 1 << n)))
        .prop_map(|(n, w)| {
            let probs = normalise(&w);
            let entries = probs
                .into_iter()
                .enumerate()
                .map(|(v, p)| (Symbol::Bits(BitString::from_u64(v as u64, n)), p))
                .collect();
            Distribution::new(Some(n), entries).unwrap()
        })
}

fn epsilon() -> impl Strategy<Value = Rational> {
    prop_oneof![Just(ratio(1, 2)), Just(ratio(1, 4)), Just(ratio(1, 16))]
}

fn probs_by_rank(cb: &Codebook, d: &Distribution) -> Vec<Rational> {
    cb.symbols().iter().map(|s| d.prob_of(s).unwrap().clone()).collect()
}

proptest! {
    #[test]
    fn text_format_round_trips(d in indexed()) {
        let back = Distribution::parse(&d.to_text()).unwrap();
        prop_assert_eq!(back.sorted_order(), d.sorted_order());
        prop_assert!(back.probs().iter().sum::<Rational>().is_one());
        prop_assert_eq!(back, d);
    }

    #[test]
    fn min_entropy_threshold_matches_integer_comparison(d in indexed(), t in 0u32..12) {
        let p = d.max_prob();
        let lhs = p.numer().magnitude() << t;
        let rhs = p.denom().magnitude().clone();
        prop_assert_eq!(d.min_entropy_exceeds(t, &Rational::one()), lhs < rhs);
    }

    #[test]
    fn extension_is_associative(d in bit_alphabet(2), a in 1usize..3, b in 1usize..3) {
        let whole = d.product_extend(a + b, DEFAULT_BUDGET).unwrap();
        let split = d
            .product_extend(a, DEFAULT_BUDGET)
            .unwrap()
            .product(&d.product_extend(b, DEFAULT_BUDGET).unwrap(), DEFAULT_BUDGET)
            .unwrap();
        prop_assert_eq!(whole, split);
    }

    #[test]
    fn shannon_code_is_prefix_free(d in indexed()) {
        let cb = build_shannon(&d).unwrap();
        prop_assert!(cb.is_prefix_free());
        prop_assert!(cb.kraft_sum() <= Rational::one());
    }

    #[test]
    fn shannon_lengths_are_minimal_ceilings(d in indexed()) {
        let raw = build_shannon(&d).unwrap();
        let tree = trim_tree(&raw);
        for ((w, t), p) in raw.words().iter().zip(tree.words()).zip(probs_by_rank(&raw, &d)) {
            let len = shannon_length(&p);
            prop_assert_eq!(w.len() as u32, len);
            prop_assert!(t.len() as u32 <= len);
            let num = p.numer().magnitude().clone();
            let den = p.denom().magnitude().clone();
            prop_assert!(&num << len >= den);
            if len > 0 {
                prop_assert!((&num << (len - 1)) < den);
            }
        }
    }

    #[test]
    fn trimmed_length_bounds(d in indexed()) {
        let cb = trimmed_shannon(&d).unwrap();
        let log_l = ceil_log2(d.len() as u64) as usize;
        prop_assert!(cb.is_prefix_free());
        prop_assert!(cb.words().iter().all(|w| w.len() <= log_l + 1));
        prop_assert!(cb.l_max() >= log_l);
        prop_assert!(trim_tree(&build_shannon(&d).unwrap()).l_max() >= log_l);
    }

    #[test]
    fn decoding_ignores_suffix(d in indexed(), suffix in prop::collection::vec(any::<bool>(), 0..12)) {
        let suffix = BitString::from_bits(suffix);
        let raw = build_shannon(&d).unwrap();
        for cb in [raw.clone(), trim_tree(&raw), build_trimmed(&trim_tree(&raw))] {
            for sym in d.symbols() {
                let w = cb.encode(sym).unwrap();
                prop_assert_eq!(cb.decode_prefix(&w.concat(&suffix)).unwrap(), (sym.clone(), w.len()));
            }
        }
    }

    #[test]
    fn tree_trimming_is_idempotent(d in indexed()) {
        let once = trim_tree(&build_shannon(&d).unwrap());
        let twice = trim_tree(&once);
        prop_assert_eq!(once.words(), twice.words());
    }

    #[test]
    fn codebooks_are_deterministic(d in indexed()) {
        let again = Distribution::parse(&d.to_text()).unwrap();
        let (a, b) = (trimmed_shannon(&d).unwrap(), trimmed_shannon(&again).unwrap());
        prop_assert_eq!(a.words(), b.words());
    }

    #[test]
    fn claim_matches_brute_force(d in indexed()) {
        let raw = build_shannon(&d).unwrap();
        let tree = trim_tree(&raw);
        let escape = build_trimmed(&tree);
        for (cb, limit) in [(&tree, 2u64), (&escape, 4u64)] {
            let me = induced_min_entropy(cb, &d).unwrap();
            prop_assert!(me.max_term < ratio(limit, 1));
            prop_assert!(me.max_term >= Rational::one());
            if cb.l_max() <= 16 {
                let pi = induced_distribution(cb, &d, DEFAULT_BUDGET).unwrap();
                let scale = Rational::from_integer(BigInt::one() << cb.l_max());
                prop_assert_eq!(pi.max_mass() * scale, me.max_term.clone());
                if cb.kraft_sum().is_one() {
                    prop_assert!(pi.total().is_one());
                }
            }
        }
    }

    #[test]
    fn strip_inverts_randomize(d in small_indexed()) {
        let cb = trimmed_shannon(&d).unwrap();
        for sym in d.symbols() {
            let free = cb.l_max() - cb.encode(sym).unwrap().len();
            for r in 0..1u64 << free {
                let mut src = Transcript::new(BitString::from_u64(r, free));
                let block = randomize(&cb, sym, &mut src).unwrap();
                prop_assert_eq!(block.len(), cb.l_max());
                prop_assert_eq!(&strip(&cb, &block).unwrap(), sym);
            }
        }
    }

    #[test]
    fn field_axioms(s in 1u32..=64, a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let fp = FieldParams::new(s).unwrap();
        let m = fp.element_mask();
        let (a, b, c) = (a & m, b & m, c & m);
        prop_assert_eq!(gf_mul(a, b, &fp), gf_mul(b, a, &fp));
        prop_assert_eq!(gf_mul(gf_mul(a, b, &fp), c, &fp), gf_mul(a, gf_mul(b, c, &fp), &fp));
        prop_assert_eq!(gf_mul(a, b ^ c, &fp), gf_mul(a, b, &fp) ^ gf_mul(a, c, &fp));
        prop_assert_eq!(gf_mul(a, 1, &fp), a);
    }

    #[test]
    fn pads_are_linear_in_y(s in 1u32..=64, x in any::<u64>(), y1 in any::<u64>(), y2 in any::<u64>(), l in 1usize..=64) {
        let fp = FieldParams::new(s).unwrap();
        let m = fp.element_mask();
        let k1 = BiasKey::new(x & m, y1 & m, s).unwrap();
        let k2 = BiasKey::new(x & m, y2 & m, s).unwrap();
        let k12 = BiasKey::new(x & m, (y1 ^ y2) & m, s).unwrap();
        let p1 = aghp_pad(&k1, l, &fp);
        prop_assert_eq!(aghp_pad(&k12, l, &fp), p1.xor(&aghp_pad(&k2, l, &fp)).unwrap());
        prop_assert_eq!(BitString::from_u64(pad_word(&k1, l, &fp), l), p1);
    }

    #[test]
    fn key_length_formula(c in 1u32..=30) {
        let eps = Rational::new(BigInt::one(), BigInt::one() << c);
        prop_assert_eq!(theoretical_key_bits(&eps, Margin::Four), 2 * c + 4);
        prop_assert_eq!(theoretical_key_bits(&eps, Margin::Five), 2 * c + 5);
    }

    #[test]
    fn block_length_at_most_n_plus_one(d in bit_alphabet(6), eps in epsilon()) {
        if d.len() >= 2 {
            let scheme = Scheme::new(&d, &eps, Margin::Four).unwrap();
            prop_assert!(scheme.params().l <= d.n().unwrap() + 1);
            prop_assert!(scheme.params().family_bias_bound() <= scheme.params().delta_target);
            prop_assert_eq!(scheme.params().k_impl, 2 * scheme.params().s());
        }
    }

    #[test]
    fn encrypt_then_decrypt_is_identity(d in indexed(), eps in epsilon(), seed in any::<u64>()) {
        let scheme = Scheme::new(&d, &eps, Margin::Four).unwrap();
        let mut src = seeded_bits(seed);
        for sym in d.symbols() {
            let key = keygen(scheme.params(), &mut src).unwrap();
            let k = *key.key();
            let env = scheme.encrypt(key, sym, &mut src).unwrap();
            let env = CiphertextEnvelope::from_bytes(&env.to_bytes()).unwrap();
            prop_assert_eq!(&scheme.decrypt(&k, &env).unwrap(), sym);
        }
    }

    #[test]
    fn envelope_bytes_round_trip(l in 1u16..200, s in 1u16..=64, id in any::<u8>(), seed in any::<u64>()) {
        let payload = ecs_core::pad::BitSource::take_bits(&mut seeded_bits(seed), l as usize).unwrap();
        let env = CiphertextEnvelope { version: 1, l, s, modulus_id: id, payload };
        prop_assert_eq!(CiphertextEnvelope::from_bytes(&env.to_bytes()).unwrap(), env);
    }

    #[test]
    fn key_text_round_trips(s in 1u32..=64, x in any::<u64>(), y in any::<u64>()) {
        let m = FieldParams::new(s).unwrap().element_mask();
        let key = BiasKey::new(x & m, y & m, s).unwrap();
        prop_assert_eq!(key_from_text(&key_to_text(&key)).unwrap(), key);
    }

    #[test]
    fn sd_is_a_bounded_symmetric_distance(a in prop::collection::vec(0u64..50, 8), b in prop::collection::vec(0u64..50, 8)) {
        prop_assume!(a.iter().any(|&w| w > 0) && b.iter().any(|&w| w > 0));
        let p = BlockDistribution::from_weights(3, a.iter().map(|&w| BigUint::from(w)).collect()).unwrap();
        let q = BlockDistribution::from_weights(3, b.iter().map(|&w| BigUint::from(w)).collect()).unwrap();
        let pq = statistical_distance(&p, &q).unwrap();
        prop_assert_eq!(&pq, &statistical_distance(&q, &p).unwrap());
        prop_assert!(pq <= Rational::one());
        prop_assert!(statistical_distance(&p, &p).unwrap() == ratio(0, 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derived_instances_are_certified(d in small_indexed(), eps in epsilon()) {
        let scheme = Scheme::new(&d, &eps, Margin::Four).unwrap();
        let cb = scheme.codebook();
        let pads = PadFamily::SmallBias(scheme.params().field);
        let out = exact_output_distribution(cb, &d, &pads, DEFAULT_BUDGET).unwrap();
        prop_assert!(out.total_mass().is_one());

        let uniform = BlockDistribution::uniform(cb.l_max()).unwrap();
        let pi = induced_block_distribution(cb, &d, DEFAULT_BUDGET).unwrap();
        prop_assert!(statistical_distance(&out, &uniform).unwrap() <= statistical_distance(&pi, &uniform).unwrap());

        let report = check_indistinguishability(&scheme, &d, &pads, false, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(report.verdict, Verdict::Pass);
        prop_assert!(data_processing_check(&scheme, &d, DEFAULT_BUDGET).unwrap().holds());
    }
}

#[test]
fn sampled_estimate_converges() {
    let d = Distribution::bernoulli(ratio(3, 4)).unwrap().product_extend(4, DEFAULT_BUDGET).unwrap();
    let scheme = Scheme::new(&d, &ratio(1, 16), Margin::Four).unwrap();
    let pads = PadFamily::SmallBias(scheme.params().field);
    let exact = check_indistinguishability(&scheme, &d, &pads, false, DEFAULT_BUDGET).unwrap();
    let exact = ecs_core::dist::to_f64(exact.sd_exact().unwrap());
    let n = 100u64 << scheme.params().l;
    let gap = |samples: u64, seed: u64| {
        let Evidence::Sampled { estimate, .. } = monte_carlo_sd(&scheme, &d, &pads, samples, seed).unwrap().evidence else {
            unreachable!()
        };
        (estimate - exact).abs()
    };
    let improved = (0..100u64).filter(|&seed| gap(3 * n, seed + 1000) <= gap(n, seed)).count();
    assert!(improved >= 95, "{improved}/100");
}
