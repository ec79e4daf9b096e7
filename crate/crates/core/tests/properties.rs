mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use common::{random_netlist, same_function};
use logenc::attack::{compute_metrics, Guess};
use logenc::corrector::{assemble_cc, invert_outputs, KeyRole, KeyVector};
use logenc::encryptor::{decode, encode, encrypt_with, make_coding_scheme, testing::IdentityCipher};
use logenc::integrator::{apply_key, build_fc_with_key, lower_mux};
use logenc::nandnor::map_to_nand_nor;
use logenc::netlist::{parse_bench, simulate_bits, write_bench};
use logenc::optimizer::{optimize, OptEffort};
use logenc::verifier::{check_equiv, Budget, Equivalence};
use logenc::{GateKind, Netlist};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn netlists(max_in: usize, max_gates: usize) -> impl Strategy<Value = Netlist> {
    (
        1..=max_in,
        prop::collection::vec(any::<(u8, u16, u16, u16)>(), 1..=max_gates),
        1usize..4,
    )
        .prop_map(|(n_in, specs, n_out)| random_netlist(n_in, &specs, n_out))
}

fn efforts() -> Vec<OptEffort> {
    vec![
        OptEffort::none(),
        OptEffort::light(),
        OptEffort::standard(),
        OptEffort::heavy(3),
        OptEffort::heavy(11),
    ]
}

fn sat_only() -> Budget {
    Budget {
        exhaustive_threshold: 0,
        ..Budget::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 96,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn bench_text_is_a_fixpoint(n in netlists(6, 24)) {
        let n = lower_mux(&n).unwrap();
        // Port buffers appear on the first write; after that the text is stable.
        let back = parse_bench(n.name(), &write_bench(&n).unwrap()).unwrap();
        let text = write_bench(&back).unwrap();
        let again = parse_bench(n.name(), &text).unwrap();
        prop_assert_eq!(write_bench(&again).unwrap(), text);
        prop_assert!(same_function(&n, &again));
    }

    #[test]
    fn optimizer_preserves_function(n in netlists(6, 32)) {
        for e in efforts() {
            let o = optimize(&n, &e, &HashSet::new()).unwrap();
            prop_assert!(same_function(&n, &o), "effort {}", e);
            prop_assert_eq!(o.num_outputs(), n.num_outputs());
            prop_assert!(o.gates().len() <= n.gates().len() || e == OptEffort::none());
        }
    }

    #[test]
    fn optimizer_is_idempotent_at_standard(n in netlists(5, 24)) {
        let once = optimize(&n, &OptEffort::standard(), &HashSet::new()).unwrap();
        let twice = optimize(&once, &OptEffort::standard(), &HashSet::new()).unwrap();
        prop_assert_eq!(once.gates().len(), twice.gates().len());
    }

    #[test]
    fn mapping_preserves_function_with_nand_nor_only(n in netlists(6, 24)) {
        let m = map_to_nand_nor(&n).unwrap();
        prop_assert!(m
            .netlist()
            .gates()
            .iter()
            .all(|g| matches!(g.kind, GateKind::Nand | GateKind::Nor)));
        prop_assert!(same_function(&n, m.netlist()));
    }

    #[test]
    fn identity_cipher_decodes_to_the_mapped_netlist(n in netlists(5, 16), seed in any::<u64>()) {
        let m = map_to_nand_nor(&n).unwrap();
        prop_assume!(m.gate_count() > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cs = make_coding_scheme(m.gate_count(), &mut rng).unwrap();
        let pt = encode(&m, &cs).unwrap();
        let trace = encrypt_with(&pt, &mut IdentityCipher, &mut rng).unwrap();
        let ec = decode(&trace, &cs, &m).unwrap();
        prop_assert_eq!(&ec, m.netlist());
    }

    #[test]
    fn sat_verdict_matches_brute_force(a in netlists(5, 16), flips in any::<u32>()) {
        // A copy with some gate kinds swapped may or may not differ.
        let kinds: Vec<GateKind> = a
            .gates()
            .iter()
            .enumerate()
            .map(|(i, g)| match (g.kind, flips >> (i % 32) & 1 == 1) {
                (GateKind::And, true) => GateKind::Nand,
                (GateKind::Or, true) => GateKind::Nor,
                (GateKind::Xor, true) => GateKind::Xnor,
                (k, _) => k,
            })
            .collect();
        let b = a.with_gate_kinds(&kinds).unwrap();
        let want = same_function(&a, &b);
        let v = check_equiv(&a, &b, &sat_only()).unwrap();
        prop_assert_eq!(v.result == Equivalence::Equivalent, want);
        if let Some(w) = &v.witness {
            prop_assert_ne!(simulate_bits(&a, w), simulate_bits(&b, w));
        }
    }

    #[test]
    fn equivalence_is_symmetric(a in netlists(4, 12), b_specs in prop::collection::vec(any::<(u8, u16, u16, u16)>(), 1..12)) {
        let b = random_netlist(a.num_inputs(), &b_specs, a.num_outputs());
        prop_assume!(b.num_outputs() == a.num_outputs());
        let budget = Budget::default();
        let ab = check_equiv(&a, &b, &budget).unwrap();
        let ba = check_equiv(&b, &a, &budget).unwrap();
        prop_assert_eq!(ab.result, ba.result);
        prop_assert_eq!(ab.result == Equivalence::Equivalent, same_function(&a, &b));
    }

    #[test]
    fn inverting_outputs_twice_is_identity(n in netlists(4, 12), mask in any::<u8>()) {
        let flags: Vec<bool> = (0..n.num_outputs()).map(|i| mask >> i & 1 == 1).collect();
        let once = invert_outputs(&n, &flags).unwrap();
        let twice = invert_outputs(&once, &flags).unwrap();
        prop_assert!(same_function(&n, &twice));
        for v in common::all_vectors(&n) {
            let a = simulate_bits(&n, &v);
            let b = simulate_bits(&once, &v);
            for i in 0..a.len() {
                prop_assert_eq!(a[i] ^ flags[i], b[i]);
            }
        }
    }

    #[test]
    fn fc_under_derived_key_restores_the_oc(
        oc in netlists(4, 12),
        ec_specs in prop::collection::vec(any::<(u8, u16, u16, u16)>(), 1..12),
        key_seed in any::<u64>(),
    ) {
        let ec = random_netlist(oc.num_inputs(), &ec_specs, oc.num_outputs());
        prop_assume!(ec.num_outputs() == oc.num_outputs());
        let npo = oc.num_outputs();
        let bit = |i: usize| key_seed >> (i % 64) & 1 == 1;
        let k_cc = KeyVector::new(KeyRole::Cc, (0..npo).map(bit).collect());
        let k_ec = KeyVector::new(KeyRole::Ec, (0..npo).map(|i| bit(i + 8)).collect());
        let k_mux = KeyVector::new(KeyRole::Mux, (0..2 * npo).map(|i| bit(i + 16)).collect());
        let cc = assemble_cc(&oc, &ec, &k_cc).unwrap();
        let ec_final = invert_outputs(&ec, &k_ec.bits).unwrap();
        let fc = build_fc_with_key(&ec_final, &cc, &k_ec, &k_cc, &k_mux, &OptEffort::standard()).unwrap();
        let restored = apply_key(&fc.netlist, &fc.key_ports(), &fc.k_fc.bits).unwrap();
        prop_assert!(same_function(&oc, &restored));
    }

    #[test]
    fn metrics_match_a_recount(pairs in prop::collection::vec((0u8..3, any::<bool>()), 1..200)) {
        let guesses: Vec<Guess> = pairs
            .iter()
            .map(|(g, _)| [Guess::Zero, Guess::One, Guess::Unresolved][*g as usize])
            .collect();
        let truth: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let (ac, kpa) = compute_metrics(&guesses, &truth).unwrap();
        let mut right = 0;
        let mut resolved = 0;
        for (g, t) in guesses.iter().zip(&truth) {
            match g {
                Guess::Unresolved => {}
                Guess::Zero => { resolved += 1; if !t { right += 1; } }
                Guess::One => { resolved += 1; if *t { right += 1; } }
            }
        }
        prop_assert!((ac - 100.0 * right as f64 / truth.len() as f64).abs() < 1e-9);
        match kpa {
            None => prop_assert_eq!(resolved, 0),
            Some(k) => prop_assert!((k - 100.0 * right as f64 / resolved as f64).abs() < 1e-9),
        }
    }
}
