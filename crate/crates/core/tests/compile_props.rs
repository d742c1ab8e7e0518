//! Property tests that run the full compiler on random circuits.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nacc::config::CompilerConfig;
use nacc::hardware::compute_runtime;
use nacc::layout::{anneal_placement, InteractionGraph};
use nacc::parallel::validate_tandem;
use nacc::pipeline::anneal_config_for;
use nacc::validate::validate_schedule;
use nacc::{compile_circuit, compile_qasm, CompileOptions, Strategy};

use common::{benchmarks, random_circuit, run_circuit, State};

fn opts(strategy: Strategy, seed: u64) -> CompileOptions {
    CompileOptions {
        strategy,
        seed,
        ..CompileOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parallax_schedules_are_legal(seed in any::<u64>(), n in 2usize..14, g in 1usize..150, aod in 1usize..21, homing in any::<bool>()) {
        let c = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), n, g);
        let config = CompilerConfig { aod_count: aod, homing, ..CompilerConfig::default() };
        let out = compile_circuit(c.clone(), &config, &opts(Strategy::Parallax, seed)).unwrap();
        let s = &out.schedule;
        let v = validate_schedule(s, &c, &out.topology, &out.aod, &config.hardware, config.recursion_limit);
        prop_assert!(v.is_empty(), "{}", v[0]);
        prop_assert!(validate_tandem(&out.parallel, s, &out.topology, &out.aod).is_ok());
        prop_assert_eq!(s.swap_count, 0);
        prop_assert_eq!(s.cz_count, c.cz_count());
        // progress: every layer executes something
        prop_assert!(s.layers.iter().all(|l| !l.gates.is_empty()));
        prop_assert!(s.layers.len() <= c.gates.len());
        // the total is a plain sum, so reversing the layers leaves it alone
        let mut rev = s.clone();
        rev.layers.reverse();
        prop_assert!((compute_runtime(&rev) - s.total_runtime_us).abs() <= 1e-9 * s.total_runtime_us.max(1.0));
    }

    #[test]
    fn baseline_preserves_semantics_under_its_final_mapping(seed in any::<u64>(), n in 2usize..9, g in 1usize..60) {
        let c = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), n, g);
        let out = compile_circuit(c.clone(), &CompilerConfig::default(), &opts(Strategy::SwapBaseline, seed)).unwrap();
        let routed = out.routed.as_ref().unwrap();
        prop_assert_eq!(routed.cz_count_total, c.cz_count() + 3 * routed.swap_count);
        let start = State::scrambled(n, seed);
        let want = run_circuit(&c, &start);
        let got = run_circuit(&routed.circuit, &start);
        // logical basis index i lives at the atom index with its bits moved
        for i in 0..1usize << n {
            let j = (0..n).filter(|q| i >> q & 1 == 1).map(|q| 1 << routed.final_mapping[q]).sum::<usize>();
            prop_assert!((want.amps[i] - got.amps[j]).norm() < 1e-9, "basis {}", i);
        }
    }

    #[test]
    fn annealing_is_deterministic(seed in any::<u64>(), n in 2usize..10) {
        let c = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), n, 30);
        let graph = InteractionGraph::build(&c);
        let config = anneal_config_for(&CompilerConfig::default());
        prop_assert_eq!(anneal_placement(&graph, seed, &config), anneal_placement(&graph, seed, &config));
    }
}

#[test]
fn baseline_never_beats_movement_on_the_benchmarks() {
    let config = CompilerConfig::default();
    for (name, src) in benchmarks() {
        let m = compile_qasm(&src, &config, &opts(Strategy::Parallax, 0)).unwrap();
        let b = compile_qasm(&src, &config, &opts(Strategy::SwapBaseline, 0)).unwrap();
        assert!(b.schedule.cz_count >= m.schedule.cz_count, "{name}");
        if b.schedule.swap_count > 0 {
            assert!(b.schedule.cz_count > m.schedule.cz_count, "{name}");
        }
    }
}

#[test]
fn benchmarks_validate_for_every_aod_count_and_homing_mode() {
    for (name, src) in benchmarks() {
        for aod in [1, 5, 20] {
            for homing in [true, false] {
                let config = CompilerConfig { aod_count: aod, homing, ..CompilerConfig::default() };
                let c = compile_qasm(&src, &config, &CompileOptions::default()).unwrap();
                let v = validate_schedule(&c.schedule, &c.scheduled_circuit, &c.topology, &c.aod, &config.hardware, config.recursion_limit);
                assert!(v.is_empty(), "{name} aod={aod} homing={homing}: {}", v[0]);
                validate_tandem(&c.parallel, &c.schedule, &c.topology, &c.aod).unwrap();
            }
        }
    }
}
