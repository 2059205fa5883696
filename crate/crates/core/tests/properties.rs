use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lqc_core::calculus::{parse_core, Term};
use lqc_core::constraint::{Mult, SitedWanted};
use lqc_core::elaborate::linearize;
use lqc_core::entail::{entails_simple, entails_simple_closed};
use lqc_core::fuzz::candidates;
use lqc_core::pipeline::{check, elaborate};
use lqc_core::properties::{fuzz_alphabet, random_context, random_simple, random_wanted};
use lqc_core::solver::Solver;

fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| std::thread::Builder::new().stack_size(64 << 20).spawn_scoped(s, f).unwrap().join().unwrap())
}

/// Number of `dupL` / `dropL` calls in a term.
fn calls(t: &Term, f: &str) -> usize {
    t.occurrences(f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet = fuzz_alphabet();
        let ctx = random_context(&mut rng, &alphabet);
        let c = SitedWanted::from_plain(&random_wanted(&mut rng, &alphabet, 3), "p");
        let a = Solver::new().solve(&ctx, &c);
        let b = Solver::new().solve(&ctx, &c);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn leftover_is_drawn_from_the_input(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet = fuzz_alphabet();
        let ctx = random_context(&mut rng, &alphabet);
        let c = SitedWanted::from_plain(&random_wanted(&mut rng, &alphabet, 3), "p");
        if let Ok(sol) = Solver::new().solve(&ctx, &c) {
            for n in &sol.leftover {
                prop_assert!(ctx.l.contains(n), "{:?} not among the input givens", n);
            }
        }
    }

    #[test]
    fn simple_entailment_search_matches_closed_form(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet = fuzz_alphabet();
        let q1 = random_simple(&mut rng, &alphabet, 3);
        let q2 = random_simple(&mut rng, &alphabet, 3);
        prop_assert_eq!(entails_simple(&q1, &q2), entails_simple_closed(&q1, &q2));
    }

    #[test]
    fn scaling_by_one_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_wanted(&mut rng, &fuzz_alphabet(), 3);
        prop_assert_eq!(c.scale(Mult::One), c);
    }

    /// On case-free terms a token used k > 0 times needs k - 1 copies and
    /// no discards; an unused token is discarded once.
    #[test]
    fn linearize_copies_once_per_extra_use(args in proptest::collection::vec(any::<bool>(), 0..8)) {
        let t = args.iter().fold(Term::var("h"), |f, &uses_g| Term::app(f, Term::var(if uses_g { "g" } else { "x" })));
        let k = t.occurrences("g");
        let out = linearize("g", t, &mut 0);
        prop_assert_eq!(calls(&out, "dupL"), k.saturating_sub(1));
        prop_assert_eq!(calls(&out, "dropL"), usize::from(k == 0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Printing an elaborated program and parsing it back is lossless.
    #[test]
    fn core_print_parse_round_trip(seed in 0u64..10_000) {
        for prog in candidates(seed).take(2) {
            let elaborated = with_big_stack(|| {
                let p = elaborate(&prog.source).ok()?;
                let back = parse_core(&p.to_string());
                Some((p, back))
            });
            if let Some((p, back)) = elaborated {
                let back = back.map_err(|e| TestCaseError::fail(format!("{e:?}")))?;
                prop_assert_eq!(back, p);
            }
        }
    }

    /// Checking the same source twice yields the same traces.
    #[test]
    fn checking_is_deterministic(seed in 0u64..10_000) {
        for prog in candidates(seed).take(2) {
            let render = |src: &str| match check(src) {
                Ok(bs) => bs.iter().map(|b| b.to_json().to_string()).collect::<Vec<_>>().join("\n"),
                Err(d) => d.to_string(),
            };
            let (a, b) = with_big_stack(|| (render(&prog.source), render(&prog.source)));
            prop_assert_eq!(a, b);
        }
    }
}
