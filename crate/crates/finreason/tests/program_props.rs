//! Cross-module randomized properties: parser round-trips, equivalence
//! under meaning-preserving rewrites, executor agreement with a reference
//! evaluator, and decoder-mask acceptance of everything the serializer can
//! produce. Each property draws its programs from a seed so counterexamples
//! reproduce from the reported seed alone.

mod common;

use std::collections::BTreeSet;

use finreason::dsl::{parse_program, serialize_program, Argument, Program};
use finreason::equivalence::{programs_equivalent, random_eval_oracle};
use finreason::executor::{execute_program, Answer, FinTable};
use finreason::mask::{initial_state, tokenize, VocabPartition, EOF_TOKEN, MAX_STEPS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The smallest vocabulary that covers a program's own tokens, padded with
/// a filler numeral or row name where the program leaves a slot kind empty
/// (the decoder refuses vocabularies whose math or table slots are
/// unfillable).
fn vocab_for(program: &Program) -> VocabPartition {
    let mut numbers: BTreeSet<String> = BTreeSet::new();
    let mut constants: BTreeSet<String> = BTreeSet::new();
    let mut rows: BTreeSet<String> = BTreeSet::new();
    for step in &program.steps {
        if step.op.is_table_op() {
            if let Argument::RowRef(name) = &step.args[0] {
                rows.insert(name.clone());
            }
        } else {
            for arg in &step.args {
                match arg {
                    Argument::NumberLiteral { raw, .. } => {
                        numbers.insert(raw.clone());
                    }
                    Argument::NamedConstant { name, .. } => {
                        constants.insert(name.clone());
                    }
                    Argument::RowRef(symbol) => {
                        numbers.insert(symbol.clone());
                    }
                    Argument::StepRef(_) | Argument::NoneArg => {}
                }
            }
        }
    }
    if numbers.is_empty() && constants.is_empty() {
        let mut filler = "1".to_string();
        while rows.contains(&filler) {
            filler.push('1');
        }
        numbers.insert(filler);
    }
    if rows.is_empty() {
        let mut filler = "filler row".to_string();
        while numbers.contains(&filler) || constants.contains(&filler) {
            filler.push('x');
        }
        rows.insert(filler);
    }
    let collect = |set: BTreeSet<String>| set.into_iter().collect::<Vec<String>>();
    VocabPartition::with_all_ops(
        &collect(numbers),
        &collect(constants),
        &collect(rows),
        MAX_STEPS,
    )
    .expect("a program's own argument texts always form a usable vocabulary")
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// serialize -> parse -> serialize is the identity on generated
    /// programs, byte for byte.
    #[test]
    fn serialize_parse_round_trip(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let program = common::gen_full_program(&mut rng, 5);
        let text = serialize_program(&program);
        let reparsed = parse_program(&text).expect("serializer output must parse");
        prop_assert_eq!(serialize_program(&reparsed), text);
    }

    /// Swapping commutative arguments and reordering independent steps
    /// never changes a program's equivalence class, and the randomized
    /// evaluator never contradicts that verdict.
    #[test]
    fn rewrites_preserve_equivalence(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let a = common::gen_symbolic_math_program(&mut rng, 4);
        let swapped = common::swap_commutative_args(&a, &mut rng);
        let rewritten = common::permute_steps(&swapped, &mut rng);
        prop_assert!(programs_equivalent(&a, &a));
        prop_assert!(programs_equivalent(&a, &rewritten));
        prop_assert!(programs_equivalent(&rewritten, &a));
        if let Ok(agree) = random_eval_oracle(&a, &rewritten, 10, seed) {
            prop_assert!(agree);
        }
    }

    /// Equivalence answers are symmetric for arbitrary pairs, related or
    /// not.
    #[test]
    fn equivalence_is_symmetric(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let a = common::gen_symbolic_math_program(&mut rng, 3);
        let b = if seed % 2 == 0 {
            common::mutate_program(&a, &mut rng)
        } else {
            common::gen_symbolic_math_program(&mut rng, 3)
        };
        prop_assert_eq!(programs_equivalent(&a, &b), programs_equivalent(&b, &a));
    }

    /// The executor agrees with the independent recursive evaluator on
    /// closed arithmetic programs, including where both overflow.
    #[test]
    fn executor_matches_reference_evaluator(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let program = common::gen_math_program(&mut rng, 4);
        let reference = common::brute_force_eval(&program).expect("closed math program");
        match execute_program(&program, &FinTable::empty()) {
            Ok(Answer::Numeric(v)) => {
                let tol = 1e-9 * v.abs().max(reference.abs()).max(1.0);
                prop_assert!((v - reference).abs() <= tol, "{v} vs {reference}");
            }
            Ok(Answer::Boolean(_)) => prop_assert!(false, "no comparison steps generated"),
            Err(_) => prop_assert!(!reference.is_finite()),
        }
    }

    /// Meaning-preserving rewrites leave concrete execution results
    /// unchanged.
    #[test]
    fn rewrites_preserve_execution(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let a = common::gen_math_program(&mut rng, 4);
        let swapped = common::swap_commutative_args(&a, &mut rng);
        let rewritten = common::permute_steps(&swapped, &mut rng);
        let table = FinTable::empty();
        match (execute_program(&a, &table), execute_program(&rewritten, &table)) {
            (Ok(Answer::Numeric(x)), Ok(Answer::Numeric(y))) => {
                let tol = 1e-12 * x.abs().max(y.abs()).max(1.0);
                prop_assert!((x - y).abs() <= tol, "{x} vs {y}");
            }
            (Err(_), Err(_)) => {}
            (left, right) => prop_assert!(false, "diverged: {left:?} vs {right:?}"),
        }
    }

    /// Everything the serializer emits is accepted by the decoding
    /// automaton under a vocabulary covering the program's tokens.
    #[test]
    fn serialized_programs_pass_the_decoder(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let program = common::gen_full_program(&mut rng, 5);
        let vocab = vocab_for(&program);
        let mut sequence = tokenize(&serialize_program(&program));
        sequence.push(EOF_TOKEN.to_string());
        prop_assert!(
            vocab.accepts(sequence.iter().map(String::as_str)),
            "decoder rejected `{}` as {:?}",
            serialize_program(&program),
            sequence
        );
    }

    /// Along any serialized program's decode path, the reported mask bit
    /// for every vocabulary token matches whether advancing on that token
    /// succeeds.
    #[test]
    fn mask_bits_agree_with_advance(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let program = common::gen_full_program(&mut rng, 3);
        let vocab = vocab_for(&program);
        let mut sequence = tokenize(&serialize_program(&program));
        sequence.push(EOF_TOKEN.to_string());

        let mut state = initial_state();
        for token in &sequence {
            let mask = vocab.valid_mask(&state);
            prop_assert!(mask.count_valid() > 0, "dead state before `{token}`");
            for (index, entry) in vocab.tokens().iter().enumerate() {
                let advances = vocab.advance(&state, &entry.text).is_ok();
                prop_assert_eq!(
                    mask.is_valid(index),
                    advances,
                    "mask bit for `{}` disagrees with advance",
                    &entry.text
                );
            }
            state = vocab.advance(&state, token).expect("serializer output decodes");
        }
        prop_assert!(state.is_accepted());
    }
}
