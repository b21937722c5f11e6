//! Shared helpers for the integration suites: seeded program generators,
//! equivalence-preserving transformers, and an independent brute-force
//! evaluator used as an oracle against the library executor.
//!
//! Everything here is deliberately written against the public crate API only
//! and avoids reusing library internals, so it can serve as a second opinion.

#![allow(dead_code)]

use finreason::dsl::{Argument, OperationKind, Program, Step};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Construction helpers
// ---------------------------------------------------------------------------

/// Builds a numeric-literal argument whose raw text round-trips verbatim.
pub fn num(raw: &str) -> Argument {
    Argument::NumberLiteral {
        value: raw.parse().expect("helper literals are plain decimals"),
        raw: raw.to_string(),
    }
}

pub fn step(op: OperationKind, a: Argument, b: Argument) -> Step {
    Step { op, args: [a, b] }
}

// ---------------------------------------------------------------------------
// Random program generators
// ---------------------------------------------------------------------------

const MATH_OPS: [OperationKind; 4] = [
    OperationKind::Add,
    OperationKind::Subtract,
    OperationKind::Multiply,
    OperationKind::Exp,
];

const SYMBOLS: [&str; 4] = ["k1", "k2", "k3", "k4"];
const CONSTANTS: [&str; 2] = ["const_100", "const_m1"];
const ROWS: [&str; 3] = ["net revenue", "total cost", "2016"];

fn small_int(rng: &mut ChaCha8Rng) -> Argument {
    num(&rng.gen_range(2..=9).to_string())
}

/// Exponents stay in 0..=3 so nested `exp` chains cannot overflow at the
/// magnitudes the generators produce.
fn small_exponent(rng: &mut ChaCha8Rng) -> Argument {
    num(&rng.gen_range(0..=3).to_string())
}

fn maybe_step_ref(rng: &mut ChaCha8Rng, current: usize) -> Option<Argument> {
    if current > 0 && rng.gen_bool(0.35) {
        Some(Argument::StepRef(rng.gen_range(0..current)))
    } else {
        None
    }
}

/// Random program over add/subtract/multiply/exp with plain integer
/// literals and backward step references. Every such program is closed
/// (no symbols, no table), so it both executes and brute-force evaluates.
pub fn gen_math_program(rng: &mut ChaCha8Rng, max_steps: usize) -> Program {
    let steps = rng.gen_range(1..=max_steps);
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        let op = MATH_OPS[rng.gen_range(0..MATH_OPS.len())];
        let first = maybe_step_ref(rng, i).unwrap_or_else(|| small_int(rng));
        let second = if op == OperationKind::Exp {
            small_exponent(rng)
        } else {
            maybe_step_ref(rng, i).unwrap_or_else(|| small_int(rng))
        };
        out.push(step(op, first, second));
    }
    Program::new(out)
}

fn symbolic_arg(rng: &mut ChaCha8Rng, current: usize) -> Argument {
    if let Some(r) = maybe_step_ref(rng, current) {
        return r;
    }
    match rng.gen_range(0..5) {
        0 | 1 => small_int(rng),
        2 | 3 => Argument::RowRef(SYMBOLS[rng.gen_range(0..SYMBOLS.len())].to_string()),
        _ => {
            let name = CONSTANTS[rng.gen_range(0..CONSTANTS.len())];
            Argument::NamedConstant {
                name: name.to_string(),
                value: if name == "const_m1" { -1.0 } else { 100.0 },
            }
        }
    }
}

/// Random math program mixing literals, named constants, and symbolic
/// `k`-style placeholders, including division. Suitable for the symbolic
/// equivalence machinery (not for the concrete executor).
pub fn gen_symbolic_math_program(rng: &mut ChaCha8Rng, max_steps: usize) -> Program {
    let ops = [
        OperationKind::Add,
        OperationKind::Subtract,
        OperationKind::Multiply,
        OperationKind::Divide,
        OperationKind::Exp,
    ];
    let steps = rng.gen_range(1..=max_steps);
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        let op = ops[rng.gen_range(0..ops.len())];
        let first = symbolic_arg(rng, i);
        let second = if op == OperationKind::Exp {
            small_exponent(rng)
        } else {
            symbolic_arg(rng, i)
        };
        out.push(step(op, first, second));
    }
    Program::new(out)
}

/// Random program over the full operation set, including table reads and a
/// final `greater`. Produces anything the grammar admits; intended for
/// serialize/parse round-trip coverage rather than execution.
pub fn gen_full_program(rng: &mut ChaCha8Rng, max_steps: usize) -> Program {
    let steps = rng.gen_range(1..=max_steps);
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        let last = i + 1 == steps;
        let choice = rng.gen_range(0..10);
        let op = match choice {
            0..=5 => [
                OperationKind::Add,
                OperationKind::Subtract,
                OperationKind::Multiply,
                OperationKind::Divide,
                OperationKind::Exp,
                OperationKind::Add,
            ][choice],
            6 if last => OperationKind::Greater,
            _ => [
                OperationKind::TableMax,
                OperationKind::TableMin,
                OperationKind::TableSum,
                OperationKind::TableAverage,
            ][rng.gen_range(0..4)],
        };
        if op.is_table_op() {
            let row = ROWS[rng.gen_range(0..ROWS.len())];
            out.push(step(op, Argument::RowRef(row.to_string()), Argument::NoneArg));
        } else {
            let first = symbolic_arg(rng, i);
            let second = symbolic_arg(rng, i);
            out.push(step(op, first, second));
        }
    }
    Program::new(out)
}

// ---------------------------------------------------------------------------
// Equivalence-preserving and equivalence-breaking transformers
// ---------------------------------------------------------------------------

/// Flips the argument order of commutative steps, each with probability 1/2.
pub fn swap_commutative_args(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    let steps = p
        .steps
        .iter()
        .map(|s| {
            let commutative =
                matches!(s.op, OperationKind::Add | OperationKind::Multiply);
            if commutative && rng.gen_bool(0.5) {
                step(s.op, s.args[1].clone(), s.args[0].clone())
            } else {
                s.clone()
            }
        })
        .collect();
    Program::new(steps)
}

/// Reorders steps uniformly among dependency-respecting orders that keep the
/// final step last, remapping `#n` references to the new positions.
pub fn permute_steps(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    let n = p.steps.len();
    if n <= 2 {
        return p.clone();
    }
    let mut placed = vec![false; n];
    let mut new_index = vec![0usize; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    while order.len() + 1 < n {
        let candidates: Vec<usize> = (0..n - 1)
            .filter(|&i| {
                !placed[i]
                    && p.steps[i].args.iter().all(|a| match a {
                        Argument::StepRef(j) => placed[*j],
                        _ => true,
                    })
            })
            .collect();
        let pick = candidates[rng.gen_range(0..candidates.len())];
        placed[pick] = true;
        new_index[pick] = order.len();
        order.push(pick);
    }
    new_index[n - 1] = n - 1;
    order.push(n - 1);

    let steps = order
        .iter()
        .map(|&old| {
            let s = &p.steps[old];
            let remap = |a: &Argument| match a {
                Argument::StepRef(j) => Argument::StepRef(new_index[*j]),
                other => other.clone(),
            };
            step(s.op, remap(&s.args[0]), remap(&s.args[1]))
        })
        .collect();
    Program::new(steps)
}

/// Applies one small semantic change: toggles an operation or bumps a
/// numeric literal. The result almost always computes a different function.
pub fn mutate_program(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    let mut out = p.clone();
    let idx = rng.gen_range(0..out.steps.len());
    let target = &mut out.steps[idx];
    let toggled = match target.op {
        OperationKind::Add => OperationKind::Subtract,
        OperationKind::Subtract => OperationKind::Add,
        OperationKind::Multiply => OperationKind::Divide,
        OperationKind::Divide => OperationKind::Multiply,
        OperationKind::Exp => OperationKind::Multiply,
        other => other,
    };
    let bumpable = target
        .args
        .iter()
        .position(|a| matches!(a, Argument::NumberLiteral { .. }));
    if rng.gen_bool(0.5) || toggled == target.op {
        if let Some(slot) = bumpable {
            if let Argument::NumberLiteral { value, .. } = &target.args[slot] {
                let bumped = (*value as i64 + 1).to_string();
                target.args[slot] = num(&bumped);
                return out;
            }
        }
    }
    target.op = toggled;
    out
}

// ---------------------------------------------------------------------------
// Independent brute-force evaluator
// ---------------------------------------------------------------------------

/// Recursive reference evaluator for closed add/subtract/multiply/exp
/// programs. Resolves step references by re-evaluating the referenced step,
/// with no memory vector and no sharing, so it exercises a different code
/// path than the library executor. Returns `None` for anything outside that
/// fragment.
pub fn brute_force_eval(program: &Program) -> Option<f64> {
    fn arg_value(program: &Program, arg: &Argument) -> Option<f64> {
        match arg {
            Argument::NumberLiteral { value, .. } => Some(*value),
            Argument::NamedConstant { value, .. } => Some(*value),
            Argument::StepRef(j) => step_value(program, *j),
            Argument::RowRef(_) | Argument::NoneArg => None,
        }
    }
    fn step_value(program: &Program, index: usize) -> Option<f64> {
        let s = program.steps.get(index)?;
        let a = arg_value(program, &s.args[0])?;
        let b = arg_value(program, &s.args[1])?;
        match s.op {
            OperationKind::Add => Some(a + b),
            OperationKind::Subtract => Some(a - b),
            OperationKind::Multiply => Some(a * b),
            OperationKind::Exp => Some(a.powf(b)),
            _ => None,
        }
    }
    if program.is_empty() {
        return None;
    }
    step_value(program, program.steps.len() - 1)
}
