//! Gold-program equivalence: replace arguments with symbols, inline step
//! references, normalize commutative argument order, and compare the
//! resulting canonical forms.
//!
//! Equivalence is *defined* as canonical-form equality. Deeper algebraic
//! identities (x*x vs x^2) are deliberately outside the relation; the
//! randomized numeric oracle exists to measure that gap, not to decide it.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsl::{Argument, OperationKind, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("non-finite value persisted through {max_redraws} redraws in trial {trial}")]
    NonFiniteResult { trial: u32, max_redraws: u32 },
    #[error("boolean value feeds arithmetic inside a symbolic tree")]
    BooleanInArithmetic,
    #[error("oracle needs at least one trial")]
    NoTrials,
}

// ---------------------------------------------------------------------------
// Symbolization
// ---------------------------------------------------------------------------

/// An argument-symbolized expression tree with step references inlined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolicExpr {
    Symbol(usize),
    Node {
        op: OperationKind,
        children: Box<[SymbolicExpr; 2]>,
    },
}

/// Identity key for a literal. Numbers compare by normalized value (so
/// `$5735`, `5735` and `5735.00` share a symbol, and `const_100` equals a
/// plain `100`); row/symbol text compares by trimmed name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum SymbolKey {
    Number(String),
    Text(String),
    None,
}

/// What a symbol stands for, which decides how the numeric oracle values
/// it: numeric literals keep their face value, text placeholders draw
/// random values.
#[derive(Debug, Clone, Copy, PartialEq)]
enum SymbolKind {
    Number(f64),
    Text,
    NoneFiller,
}

fn argument_key(arg: &Argument) -> (SymbolKey, SymbolKind) {
    let number = |value: f64| {
        // Collapse -0.0 into 0.0 so the two spell the same symbol.
        let v = if value == 0.0 { 0.0 } else { value };
        (SymbolKey::Number(format!("{v}")), SymbolKind::Number(v))
    };
    match arg {
        Argument::NumberLiteral { value, .. } => number(*value),
        Argument::NamedConstant { value, .. } => number(*value),
        Argument::RowRef(name) => (
            SymbolKey::Text(name.trim().to_string()),
            SymbolKind::Text,
        ),
        Argument::NoneArg => (SymbolKey::None, SymbolKind::NoneFiller),
        Argument::StepRef(_) => unreachable!("step refs are inlined, not interned"),
    }
}

/// First-occurrence literal-to-symbol numbering, shareable across programs.
#[derive(Debug, Default)]
pub struct SymbolTable {
    ids: HashMap<SymbolKey, usize>,
    kinds: Vec<SymbolKind>,
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        SymbolTable::default()
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    fn intern(&mut self, key: SymbolKey, kind: SymbolKind) -> usize {
        if let Some(id) = self.ids.get(&key) {
            return *id;
        }
        let id = self.kinds.len();
        self.ids.insert(key, id);
        self.kinds.push(kind);
        id
    }
}

/// Symbolizes a program against a caller-provided table, so two programs
/// can share one literal-to-symbol map.
pub fn symbolize_with(program: &Program, table: &mut SymbolTable) -> SymbolicExpr {
    fn build(program: &Program, step: usize, table: &mut SymbolTable) -> SymbolicExpr {
        let s = &program.steps[step];
        let child = |arg: &Argument, table: &mut SymbolTable| match arg {
            Argument::StepRef(n) => build(program, *n, table),
            other => {
                let (key, kind) = argument_key(other);
                SymbolicExpr::Symbol(table.intern(key, kind))
            }
        };
        let left = child(&s.args[0], table);
        let right = child(&s.args[1], table);
        SymbolicExpr::Node {
            op: s.op,
            children: Box::new([left, right]),
        }
    }
    build(program, program.steps.len() - 1, table)
}

/// Symbolizes a single program with a fresh literal map. The final step is
/// the root; earlier steps appear only where `#n` references pull them in,
/// so dead steps vanish.
pub fn symbolize(program: &Program) -> SymbolicExpr {
    symbolize_with(program, &mut SymbolTable::new())
}

/// Symbolizes two programs under one shared literal map (same literal text
/// means the same symbol in both trees).
pub fn symbolize_pair(a: &Program, b: &Program) -> (SymbolicExpr, SymbolicExpr) {
    let mut table = SymbolTable::new();
    let ta = symbolize_with(a, &mut table);
    let tb = symbolize_with(b, &mut table);
    (ta, tb)
}

// ---------------------------------------------------------------------------
// Canonicalization
// ---------------------------------------------------------------------------

/// A commutativity-normalized serialization of a symbolic tree. Equal
/// canonical forms denote numerically identical functions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalForm(pub String);

impl CanonicalForm {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_commutative(op: OperationKind) -> bool {
    matches!(op, OperationKind::Add | OperationKind::Multiply)
}

/// Sorts children of commutative nodes by their serialized form;
/// everything else keeps argument order.
pub fn canonicalize(expr: &SymbolicExpr) -> CanonicalForm {
    fn text(expr: &SymbolicExpr) -> String {
        match expr {
            SymbolicExpr::Symbol(id) => format!("S{id}"),
            SymbolicExpr::Node { op, children } => {
                let mut a = text(&children[0]);
                let mut b = text(&children[1]);
                if is_commutative(*op) && b < a {
                    std::mem::swap(&mut a, &mut b);
                }
                format!("{op}({a},{b})")
            }
        }
    }
    CanonicalForm(text(expr))
}

/// Canonical forms of both programs under a shared symbol map.
pub fn canonical_pair(a: &Program, b: &Program) -> (CanonicalForm, CanonicalForm) {
    let (ta, tb) = symbolize_pair(a, b);
    (canonicalize(&ta), canonicalize(&tb))
}

/// The gold-program verdict: equal canonical forms under shared
/// symbolization.
pub fn programs_equivalent(a: &Program, b: &Program) -> bool {
    let (ca, cb) = canonical_pair(a, b);
    ca == cb
}

// ---------------------------------------------------------------------------
// Randomized numeric oracle
// ---------------------------------------------------------------------------

const MAX_REDRAWS: u32 = 10;
const ORACLE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Num(f64),
    Bool(bool),
}

enum EvalIssue {
    NonFinite,
    BoolInArithmetic,
}

fn eval_tree(expr: &SymbolicExpr, values: &[f64]) -> Result<Value, EvalIssue> {
    match expr {
        SymbolicExpr::Symbol(id) => Ok(Value::Num(values[*id])),
        SymbolicExpr::Node { op, children } => {
            let num = |v: Value| match v {
                Value::Num(x) => Ok(x),
                Value::Bool(_) => Err(EvalIssue::BoolInArithmetic),
            };
            let a = num(eval_tree(&children[0], values)?)?;
            let b = num(eval_tree(&children[1], values)?)?;
            let out = match op {
                OperationKind::Add => a + b,
                OperationKind::Subtract => a - b,
                OperationKind::Multiply => a * b,
                OperationKind::Divide => a / b,
                OperationKind::Exp => a.powf(b),
                OperationKind::Greater => return Ok(Value::Bool(a > b)),
                // Table aggregates are uninterpreted here; distinct affine
                // maps of the row symbol keep the four ops distinguishable
                // while identical subtrees still agree.
                OperationKind::TableMax => 2.0 * a + 0.25,
                OperationKind::TableMin => 3.0 * a + 0.5,
                OperationKind::TableSum => 5.0 * a + 0.75,
                OperationKind::TableAverage => 7.0 * a + 1.0,
            };
            if out.is_finite() {
                Ok(Value::Num(out))
            } else {
                Err(EvalIssue::NonFinite)
            }
        }
    }
}

fn values_agree(a: Value, b: Value) -> bool {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => {
            (x - y).abs() <= ORACLE_REL_TOL * x.abs().max(y.abs()).max(1.0)
        }
        (Value::Bool(x), Value::Bool(y)) => x == y,
        _ => false,
    }
}

/// Evaluates both programs at random assignments of their shared
/// symbols and reports whether every trial agrees (1e-6 relative).
/// Numeric literals keep their face value; text placeholders (k-style
/// symbols, row names) draw uniformly from [1.5, 9.5], away from the 0/1
/// degeneracies. Deterministic given the seed; a non-finite trial
/// redraws up to 10 times.
pub fn random_eval_oracle(
    a: &Program,
    b: &Program,
    trials: u32,
    seed: u64,
) -> Result<bool, EquivError> {
    if trials == 0 {
        return Err(EquivError::NoTrials);
    }
    let mut table = SymbolTable::new();
    let ta = symbolize_with(a, &mut table);
    let tb = symbolize_with(b, &mut table);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let mut agreed = None;
        for _redraw in 0..=MAX_REDRAWS {
            let values: Vec<f64> = table
                .kinds
                .iter()
                .map(|kind| match kind {
                    SymbolKind::Number(v) => *v,
                    SymbolKind::Text | SymbolKind::NoneFiller => rng.gen_range(1.5..9.5),
                })
                .collect();
            let va = eval_tree(&ta, &values);
            let vb = eval_tree(&tb, &values);
            match (va, vb) {
                (Ok(x), Ok(y)) => {
                    agreed = Some(values_agree(x, y));
                    break;
                }
                (Err(EvalIssue::BoolInArithmetic), _) | (_, Err(EvalIssue::BoolInArithmetic)) => {
                    return Err(EquivError::BooleanInArithmetic)
                }
                _ => continue, // non-finite: redraw
            }
        }
        match agreed {
            Some(true) => {}
            Some(false) => return Ok(false),
            None => {
                return Err(EquivError::NonFiniteResult {
                    trial,
                    max_redraws: MAX_REDRAWS,
                })
            }
        }
    }
    Ok(true)
}
