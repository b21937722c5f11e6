//! Program execution against a financial table.
//!
//! Steps evaluate in order; each step's value lands in memory so later
//! steps can reference it with `#n`. The last step's value is the answer.
//! Everything here is a pure function over immutable inputs.

use std::fmt;

use thiserror::Error;

use crate::dsl::{Argument, OperationKind, Program};

/// Division-by-zero guard: denominators under this magnitude are treated
/// as zero so parsed noise does not explode.
pub const DIV_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("division by zero in step {step} (|denominator| < {DIV_EPSILON})")]
    DivisionByZero { step: usize },
    #[error("row `{name}` not found in table")]
    RowNotFound { name: String },
    #[error("row `{name}` has no numeric cells")]
    EmptyNumericRow { name: String },
    #[error("boolean value used in arithmetic (step {step})")]
    BooleanInArithmetic { step: usize },
    #[error("non-finite result in step {step}")]
    NonFiniteResult { step: usize },
    #[error("row reference `{name}` cannot be resolved in a math-operation slot")]
    UnresolvedRowRef { name: String },
    #[error("`none` is not a resolvable argument")]
    NoneArgument,
    #[error("step reference #{index} is out of range (memory holds {len} values)")]
    MemoryOutOfRange { index: usize, len: usize },
    #[error("cannot compare a boolean answer with a numeric answer")]
    TypeMismatch,
}

pub type ExecResult<T> = Result<T, ExecError>;

// ---------------------------------------------------------------------------
// FinTable
// ---------------------------------------------------------------------------

/// One named table row with its raw cell strings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableRow {
    pub name: String,
    pub cells: Vec<String>,
}

/// A financial table: a header row plus named rows of formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FinTable {
    pub header: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl FinTable {
    pub fn empty() -> FinTable {
        FinTable::default()
    }

    /// Builds a table from raw rows as they appear in dataset files: the
    /// first raw row is the header; each later row's first cell is its name.
    pub fn from_raw_rows(raw: &[Vec<String>]) -> FinTable {
        let mut table = FinTable::empty();
        let mut iter = raw.iter();
        if let Some(header) = iter.next() {
            table.header = header.clone();
        }
        for row in iter {
            let name = row.first().cloned().unwrap_or_default();
            let cells = row.iter().skip(1).cloned().collect();
            table.rows.push(TableRow { name, cells });
        }
        table
    }

    /// Exact match after trimming; falls back to case-insensitive match.
    pub fn find_row(&self, name: &str) -> Option<&TableRow> {
        let wanted = name.trim();
        self.rows
            .iter()
            .find(|row| row.name.trim() == wanted)
            .or_else(|| {
                let lowered = wanted.to_lowercase();
                self.rows.iter().find(|row| row.name.trim().to_lowercase() == lowered)
            })
    }

    /// The cells of a row that parse as financial numbers.
    pub fn numeric_view(row: &TableRow) -> Vec<f64> {
        row.cells
            .iter()
            .filter_map(|cell| crate::dsl::parse_financial_number(cell).ok())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Answer
// ---------------------------------------------------------------------------

/// A program's final value: a number, or yes/no from a final `greater`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Answer {
    Numeric(f64),
    Boolean(bool),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Numeric(v) => write!(f, "{v}"),
            Answer::Boolean(true) => f.write_str("yes"),
            Answer::Boolean(false) => f.write_str("no"),
        }
    }
}

/// Execution context: the table plus the values of completed steps.
#[derive(Debug, Clone)]
pub struct ExecContext<'a> {
    pub table: &'a FinTable,
    pub memory: Vec<Answer>,
}

impl<'a> ExecContext<'a> {
    pub fn new(table: &'a FinTable) -> ExecContext<'a> {
        ExecContext {
            table,
            memory: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Resolves a math-slot argument to a number.
pub fn resolve_argument(arg: &Argument, ctx: &ExecContext<'_>) -> ExecResult<f64> {
    match arg {
        Argument::NumberLiteral { value, .. } => Ok(*value),
        Argument::NamedConstant { value, .. } => Ok(*value),
        Argument::StepRef(index) => match ctx.memory.get(*index) {
            Some(Answer::Numeric(v)) => Ok(*v),
            Some(Answer::Boolean(_)) => Err(ExecError::BooleanInArithmetic { step: *index }),
            None => Err(ExecError::MemoryOutOfRange {
                index: *index,
                len: ctx.memory.len(),
            }),
        },
        Argument::RowRef(name) => Err(ExecError::UnresolvedRowRef { name: name.clone() }),
        Argument::NoneArg => Err(ExecError::NoneArgument),
    }
}

/// Runs a program against a table and returns the final answer.
pub fn execute_program(program: &Program, table: &FinTable) -> ExecResult<Answer> {
    let mut ctx = ExecContext::new(table);
    let last = program.steps.len().saturating_sub(1);

    for (step_index, step) in program.steps.iter().enumerate() {
        let value = if step.op.is_table_op() {
            execute_table_step(step.op, &step.args[0], table)?
        } else {
            let a = resolve_argument(&step.args[0], &ctx)?;
            let b = resolve_argument(&step.args[1], &ctx)?;
            execute_math_step(step.op, a, b, step_index)?
        };

        if let Answer::Numeric(v) = value {
            if !v.is_finite() {
                return Err(ExecError::NonFiniteResult { step: step_index });
            }
        }
        if matches!(value, Answer::Boolean(_)) && step_index != last {
            return Err(ExecError::BooleanInArithmetic { step: step_index });
        }
        ctx.memory.push(value);
    }

    ctx.memory.pop().ok_or(ExecError::MemoryOutOfRange { index: 0, len: 0 })
}

fn execute_math_step(op: OperationKind, a: f64, b: f64, step: usize) -> ExecResult<Answer> {
    let value = match op {
        OperationKind::Add => a + b,
        OperationKind::Subtract => a - b,
        OperationKind::Multiply => a * b,
        OperationKind::Divide => {
            if b.abs() < DIV_EPSILON {
                return Err(ExecError::DivisionByZero { step });
            }
            a / b
        }
        OperationKind::Greater => return Ok(Answer::Boolean(a > b)),
        OperationKind::Exp => a.powf(b),
        _ => unreachable!("table op dispatched separately"),
    };
    Ok(Answer::Numeric(value))
}

fn execute_table_step(op: OperationKind, row_arg: &Argument, table: &FinTable) -> ExecResult<Answer> {
    let name = match row_arg {
        Argument::RowRef(name) => name.as_str(),
        other => {
            return Err(ExecError::UnresolvedRowRef {
                name: other.to_string(),
            })
        }
    };
    let row = table
        .find_row(name)
        .ok_or_else(|| ExecError::RowNotFound { name: name.to_string() })?;
    let values = FinTable::numeric_view(row);
    if values.is_empty() {
        return Err(ExecError::EmptyNumericRow { name: name.to_string() });
    }

    let value = match op {
        OperationKind::TableMax => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        OperationKind::TableMin => values.iter().copied().fold(f64::INFINITY, f64::min),
        OperationKind::TableSum => values.iter().sum(),
        OperationKind::TableAverage => values.iter().sum::<f64>() / values.len() as f64,
        _ => unreachable!("math op dispatched separately"),
    };
    Ok(Answer::Numeric(value))
}

// ---------------------------------------------------------------------------
// Answer comparison
// ---------------------------------------------------------------------------

/// Numeric-match tolerances for answer comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances {
            abs_tol: 1e-5,
            rel_tol: 1e-4,
        }
    }
}

fn round5(x: f64) -> f64 {
    (x * 1e5).round() / 1e5
}

/// Compares a predicted answer with the gold answer. Booleans match iff
/// equal; numbers are rounded to 5 decimals and match iff
/// |pred - gold| <= max(abs_tol, rel_tol * |gold|). Percent scaling is
/// never auto-forgiven here.
pub fn compare_answers(pred: &Answer, gold: &Answer, tol: Tolerances) -> ExecResult<bool> {
    match (pred, gold) {
        (Answer::Boolean(p), Answer::Boolean(g)) => Ok(p == g),
        (Answer::Numeric(p), Answer::Numeric(g)) => {
            let p = round5(*p);
            let g = round5(*g);
            Ok((p - g).abs() <= tol.abs_tol.max(tol.rel_tol * g.abs()))
        }
        _ => Err(ExecError::TypeMismatch),
    }
}
