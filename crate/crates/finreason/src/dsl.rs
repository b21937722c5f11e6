//! The reasoning-program DSL: ten operations, two argument slots each.
//!
//! A program is a comma-separated sequence of steps, `op(arg, arg), ...`.
//! Math operations (`add`, `subtract`, `multiply`, `divide`, `greater`,
//! `exp`) take numeric-valued arguments; table operations (`table-max`,
//! `table-min`, `table-sum`, `table-average`) take a row reference and the
//! literal token `none`. `#n` refers to the result of the n-th earlier step.
//!
//! Arguments that are not numerals, `#n`, `none`, or `const_*` parse as
//! free-text row/symbol references; the executor and equivalence layers
//! decide what those mean.

use std::fmt;

use thiserror::Error;

/// Errors from program and financial-number parsing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("unknown operation `{name}` in step {step}")]
    UnknownOperation { name: String, step: usize },
    #[error("malformed program syntax: {message}")]
    MalformedSyntax { message: String },
    #[error("step {step} references #{referenced}, but only steps #0..#{step} exist before it")]
    ForwardStepRef { step: usize, referenced: usize },
    #[error("operation `{op}` in step {step} takes exactly 2 arguments, found {found}")]
    ArityViolation { op: String, step: usize, found: usize },
    #[error("`{text}` is not a parseable financial number")]
    NotANumber { text: String },
}

pub type DslResult<T> = Result<T, DslError>;

// ---------------------------------------------------------------------------
// OperationKind
// ---------------------------------------------------------------------------

/// The ten program operations: six math, four tabular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperationKind {
    Add,
    Subtract,
    Multiply,
    Divide,
    Greater,
    Exp,
    TableMax,
    TableMin,
    TableSum,
    TableAverage,
}

impl OperationKind {
    pub const ALL: [OperationKind; 10] = [
        OperationKind::Add,
        OperationKind::Subtract,
        OperationKind::Multiply,
        OperationKind::Divide,
        OperationKind::Greater,
        OperationKind::Exp,
        OperationKind::TableMax,
        OperationKind::TableMin,
        OperationKind::TableSum,
        OperationKind::TableAverage,
    ];

    /// Canonical (hyphenated, lowercase) operation name.
    pub fn name(self) -> &'static str {
        match self {
            OperationKind::Add => "add",
            OperationKind::Subtract => "subtract",
            OperationKind::Multiply => "multiply",
            OperationKind::Divide => "divide",
            OperationKind::Greater => "greater",
            OperationKind::Exp => "exp",
            OperationKind::TableMax => "table-max",
            OperationKind::TableMin => "table-min",
            OperationKind::TableSum => "table-sum",
            OperationKind::TableAverage => "table-average",
        }
    }

    /// Looks up an operation by name. Both hyphenated and underscore
    /// spellings of the table operations are accepted (`table-average` /
    /// `table_average`); output always normalizes to the hyphenated form.
    pub fn from_name(name: &str) -> Option<OperationKind> {
        match name {
            "add" => Some(OperationKind::Add),
            "subtract" => Some(OperationKind::Subtract),
            "multiply" => Some(OperationKind::Multiply),
            "divide" => Some(OperationKind::Divide),
            "greater" => Some(OperationKind::Greater),
            "exp" => Some(OperationKind::Exp),
            "table-max" | "table_max" => Some(OperationKind::TableMax),
            "table-min" | "table_min" => Some(OperationKind::TableMin),
            "table-sum" | "table_sum" => Some(OperationKind::TableSum),
            "table-average" | "table_average" => Some(OperationKind::TableAverage),
            _ => None,
        }
    }

    /// True for the four tabular aggregate operations.
    pub fn is_table_op(self) -> bool {
        matches!(
            self,
            OperationKind::TableMax
                | OperationKind::TableMin
                | OperationKind::TableSum
                | OperationKind::TableAverage
        )
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Argument
// ---------------------------------------------------------------------------

/// A single step argument.
#[derive(Debug, Clone, PartialEq)]
pub enum Argument {
    /// A numeric literal; `raw` preserves the exact source text so that
    /// serialization round-trips (`"5735.00"` stays `"5735.00"`).
    NumberLiteral { value: f64, raw: String },
    /// A named constant: `const_<digits>` or `const_m1`.
    NamedConstant { name: String, value: f64 },
    /// `#n`: the result of the n-th earlier step.
    StepRef(usize),
    /// Free text: a table row name or a symbolic argument like `k4`.
    RowRef(String),
    /// The literal token `none` (second slot of table operations).
    NoneArg,
}

impl Argument {
    /// Classifies a trimmed argument token in a math-operation slot.
    fn classify(text: &str) -> Argument {
        if let Some(rest) = text.strip_prefix('#') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(index) = rest.parse::<usize>() {
                    return Argument::StepRef(index);
                }
            }
        }
        if text == "none" {
            return Argument::NoneArg;
        }
        if let Some(value) = parse_named_constant(text) {
            return Argument::NamedConstant {
                name: text.to_string(),
                value,
            };
        }
        if let Ok(value) = parse_financial_number(text) {
            return Argument::NumberLiteral {
                value,
                raw: text.to_string(),
            };
        }
        Argument::RowRef(text.to_string())
    }
}

impl fmt::Display for Argument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Argument::NumberLiteral { raw, .. } => f.write_str(raw),
            Argument::NamedConstant { name, .. } => f.write_str(name),
            Argument::StepRef(index) => write!(f, "#{index}"),
            Argument::RowRef(name) => f.write_str(name),
            Argument::NoneArg => f.write_str("none"),
        }
    }
}

/// Parses `const_<digits>` (value = the digits) and `const_m1` (value = -1).
fn parse_named_constant(text: &str) -> Option<f64> {
    let rest = text.strip_prefix("const_")?;
    if rest == "m1" {
        return Some(-1.0);
    }
    if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
        return rest.parse::<f64>().ok();
    }
    None
}

// ---------------------------------------------------------------------------
// Step / Program
// ---------------------------------------------------------------------------

/// One program step: an operation and its two arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub op: OperationKind,
    pub args: [Argument; 2],
}

/// An ordered, non-empty sequence of steps. The last step's value is the
/// program's answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub steps: Vec<Step>,
}

impl Program {
    pub fn new(steps: Vec<Step>) -> Program {
        Program { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_program(self))
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses program text of the form `op(arg,arg), op(arg,arg), ...`.
///
/// Whitespace around tokens is ignored; operation names are matched
/// case-sensitively in lowercase. Step references must point strictly
/// backwards. Never panics on arbitrary input.
pub fn parse_program(text: &str) -> DslResult<Program> {
    let mut steps = Vec::new();
    let mut rest = text.trim_start();

    if rest.is_empty() {
        return Err(DslError::MalformedSyntax {
            message: "empty program".to_string(),
        });
    }

    loop {
        let step_index = steps.len();
        let open = rest.find('(').ok_or_else(|| DslError::MalformedSyntax {
            message: format!("step {step_index}: expected `(` after operation name"),
        })?;
        let op_name = rest[..open].trim();
        let op = OperationKind::from_name(op_name).ok_or_else(|| DslError::UnknownOperation {
            name: op_name.to_string(),
            step: step_index,
        })?;

        let body_start = open + 1;
        let close =
            rest[body_start..]
                .find(')')
                .map(|i| body_start + i)
                .ok_or_else(|| DslError::MalformedSyntax {
                    message: format!("step {step_index} (`{op}`): missing closing `)`"),
                })?;
        let body = &rest[body_start..close];
        // Argument text never contains parens; a stray `(` inside the body
        // means a malformed nesting attempt.
        if body.contains('(') {
            return Err(DslError::MalformedSyntax {
                message: format!("step {step_index} (`{op}`): nested `(` in argument list"),
            });
        }

        let raw_args: Vec<&str> = body.split(',').map(str::trim).collect();
        if raw_args.len() != 2 {
            return Err(DslError::ArityViolation {
                op: op.name().to_string(),
                step: step_index,
                found: if body.trim().is_empty() { 0 } else { raw_args.len() },
            });
        }

        let args = if op.is_table_op() {
            parse_table_args(op, step_index, raw_args[0], raw_args[1])?
        } else {
            let first = parse_math_arg(op, step_index, raw_args[0])?;
            let second = parse_math_arg(op, step_index, raw_args[1])?;
            [first, second]
        };
        steps.push(Step { op, args });

        rest = rest[close + 1..].trim_start();
        if rest.is_empty() {
            break;
        }
        rest = rest.strip_prefix(',').ok_or_else(|| DslError::MalformedSyntax {
            message: format!("expected `,` between steps, found `{}`", snippet(rest)),
        })?;
        rest = rest.trim_start();
        if rest.is_empty() {
            return Err(DslError::MalformedSyntax {
                message: "trailing `,` after final step".to_string(),
            });
        }
    }

    Ok(Program { steps })
}

fn parse_math_arg(op: OperationKind, step_index: usize, text: &str) -> DslResult<Argument> {
    if text.is_empty() {
        return Err(DslError::MalformedSyntax {
            message: format!("step {step_index} (`{op}`): empty argument"),
        });
    }
    let arg = Argument::classify(text);
    match arg {
        Argument::NoneArg => Err(DslError::MalformedSyntax {
            message: format!("step {step_index} (`{op}`): `none` is only valid in table operations"),
        }),
        Argument::StepRef(index) if index >= step_index => Err(DslError::ForwardStepRef {
            step: step_index,
            referenced: index,
        }),
        other => Ok(other),
    }
}

fn parse_table_args(
    op: OperationKind,
    step_index: usize,
    first: &str,
    second: &str,
) -> DslResult<[Argument; 2]> {
    // Slot 1 is always row text, even when it looks numeric ("2009" is a
    // legitimate row name in year-keyed tables).
    if first.is_empty() || first == "none" {
        return Err(DslError::MalformedSyntax {
            message: format!("step {step_index} (`{op}`): table operations need a row name in slot 1"),
        });
    }
    if second != "none" {
        return Err(DslError::MalformedSyntax {
            message: format!(
                "step {step_index} (`{op}`): table operations take `none` in slot 2, found `{}`",
                snippet(second)
            ),
        });
    }
    Ok([Argument::RowRef(first.to_string()), Argument::NoneArg])
}

fn snippet(text: &str) -> String {
    let mut s: String = text.chars().take(24).collect();
    if s.len() < text.len() {
        s.push('…');
    }
    s
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Serializes with canonical spacing: `op(a, b), op(a, b)`.
/// `parse_program(serialize_program(p)) == p` for every valid program.
pub fn serialize_program(program: &Program) -> String {
    let steps: Vec<String> = program
        .steps
        .iter()
        .map(|step| format!("{}({}, {})", step.op, step.args[0], step.args[1]))
        .collect();
    steps.join(", ")
}

// ---------------------------------------------------------------------------
// Financial numbers
// ---------------------------------------------------------------------------

/// Parses a financial-format numeral: strips currency symbols ($, £, €),
/// thousands separators, and a trailing percent sign (the value stays
/// unscaled, so `"14.1%"` is 14.1); a parenthesized value is negated per
/// accounting convention.
pub fn parse_financial_number(text: &str) -> DslResult<f64> {
    let not_a_number = || DslError::NotANumber {
        text: text.trim().to_string(),
    };

    let mut s: String = text
        .chars()
        .filter(|c| !c.is_whitespace() && !matches!(c, '$' | '£' | '€'))
        .collect();
    if s.is_empty() {
        return Err(not_a_number());
    }

    let mut negate = false;
    if s.starts_with('(') && s.ends_with(')') && s.len() >= 2 {
        s = s[1..s.len() - 1].to_string();
        negate = true;
    }
    s.retain(|c| c != ',');
    if let Some(stripped) = s.strip_suffix('%') {
        s = stripped.to_string();
    }
    // f64::from_str also accepts alphabetic forms like "inf" and "nan";
    // those are not numerals in any financial document.
    if !s.bytes().any(|b| b.is_ascii_digit()) {
        return Err(not_a_number());
    }

    let value: f64 = s.parse().map_err(|_| not_a_number())?;
    if !value.is_finite() {
        return Err(not_a_number());
    }
    Ok(if negate { -value } else { value })
}
