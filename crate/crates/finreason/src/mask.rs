//! Grammar-constrained decoding: a finite-state automaton over the program
//! token vocabulary that yields, at each position, the mask of structurally
//! valid next tokens.
//!
//! Tokens follow the fused op+paren convention (`add(`), so every step costs
//! exactly four tokens: opener, two arguments, close. Decoding is capped at
//! [`MAX_STEPS`] steps, and a completed `greater` step forces end-of-program
//! so no Boolean value can feed a later step.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::dsl::OperationKind;

/// Hard ceiling on program length; at the cap the mask drops all operation
/// openers and leaves only the end-of-program token.
pub const MAX_STEPS: usize = 16;

pub const CLOSE_TOKEN: &str = ")";
pub const NONE_TOKEN: &str = "none";
pub const EOF_TOKEN: &str = "EOF";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("vocabulary has no operation tokens")]
    NoOperations,
    #[error("vocabulary has math operations but no number or constant tokens")]
    MissingMathArguments,
    #[error("vocabulary has table operations but no row tokens")]
    MissingTableRows,
    #[error("token `{token}` appears in more than one vocabulary class")]
    DuplicateToken { token: String },
    #[error("token `{token}` is malformed: {reason}")]
    MalformedToken { token: String, reason: String },
    #[error("token `{token}` is not in the vocabulary")]
    UnknownToken { token: String },
    #[error("token `{token}` is not valid while expecting {slot}")]
    InvalidToken { token: String, slot: Slot },
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Structural role of one vocabulary token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenClass {
    /// Fused operation opener such as `add(`.
    Op(OperationKind),
    /// A numeral drawn from the question or document.
    Number,
    /// A named constant such as `const_100`.
    Constant,
    /// A table row name.
    Row,
    /// Step memory token `#k`.
    Memory(usize),
    /// The shared closing parenthesis.
    Close,
    /// The table-operation second-slot filler `none`.
    NoneToken,
    /// End of program.
    Eof,
}

#[derive(Debug, Clone)]
pub struct VocabToken {
    pub text: String,
    pub class: TokenClass,
}

/// The decoding vocabulary, partitioned by token role. Class membership is
/// disjoint by construction and memory tokens are `#0..#{slots-1}`.
#[derive(Debug, Clone)]
pub struct VocabPartition {
    tokens: Vec<VocabToken>,
    index: HashMap<String, usize>,
}

fn check_literal_token(text: &str) -> Result<(), MaskError> {
    let bad = |reason: &str| MaskError::MalformedToken {
        token: text.to_string(),
        reason: reason.to_string(),
    };
    if text.trim().is_empty() {
        return Err(bad("empty or whitespace-only"));
    }
    if text != text.trim() {
        return Err(bad("has leading or trailing whitespace"));
    }
    if text.contains(['(', ')', ',']) {
        return Err(bad("contains a structural character"));
    }
    if text.starts_with('#') {
        return Err(bad("collides with step memory notation"));
    }
    Ok(())
}

impl VocabPartition {
    /// Builds a vocabulary from the operation subset and the literal pools.
    /// Fails when some reachable slot could never be filled: no operations
    /// at all, a math operation with no number or constant tokens, or a
    /// table operation with no row tokens.
    pub fn new(
        ops: &[OperationKind],
        numbers: &[String],
        constants: &[String],
        rows: &[String],
        memory_slots: usize,
    ) -> Result<VocabPartition, MaskError> {
        if ops.is_empty() {
            return Err(MaskError::NoOperations);
        }
        let has_math = ops.iter().any(|op| !op.is_table_op());
        let has_table = ops.iter().any(|op| op.is_table_op());
        if has_math && numbers.is_empty() && constants.is_empty() {
            return Err(MaskError::MissingMathArguments);
        }
        if has_table && rows.is_empty() {
            return Err(MaskError::MissingTableRows);
        }

        let mut tokens = Vec::new();
        for op in ops {
            tokens.push(VocabToken {
                text: format!("{}(", op.name()),
                class: TokenClass::Op(*op),
            });
        }
        for (pool, class) in [
            (numbers, TokenClass::Number),
            (constants, TokenClass::Constant),
            (rows, TokenClass::Row),
        ] {
            for text in pool {
                check_literal_token(text)?;
                tokens.push(VocabToken {
                    text: text.clone(),
                    class,
                });
            }
        }
        for k in 0..memory_slots {
            tokens.push(VocabToken {
                text: format!("#{k}"),
                class: TokenClass::Memory(k),
            });
        }
        tokens.push(VocabToken {
            text: CLOSE_TOKEN.to_string(),
            class: TokenClass::Close,
        });
        tokens.push(VocabToken {
            text: NONE_TOKEN.to_string(),
            class: TokenClass::NoneToken,
        });
        tokens.push(VocabToken {
            text: EOF_TOKEN.to_string(),
            class: TokenClass::Eof,
        });

        let mut index = HashMap::new();
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.text.clone(), i).is_some() {
                return Err(MaskError::DuplicateToken {
                    token: tok.text.clone(),
                });
            }
        }
        Ok(VocabPartition { tokens, index })
    }

    /// Convenience constructor over all ten operations.
    pub fn with_all_ops(
        numbers: &[String],
        constants: &[String],
        rows: &[String],
        memory_slots: usize,
    ) -> Result<VocabPartition, MaskError> {
        VocabPartition::new(&OperationKind::ALL, numbers, constants, rows, memory_slots)
    }

    /// All tokens in mask order.
    pub fn tokens(&self) -> &[VocabToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_index(&self, text: &str) -> Option<usize> {
        self.index.get(text).copied()
    }

    // -- automaton ----------------------------------------------------------

    fn class_valid(&self, state: &DecodeState, class: TokenClass) -> bool {
        match state.slot {
            Slot::Accepted => false,
            Slot::ExpectOp => match class {
                TokenClass::Op(_) => {
                    state.completed_steps < MAX_STEPS && !state.greater_done
                }
                TokenClass::Eof => state.completed_steps >= 1,
                _ => false,
            },
            Slot::ExpectArg1(op) | Slot::ExpectArg2(op) if !op.is_table_op() => match class {
                TokenClass::Number | TokenClass::Constant => true,
                TokenClass::Memory(k) => k < state.completed_steps,
                _ => false,
            },
            Slot::ExpectArg1(_) => class == TokenClass::Row,
            Slot::ExpectArg2(_) => class == TokenClass::NoneToken,
            Slot::ExpectClose(_) => class == TokenClass::Close,
        }
    }

    /// Per-token validity vector for the given state, aligned with
    /// [`VocabPartition::tokens`].
    pub fn valid_mask(&self, state: &DecodeState) -> TokenMask {
        TokenMask {
            valid: self
                .tokens
                .iter()
                .map(|t| self.class_valid(state, t.class))
                .collect(),
        }
    }

    /// Consumes one token. Unknown or masked-off tokens are errors; the
    /// error names the slot the automaton was filling.
    pub fn advance(&self, state: &DecodeState, token: &str) -> Result<DecodeState, MaskError> {
        let idx = self
            .token_index(token)
            .ok_or_else(|| MaskError::UnknownToken {
                token: token.to_string(),
            })?;
        let class = self.tokens[idx].class;
        if !self.class_valid(state, class) {
            return Err(MaskError::InvalidToken {
                token: token.to_string(),
                slot: state.slot,
            });
        }
        let mut next = *state;
        next.slot = match (state.slot, class) {
            (Slot::ExpectOp, TokenClass::Op(op)) => Slot::ExpectArg1(op),
            (Slot::ExpectOp, TokenClass::Eof) => Slot::Accepted,
            (Slot::ExpectArg1(op), _) => Slot::ExpectArg2(op),
            (Slot::ExpectArg2(op), _) => Slot::ExpectClose(op),
            (Slot::ExpectClose(op), TokenClass::Close) => {
                next.completed_steps += 1;
                next.greater_done |= op == OperationKind::Greater;
                Slot::ExpectOp
            }
            _ => unreachable!("class_valid admitted an impossible transition"),
        };
        Ok(next)
    }

    /// Folds [`VocabPartition::advance`] over a whole sequence: true iff
    /// every token is valid and the sequence ends the program with
    /// [`EOF_TOKEN`] after at least one completed step.
    pub fn accepts<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> bool {
        let mut state = initial_state();
        for token in tokens {
            match self.advance(&state, token) {
                Ok(next) => state = next,
                Err(_) => return false,
            }
        }
        state.is_accepted()
    }
}

// ---------------------------------------------------------------------------
// States and masks
// ---------------------------------------------------------------------------

/// Which slot of the four-token step cycle the automaton is filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    ExpectOp,
    ExpectArg1(OperationKind),
    ExpectArg2(OperationKind),
    ExpectClose(OperationKind),
    /// Terminal: the end-of-program token has been consumed.
    Accepted,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::ExpectOp => write!(f, "an operation opener"),
            Slot::ExpectArg1(op) => write!(f, "argument 1 of {op}"),
            Slot::ExpectArg2(op) => write!(f, "argument 2 of {op}"),
            Slot::ExpectClose(op) => write!(f, "the closing parenthesis of {op}"),
            Slot::Accepted => write!(f, "nothing (program already ended)"),
        }
    }
}

/// Immutable automaton state; transitions happen only through
/// [`VocabPartition::advance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecodeState {
    completed_steps: usize,
    slot: Slot,
    greater_done: bool,
}

impl DecodeState {
    pub fn completed_steps(&self) -> usize {
        self.completed_steps
    }

    pub fn slot(&self) -> Slot {
        self.slot
    }

    /// True once the end-of-program token has been consumed.
    pub fn is_accepted(&self) -> bool {
        self.slot == Slot::Accepted
    }
}

/// Start of decoding: no steps completed, expecting an operation opener.
pub fn initial_state() -> DecodeState {
    DecodeState {
        completed_steps: 0,
        slot: Slot::ExpectOp,
        greater_done: false,
    }
}

/// Boolean validity per vocabulary token, aligned with
/// [`VocabPartition::tokens`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMask {
    pub valid: Vec<bool>,
}

impl TokenMask {
    pub fn count_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid.get(index).copied().unwrap_or(false)
    }

    /// Texts of the allowed tokens, in vocabulary order.
    pub fn allowed<'a>(&self, vocab: &'a VocabPartition) -> Vec<&'a str> {
        vocab
            .tokens()
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .map(|(t, _)| t.text.as_str())
            .collect()
    }
}

/// Splits partial program text into decoder tokens: fused openers
/// (`add(`), one token per argument, and `)`. Commas separate arguments;
/// surrounding whitespace is trimmed (row names keep internal spaces) and
/// empty pieces are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut buf = String::new();
    let flush = |buf: &mut String, tokens: &mut Vec<String>| {
        let piece = buf.trim();
        if !piece.is_empty() {
            tokens.push(piece.to_string());
        }
        buf.clear();
    };
    for ch in text.chars() {
        match ch {
            '(' => {
                buf.push('(');
                flush(&mut buf, &mut tokens);
            }
            ')' => {
                flush(&mut buf, &mut tokens);
                tokens.push(CLOSE_TOKEN.to_string());
            }
            ',' => flush(&mut buf, &mut tokens),
            _ => buf.push(ch),
        }
    }
    flush(&mut buf, &mut tokens);
    tokens
}
