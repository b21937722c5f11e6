//! Ensemble arithmetic: retriever score averaging, top-k ranking and
//! recall, seeded negative sampling, split combination, and weighted
//! generator fusion.
//!
//! Generator fusion pools the scores of syntactic variants that the
//! equivalence module treats as one program, then picks the weighted
//! argmax; uniform weights reduce to simple average fusion.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{serialize_program, Program};
use crate::equivalence::programs_equivalent;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("at least one input is required")]
    EmptyInput,
    #[error("the gold fact set is empty")]
    EmptyGold,
    #[error("record id `{id}` appears in more than one split")]
    DuplicateRecordId { id: String },
    #[error("expected {expected} per-model scores, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid fusion weights: {reason}")]
    InvalidWeights { reason: String },
    #[error("candidate score {value} is not a finite non-negative number")]
    InvalidScore { value: f64 },
    #[error("score for fact `{fact_id}` is not finite")]
    NonFiniteScore { fact_id: String },
}

// ---------------------------------------------------------------------------
// Score maps and retriever arithmetic
// ---------------------------------------------------------------------------

/// Relevance score per fact id. Ordered map so serialization and
/// iteration are deterministic.
pub type ScoreMap = BTreeMap<String, f64>;

/// One retriever model's output file: `{ "model": ..., "scores": {...} }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelScores {
    pub model: String,
    pub scores: ScoreMap,
}

impl ModelScores {
    /// Rejects non-finite scores, which the score-map invariant forbids.
    pub fn validate(&self) -> Result<(), FusionError> {
        for (fact_id, score) in &self.scores {
            if !score.is_finite() {
                return Err(FusionError::NonFiniteScore {
                    fact_id: fact_id.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Per fact, the arithmetic mean over the maps that contain it. A fact
/// missing from a map does not drag its average toward zero; the divisor
/// is the number of maps containing the fact.
pub fn average_retriever_scores(maps: &[ScoreMap]) -> Result<ScoreMap, FusionError> {
    if maps.is_empty() {
        return Err(FusionError::EmptyInput);
    }
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for map in maps {
        for (fact_id, score) in map {
            let entry = sums.entry(fact_id.clone()).or_insert((0.0, 0));
            entry.0 += score;
            entry.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(fact_id, (sum, n))| (fact_id, sum / n as f64))
        .collect())
}

/// Fact ids in descending score order, ties broken by ascending fact id;
/// at most `k` entries.
pub fn rank_top_k(scores: &ScoreMap, k: usize) -> Vec<String> {
    let mut ranked: Vec<(&String, f64)> = scores.iter().map(|(id, s)| (id, *s)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(id, _)| id.clone()).collect()
}

/// Fraction of gold facts found in the first `k` ranked entries.
pub fn recall_at_k(
    ranked: &[String],
    gold: &BTreeSet<String>,
    k: usize,
) -> Result<f64, FusionError> {
    if gold.is_empty() {
        return Err(FusionError::EmptyGold);
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|id| gold.contains(*id))
        .count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Draws `min(neg_rate * |gold|, available)` distinct non-gold facts
/// uniformly without replacement, deterministically for a given seed.
pub fn sample_negatives(
    all_facts: &[String],
    gold: &BTreeSet<String>,
    neg_rate: usize,
    seed: u64,
) -> Vec<String> {
    let mut pool: Vec<String> = all_facts
        .iter()
        .filter(|f| !gold.contains(*f))
        .cloned()
        .collect();
    let want = (neg_rate * gold.len()).min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Partial Fisher-Yates: after i swaps the prefix is a uniform
    // without-replacement draw of size i.
    for i in 0..want {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(want);
    pool
}

// ---------------------------------------------------------------------------
// Split combination
// ---------------------------------------------------------------------------

/// Anything with a unique record id, so splits can be concatenated safely.
pub trait RecordId {
    fn record_id(&self) -> &str;
}

impl RecordId for String {
    fn record_id(&self) -> &str {
        self
    }
}

/// Concatenates splits in the given order; a record id present in two
/// splits is an error.
pub fn combine_splits<T: RecordId>(splits: Vec<Vec<T>>) -> Result<Vec<T>, FusionError> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for split in splits {
        for record in split {
            if !seen.insert(record.record_id().to_string()) {
                return Err(FusionError::DuplicateRecordId {
                    id: record.record_id().to_string(),
                });
            }
            out.push(record);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Weighted generator fusion
// ---------------------------------------------------------------------------

/// One generator candidate with one probability-like score per model.
#[derive(Debug, Clone)]
pub struct CandidateProgram {
    pub program: Program,
    pub per_model_scores: Vec<f64>,
}

impl CandidateProgram {
    /// Scores must be finite and non-negative.
    pub fn new(program: Program, per_model_scores: Vec<f64>) -> Result<CandidateProgram, FusionError> {
        for &s in &per_model_scores {
            if !s.is_finite() || s < 0.0 {
                return Err(FusionError::InvalidScore { value: s });
            }
        }
        Ok(CandidateProgram {
            program,
            per_model_scores,
        })
    }
}

/// Per-model fusion weights, normalized to sum to one on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    weights: Vec<f64>,
}

impl FusionWeights {
    pub fn new(raw: Vec<f64>) -> Result<FusionWeights, FusionError> {
        let invalid = |reason: &str| FusionError::InvalidWeights {
            reason: reason.to_string(),
        };
        if raw.is_empty() {
            return Err(invalid("no weights given"));
        }
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights must be finite and non-negative"));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(invalid("weights must not all be zero"));
        }
        Ok(FusionWeights {
            weights: raw.into_iter().map(|w| w / sum).collect(),
        })
    }

    /// Equal weight per model: simple average fusion.
    pub fn uniform(models: usize) -> Result<FusionWeights, FusionError> {
        FusionWeights::new(vec![1.0; models])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Picks the candidate with the largest weighted score sum. Candidates
/// whose programs are equivalent pool their scores first, so syntactic
/// variants of one program vote together; each pool is represented by its
/// lexicographically smallest serialization, which also breaks exact
/// score ties across pools.
pub fn weighted_program_fusion(
    candidates: &[CandidateProgram],
    w: &FusionWeights,
) -> Result<(Program, f64), FusionError> {
    if candidates.is_empty() {
        return Err(FusionError::EmptyInput);
    }
    for c in candidates {
        if c.per_model_scores.len() != w.len() {
            return Err(FusionError::DimensionMismatch {
                expected: w.len(),
                found: c.per_model_scores.len(),
            });
        }
    }

    struct Pool<'a> {
        representative: &'a Program,
        serialized: String,
        pooled: Vec<f64>,
    }

    let mut pools: Vec<Pool> = Vec::new();
    for c in candidates {
        let serialized = serialize_program(&c.program);
        match pools
            .iter_mut()
            .find(|p| programs_equivalent(p.representative, &c.program))
        {
            Some(pool) => {
                for (acc, s) in pool.pooled.iter_mut().zip(&c.per_model_scores) {
                    *acc += s;
                }
                if serialized < pool.serialized {
                    pool.representative = &c.program;
                    pool.serialized = serialized;
                }
            }
            None => pools.push(Pool {
                representative: &c.program,
                serialized,
                pooled: c.per_model_scores.clone(),
            }),
        }
    }

    let fused = |pool: &Pool| -> f64 {
        pool.pooled
            .iter()
            .zip(w.weights())
            .map(|(s, w)| s * w)
            .sum()
    };

    let best = pools
        .iter()
        .max_by(|a, b| {
            fused(a)
                .total_cmp(&fused(b))
                .then_with(|| b.serialized.cmp(&a.serialized))
        })
        .expect("non-empty candidate list");
    Ok((best.representative.clone(), fused(best)))
}
