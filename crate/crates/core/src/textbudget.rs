//! Token estimation, chunking, and recursive summarization.
//!
//! Bill summaries can exceed the model's context window, so they are fitted
//! first: if the original summary fits the budget it is used unchanged,
//! otherwise it is chunked, each chunk summarized through the provider, the
//! digests concatenated, and the process repeated until the result fits or
//! the round cap fires.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llmgate::{CompletionProvider, CompletionRequest, ProviderError};
use crate::promptkit;

/// Minimum sensible chunk budget; below this the scaffolding would dominate
/// every chunk.
pub const MIN_CHUNK_BUDGET: usize = 32;

/// Cap on summarize-chunk-reassemble rounds. Official bill summaries rarely
/// need more than one, and the cap bounds spend on pathological inputs.
pub const MAX_SUMMARY_ROUNDS: usize = 3;

#[derive(Debug, Error)]
pub enum BudgetError {
    #[error("context_limit {context_limit} must exceed reserves {reserved} (scaffold + completion)")]
    ReservesExceedContext {
        context_limit: usize,
        reserved: usize,
    },
    #[error("reserves must be positive (scaffold {scaffold}, completion {completion})")]
    ZeroReserve { scaffold: usize, completion: usize },
}

#[derive(Debug, Error)]
pub enum ChunkError {
    #[error("per-chunk budget {budget} below minimum {MIN_CHUNK_BUDGET}")]
    BudgetTooSmall { budget: usize },
}

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error("round {round}: provider failed on chunk {chunk} of {chunk_count}: {source}")]
    Provider {
        round: usize,
        chunk: usize,
        chunk_count: usize,
        #[source]
        source: ProviderError,
    },
    #[error(
        "summary still estimates {estimate} tokens against a budget of {budget} after {rounds} rounds"
    )]
    RoundCapExceeded {
        rounds: usize,
        estimate: usize,
        budget: usize,
    },
    #[error("invalid request: {0}")]
    Request(ProviderError),
}

/// Token counting behind a swappable contract: deterministic and monotone
/// non-decreasing in text length. The default heuristic is
/// `ceil(char_count / 4)`; an exact vendor tokenizer can be substituted.
pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> usize;
}

/// The default `ceil(chars / 4)` heuristic.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicEstimator;

impl TokenEstimator for HeuristicEstimator {
    fn estimate(&self, text: &str) -> usize {
        text.chars().count().div_ceil(4)
    }
}

/// Estimate with the default heuristic.
pub fn estimate_tokens(text: &str) -> usize {
    HeuristicEstimator.estimate(text)
}

/// How the context window is split between input text, prompt scaffolding,
/// and the completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub context_limit: usize,
    pub reserved_for_prompt_scaffold: usize,
    pub reserved_for_completion: usize,
}

impl TokenBudget {
    pub fn new(
        context_limit: usize,
        reserved_for_prompt_scaffold: usize,
        reserved_for_completion: usize,
    ) -> Result<Self, BudgetError> {
        if reserved_for_prompt_scaffold == 0 || reserved_for_completion == 0 {
            return Err(BudgetError::ZeroReserve {
                scaffold: reserved_for_prompt_scaffold,
                completion: reserved_for_completion,
            });
        }
        let reserved = reserved_for_prompt_scaffold + reserved_for_completion;
        if context_limit <= reserved {
            return Err(BudgetError::ReservesExceedContext {
                context_limit,
                reserved,
            });
        }
        Ok(Self {
            context_limit,
            reserved_for_prompt_scaffold,
            reserved_for_completion,
        })
    }

    /// Tokens left for the text being fitted.
    pub fn available(&self) -> usize {
        self.context_limit - self.reserved_for_prompt_scaffold - self.reserved_for_completion
    }
}

impl Default for TokenBudget {
    fn default() -> Self {
        crate::config::BudgetConfig::default()
            .to_token_budget()
            .expect("default budget is valid")
    }
}

/// An ordered split of a text. Concatenating the chunks reproduces the source
/// exactly; no chunk is empty or over budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    pub chunks: Vec<String>,
    pub estimated_tokens_per_chunk: Vec<usize>,
}

impl ChunkPlan {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }
}

/// Split `text` into chunks whose estimates fit `per_chunk_budget`, with the
/// default heuristic estimator.
pub fn chunk_text(text: &str, per_chunk_budget: usize) -> Result<ChunkPlan, ChunkError> {
    chunk_text_with(text, per_chunk_budget, &HeuristicEstimator)
}

/// Split points prefer sentence boundaries (`.`, `!`, `?` followed by
/// whitespace), then whitespace, then hard character cuts. The trailing
/// whitespace run stays with the chunk it ends.
pub fn chunk_text_with(
    text: &str,
    per_chunk_budget: usize,
    estimator: &dyn TokenEstimator,
) -> Result<ChunkPlan, ChunkError> {
    if per_chunk_budget < MIN_CHUNK_BUDGET {
        return Err(ChunkError::BudgetTooSmall {
            budget: per_chunk_budget,
        });
    }
    if text.is_empty() {
        return Ok(ChunkPlan {
            chunks: Vec::new(),
            estimated_tokens_per_chunk: Vec::new(),
        });
    }

    let chars: Vec<char> = text.chars().collect();
    // Byte offset of each char boundary; boundaries[i] starts char i.
    let mut boundaries = Vec::with_capacity(chars.len() + 1);
    let mut offset = 0;
    for c in &chars {
        boundaries.push(offset);
        offset += c.len_utf8();
    }
    boundaries.push(offset);

    let slice = |from: usize, to: usize| &text[boundaries[from]..boundaries[to]];

    // Split candidates, as char indices the next chunk would start at.
    let mut sentence_ends = Vec::new();
    let mut whitespace_ends = Vec::new();
    for i in 0..chars.len() {
        let at_run_end = chars[i].is_whitespace()
            && (i + 1 == chars.len() || !chars[i + 1].is_whitespace());
        if !at_run_end {
            continue;
        }
        whitespace_ends.push(i + 1);
        // Walk back over the whitespace run to see what precedes it.
        let mut j = i;
        while j > 0 && chars[j - 1].is_whitespace() {
            j -= 1;
        }
        if j > 0 && matches!(chars[j - 1], '.' | '!' | '?') {
            sentence_ends.push(i + 1);
        }
    }

    let fits = |from: usize, to: usize| estimator.estimate(slice(from, to)) <= per_chunk_budget;

    let mut chunks = Vec::new();
    let mut estimates = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let end = if fits(pos, chars.len()) {
            chars.len()
        } else {
            // Largest fitting prefix, found by binary search; estimation is
            // monotone in length per the TokenEstimator contract.
            let mut lo = pos + 1; // always make progress
            let mut hi = chars.len();
            while lo < hi {
                let mid = lo + (hi - lo).div_ceil(2);
                if fits(pos, mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            let limit = lo;

            let best_in = |candidates: &[usize]| -> Option<usize> {
                let idx = candidates.partition_point(|&c| c <= limit);
                candidates[..idx].iter().rev().find(|&&c| c > pos).copied()
            };
            best_in(&sentence_ends)
                .or_else(|| best_in(&whitespace_ends))
                .unwrap_or(limit)
        };
        chunks.push(slice(pos, end).to_string());
        estimates.push(estimator.estimate(slice(pos, end)));
        pos = end;
    }

    Ok(ChunkPlan {
        chunks,
        estimated_tokens_per_chunk: estimates,
    })
}

/// Result of fitting a text into a budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FittedSummary {
    pub text: String,
    /// Chunk-summarization rounds performed; 0 means the input already fit.
    pub rounds: usize,
    pub provider_calls: usize,
}

/// Recursive summarizer for over-budget text.
pub struct Summarizer<'a> {
    budget: TokenBudget,
    model_id: String,
    temperature: f64,
    estimator: &'a dyn TokenEstimator,
    max_rounds: usize,
}

impl<'a> Summarizer<'a> {
    pub fn new(budget: TokenBudget, model_id: impl Into<String>, temperature: f64) -> Self {
        Self {
            budget,
            model_id: model_id.into(),
            temperature,
            estimator: &HeuristicEstimator,
            max_rounds: MAX_SUMMARY_ROUNDS,
        }
    }

    pub fn with_estimator(mut self, estimator: &'a dyn TokenEstimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn with_max_rounds(mut self, max_rounds: usize) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    /// Fit `text` into the budget. Already-fitting text is returned unchanged
    /// with zero provider calls.
    pub fn summarize_to_fit(
        &self,
        text: &str,
        provider: &dyn CompletionProvider,
    ) -> Result<FittedSummary, SummarizeError> {
        let available = self.budget.available();
        let mut current = text.to_string();
        let mut provider_calls = 0;
        let mut rounds = 0;

        while self.estimator.estimate(&current) > available {
            if rounds >= self.max_rounds {
                return Err(SummarizeError::RoundCapExceeded {
                    rounds,
                    estimate: self.estimator.estimate(&current),
                    budget: available,
                });
            }
            rounds += 1;

            let plan = chunk_text_with(&current, available, self.estimator)?;
            let chunk_count = plan.len();
            let mut digests = String::new();
            for (i, chunk) in plan.chunks.iter().enumerate() {
                let prompt = promptkit::render_chunk_summary(chunk)
                    .map_err(|e| SummarizeError::Request(ProviderError::InvalidRequest(e.to_string())))?;
                let request = CompletionRequest::new(
                    self.model_id.clone(),
                    prompt,
                    self.budget.reserved_for_completion as u32,
                    self.temperature,
                )
                .map_err(SummarizeError::Request)?;
                let response = provider.complete(&request).map_err(|source| {
                    SummarizeError::Provider {
                        round: rounds,
                        chunk: i + 1,
                        chunk_count,
                        source,
                    }
                })?;
                provider_calls += 1;
                digests.push_str(&response.text);
            }
            current = digests;
        }

        Ok(FittedSummary {
            text: current,
            rounds,
            provider_calls,
        })
    }
}
