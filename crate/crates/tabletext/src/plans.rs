//! Deterministic extraction of gold static and dynamic content plans from
//! (records, text) pairs.
//!
//! Static rule, applied sentence by sentence (sentences are delimited by the
//! "." token) and token by token:
//!   - a token equal to some F_NAME value emits that player's name pair
//!     (F_NAME record then S_NAME record); surname-only mentions do not
//!     re-emit the pair,
//!   - a token equal to a non-name record's value emits that record when the
//!     record's entity is mentioned in the same sentence,
//!   - ties (several records sharing entity-in-sentence and value) break to
//!     the lowest record index.
//!
//! Dynamic rule: walk tokens holding a cursor into the static plan; a token
//! equal to the value of the nearest plan entry at or after the cursor (with
//! the entry's entity mentioned in the sentence) is labeled with that plan
//! position and advances the cursor past it. Non-matching tokens take the
//! next match's label; tokens after the last match keep the last label.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Record;

/// Sequence of record indices (positions in the example's record table).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StaticPlan {
    pub indices: Vec<usize>,
}

impl StaticPlan {
    pub fn new(indices: Vec<usize>) -> Self {
        StaticPlan { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// One pointer per text token, each a position in the static plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DynamicPlan {
    pub pointers: Vec<usize>,
}

impl DynamicPlan {
    pub fn new(pointers: Vec<usize>) -> Self {
        DynamicPlan { pointers }
    }

    pub fn is_monotone(&self) -> bool {
        self.pointers.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Sentence spans over a pre-tokenized text; the "." token closes a sentence
/// and belongs to it.
fn sentence_spans(text: &[String]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, tok) in text.iter().enumerate() {
        if tok == "." {
            spans.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
}

/// Entities with at least one name token inside the sentence. Entity names
/// are matched token-wise on their underscore-split parts.
fn mentioned_entities<'a>(records: &'a [Record], sentence: &[String]) -> HashSet<&'a str> {
    let toks: HashSet<&str> = sentence.iter().map(|s| s.as_str()).collect();
    let mut out = HashSet::new();
    for r in records {
        if out.contains(r.entity.as_str()) {
            continue;
        }
        if r.entity_tokens().any(|t| toks.contains(t)) {
            out.insert(r.entity.as_str());
        }
    }
    out
}

pub fn extract_static_plan(records: &[Record], text: &[String]) -> StaticPlan {
    let mut plan = Vec::new();
    for (s, e) in sentence_spans(text) {
        let sentence = &text[s..e];
        let mentioned = mentioned_entities(records, sentence);
        for tok in sentence {
            // Name pair trigger: first-name token.
            let first = records
                .iter()
                .position(|r| r.rtype == crate::corpus::F_NAME && r.value == *tok);
            if let Some(f_idx) = first {
                plan.push(f_idx);
                let entity = &records[f_idx].entity;
                if let Some(s_idx) = records
                    .iter()
                    .position(|r| r.rtype == crate::corpus::S_NAME && &r.entity == entity)
                {
                    plan.push(s_idx);
                }
                continue;
            }
            // Skip surname tokens: the pair was emitted at the first name.
            if records
                .iter()
                .any(|r| r.rtype == crate::corpus::S_NAME && r.value == *tok)
            {
                continue;
            }
            // Value match with the entity mentioned in the same sentence.
            if let Some(idx) = records.iter().position(|r| {
                !r.is_name() && r.value == *tok && mentioned.contains(r.entity.as_str())
            }) {
                plan.push(idx);
            }
        }
    }
    StaticPlan::new(plan)
}

pub fn extract_dynamic_plan(
    static_plan: &StaticPlan,
    records: &[Record],
    text: &[String],
) -> DynamicPlan {
    let n = text.len();
    if static_plan.is_empty() {
        // Degenerate: no plan to point into. Training skips such examples.
        return DynamicPlan::new(vec![0; n]);
    }
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut cursor = 0usize;
    for (s, e) in sentence_spans(text) {
        let sentence = &text[s..e];
        let mentioned = mentioned_entities(records, sentence);
        for (off, tok) in sentence.iter().enumerate() {
            let pos = static_plan.indices[cursor..].iter().position(|&ri| {
                let r = &records[ri];
                r.value == *tok && mentioned.contains(r.entity.as_str())
            });
            if let Some(p) = pos {
                let plan_pos = cursor + p;
                labels[s + off] = Some(plan_pos);
                cursor = plan_pos + 1;
                if cursor >= static_plan.len() {
                    cursor = static_plan.len();
                }
            }
        }
    }
    let last = labels.iter().rev().find_map(|l| *l).unwrap_or(0);
    let mut pointers = vec![last; n];
    let mut next = None;
    for i in (0..n).rev() {
        if labels[i].is_some() {
            next = labels[i];
        }
        if let Some(nx) = next {
            pointers[i] = nx;
        }
    }
    DynamicPlan::new(pointers)
}
