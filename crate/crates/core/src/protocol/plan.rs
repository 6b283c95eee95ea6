use std::collections::HashMap;

use crate::context::ConditioningContext;
use crate::vocab::TokenId;

/// One `next_logprobs` request: a context and its distinct prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRequest<'a> {
    pub context: &'a ConditioningContext,
    pub prefixes: Vec<&'a [TokenId]>,
}

/// Grouping of `(context, prefix)` items into one request per distinct
/// context, with duplicate prefixes sent once.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan<'a> {
    pub requests: Vec<PlannedRequest<'a>>,
    /// For each input item, the (request, prefix) position answering it.
    pub slots: Vec<(usize, usize)>,
}

/// Contexts and prefixes keep their order of first appearance.
pub fn batch_plan<'a>(items: &[(&'a ConditioningContext, &'a [TokenId])]) -> BatchPlan<'a> {
    let mut requests: Vec<PlannedRequest<'a>> = Vec::new();
    let mut by_context: HashMap<&ConditioningContext, (usize, HashMap<&[TokenId], usize>)> = HashMap::new();
    let mut slots = Vec::with_capacity(items.len());
    for &(ctx, prefix) in items {
        let (ri, seen) = by_context.entry(ctx).or_insert_with(|| {
            requests.push(PlannedRequest { context: ctx, prefixes: Vec::new() });
            (requests.len() - 1, HashMap::new())
        });
        let pi = *seen.entry(prefix).or_insert_with(|| {
            requests[*ri].prefixes.push(prefix);
            requests[*ri].prefixes.len() - 1
        });
        slots.push((*ri, pi));
    }
    BatchPlan { requests, slots }
}

impl BatchPlan<'_> {
    /// Total number of prefixes sent.
    pub fn prefix_count(&self) -> usize {
        self.requests.iter().map(|r| r.prefixes.len()).sum()
    }

    /// Maps per-request answers back onto the original items.
    pub fn fan_out<T: Clone>(&self, answers: &[Vec<T>]) -> Vec<T> {
        self.slots.iter().map(|&(r, p)| answers[r][p].clone()).collect()
    }
}
