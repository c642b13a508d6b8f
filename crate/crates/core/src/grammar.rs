//! Canonical-order rule: the functions present in a story form a strictly
//! increasing subsequence of the catalog's function ids.

use thiserror::Error;

use crate::catalog::Catalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceCheck {
    Valid,
    /// Index of the first id that is not greater than its predecessor.
    Violation { position: usize },
}

impl SequenceCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, SequenceCheck::Valid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown function id {id} at position {position}")]
pub struct UnknownFunction {
    pub id: u32,
    pub position: usize,
}

pub fn validate_sequence(catalog: &Catalog, function_ids: &[u32]) -> Result<SequenceCheck, UnknownFunction> {
    check_order(catalog.function_count(), function_ids)
}

/// Same rule against a bare deck size (ids `1..=deck_size`).
pub fn check_order(deck_size: u32, function_ids: &[u32]) -> Result<SequenceCheck, UnknownFunction> {
    if let Some((position, &id)) = function_ids
        .iter()
        .enumerate()
        .find(|(_, &id)| id == 0 || id > deck_size)
    {
        return Err(UnknownFunction { id, position });
    }
    Ok(function_ids
        .windows(2)
        .position(|w| w[1] <= w[0])
        .map_or(SequenceCheck::Valid, |i| SequenceCheck::Violation { position: i + 1 }))
}
