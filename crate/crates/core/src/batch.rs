//! Data-parallel batch entry points.
//!
//! With the `parallel` feature (on by default) batches fan out over the rayon
//! pool; without it every strategy runs sequentially. Results always come
//! back in input order.

use crate::catalog::Catalog;
use crate::grammar::{validate_sequence, SequenceCheck, UnknownFunction};
use crate::metrics::{sus_score, SusResponse};
use crate::pdf::{render_pdf, PdfError, PdfLayout};
use crate::story::{Story, StoryViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Strategy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Strategy::Parallel
        } else {
            Strategy::Sequential
        }
    }
}

pub(crate) fn map<T, U, F>(strategy: Strategy, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match strategy {
        #[cfg(feature = "parallel")]
        Strategy::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

pub fn validate_sequences(
    strategy: Strategy,
    catalog: &Catalog,
    lists: &[Vec<u32>],
) -> Vec<Result<SequenceCheck, UnknownFunction>> {
    map(strategy, lists, |ids| validate_sequence(catalog, ids))
}

pub fn validate_stories(
    strategy: Strategy,
    catalog: Option<&Catalog>,
    stories: &[Story],
) -> Vec<Result<(), StoryViolation>> {
    map(strategy, stories, |s| s.validate(catalog))
}

pub fn render_pdfs(
    strategy: Strategy,
    stories: &[Story],
    catalog: &Catalog,
    layout: &PdfLayout,
) -> Vec<Result<Vec<u8>, PdfError>> {
    map(strategy, stories, |s| render_pdf(s, catalog, layout))
}

pub fn sus_scores(strategy: Strategy, responses: &[SusResponse]) -> Vec<f64> {
    map(strategy, responses, sus_score)
}
