//! Guided story-creation state machine.
//!
//! A session moves forward through situation choice, character choice, one
//! decision per function card in canonical order, and title entry. Every
//! operation borrows the current state and returns its successor, so a
//! rejected action leaves the caller's session untouched.

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::catalog::{Catalog, FunctionCard};
use crate::clock::{Clock, IdSource};
use crate::story::{Story, StoryFragment};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionConfig {
    /// When set, the last function card cannot be rejected.
    pub require_ending: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    SituationChoice,
    CharacterChoice,
    FunctionCards,
    TitleEntry,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Unseen,
    Written(String),
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CardView<'a> {
    Function(&'a FunctionCard),
    TitlePrompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("operation not allowed in phase {actual:?} (expected {expected:?})")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("unknown situation {0}")]
    UnknownSituation(u32),
    #[error("select at least one character")]
    EmptySelection,
    #[error("unknown character {0}")]
    UnknownCharacter(u32),
    #[error("character {0} selected twice")]
    DuplicateCharacter(u32),
    #[error("fragment text is empty")]
    EmptyText,
    #[error("the ending card must be written")]
    EndingRequired,
    #[error("title is empty")]
    EmptyTitle,
}

#[derive(Debug, Clone)]
pub struct StorySession {
    catalog: Arc<Catalog>,
    config: SessionConfig,
    phase: Phase,
    situation_id: Option<u32>,
    character_ids: Vec<u32>,
    decisions: Vec<Decision>,
    cursor: u32,
    title: Option<String>,
}

pub fn new_session(catalog: Arc<Catalog>, config: SessionConfig) -> StorySession {
    let n = catalog.functions.len();
    StorySession {
        catalog,
        config,
        phase: Phase::SituationChoice,
        situation_id: None,
        character_ids: Vec::new(),
        decisions: vec![Decision::Unseen; n],
        cursor: 1,
        title: None,
    }
}

impl StorySession {
    pub fn config(&self) -> SessionConfig {
        self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn cursor(&self) -> u32 {
        self.cursor
    }

    pub fn situation_id(&self) -> Option<u32> {
        self.situation_id
    }

    pub fn character_ids(&self) -> &[u32] {
        &self.character_ids
    }

    pub fn title(&self) -> Option<&str> {
        self.title.as_deref()
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Decision for function `id` (1-based).
    pub fn decision(&self, id: u32) -> Option<&Decision> {
        id.checked_sub(1).and_then(|i| self.decisions.get(i as usize))
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// Written decisions as fragments, in function id order.
    pub fn fragments(&self) -> Vec<StoryFragment> {
        self.decisions
            .iter()
            .zip(1u32..)
            .filter_map(|(d, id)| match d {
                Decision::Written(text) => Some(StoryFragment { function_id: id, text: text.clone() }),
                _ => None,
            })
            .collect()
    }

    fn expect_phase(&self, expected: Phase) -> Result<(), SessionError> {
        if self.phase == expected {
            Ok(())
        } else {
            Err(SessionError::WrongPhase { expected, actual: self.phase })
        }
    }

    pub fn choose_situation(&self, situation_id: u32) -> Result<StorySession, SessionError> {
        self.expect_phase(Phase::SituationChoice)?;
        if self.catalog.situation(situation_id).is_none() {
            return Err(SessionError::UnknownSituation(situation_id));
        }
        let mut next = self.clone();
        next.situation_id = Some(situation_id);
        next.phase = Phase::CharacterChoice;
        Ok(next)
    }

    /// Records the selected characters in the order given.
    pub fn choose_characters(&self, character_ids: &[u32]) -> Result<StorySession, SessionError> {
        self.expect_phase(Phase::CharacterChoice)?;
        if character_ids.is_empty() {
            return Err(SessionError::EmptySelection);
        }
        let mut seen = HashSet::new();
        for &id in character_ids {
            if self.catalog.character(id).is_none() {
                return Err(SessionError::UnknownCharacter(id));
            }
            if !seen.insert(id) {
                return Err(SessionError::DuplicateCharacter(id));
            }
        }
        let mut next = self.clone();
        next.character_ids = character_ids.to_vec();
        next.phase = Phase::FunctionCards;
        next.cursor = 1;
        Ok(next)
    }

    pub fn current_card(&self) -> Result<CardView<'_>, SessionError> {
        match self.phase {
            Phase::FunctionCards => Ok(CardView::Function(
                self.catalog.function(self.cursor).expect("cursor within deck during card phase"),
            )),
            Phase::TitleEntry => Ok(CardView::TitlePrompt),
            actual => Err(SessionError::WrongPhase { expected: Phase::FunctionCards, actual }),
        }
    }

    pub fn write_fragment(&self, text: &str) -> Result<StorySession, SessionError> {
        self.expect_phase(Phase::FunctionCards)?;
        if text.trim().is_empty() {
            return Err(SessionError::EmptyText);
        }
        Ok(self.resolve_current(Decision::Written(text.to_owned())))
    }

    pub fn reject_card(&self) -> Result<StorySession, SessionError> {
        self.expect_phase(Phase::FunctionCards)?;
        if self.config.require_ending && self.cursor == self.catalog.function_count() {
            return Err(SessionError::EndingRequired);
        }
        Ok(self.resolve_current(Decision::Rejected))
    }

    fn resolve_current(&self, decision: Decision) -> StorySession {
        let mut next = self.clone();
        next.decisions[(self.cursor - 1) as usize] = decision;
        next.cursor += 1;
        if next.cursor > self.catalog.function_count() {
            next.phase = Phase::TitleEntry;
        }
        next
    }

    pub fn set_title(&self, title: &str) -> Result<StorySession, SessionError> {
        self.expect_phase(Phase::TitleEntry)?;
        if title.trim().is_empty() {
            return Err(SessionError::EmptyTitle);
        }
        let mut next = self.clone();
        next.title = Some(title.to_owned());
        next.phase = Phase::Done;
        Ok(next)
    }

    pub fn finalize(&self, clock: &dyn Clock, ids: &dyn IdSource) -> Result<Story, SessionError> {
        self.expect_phase(Phase::Done)?;
        Ok(Story {
            id: ids.next_id().to_string(),
            title: self.title.clone().expect("title set in Done phase"),
            situation_id: self.situation_id.expect("situation set before Done"),
            character_ids: self.character_ids.clone(),
            fragments: self.fragments(),
            created_at: clock.now(),
            finalized: true,
        })
    }
}
