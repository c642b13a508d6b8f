//! Finalized stories and their document format.

use std::collections::HashSet;

use chrono::{DateTime, SecondsFormat, SubsecRound, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;
use uuid::Uuid;

use crate::catalog::{Catalog, CANONICAL_FUNCTION_COUNT};
use crate::grammar::{check_order, SequenceCheck};

pub const STORY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryFragment {
    pub function_id: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub title: String,
    pub situation_id: u32,
    pub character_ids: Vec<u32>,
    pub fragments: Vec<StoryFragment>,
    #[serde(with = "utc_seconds")]
    pub created_at: DateTime<Utc>,
    pub finalized: bool,
}

/// A rule a story document breaks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoryViolation {
    #[error("id {0:?} is not a UUID-v4")]
    BadId(String),
    #[error("title must not be empty")]
    EmptyTitle,
    #[error("character_ids must not be empty")]
    NoCharacters,
    #[error("character id {0} appears more than once")]
    DuplicateCharacter(u32),
    #[error("fragment {position} has empty text")]
    EmptyFragment { position: usize },
    #[error("fragment {position} references unknown function {id}")]
    UnknownFunction { id: u32, position: usize },
    #[error("fragment function ids are out of canonical order at position {position}")]
    OutOfOrder { position: usize },
    #[error("unknown situation {0}")]
    UnknownSituation(u32),
    #[error("unknown character {0}")]
    UnknownCharacter(u32),
}

impl Story {
    /// Structural invariants plus the ordering rule. When a catalog is
    /// given, function, situation and character references must resolve.
    pub fn validate(&self, catalog: Option<&Catalog>) -> Result<(), StoryViolation> {
        match Uuid::parse_str(&self.id) {
            Ok(u) if u.get_version_num() == 4 => {}
            _ => return Err(StoryViolation::BadId(self.id.clone())),
        }
        if self.finalized && self.title.trim().is_empty() {
            return Err(StoryViolation::EmptyTitle);
        }
        if self.character_ids.is_empty() {
            return Err(StoryViolation::NoCharacters);
        }
        let mut seen = HashSet::new();
        for &c in &self.character_ids {
            if !seen.insert(c) {
                return Err(StoryViolation::DuplicateCharacter(c));
            }
        }
        if let Some(position) = self.fragments.iter().position(|f| f.text.trim().is_empty()) {
            return Err(StoryViolation::EmptyFragment { position });
        }

        let deck = catalog.map_or(CANONICAL_FUNCTION_COUNT as u32, Catalog::function_count);
        match check_order(deck, &self.function_ids()) {
            Err(e) => return Err(StoryViolation::UnknownFunction { id: e.id, position: e.position }),
            Ok(SequenceCheck::Violation { position }) => return Err(StoryViolation::OutOfOrder { position }),
            Ok(SequenceCheck::Valid) => {}
        }

        if let Some(catalog) = catalog {
            if catalog.situation(self.situation_id).is_none() {
                return Err(StoryViolation::UnknownSituation(self.situation_id));
            }
            if let Some(&c) = self.character_ids.iter().find(|&&c| catalog.character(c).is_none()) {
                return Err(StoryViolation::UnknownCharacter(c));
            }
        }
        Ok(())
    }

    pub fn function_ids(&self) -> Vec<u32> {
        self.fragments.iter().map(|f| f.function_id).collect()
    }

    /// Serializes to the on-disk story document.
    pub fn to_document(&self) -> Vec<u8> {
        let doc = StoryDocumentRef { schema_version: STORY_SCHEMA_VERSION, story: self };
        let mut out = serde_json::to_vec_pretty(&doc).expect("story serializes");
        out.push(b'\n');
        out
    }

    pub fn from_document(raw: &[u8]) -> Result<Story, serde_json::Error> {
        let doc: StoryDocument = serde_json::from_slice(raw)?;
        if doc.schema_version != STORY_SCHEMA_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        Ok(doc.story)
    }

    /// File-name friendly form of the title, e.g. "wonderful-story".
    pub fn slug(&self) -> String {
        slugify(&self.title)
    }
}

#[derive(Serialize)]
struct StoryDocumentRef<'a> {
    schema_version: u32,
    #[serde(flatten)]
    story: &'a Story,
}

#[derive(Deserialize)]
struct StoryDocument {
    schema_version: u32,
    #[serde(flatten)]
    story: Story,
}

/// Client-submitted story: id and creation time may be left for the
/// receiver to assign.
#[derive(Debug, Clone, Deserialize)]
pub struct StoryDraft {
    #[serde(default)]
    pub id: Option<String>,
    pub title: String,
    pub situation_id: u32,
    pub character_ids: Vec<u32>,
    #[serde(default)]
    pub fragments: Vec<StoryFragment>,
    #[serde(default, with = "utc_seconds::option")]
    pub created_at: Option<DateTime<Utc>>,
    #[serde(default = "default_true")]
    pub finalized: bool,
}

fn default_true() -> bool {
    true
}

impl StoryDraft {
    pub fn into_story(self, now: DateTime<Utc>, new_id: impl FnOnce() -> Uuid) -> Story {
        Story {
            id: self.id.unwrap_or_else(|| new_id().to_string()),
            title: self.title,
            situation_id: self.situation_id,
            character_ids: self.character_ids,
            fragments: self.fragments,
            created_at: self.created_at.unwrap_or(now).trunc_subsecs(0),
            finalized: self.finalized,
        }
    }
}

pub fn slugify(title: &str) -> String {
    let mut slug = String::new();
    for ch in title.chars().flat_map(fold_accent) {
        if ch.is_ascii_alphanumeric() {
            slug.push(ch.to_ascii_lowercase());
        } else if !slug.is_empty() && !slug.ends_with('-') {
            slug.push('-');
        }
    }
    while slug.ends_with('-') {
        slug.pop();
    }
    if slug.is_empty() {
        slug.push_str("story");
    }
    slug
}

fn fold_accent(c: char) -> Option<char> {
    Some(match c {
        'á' | 'à' | 'ä' | 'â' | 'Á' | 'À' | 'Ä' | 'Â' => 'a',
        'é' | 'è' | 'ë' | 'ê' | 'É' | 'È' | 'Ë' | 'Ê' => 'e',
        'í' | 'ì' | 'ï' | 'î' | 'Í' | 'Ì' | 'Ï' | 'Î' => 'i',
        'ó' | 'ò' | 'ö' | 'ô' | 'Ó' | 'Ò' | 'Ö' | 'Ô' => 'o',
        'ú' | 'ù' | 'ü' | 'û' | 'Ú' | 'Ù' | 'Ü' | 'Û' => 'u',
        'ñ' | 'Ñ' => 'n',
        'ç' | 'Ç' => 'c',
        other => other,
    })
}

/// ISO-8601 UTC timestamps with whole-second precision ("2024-01-31T10:00:00Z").
pub mod utc_seconds {
    use super::*;

    pub fn format(ts: &DateTime<Utc>) -> String {
        ts.to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| t.with_timezone(&Utc).trunc_subsecs(0))
            .map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(ts: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
            match ts {
                Some(t) => s.serialize_some(&super::format(t)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DateTime<Utc>>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|raw| {
                    DateTime::parse_from_rfc3339(&raw)
                        .map(|t| t.with_timezone(&Utc).trunc_subsecs(0))
                        .map_err(serde::de::Error::custom)
                })
                .transpose()
        }
    }
}
