//! Content pack: the narrative function cards, the selectable characters and
//! the initial situations a story can start from.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of canonical narrative functions in a full catalog.
pub const CANONICAL_FUNCTION_COUNT: usize = 31;

/// Catalog file schema understood by this build.
pub const CATALOG_SCHEMA_VERSION: u32 = 1;

const DEFAULT_CATALOG: &str = include_str!("../assets/default_catalog.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionCard {
    pub id: u32,
    pub title: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialSituation {
    pub id: u32,
    pub title: String,
    #[serde(default)]
    pub description: String,
    /// Relative asset path of the illustration; may be empty.
    #[serde(rename = "image", default)]
    pub image_ref: String,
}

/// Immutable, validated content pack. Share it behind an `Arc`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub schema_version: u32,
    pub catalog_version: String,
    pub functions: Vec<FunctionCard>,
    pub characters: Vec<Character>,
    pub situations: Vec<InitialSituation>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("malformed catalog: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid catalog: {0}")]
    Validation(String),
}

/// Parses and validates a catalog document.
pub fn load_catalog(raw: &[u8]) -> Result<Catalog, CatalogError> {
    let catalog: Catalog = serde_json::from_slice(raw)?;
    catalog.validate_with(CANONICAL_FUNCTION_COUNT)?;
    Ok(catalog)
}

impl Catalog {
    /// The catalog shipped with the application.
    pub fn builtin() -> Catalog {
        load_catalog(DEFAULT_CATALOG.as_bytes()).expect("shipped catalog is valid")
    }

    /// Raw bytes of the shipped catalog file.
    pub fn builtin_source() -> &'static str {
        DEFAULT_CATALOG
    }

    /// Builds a reduced catalog whose function list holds any number of cards
    /// (ids must still run 1, 2, ..., n). Used to exercise the session engine
    /// on small decks; production code loads full catalogs via [`load_catalog`].
    pub fn with_deck(
        catalog_version: impl Into<String>,
        functions: Vec<FunctionCard>,
        characters: Vec<Character>,
        situations: Vec<InitialSituation>,
    ) -> Result<Catalog, CatalogError> {
        let catalog = Catalog {
            schema_version: CATALOG_SCHEMA_VERSION,
            catalog_version: catalog_version.into(),
            functions,
            characters,
            situations,
        };
        let n = catalog.functions.len();
        if n == 0 {
            return Err(CatalogError::Validation("deck has no function cards".into()));
        }
        catalog.validate_with(n)?;
        Ok(catalog)
    }

    /// Number of function cards; the id of the last card.
    pub fn function_count(&self) -> u32 {
        self.functions.len() as u32
    }

    pub fn function(&self, id: u32) -> Option<&FunctionCard> {
        // ids are positional by construction
        id.checked_sub(1)
            .and_then(|i| self.functions.get(i as usize))
    }

    pub fn character(&self, id: u32) -> Option<&Character> {
        self.characters.iter().find(|c| c.id == id)
    }

    pub fn situation(&self, id: u32) -> Option<&InitialSituation> {
        self.situations.iter().find(|s| s.id == id)
    }

    fn validate_with(&self, expected_functions: usize) -> Result<(), CatalogError> {
        let fail = |msg: String| Err(CatalogError::Validation(msg));

        if self.schema_version != CATALOG_SCHEMA_VERSION {
            return fail(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.functions.len() != expected_functions {
            return fail(format!(
                "expected {expected_functions} functions, found {}",
                self.functions.len()
            ));
        }
        for (i, f) in self.functions.iter().enumerate() {
            let want = i as u32 + 1;
            if f.id != want {
                return fail(format!("function at position {i} has id {}, expected {want}", f.id));
            }
            if f.title.trim().is_empty() || f.description.trim().is_empty() {
                return fail(format!("function {} has an empty title or description", f.id));
            }
        }

        if self.characters.len() < 2 {
            return fail(format!("at least 2 characters required, found {}", self.characters.len()));
        }
        let mut seen = HashSet::new();
        for c in &self.characters {
            if c.id == 0 {
                return fail("character ids must be positive".into());
            }
            if !seen.insert(c.id) {
                return fail(format!("duplicate character id {}", c.id));
            }
            if c.name.trim().is_empty() {
                return fail(format!("character {} has an empty name", c.id));
            }
        }

        if self.situations.len() < 2 {
            return fail(format!("at least 2 situations required, found {}", self.situations.len()));
        }
        let mut seen = HashSet::new();
        for s in &self.situations {
            if s.id == 0 {
                return fail("situation ids must be positive".into());
            }
            if !seen.insert(s.id) {
                return fail(format!("duplicate situation id {}", s.id));
            }
            if s.title.trim().is_empty() {
                return fail(format!("situation {} has an empty title", s.id));
            }
        }
        Ok(())
    }
}
