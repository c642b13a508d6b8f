//! File-backed story library.
//!
//! One document per story, `<uuid>.story.json`, under the store root. There
//! is no central index file: the in-memory index is rebuilt by scanning the
//! directory on open. Writes go to a hidden temp file that is synced and then
//! renamed over the final name, so a crash leaves either no record or a
//! complete one.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use chrono::{DateTime, SubsecRound, Utc};
use thiserror::Error;

use crate::batch::{self, Strategy};
use crate::story::{Story, StoryViolation};

const STORY_SUFFIX: &str = ".story.json";
const TEMP_SUFFIX: &str = ".tmp";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibraryRecord {
    pub story: Story,
    pub stored_at: DateTime<Utc>,
}

/// A file found on open that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("permission denied: {}", .0.display())]
    Permission(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("story {0} already exists")]
    DuplicateId(String),
    #[error("invalid story: {0}")]
    InvalidStory(#[from] StoryViolation),
    #[error("story {0} not found")]
    NotFound(String),
}

/// Where a simulated crash interrupts a save.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// Temp file holds only a prefix of the document.
    DuringTempWrite,
    /// Temp file complete and synced, rename not yet done.
    BeforeRename,
    /// Rename done, in-memory index not yet updated.
    AfterRename,
}

pub struct StoreHandle {
    root: PathBuf,
    index: RwLock<BTreeMap<String, LibraryRecord>>,
    corrupt: Vec<CorruptFile>,
}

pub fn open_store(root_dir: impl AsRef<Path>) -> Result<StoreHandle, StoreError> {
    let root = root_dir.as_ref().to_path_buf();
    fs::create_dir_all(&root).map_err(|e| io_error(e, &root))?;

    let mut story_files = Vec::new();
    for entry in fs::read_dir(&root).map_err(|e| io_error(e, &root))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if name.starts_with('.') && name.ends_with(TEMP_SUFFIX) {
            // leftover of an interrupted save; the final file was never published
            let _ = fs::remove_file(&path);
        } else if name.ends_with(STORY_SUFFIX) {
            story_files.push(path);
        }
    }
    story_files.sort();

    let loaded = batch::map(Strategy::default(), &story_files, |p| load_record(p));
    let mut index = BTreeMap::new();
    let mut corrupt = Vec::new();
    for (path, result) in story_files.into_iter().zip(loaded) {
        match result {
            Ok(record) => {
                index.insert(record.story.id.clone(), record);
            }
            Err(reason) => corrupt.push(CorruptFile { path, reason }),
        }
    }

    Ok(StoreHandle { root, index: RwLock::new(index), corrupt })
}

fn load_record(path: &Path) -> Result<LibraryRecord, String> {
    let raw = fs::read(path).map_err(|e| e.to_string())?;
    let story = Story::from_document(&raw).map_err(|e| e.to_string())?;
    let expected = format!("{}{STORY_SUFFIX}", story.id);
    if path.file_name().and_then(|n| n.to_str()) != Some(expected.as_str()) {
        return Err(format!("file name does not match story id {}", story.id));
    }
    story.validate(None).map_err(|e| e.to_string())?;
    let stored_at = fs::metadata(path)
        .and_then(|m| m.modified())
        .map(|t| DateTime::<Utc>::from(t).trunc_subsecs(0))
        .map_err(|e| e.to_string())?;
    Ok(LibraryRecord { story, stored_at })
}

fn io_error(e: io::Error, path: &Path) -> StoreError {
    if e.kind() == io::ErrorKind::PermissionDenied {
        StoreError::Permission(path.to_path_buf())
    } else {
        StoreError::Io(e)
    }
}

impl StoreHandle {
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Files skipped when the store was opened.
    pub fn corruption_report(&self) -> &[CorruptFile] {
        &self.corrupt
    }

    pub fn len(&self) -> usize {
        self.index.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn path_for(&self, id: &str) -> PathBuf {
        self.root.join(format!("{id}{STORY_SUFFIX}"))
    }

    pub fn save_story(&self, story: &Story) -> Result<LibraryRecord, StoreError> {
        story.validate(None)?;
        let mut index = self.index.write().unwrap();
        if index.contains_key(&story.id) {
            return Err(StoreError::DuplicateId(story.id.clone()));
        }
        let path = self.path_for(&story.id);
        write_atomic(&path, &story.to_document(), None).map_err(|e| io_error(e, &path))?;
        let record = LibraryRecord { story: story.clone(), stored_at: Utc::now().trunc_subsecs(0) };
        index.insert(story.id.clone(), record.clone());
        Ok(record)
    }

    /// Runs a save up to `at` and stops as if the process died there. The
    /// handle must be discarded afterwards; reopen the directory to observe
    /// what survived.
    #[doc(hidden)]
    pub fn save_story_interrupted(&self, story: &Story, at: CrashPoint) -> Result<(), StoreError> {
        story.validate(None)?;
        let _guard = self.index.write().unwrap();
        let path = self.path_for(&story.id);
        write_atomic(&path, &story.to_document(), Some(at)).map_err(|e| io_error(e, &path))
    }

    /// Newest first; equal timestamps ordered by id.
    pub fn list_stories(&self) -> Vec<LibraryRecord> {
        let mut records: Vec<LibraryRecord> = self.index.read().unwrap().values().cloned().collect();
        records.sort_by(|a, b| {
            b.story
                .created_at
                .cmp(&a.story.created_at)
                .then_with(|| a.story.id.cmp(&b.story.id))
        });
        records
    }

    pub fn get_story(&self, id: &str) -> Result<Story, StoreError> {
        self.index
            .read()
            .unwrap()
            .get(id)
            .map(|r| r.story.clone())
            .ok_or_else(|| StoreError::NotFound(id.to_owned()))
    }

    pub fn delete_story(&self, id: &str) -> Result<(), StoreError> {
        let mut index = self.index.write().unwrap();
        if !index.contains_key(id) {
            return Err(StoreError::NotFound(id.to_owned()));
        }
        let path = self.path_for(id);
        match fs::remove_file(&path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_error(e, &path)),
        }
        sync_dir(&self.root);
        index.remove(id);
        Ok(())
    }
}

/// Writes `bytes` to a hidden sibling temp file, syncs it and renames it
/// over `path`. `crash` stops the sequence early for fault injection.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8], crash: Option<CrashPoint>) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{name}{TEMP_SUFFIX}"));

    let mut file = File::create(&tmp)?;
    if crash == Some(CrashPoint::DuringTempWrite) {
        file.write_all(&bytes[..bytes.len() / 2])?;
        return Ok(());
    }
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    if crash == Some(CrashPoint::BeforeRename) {
        return Ok(());
    }
    fs::rename(&tmp, path)?;
    sync_dir(dir);
    Ok(())
}

fn sync_dir(dir: &Path) {
    // not supported on every platform; durability of the rename is best effort there
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}
