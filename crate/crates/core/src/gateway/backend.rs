use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use super::{CacheEntry, ResourceKey, SnapshotRow};
use crate::store::write_atomic;

/// Storage behind the gateway. Implementations must never expose an entry
/// whose data and metadata were not both written.
pub trait CacheBackend: Send + Sync {
    fn load(&self, key: &ResourceKey) -> io::Result<Option<CacheEntry>>;
    fn store(&self, entry: &CacheEntry) -> io::Result<()>;
    fn remove(&self, key: &ResourceKey) -> io::Result<bool>;
    fn list(&self) -> io::Result<Vec<SnapshotRow>>;
}

#[derive(Default)]
pub struct MemoryBackend {
    entries: RwLock<BTreeMap<ResourceKey, CacheEntry>>,
}

impl CacheBackend for MemoryBackend {
    fn load(&self, key: &ResourceKey) -> io::Result<Option<CacheEntry>> {
        Ok(self.entries.read().unwrap().get(key).cloned())
    }

    fn store(&self, entry: &CacheEntry) -> io::Result<()> {
        self.entries.write().unwrap().insert(entry.key.clone(), entry.clone());
        Ok(())
    }

    fn remove(&self, key: &ResourceKey) -> io::Result<bool> {
        Ok(self.entries.write().unwrap().remove(key).is_some())
    }

    fn list(&self) -> io::Result<Vec<SnapshotRow>> {
        Ok(self
            .entries
            .read()
            .unwrap()
            .values()
            .map(|e| SnapshotRow { key: e.key.clone(), version_tag: e.version_tag.clone(), stored_at: e.stored_at })
            .collect())
    }
}

// '.' is encoded too, so no encoded key can end in ".meta"
const KEY_ENCODE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_');
const META_SUFFIX: &str = ".meta";

/// One file per entry, `<dir>/<urlencoded-key>`, with a `.meta` sidecar
/// holding the version tag and store time. The sidecar is written last and
/// removed first, so it marks a committed entry.
pub struct DirectoryBackend {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    version_tag: String,
    #[serde(with = "crate::story::utc_seconds")]
    stored_at: DateTime<Utc>,
}

impl DirectoryBackend {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DirectoryBackend { dir })
    }

    fn data_path(&self, key: &ResourceKey) -> PathBuf {
        self.dir.join(utf8_percent_encode(key.as_str(), KEY_ENCODE).to_string())
    }

    fn meta_path(&self, key: &ResourceKey) -> PathBuf {
        self.dir.join(format!("{}{META_SUFFIX}", utf8_percent_encode(key.as_str(), KEY_ENCODE)))
    }

    fn read_meta(&self, key: &ResourceKey) -> io::Result<Option<Meta>> {
        match fs::read(self.meta_path(key)) {
            Ok(raw) => Ok(serde_json::from_slice(&raw).ok()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}

impl CacheBackend for DirectoryBackend {
    fn load(&self, key: &ResourceKey) -> io::Result<Option<CacheEntry>> {
        let Some(meta) = self.read_meta(key)? else { return Ok(None) };
        match fs::read(self.data_path(key)) {
            Ok(data) => Ok(Some(CacheEntry {
                key: key.clone(),
                data,
                version_tag: meta.version_tag,
                stored_at: meta.stored_at,
            })),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn store(&self, entry: &CacheEntry) -> io::Result<()> {
        write_atomic(&self.data_path(&entry.key), &entry.data, None)?;
        let meta = Meta { version_tag: entry.version_tag.clone(), stored_at: entry.stored_at };
        write_atomic(&self.meta_path(&entry.key), &serde_json::to_vec(&meta)?, None)
    }

    fn remove(&self, key: &ResourceKey) -> io::Result<bool> {
        let existed = match fs::remove_file(self.meta_path(key)) {
            Ok(()) => true,
            Err(e) if e.kind() == io::ErrorKind::NotFound => false,
            Err(e) => return Err(e),
        };
        match fs::remove_file(self.data_path(key)) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(existed)
    }

    fn list(&self) -> io::Result<Vec<SnapshotRow>> {
        let mut rows = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            let Some(encoded) = name.to_str().and_then(|n| n.strip_suffix(META_SUFFIX)) else { continue };
            if encoded.starts_with('.') {
                continue;
            }
            let Ok(decoded) = percent_decode_str(encoded).decode_utf8() else { continue };
            let Ok(key) = ResourceKey::new(decoded.into_owned()) else { continue };
            if let Some(entry) = self.load(&key)? {
                rows.push(SnapshotRow { key, version_tag: entry.version_tag, stored_at: entry.stored_at });
            }
        }
        Ok(rows)
    }
}
