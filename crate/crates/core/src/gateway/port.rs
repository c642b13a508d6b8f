use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Mutex, RwLock};
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ResourceKey;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub data: Vec<u8>,
    pub version_tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PortError {
    #[error("network unavailable")]
    Unavailable,
    #[error("resource not found")]
    NotFound,
    #[error("transport error: {0}")]
    Transport(String),
}

/// The remote side of the gateway.
pub trait NetworkPort: Send + Sync {
    fn fetch(&self, key: &ResourceKey) -> Result<Fetched, PortError>;
}

impl<P: NetworkPort + ?Sized> NetworkPort for std::sync::Arc<P> {
    fn fetch(&self, key: &ResourceKey) -> Result<Fetched, PortError> {
        (**self).fetch(key)
    }
}

/// Hex SHA-256 prefix used as a version tag for content without an ETag.
pub fn content_tag(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Serves keys as relative paths under a directory.
pub struct FileSystemPort {
    root: PathBuf,
}

impl FileSystemPort {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FileSystemPort { root: root.into() }
    }

    fn resolve(&self, key: &ResourceKey) -> Option<PathBuf> {
        let rel = Path::new(key.as_str());
        rel.components()
            .all(|c| matches!(c, Component::Normal(_)))
            .then(|| self.root.join(rel))
    }
}

impl NetworkPort for FileSystemPort {
    fn fetch(&self, key: &ResourceKey) -> Result<Fetched, PortError> {
        if !self.root.is_dir() {
            return Err(PortError::Unavailable);
        }
        let path = self.resolve(key).ok_or(PortError::NotFound)?;
        match fs::read(&path) {
            Ok(data) => Ok(Fetched { version_tag: content_tag(&data), data }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(PortError::NotFound),
            Err(e) => Err(PortError::Transport(e.to_string())),
        }
    }
}

/// In-process port with scripted outages and per-key call counters.
#[derive(Default)]
pub struct ScriptedPort {
    resources: RwLock<BTreeMap<ResourceKey, Fetched>>,
    offline: AtomicBool,
    /// Successful fetches left before the port goes offline.
    budget: Mutex<Option<usize>>,
    calls: Mutex<HashMap<ResourceKey, usize>>,
    latency: Option<Duration>,
}

impl ScriptedPort {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_resource(self, name: &str, data: Vec<u8>) -> Self {
        self.set_resource(name, data);
        self
    }

    /// Goes offline after `k` successful fetches.
    pub fn fail_after(self, k: usize) -> Self {
        *self.budget.lock().unwrap() = Some(k);
        self
    }

    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = Some(latency);
        self
    }

    pub fn set_resource(&self, name: &str, data: Vec<u8>) {
        let key = ResourceKey::new(name).expect("valid resource key");
        let fetched = Fetched { version_tag: content_tag(&data), data };
        self.resources.write().unwrap().insert(key, fetched);
    }

    pub fn set_online(&self, online: bool) {
        self.offline.store(!online, Ordering::SeqCst);
    }

    pub fn is_online(&self) -> bool {
        !self.offline.load(Ordering::SeqCst)
    }

    /// Number of fetch calls made for `key`, successful or not.
    pub fn fetch_count(&self, key: &ResourceKey) -> usize {
        self.calls.lock().unwrap().get(key).copied().unwrap_or(0)
    }

    pub fn total_fetches(&self) -> usize {
        self.calls.lock().unwrap().values().sum()
    }

    /// Tag the port serves for `key`.
    pub fn served_tag(&self, key: &ResourceKey) -> Option<String> {
        self.resources.read().unwrap().get(key).map(|f| f.version_tag.clone())
    }
}

impl NetworkPort for ScriptedPort {
    fn fetch(&self, key: &ResourceKey) -> Result<Fetched, PortError> {
        *self.calls.lock().unwrap().entry(key.clone()).or_default() += 1;
        if let Some(latency) = self.latency {
            std::thread::sleep(latency);
        }
        if !self.is_online() {
            return Err(PortError::Unavailable);
        }
        let found = self.resources.read().unwrap().get(key).cloned().ok_or(PortError::NotFound)?;
        let mut budget = self.budget.lock().unwrap();
        match budget.as_mut() {
            Some(0) => {
                self.set_online(false);
                Err(PortError::Unavailable)
            }
            Some(left) => {
                *left -= 1;
                Ok(found)
            }
            None => Ok(found),
        }
    }
}

/// Fetches resources from an HTTP origin. Keys map to paths through an
/// explicit route table, falling back to `/<key>`.
#[cfg(feature = "http-port")]
pub struct HttpPort {
    base_url: String,
    routes: HashMap<ResourceKey, String>,
    agent: ureq::Agent,
}

#[cfg(feature = "http-port")]
impl HttpPort {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(10)))
            .build()
            .into();
        HttpPort { base_url: base_url.into().trim_end_matches('/').to_owned(), routes: HashMap::new(), agent }
    }

    pub fn route(mut self, key: &str, path: &str) -> Self {
        self.routes.insert(ResourceKey::new(key).expect("valid resource key"), path.to_owned());
        self
    }

    fn url_for(&self, key: &ResourceKey) -> String {
        match self.routes.get(key) {
            Some(path) => format!("{}{}", self.base_url, path),
            None => format!("{}/{}", self.base_url, key.as_str()),
        }
    }
}

#[cfg(feature = "http-port")]
impl NetworkPort for HttpPort {
    fn fetch(&self, key: &ResourceKey) -> Result<Fetched, PortError> {
        let mut response = match self.agent.get(&self.url_for(key)).call() {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(404)) => return Err(PortError::NotFound),
            Err(ureq::Error::StatusCode(code)) => return Err(PortError::Transport(format!("HTTP {code}"))),
            Err(ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound | ureq::Error::Timeout(_)) => {
                return Err(PortError::Unavailable)
            }
            Err(e) => return Err(PortError::Transport(e.to_string())),
        };
        let etag = response
            .headers()
            .get("etag")
            .and_then(|v| v.to_str().ok())
            .map(|v| v.trim_matches('"').to_owned());
        let data = response
            .body_mut()
            .read_to_vec()
            .map_err(|e| PortError::Transport(e.to_string()))?;
        Ok(Fetched { version_tag: etag.unwrap_or_else(|| content_tag(&data)), data })
    }
}
