//! Local-first resource gateway.
//!
//! Every lookup is answered from the local cache when an entry exists; the
//! network port is consulted only on a miss, and a successful fetch is stored
//! before it is returned. Entries never expire on their own: they live until
//! [`Gateway::invalidate`] drops them.

mod backend;
mod port;

use std::collections::HashMap;
use std::fmt;
use std::io;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::batch::{self, Strategy};
use crate::clock::{Clock, SystemClock};

pub use backend::{CacheBackend, DirectoryBackend, MemoryBackend};
#[cfg(feature = "http-port")]
pub use port::HttpPort;
pub use port::{content_tag, FileSystemPort, Fetched, NetworkPort, PortError, ScriptedPort};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceKey(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid resource key {0:?}: must be non-empty and contain no whitespace")]
pub struct InvalidKey(pub String);

impl ResourceKey {
    pub fn new(name: impl Into<String>) -> Result<Self, InvalidKey> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(InvalidKey(name));
        }
        Ok(ResourceKey(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ResourceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<&str> for ResourceKey {
    type Error = InvalidKey;

    fn try_from(s: &str) -> Result<Self, Self::Error> {
        ResourceKey::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub key: ResourceKey,
    pub data: Vec<u8>,
    pub version_tag: String,
    pub stored_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Local,
    Network,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResult {
    pub data: Vec<u8>,
    pub version_tag: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotRow {
    pub key: ResourceKey,
    pub version_tag: String,
    pub stored_at: DateTime<Utc>,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("{0} is not cached and the network is unavailable")]
    OfflineMiss(ResourceKey),
    #[error("fetching {key} failed: {reason}")]
    Network { key: ResourceKey, reason: String },
    #[error("cache storage error: {0}")]
    Storage(#[from] io::Error),
}

#[derive(Debug, Default)]
pub struct WarmReport {
    /// Keys resolved (already cached or fetched), in request order.
    pub fetched: Vec<ResourceKey>,
    pub failed: Vec<(ResourceKey, GatewayError)>,
}

pub struct Gateway<P> {
    port: P,
    backend: Box<dyn CacheBackend>,
    clock: Box<dyn Clock>,
    flights: Mutex<HashMap<ResourceKey, Arc<Mutex<()>>>>,
    strategy: Strategy,
}

impl<P: NetworkPort> Gateway<P> {
    pub fn in_memory(port: P) -> Self {
        Self::with_backend(port, Box::new(MemoryBackend::default()))
    }

    /// Cache persisted under `<data_dir>/cache`.
    pub fn persistent(port: P, data_dir: impl AsRef<std::path::Path>) -> io::Result<Self> {
        let backend = DirectoryBackend::open(data_dir.as_ref().join("cache"))?;
        Ok(Self::with_backend(port, Box::new(backend)))
    }

    pub fn with_backend(port: P, backend: Box<dyn CacheBackend>) -> Self {
        Gateway {
            port,
            backend,
            clock: Box::new(SystemClock),
            flights: Mutex::new(HashMap::new()),
            strategy: Strategy::default(),
        }
    }

    pub fn with_clock(mut self, clock: impl Clock + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn port(&self) -> &P {
        &self.port
    }

    fn flight(&self, key: &ResourceKey) -> Arc<Mutex<()>> {
        self.flights.lock().unwrap().entry(key.clone()).or_default().clone()
    }

    /// Cached copy if present, otherwise fetch from the network and cache it.
    pub fn get(&self, key: &ResourceKey) -> Result<FetchResult, GatewayError> {
        let flight = self.flight(key);
        let _single = flight.lock().unwrap();

        if let Some(entry) = self.backend.load(key)? {
            return Ok(FetchResult { data: entry.data, version_tag: entry.version_tag, origin: Origin::Local });
        }
        let fetched = self.port.fetch(key).map_err(|e| match e {
            PortError::Unavailable => GatewayError::OfflineMiss(key.clone()),
            other => GatewayError::Network { key: key.clone(), reason: other.to_string() },
        })?;
        let entry = CacheEntry {
            key: key.clone(),
            data: fetched.data,
            version_tag: fetched.version_tag,
            stored_at: self.clock.now(),
        };
        self.backend.store(&entry)?;
        Ok(FetchResult { data: entry.data, version_tag: entry.version_tag, origin: Origin::Network })
    }

    /// Resolves every key; failures are collected rather than raised.
    pub fn warm(&self, keys: &[ResourceKey]) -> WarmReport {
        let outcomes = batch::map(self.strategy, keys, |k| self.get(k).map(|_| ()));
        let mut report = WarmReport::default();
        for (key, outcome) in keys.iter().zip(outcomes) {
            match outcome {
                Ok(()) => report.fetched.push(key.clone()),
                Err(e) => report.failed.push((key.clone(), e)),
            }
        }
        report
    }

    /// Drops the cached entry; returns whether one existed.
    pub fn invalidate(&self, key: &ResourceKey) -> Result<bool, GatewayError> {
        let flight = self.flight(key);
        let _single = flight.lock().unwrap();
        Ok(self.backend.remove(key)?)
    }

    /// Cached entries sorted by key.
    pub fn snapshot(&self) -> Result<Vec<SnapshotRow>, GatewayError> {
        let mut rows = self.backend.list()?;
        rows.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(rows)
    }
}
