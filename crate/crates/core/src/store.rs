//! Durable persistence for sessions, scored traces, and gold revisions.
//!
//! [`SessionStore`] speaks to a [`DocumentStore`] port keyed by `/`-separated
//! paths. The file adapter maps keys directly onto a directory tree:
//!
//! ```text
//! <root>/sessions/<session-id>/session.json
//! <root>/sessions/<session-id>/traces/<trace-id>.json
//! <root>/gold/<revision>/{taxonomy,schedule,checklist,gold-trace}.json
//! ```
//!
//! Every document is UTF-8 JSON. Single documents are written to a temp file
//! and renamed into place; a gold revision is written to a temp directory and
//! renamed as a whole. A crash therefore leaves either the old state or the
//! new one, plus possibly a `.tmp-*` entry that readers ignore and
//! [`FileDocumentStore::open`] sweeps.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gold::{
    BundleError, GoldStandard, CHECKLIST_FILE, SCHEDULE_FILE, TAXONOMY_FILE, TRACE_FILE,
};
use crate::stats::{ScoredTrace, SessionStats};
use crate::texc::{trace_distance, DistanceConfig, DistanceResult, ScoreError};
use crate::trace::{ProcessTrace, SessionId};
use crate::wire::WireTrace;

const TMP_PREFIX: &str = ".tmp-";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage I/O failure at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("document `{key}` is corrupt: {message}")]
    Corrupt { key: String, message: String },
    #[error("{0} not found")]
    NotFound(String),
    #[error("document `{0}` already exists")]
    Conflict(String),
    #[error("trace is missing {0}")]
    Incomplete(&'static str),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Key-addressed document storage.
///
/// `put` replaces one document atomically. `put_batch` creates a whole
/// prefix atomically and fails with [`StoreError::Conflict`] if the prefix
/// already exists. `list` returns the sorted child names directly below a
/// prefix.
pub trait DocumentStore: Send + Sync {
    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StoreError>;
    fn put(&self, key: &str, bytes: &[u8]) -> Result<(), StoreError>;
    fn put_batch(&self, prefix: &str, docs: &[(String, Vec<u8>)]) -> Result<(), StoreError>;
    fn list(&self, prefix: &str) -> Result<Vec<String>, StoreError>;
}

impl<T: DocumentStore + ?Sized> DocumentStore for Box<T> {
    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        (**self).get(key)
    }

    fn put(&self, key: &str, bytes: &[u8]) -> Result<(), StoreError> {
        (**self).put(key, bytes)
    }

    fn put_batch(&self, prefix: &str, docs: &[(String, Vec<u8>)]) -> Result<(), StoreError> {
        (**self).put_batch(prefix, docs)
    }

    fn list(&self, prefix: &str) -> Result<Vec<String>, StoreError> {
        (**self).list(prefix)
    }
}

/// Directory-backed adapter.
#[derive(Debug)]
pub struct FileDocumentStore {
    root: PathBuf,
    tmp_counter: AtomicU64,
}

impl FileDocumentStore {
    /// Opens (creating if needed) a store rooted at `root` and removes
    /// leftovers of interrupted writes.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        sweep_tmp(&root)?;
        Ok(Self {
            root,
            tmp_counter: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, key: &str) -> PathBuf {
        key.split('/').fold(self.root.clone(), |p, seg| p.join(seg))
    }

    fn tmp_sibling(&self, target: &Path) -> PathBuf {
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let name = target
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        target.with_file_name(format!("{TMP_PREFIX}{}-{n}-{name}", std::process::id()))
    }
}

fn check_key(key: &str) -> Result<(), StoreError> {
    let bad = key.is_empty()
        || key
            .split('/')
            .any(|s| s.is_empty() || s == "." || s == ".." || s.starts_with(TMP_PREFIX));
    if bad {
        return Err(StoreError::Corrupt {
            key: key.to_string(),
            message: "invalid document key".into(),
        });
    }
    Ok(())
}

fn sweep_tmp(dir: &Path) -> Result<(), StoreError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(io_err(dir)(e)),
    };
    for entry in entries {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        let is_tmp = entry.file_name().to_string_lossy().starts_with(TMP_PREFIX);
        let is_dir = entry.file_type().map_err(io_err(&path))?.is_dir();
        match (is_tmp, is_dir) {
            (true, true) => fs::remove_dir_all(&path).map_err(io_err(&path))?,
            (true, false) => fs::remove_file(&path).map_err(io_err(&path))?,
            (false, true) => sweep_tmp(&path)?,
            (false, false) => {}
        }
    }
    Ok(())
}

fn write_synced(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))
}

fn sync_dir(dir: &Path) -> Result<(), StoreError> {
    File::open(dir)
        .and_then(|d| d.sync_all())
        .map_err(io_err(dir))
}

impl DocumentStore for FileDocumentStore {
    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        check_key(key)?;
        let path = self.path(key);
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    fn put(&self, key: &str, bytes: &[u8]) -> Result<(), StoreError> {
        check_key(key)?;
        let target = self.path(key);
        let dir = target.parent().expect("keys live under the root");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let tmp = self.tmp_sibling(&target);
        write_synced(&tmp, bytes)?;
        fs::rename(&tmp, &target).map_err(io_err(&target))?;
        sync_dir(dir)
    }

    fn put_batch(&self, prefix: &str, docs: &[(String, Vec<u8>)]) -> Result<(), StoreError> {
        check_key(prefix)?;
        let target = self.path(prefix);
        if target.exists() {
            return Err(StoreError::Conflict(prefix.to_string()));
        }
        let parent = target.parent().expect("keys live under the root");
        fs::create_dir_all(parent).map_err(io_err(parent))?;
        let tmp = self.tmp_sibling(&target);
        fs::create_dir(&tmp).map_err(io_err(&tmp))?;
        for (name, bytes) in docs {
            check_key(name)?;
            write_synced(&tmp.join(name), bytes)?;
        }
        sync_dir(&tmp)?;
        fs::rename(&tmp, &target).map_err(|e| {
            let _ = fs::remove_dir_all(&tmp);
            if target.exists() {
                StoreError::Conflict(prefix.to_string())
            } else {
                io_err(&target)(e)
            }
        })?;
        sync_dir(parent)
    }

    fn list(&self, prefix: &str) -> Result<Vec<String>, StoreError> {
        check_key(prefix)?;
        let dir = self.path(prefix);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        let mut names = Vec::new();
        for entry in entries {
            let name = entry.map_err(io_err(&dir))?.file_name();
            let name = name.to_string_lossy();
            if !name.starts_with('.') {
                names.push(name.into_owned());
            }
        }
        names.sort();
        Ok(names)
    }
}

/// In-process adapter, handy for tests and embedding.
#[derive(Debug, Default)]
pub struct MemoryDocumentStore {
    docs: RwLock<BTreeMap<String, Vec<u8>>>,
}

impl MemoryDocumentStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl DocumentStore for MemoryDocumentStore {
    fn get(&self, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        check_key(key)?;
        Ok(self.docs.read().get(key).cloned())
    }

    fn put(&self, key: &str, bytes: &[u8]) -> Result<(), StoreError> {
        check_key(key)?;
        self.docs.write().insert(key.to_string(), bytes.to_vec());
        Ok(())
    }

    fn put_batch(&self, prefix: &str, docs: &[(String, Vec<u8>)]) -> Result<(), StoreError> {
        check_key(prefix)?;
        let mut map = self.docs.write();
        let dir = format!("{prefix}/");
        if map.range(dir.clone()..).next().is_some_and(|(k, _)| k.starts_with(&dir)) {
            return Err(StoreError::Conflict(prefix.to_string()));
        }
        for (name, bytes) in docs {
            check_key(name)?;
            map.insert(format!("{dir}{name}"), bytes.clone());
        }
        Ok(())
    }

    fn list(&self, prefix: &str) -> Result<Vec<String>, StoreError> {
        check_key(prefix)?;
        let dir = format!("{prefix}/");
        let names: BTreeSet<String> = self
            .docs
            .read()
            .range(dir.clone()..)
            .take_while(|(k, _)| k.starts_with(&dir))
            .filter_map(|(k, _)| k[dir.len()..].split('/').next().map(str::to_string))
            .collect();
        Ok(names.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SessionDocument {
    session_id: SessionId,
    created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: SessionId,
    pub created_at: DateTime<Utc>,
    pub trace_ids: Vec<String>,
    pub group_ids: BTreeSet<String>,
}

/// A trace as persisted, with the score and the inputs needed to redo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTrace {
    pub trace_id: String,
    pub content_hash: String,
    pub gold_revision: u64,
    pub config: DistanceConfig,
    pub distance: f64,
    pub percent_display: u8,
    pub trace: WireTrace,
}

impl StoredTrace {
    pub fn process_trace(&self) -> Result<ProcessTrace, StoreError> {
        self.trace.clone().into_trace().map_err(|v| StoreError::Corrupt {
            key: self.trace_id.clone(),
            message: format!("{} stored violation(s)", v.len()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PutOutcome {
    pub trace_id: String,
    /// `false` when an identical trace was already stored.
    pub created: bool,
}

/// Hex SHA-256 of the trace content, excluding session id and timestamp.
pub fn content_hash(trace: &ProcessTrace) -> String {
    let mut wire = WireTrace::from(trace);
    wire.session_id = None;
    wire.recorded_at = None;
    let bytes = serde_json::to_vec(&wire).expect("wire trace serializes");
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn trace_id(session: &SessionId, group: &str, at: &DateTime<Utc>, content: &str) -> String {
    let mut h = Sha256::new();
    for part in [session.as_str(), group, &at.to_rfc3339(), content] {
        h.update(part.as_bytes());
        h.update([0]);
    }
    hex(&h.finalize()[..16])
}

fn session_key(id: &SessionId) -> String {
    format!("sessions/{id}/session.json")
}

fn traces_prefix(id: &SessionId) -> String {
    format!("sessions/{id}/traces")
}

/// Sessions, traces, and gold revisions over a [`DocumentStore`].
pub struct SessionStore<S = FileDocumentStore> {
    docs: S,
    session_locks: Mutex<HashMap<SessionId, Arc<RwLock<()>>>>,
    gold_lock: Mutex<()>,
    gold_cache: RwLock<HashMap<u64, Arc<GoldStandard>>>,
}

impl SessionStore<FileDocumentStore> {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        Ok(Self::new(FileDocumentStore::open(root)?))
    }
}

impl<S: DocumentStore> SessionStore<S> {
    pub fn new(docs: S) -> Self {
        Self {
            docs,
            session_locks: Mutex::new(HashMap::new()),
            gold_lock: Mutex::new(()),
            gold_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn documents(&self) -> &S {
        &self.docs
    }

    fn lock_for(&self, id: &SessionId) -> Arc<RwLock<()>> {
        self.session_locks
            .lock()
            .entry(id.clone())
            .or_default()
            .clone()
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, key: &str) -> Result<Option<T>, StoreError> {
        match self.docs.get(key)? {
            Some(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| StoreError::Corrupt {
                    key: key.to_string(),
                    message: e.to_string(),
                }),
            None => Ok(None),
        }
    }

    fn write_json<T: Serialize>(&self, key: &str, value: &T) -> Result<(), StoreError> {
        let bytes = serde_json::to_vec_pretty(value).expect("document serializes");
        self.docs.put(key, &bytes)
    }

    fn ensure_session(&self, id: &SessionId, now: DateTime<Utc>) -> Result<(), StoreError> {
        let key = session_key(id);
        if self.docs.get(&key)?.is_none() {
            self.write_json(
                &key,
                &SessionDocument {
                    session_id: id.clone(),
                    created_at: now,
                },
            )?;
        }
        Ok(())
    }

    /// Registers an empty session; a no-op if it already exists.
    pub fn create_session(&self, id: &SessionId, now: DateTime<Utc>) -> Result<(), StoreError> {
        let lock = self.lock_for(id);
        let _guard = lock.write();
        self.ensure_session(id, now)
    }

    pub fn session_exists(&self, id: &SessionId) -> Result<bool, StoreError> {
        Ok(self.docs.get(&session_key(id))?.is_some())
    }

    pub fn session_ids(&self) -> Result<Vec<SessionId>, StoreError> {
        Ok(self
            .docs
            .list("sessions")?
            .into_iter()
            .filter_map(|name| name.parse().ok())
            .collect())
    }

    /// Persists a scored trace. The trace must carry a session id and a
    /// recording timestamp. Storing the same content twice returns the
    /// existing id.
    pub fn put_trace(
        &self,
        trace: &ProcessTrace,
        result: &DistanceResult,
        gold_revision: u64,
        config: DistanceConfig,
    ) -> Result<PutOutcome, StoreError> {
        let session = trace
            .session_id
            .as_ref()
            .ok_or(StoreError::Incomplete("session_id"))?;
        let recorded_at = trace.recorded_at.ok_or(StoreError::Incomplete("recorded_at"))?;
        let hash = content_hash(trace);
        let id = trace_id(session, &trace.group_id, &recorded_at, &hash);
        let key = format!("{}/{id}.json", traces_prefix(session));

        let lock = self.lock_for(session);
        let _guard = lock.write();
        if self.docs.get(&key)?.is_some() {
            return Ok(PutOutcome {
                trace_id: id,
                created: false,
            });
        }
        self.ensure_session(session, recorded_at)?;
        self.write_json(
            &key,
            &StoredTrace {
                trace_id: id.clone(),
                content_hash: hash,
                gold_revision,
                config,
                distance: result.distance,
                percent_display: result.percent_display,
                trace: WireTrace::from(trace),
            },
        )?;
        Ok(PutOutcome {
            trace_id: id,
            created: true,
        })
    }

    fn load_traces(&self, id: &SessionId) -> Result<Vec<StoredTrace>, StoreError> {
        let prefix = traces_prefix(id);
        let mut traces = Vec::new();
        for name in self.docs.list(&prefix)? {
            let key = format!("{prefix}/{name}");
            if let Some(t) = self.read_json::<StoredTrace>(&key)? {
                traces.push(t);
            }
        }
        traces.sort_by(|a, b| {
            (a.trace.recorded_at, &a.trace_id).cmp(&(b.trace.recorded_at, &b.trace_id))
        });
        Ok(traces)
    }

    /// Stored traces of a session, oldest recording first.
    pub fn traces(&self, id: &SessionId) -> Result<Vec<StoredTrace>, StoreError> {
        let lock = self.lock_for(id);
        let _guard = lock.read();
        if !self.session_exists(id)? {
            return Err(StoreError::NotFound(format!("session {id}")));
        }
        self.load_traces(id)
    }

    pub fn get_trace(&self, id: &SessionId, trace_id: &str) -> Result<StoredTrace, StoreError> {
        self.read_json(&format!("{}/{trace_id}.json", traces_prefix(id)))?
            .ok_or_else(|| StoreError::NotFound(format!("trace {trace_id}")))
    }

    pub fn session(&self, id: &SessionId) -> Result<SessionRecord, StoreError> {
        let lock = self.lock_for(id);
        let _guard = lock.read();
        let doc: SessionDocument = self
            .read_json(&session_key(id))?
            .ok_or_else(|| StoreError::NotFound(format!("session {id}")))?;
        let traces = self.load_traces(id)?;
        Ok(SessionRecord {
            session_id: doc.session_id,
            created_at: doc.created_at,
            group_ids: traces.iter().map(|t| t.trace.group_id.clone()).collect(),
            trace_ids: traces.into_iter().map(|t| t.trace_id).collect(),
        })
    }

    /// Aggregates over the stored scores.
    pub fn get_stats(&self, id: &SessionId) -> Result<SessionStats, StoreError> {
        let traces = self.traces(id)?;
        let parsed = traces
            .iter()
            .map(StoredTrace::process_trace)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SessionStats::aggregate(
            id.as_str(),
            traces.iter().zip(&parsed).map(|(s, p)| ScoredTrace {
                group_id: &p.group_id,
                distance: s.distance,
                events: &p.events,
            }),
        ))
    }

    /// Aggregates after re-scoring every stored trace against the gold
    /// revision and configuration recorded with it.
    pub fn recompute_stats(&self, id: &SessionId) -> Result<SessionStats, StoreError> {
        let traces = self.traces(id)?;
        let mut rescored = Vec::with_capacity(traces.len());
        for stored in &traces {
            let trace = stored.process_trace()?;
            let gold = self.get_gold(stored.gold_revision)?;
            let result = trace_distance(&trace, &gold, &stored.config)?;
            rescored.push((trace, result.distance));
        }
        Ok(SessionStats::aggregate(
            id.as_str(),
            rescored.iter().map(|(t, d)| ScoredTrace {
                group_id: &t.group_id,
                distance: *d,
                events: &t.events,
            }),
        ))
    }

    /// Stored gold revisions, ascending.
    pub fn gold_revisions(&self) -> Result<Vec<u64>, StoreError> {
        let mut revs: Vec<u64> = self
            .docs
            .list("gold")?
            .iter()
            .filter_map(|n| n.parse().ok())
            .collect();
        revs.sort_unstable();
        Ok(revs)
    }

    /// Stores a new revision, which becomes the active one.
    pub fn put_gold(&self, bundle: &GoldStandard) -> Result<u64, StoreError> {
        let _guard = self.gold_lock.lock();
        let rev = self.gold_revisions()?.last().map_or(1, |r| r + 1);
        let files: Vec<(String, Vec<u8>)> = bundle
            .files()
            .into_iter()
            .map(|(name, content)| (name.to_string(), (content + "\n").into_bytes()))
            .collect();
        self.docs.put_batch(&format!("gold/{rev}"), &files)?;
        self.gold_cache.write().insert(rev, Arc::new(bundle.clone()));
        Ok(rev)
    }

    pub fn get_gold(&self, rev: u64) -> Result<Arc<GoldStandard>, StoreError> {
        if let Some(g) = self.gold_cache.read().get(&rev) {
            return Ok(g.clone());
        }
        let mut parts = Vec::with_capacity(4);
        for name in [TAXONOMY_FILE, SCHEDULE_FILE, CHECKLIST_FILE, TRACE_FILE] {
            let key = format!("gold/{rev}/{name}");
            let bytes = self
                .docs
                .get(&key)?
                .ok_or_else(|| StoreError::NotFound(format!("gold revision {rev}")))?;
            parts.push(String::from_utf8(bytes).map_err(|e| StoreError::Corrupt {
                key,
                message: e.to_string(),
            })?);
        }
        let gold = Arc::new(GoldStandard::from_parts(
            &parts[0], &parts[1], &parts[2], &parts[3],
        )?);
        self.gold_cache.write().insert(rev, gold.clone());
        Ok(gold)
    }

    /// Latest revision, if any gold has been installed.
    pub fn active_gold(&self) -> Result<Option<(u64, Arc<GoldStandard>)>, StoreError> {
        match self.gold_revisions()?.last() {
            Some(&rev) => Ok(Some((rev, self.get_gold(rev)?))),
            None => Ok(None),
        }
    }
}
