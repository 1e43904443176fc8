//! Session registry backed by one directory per session: `meta.json` plus an
//! append-only `log.jsonl` that is replayed on startup.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use pairank_core::{Choice, ItemId, NextQuery, Progress, RankedItem, RankingConfig, Session, Source};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{ApiError, ApiResult};

pub const RUBRIC_REF: &str = "pairwise-quality-rubric-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub session_id: String,
    pub n_items: usize,
    pub budget: u64,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_id: Option<String>,
    pub rubric: String,
    pub created_at: u64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ItemSpec {
    pub id: String,
    pub image_uri: String,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct CreateSession {
    pub items: Vec<ItemSpec>,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub annotator_id: Option<String>,
    /// Partial ranking configuration merged over the server default.
    #[serde(default)]
    pub config: Option<Value>,
    #[serde(default)]
    pub priors: Option<HashMap<String, f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StoredItem {
    id: String,
    image_uri: String,
    token: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Meta {
    manifest: SessionManifest,
    items: Vec<StoredItem>,
}

/// What the annotator is shown next.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NextView {
    Query { query_id: u64, left_image_uri: String, right_image_uri: String, progress: Progress },
    Complete { complete: bool, progress: Progress },
}

struct Entry {
    meta: Meta,
    session: Session,
    /// Log entries already on disk (the header excluded).
    persisted: usize,
    tokens: HashMap<String, usize>,
}

pub struct Store {
    dir: PathBuf,
    default_config: RankingConfig,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Entry>>>>,
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn image_token(session_id: &str, item_id: &str) -> String {
    let digest = Sha256::digest(format!("{session_id}\0{item_id}").as_bytes());
    hex::encode(&digest[..12])
}

/// JSON merge: objects merge key by key, anything else replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

impl Entry {
    fn log_path(dir: &Path) -> PathBuf {
        dir.join("log.jsonl")
    }

    fn image_uri(&self, item: &ItemId) -> String {
        let stored = self.meta.items.iter().find(|i| i.id == item.as_str()).expect("session item");
        format!("/v1/sessions/{}/images/{}", self.meta.manifest.session_id, stored.token)
    }

    fn view(&self, next: &NextQuery) -> NextView {
        let progress = self.session.progress();
        match next {
            NextQuery::Complete => NextView::Complete { complete: true, progress },
            NextQuery::Query(q) => NextView::Query {
                query_id: q.id,
                left_image_uri: self.image_uri(&q.left),
                right_image_uri: self.image_uri(&q.right),
                progress,
            },
        }
    }
}

impl Store {
    /// Opens (or creates) a data directory and replays every stored session.
    pub fn open(dir: impl Into<PathBuf>, default_config: RankingConfig) -> ApiResult<Self> {
        let dir = dir.into();
        default_config.validate()?;
        fs::create_dir_all(dir.join("sessions"))?;
        let mut sessions = BTreeMap::new();
        for entry in fs::read_dir(dir.join("sessions"))? {
            let path = entry?.path();
            if !path.is_dir() {
                continue;
            }
            if !path.join("meta.json").is_file() || !Entry::log_path(&path).is_file() {
                // Creation was interrupted before both files existed.
                tracing::warn!(path = %path.display(), "skipping incomplete session directory");
                continue;
            }
            let loaded = Self::load(&path)
                .map_err(|e| ApiError::Storage(format!("cannot load {}: {e}", path.display())))?;
            sessions.insert(loaded.meta.manifest.session_id.clone(), Arc::new(Mutex::new(loaded)));
        }
        Ok(Self { dir, default_config, sessions: RwLock::new(sessions) })
    }

    pub fn data_dir(&self) -> &Path {
        &self.dir
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.dir.join("sessions").join(id)
    }

    fn load(path: &Path) -> ApiResult<Entry> {
        let meta: Meta = serde_json::from_slice(&fs::read(path.join("meta.json"))?)
            .map_err(|e| ApiError::Storage(format!("meta.json: {e}")))?;
        let log_path = Entry::log_path(path);
        // A crash mid-append can leave a partial last line; drop it.
        let raw = fs::read(&log_path)?;
        if !raw.is_empty() && raw.last() != Some(&b'\n') {
            let keep = raw.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            fs::write(&log_path, &raw[..keep])?;
        }
        let session = Session::read_jsonl(BufReader::new(File::open(&log_path)?))?;
        let persisted = session.log_entries().len();
        let tokens = meta.items.iter().enumerate().map(|(k, i)| (i.token.clone(), k)).collect();
        Ok(Entry { meta, session, persisted, tokens })
    }

    fn get(&self, id: &str) -> ApiResult<Arc<Mutex<Entry>>> {
        let sessions = self.sessions.read().map_err(|_| ApiError::Internal("lock poisoned".into()))?;
        sessions.get(id).cloned().ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    fn lock(entry: &Mutex<Entry>) -> ApiResult<std::sync::MutexGuard<'_, Entry>> {
        entry.lock().map_err(|_| ApiError::Internal("lock poisoned".into()))
    }

    pub fn create(&self, request: CreateSession) -> ApiResult<SessionManifest> {
        if request.items.len() < 2 {
            return Err(ApiError::InvalidRequest(format!("need at least 2 items, got {}", request.items.len())));
        }
        if let Some(item) = request.items.iter().find(|i| i.id.is_empty() || i.image_uri.is_empty()) {
            return Err(ApiError::InvalidRequest(format!("item {:?} needs a non-empty id and image_uri", item.id)));
        }
        let raw_id = rand::random::<u64>();
        let session_id = format!("{raw_id:016x}");
        let mut config = serde_json::to_value(&self.default_config).map_err(|e| ApiError::Internal(e.to_string()))?;
        // Without an explicit seed each session draws its own query sequence.
        config["seed"] = raw_id.into();
        if let Some(patch) = request.config {
            merge(&mut config, patch);
        }
        let config: RankingConfig =
            serde_json::from_value(config).map_err(|e| ApiError::InvalidRequest(format!("config: {e}")))?;
        let priors: Option<HashMap<ItemId, f64>> =
            request.priors.map(|p| p.into_iter().map(|(k, v)| (ItemId::from(k), v)).collect());
        let session = Session::create(request.items.iter().map(|i| i.id.clone()), priors.as_ref(), config)?;

        let manifest = SessionManifest {
            session_id: session_id.clone(),
            n_items: request.items.len(),
            budget: session.budget(),
            category: request.category,
            annotator_id: request.annotator_id,
            rubric: RUBRIC_REF.to_string(),
            created_at: now_secs(),
        };
        let items: Vec<StoredItem> = request
            .items
            .into_iter()
            .map(|i| StoredItem { token: image_token(&session_id, &i.id), id: i.id, image_uri: i.image_uri })
            .collect();
        let meta = Meta { manifest: manifest.clone(), items };

        let dir = self.session_dir(&session_id);
        fs::create_dir_all(&dir)?;
        let mut log = Vec::new();
        session.write_jsonl(&mut log)?;
        fs::write(Entry::log_path(&dir), log)?;
        let meta_json = serde_json::to_vec_pretty(&meta).map_err(|e| ApiError::Internal(e.to_string()))?;
        fs::write(dir.join("meta.json"), meta_json)?;

        let tokens = meta.items.iter().enumerate().map(|(k, i)| (i.token.clone(), k)).collect();
        let entry = Entry { meta, session, persisted: 0, tokens };
        self.sessions
            .write()
            .map_err(|_| ApiError::Internal("lock poisoned".into()))?
            .insert(session_id, Arc::new(Mutex::new(entry)));
        Ok(manifest)
    }

    pub fn list(&self) -> ApiResult<Vec<SessionManifest>> {
        let entries: Vec<Arc<Mutex<Entry>>> =
            self.sessions.read().map_err(|_| ApiError::Internal("lock poisoned".into()))?.values().cloned().collect();
        let mut out = entries
            .iter()
            .map(|e| Ok(Self::lock(e)?.meta.manifest.clone()))
            .collect::<ApiResult<Vec<_>>>()?;
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.session_id.cmp(&b.session_id)));
        Ok(out)
    }

    pub fn manifest(&self, id: &str) -> ApiResult<(SessionManifest, Progress)> {
        let entry = self.get(id)?;
        let e = Self::lock(&entry)?;
        Ok((e.meta.manifest.clone(), e.session.progress()))
    }

    /// Appends unsaved log entries. On failure the in-memory session is
    /// rebuilt from disk so memory never runs ahead of the log.
    fn persist(&self, e: &mut Entry) -> ApiResult<()> {
        let dir = self.session_dir(&e.meta.manifest.session_id);
        let entries = e.session.log_entries();
        if entries.len() == e.persisted {
            return Ok(());
        }
        let write = || -> std::io::Result<()> {
            let mut buf = Vec::new();
            for entry in &entries[e.persisted..] {
                serde_json::to_writer(&mut buf, entry)?;
                buf.push(b'\n');
            }
            let mut f = OpenOptions::new().append(true).open(Entry::log_path(&dir))?;
            f.write_all(&buf)?;
            f.sync_data()
        };
        match write() {
            Ok(()) => {
                e.persisted = entries.len();
                Ok(())
            }
            Err(err) => {
                *e = Self::load(&dir)?;
                Err(err.into())
            }
        }
    }

    /// The pending query, issuing a new one when none is pending.
    pub fn next(&self, id: &str) -> ApiResult<NextView> {
        let entry = self.get(id)?;
        let mut e = Self::lock(&entry)?;
        if let Some(q) = e.session.pending().cloned() {
            return Ok(e.view(&NextQuery::Query(q)));
        }
        let next = e.session.next_query(Some(now_secs()))?;
        // Auto-labelled judgments may have been produced on the way.
        self.persist(&mut e)?;
        Ok(e.view(&next))
    }

    pub fn judge(&self, id: &str, query_id: u64, choice: Choice) -> ApiResult<Progress> {
        let entry = self.get(id)?;
        let mut e = Self::lock(&entry)?;
        if e.session.is_complete() {
            return Err(ApiError::SessionComplete);
        }
        e.session.submit(query_id, choice, Source::Human, Some(now_secs()))?;
        self.persist(&mut e)?;
        Ok(e.session.progress())
    }

    pub fn ranking(&self, id: &str) -> ApiResult<Vec<RankedItem>> {
        let entry = self.get(id)?;
        let e = Self::lock(&entry)?;
        if !e.session.is_complete() {
            return Err(ApiError::RankingLocked);
        }
        Ok(e.session.current_ranking())
    }

    pub fn export(&self, id: &str) -> ApiResult<Vec<u8>> {
        let entry = self.get(id)?;
        let e = Self::lock(&entry)?;
        Ok(fs::read(Entry::log_path(&self.session_dir(&e.meta.manifest.session_id)))?)
    }

    /// Where the image behind `token` lives: a remote URL or a file under `<data>/images`.
    pub fn image(&self, id: &str, token: &str) -> ApiResult<ImageSource> {
        let entry = self.get(id)?;
        let e = Self::lock(&entry)?;
        let k = *e.tokens.get(token).ok_or_else(|| ApiError::ImageNotFound(token.to_string()))?;
        let uri = &e.meta.items[k].image_uri;
        if uri.starts_with("http://") || uri.starts_with("https://") {
            return Ok(ImageSource::Remote(uri.clone()));
        }
        let rel = Path::new(uri.strip_prefix("file://").unwrap_or(uri));
        if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            return Err(ApiError::ImageNotFound(token.to_string()));
        }
        Ok(ImageSource::File(self.dir.join("images").join(rel)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ImageSource {
    Remote(String),
    File(PathBuf),
}
