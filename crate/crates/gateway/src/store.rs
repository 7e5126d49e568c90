//! Directory-backed record store: `<root>/<study>/<sop>.dcm`,
//! `<sop>.sr.dcm` and `<sop>.record.json`. Every file is written to a
//! temporary name and renamed into place; the record file is written last
//! and marks the instance as committed.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use cxr_core::dicom::uid;
use cxr_core::inference::Prediction;
use cxr_core::ood::GateDecision;
use cxr_core::pipeline::Status;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt record {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },
    #[error("invalid UID {0:?}")]
    InvalidUid(String),
    #[error("record violates invariants: {0}")]
    Invariant(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewAction {
    None,
    Confirmed,
    Overridden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub action: ReviewAction,
    pub note: String,
    pub reviewed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub study_uid: String,
    pub sop_instance_uid: String,
    pub received_at: DateTime<Utc>,
    pub status: Status,
    pub prediction: Option<Prediction>,
    /// Absent only for failed records that never reached the gate.
    pub gate: Option<GateDecision>,
    pub sr_sop_uid: Option<String>,
    /// Relative to the store root.
    pub source_bytes_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review: Option<Review>,
}

impl StudyRecord {
    pub fn validate(&self) -> Result<(), StoreError> {
        let fail = |m: &str| Err(StoreError::Invariant(format!("{}: {m}", self.sop_instance_uid)));
        match (self.status, &self.gate) {
            (Status::Accepted, Some(g)) if g.accepted => {}
            (Status::RejectedOod, Some(g)) if !g.accepted => {}
            (Status::Failed, _) => {}
            _ => return fail("status disagrees with gate decision"),
        }
        if self.prediction.is_some() != (self.status == Status::Accepted) {
            return fail("prediction must be present exactly when accepted");
        }
        if self.sr_sop_uid.is_some() && self.status != Status::Accepted {
            return fail("only accepted records carry an SR");
        }
        for u in [&self.study_uid, &self.sop_instance_uid].into_iter().chain(self.sr_sop_uid.as_ref()) {
            if !uid::is_valid(u) {
                return Err(StoreError::InvalidUid(u.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Index {
    records: HashMap<String, StudyRecord>,
    /// SR SOP UID -> source SOP UID.
    sr_owner: HashMap<String, String>,
}

impl Index {
    fn insert(&mut self, record: StudyRecord) {
        if let Some(sr) = &record.sr_sop_uid {
            self.sr_owner.insert(sr.clone(), record.sop_instance_uid.clone());
        }
        self.records.insert(record.sop_instance_uid.clone(), record);
    }
}

/// Bytes to commit alongside a new record.
pub struct NewInstance<'a> {
    pub record: StudyRecord,
    pub source: &'a [u8],
    pub sr: Option<&'a [u8]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoredKind {
    Source,
    Sr,
}

pub struct Store {
    root: PathBuf,
    index: RwLock<Index>,
    sop_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let tmp = dir.join(format!(
        ".{}.{}.{}.tmp",
        path.file_name().unwrap_or_default().to_string_lossy(),
        std::process::id(),
        TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

impl Store {
    /// Opens (creating if needed) and indexes every committed record.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let mut index = Index::default();
        for study in fs::read_dir(&root).map_err(io_err(&root))? {
            let study = study.map_err(io_err(&root))?.path();
            if !study.is_dir() {
                continue;
            }
            for entry in fs::read_dir(&study).map_err(io_err(&study))? {
                let path = entry.map_err(io_err(&study))?.path();
                let name = path.file_name().unwrap_or_default().to_string_lossy();
                if name.starts_with('.') || !name.ends_with(".record.json") {
                    continue;
                }
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                let record: StudyRecord = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    detail: e.to_string(),
                })?;
                record.validate().map_err(|e| StoreError::Corrupt { path: path.clone(), detail: e.to_string() })?;
                index.insert(record);
            }
        }
        Ok(Store {
            root,
            index: RwLock::new(index),
            sop_locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Per-SOP lock serializing check-then-commit for one instance.
    pub fn lock_sop(&self, sop: &str) -> Arc<Mutex<()>> {
        let mut locks = self.sop_locks.lock().expect("lock map poisoned");
        locks.entry(sop.to_string()).or_default().clone()
    }

    pub fn source_rel_path(study: &str, sop: &str) -> String {
        format!("{study}/{sop}.dcm")
    }

    fn paths(&self, study: &str, sop: &str) -> (PathBuf, PathBuf, PathBuf) {
        let dir = self.root.join(study);
        (
            dir.join(format!("{sop}.dcm")),
            dir.join(format!("{sop}.sr.dcm")),
            dir.join(format!("{sop}.record.json")),
        )
    }

    fn write_record(&self, record: &StudyRecord) -> Result<(), StoreError> {
        let (_, _, rec_path) = self.paths(&record.study_uid, &record.sop_instance_uid);
        let json = serde_json::to_vec_pretty(record).expect("records serialize");
        write_atomic(&rec_path, &json)
    }

    /// Writes source, SR, then record, and indexes the record.
    pub fn commit(&self, new: NewInstance<'_>) -> Result<StudyRecord, StoreError> {
        let record = new.record;
        record.validate()?;
        if record.sr_sop_uid.is_some() != new.sr.is_some() {
            return Err(StoreError::Invariant("SR bytes must accompany sr_sop_uid".into()));
        }
        let (src_path, sr_path, _) = self.paths(&record.study_uid, &record.sop_instance_uid);
        let dir = src_path.parent().expect("has parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_atomic(&src_path, new.source)?;
        if let Some(sr) = new.sr {
            write_atomic(&sr_path, sr)?;
        }
        self.write_record(&record)?;
        self.index.write().expect("index poisoned").insert(record.clone());
        Ok(record)
    }

    pub fn get(&self, sop: &str) -> Option<StudyRecord> {
        self.index.read().expect("index poisoned").records.get(sop).cloned()
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("index poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Newest first (ties broken by SOP UID), optionally filtered by status.
    /// Returns the page and the total matching count.
    pub fn list(&self, status: Option<Status>, offset: usize, limit: usize) -> (Vec<StudyRecord>, usize) {
        let index = self.index.read().expect("index poisoned");
        let mut matching: Vec<&StudyRecord> = index
            .records
            .values()
            .filter(|r| status.is_none_or(|s| r.status == s))
            .collect();
        matching.sort_by(|a, b| {
            b.received_at
                .cmp(&a.received_at)
                .then_with(|| a.sop_instance_uid.cmp(&b.sop_instance_uid))
        });
        let total = matching.len();
        let page = matching.into_iter().skip(offset).take(limit).cloned().collect();
        (page, total)
    }

    /// Locates stored bytes for `sop` within `study`: a source image or an SR.
    pub fn locate(&self, study: &str, sop: &str) -> Option<(PathBuf, StoredKind)> {
        let index = self.index.read().expect("index poisoned");
        if let Some(r) = index.records.get(sop) {
            if r.study_uid == study {
                return Some((self.paths(study, sop).0, StoredKind::Source));
            }
        }
        let owner = index.sr_owner.get(sop)?;
        let r = index.records.get(owner)?;
        (r.study_uid == study).then(|| (self.paths(study, owner).1, StoredKind::Sr))
    }

    pub fn set_review(&self, sop: &str, review: Review) -> Result<Option<StudyRecord>, StoreError> {
        let lock = self.lock_sop(sop);
        let _guard = lock.lock().expect("sop lock poisoned");
        let Some(mut record) = self.get(sop) else {
            return Ok(None);
        };
        record.review = Some(review);
        self.write_record(&record)?;
        self.index.write().expect("index poisoned").insert(record.clone());
        Ok(Some(record))
    }

    /// Checks the root is writable by creating and removing a probe file.
    pub fn writable(&self) -> bool {
        let probe = self.root.join(format!(".probe.{}", std::process::id()));
        let ok = fs::write(&probe, b"").is_ok();
        let _ = fs::remove_file(&probe);
        ok
    }
}
