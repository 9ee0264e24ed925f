//! File-backed store: bundled reference models plus an optional data
//! directory holding `models/*.model` and `scenarios/*.scenario`.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use cascade_core::cascade::{apply_overrides, CascadeError, CascadeModel};
use chrono::Utc;
use serde::Serialize;
use thiserror::Error;

use crate::bundled;
use crate::document::{load_model, DocumentError, ModelDocument};
use crate::scenario::{load_scenario, ScenarioDocument, ScenarioDraft};

pub const MODEL_EXT: &str = "model";
pub const SCENARIO_EXT: &str = "scenario";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no {kind} with id '{id}'")]
    NotFound { kind: &'static str, id: String },
    #[error("scenario '{0}' already exists")]
    Conflict(String),
    #[error("no data directory configured; scenarios cannot be saved")]
    ReadOnly,
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Document {
        path: PathBuf,
        source: DocumentError,
    },
    #[error("{}: id '{id}' is already taken by another model", path.display())]
    DuplicateModel { path: PathBuf, id: String },
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

impl StoreError {
    /// Missing ids and bad overrides are caller mistakes; everything else is storage.
    pub fn is_not_found(&self) -> bool {
        matches!(self, StoreError::NotFound { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelOrigin {
    Bundled,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub id: String,
    pub name: String,
    pub horizon_year: i32,
    pub origin: ModelOrigin,
}

#[derive(Debug)]
pub struct Store {
    reference: Vec<ModelDocument>,
    data_dir: Option<PathBuf>,
    writer: Mutex<()>,
}

impl Store {
    /// The compiled-in reference models only; saving is unavailable.
    pub fn bundled_only() -> Self {
        Store {
            reference: bundled::documents().expect("bundled documents are valid"),
            data_dir: None,
            writer: Mutex::new(()),
        }
    }

    /// Reference models plus a data directory, created if missing.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let mut store = Self::bundled_only();
        let dir = data_dir.into();
        for sub in ["models", "scenarios"] {
            let p = dir.join(sub);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        store.data_dir = Some(dir);
        Ok(store)
    }

    /// Replaces the reference models with the `*.model` files in `dir`.
    pub fn with_reference_dir(mut self, dir: &Path) -> Result<Self, StoreError> {
        self.reference = read_models(dir)?;
        if self.reference.is_empty() {
            return Err(StoreError::Io {
                path: dir.to_path_buf(),
                source: io::Error::new(io::ErrorKind::NotFound, "no .model files"),
            });
        }
        Ok(self)
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    fn user_models(&self) -> Result<Vec<ModelDocument>, StoreError> {
        match &self.data_dir {
            None => Ok(Vec::new()),
            Some(d) => read_models(&d.join("models")),
        }
    }

    pub fn list_models(&self) -> Result<Vec<ModelSummary>, StoreError> {
        let summary = |d: &ModelDocument, origin| ModelSummary {
            id: d.id.clone(),
            name: d.model.name.clone(),
            horizon_year: d.model.horizon_year,
            origin,
        };
        let mut out: Vec<ModelSummary> = self
            .reference
            .iter()
            .map(|d| summary(d, ModelOrigin::Bundled))
            .collect();
        for d in self.user_models()? {
            if out.iter().any(|s| s.id == d.id) {
                return Err(StoreError::DuplicateModel {
                    path: self.user_model_path(&d.id),
                    id: d.id,
                });
            }
            out.push(summary(&d, ModelOrigin::User));
        }
        Ok(out)
    }

    pub fn model(&self, id: &str) -> Result<ModelDocument, StoreError> {
        if let Some(d) = self.reference.iter().find(|d| d.id == id) {
            return Ok(d.clone());
        }
        self.user_models()?
            .into_iter()
            .find(|d| d.id == id)
            .ok_or_else(|| StoreError::NotFound {
                kind: "model",
                id: id.to_string(),
            })
    }

    fn user_model_path(&self, id: &str) -> PathBuf {
        self.data_dir
            .as_deref()
            .unwrap_or(Path::new("."))
            .join("models")
            .join(format!("{id}.{MODEL_EXT}"))
    }

    fn scenario_dir(&self) -> Result<PathBuf, StoreError> {
        self.data_dir
            .as_ref()
            .map(|d| d.join("scenarios"))
            .ok_or(StoreError::ReadOnly)
    }

    /// Base model with the overrides applied.
    pub fn resolve(&self, draft: &ScenarioDraft) -> Result<CascadeModel, StoreError> {
        let base = self.model(&draft.base_model)?;
        Ok(apply_overrides(&base.model, &draft.overrides)?)
    }

    /// Persists a scenario. Saving identical content twice is a conflict.
    pub fn save_scenario(&self, draft: ScenarioDraft) -> Result<ScenarioDocument, StoreError> {
        let dir = self.scenario_dir()?;
        self.resolve(&draft)?;
        let doc = draft.into_document(Utc::now());
        let final_path = dir.join(format!("{}.{SCENARIO_EXT}", doc.id));

        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        if final_path.exists() {
            return Err(StoreError::Conflict(doc.id));
        }
        let tmp = dir.join(format!(".{}.{}.tmp", doc.id, std::process::id()));
        let written = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(doc.to_json().as_bytes())?;
            f.sync_all()
        })();
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            return Err(io_err(&tmp)(e));
        }
        // hard_link refuses to replace an existing file, so a racing writer
        // in another process cannot be silently overwritten
        let linked = fs::hard_link(&tmp, &final_path);
        let _ = fs::remove_file(&tmp);
        match linked {
            Ok(()) => Ok(doc),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::Conflict(doc.id)),
            Err(e) => Err(io_err(&final_path)(e)),
        }
    }

    pub fn scenario(&self, id: &str) -> Result<ScenarioDocument, StoreError> {
        let dir = match &self.data_dir {
            Some(d) => d.join("scenarios"),
            None => {
                return Err(StoreError::NotFound {
                    kind: "scenario",
                    id: id.to_string(),
                })
            }
        };
        let valid_id = !id.is_empty() && id.chars().all(|c| c.is_ascii_hexdigit());
        let path = dir.join(format!("{id}.{SCENARIO_EXT}"));
        if !valid_id || !path.exists() {
            return Err(StoreError::NotFound {
                kind: "scenario",
                id: id.to_string(),
            });
        }
        read_scenario(&path)
    }

    /// All saved scenarios, oldest first (ties by id).
    pub fn list_scenarios(&self) -> Result<Vec<ScenarioDocument>, StoreError> {
        let Some(d) = &self.data_dir else {
            return Ok(Vec::new());
        };
        let mut out = files_with_ext(&d.join("scenarios"), SCENARIO_EXT)?
            .iter()
            .map(|p| read_scenario(p))
            .collect::<Result<Vec<_>, _>>()?;
        out.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.id.cmp(&b.id))
        });
        Ok(out)
    }
}

fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, StoreError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(dir)(e)),
    };
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(io_err(dir))?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if !hidden && path.extension().and_then(|e| e.to_str()) == Some(ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn read_models(dir: &Path) -> Result<Vec<ModelDocument>, StoreError> {
    let mut out: Vec<ModelDocument> = Vec::new();
    for path in files_with_ext(dir, MODEL_EXT)? {
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let doc = load_model(&bytes).map_err(|source| StoreError::Document {
            path: path.clone(),
            source,
        })?;
        if out.iter().any(|d| d.id == doc.id) {
            return Err(StoreError::DuplicateModel { path, id: doc.id });
        }
        out.push(doc);
    }
    Ok(out)
}

fn read_scenario(path: &Path) -> Result<ScenarioDocument, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    load_scenario(&bytes).map_err(|source| StoreError::Document {
        path: path.to_path_buf(),
        source,
    })
}
