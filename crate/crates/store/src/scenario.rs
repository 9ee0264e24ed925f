use cascade_core::cascade::{FactorValue, Overrides};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::document::{DocumentError, SCHEMA_VERSION};

/// Hex digits of the content hash used as a scenario id.
const ID_LEN: usize = 12;

/// What a caller supplies to save a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDraft {
    pub base_model: String,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    pub id: String,
    pub base_model: String,
    pub overrides: Overrides,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub note: String,
}

#[derive(Serialize)]
struct Identity<'a> {
    base_model: &'a str,
    overrides: &'a Overrides,
    note: &'a str,
}

impl ScenarioDraft {
    pub fn new(base_model: impl Into<String>) -> Self {
        ScenarioDraft {
            base_model: base_model.into(),
            overrides: Overrides::new(),
            note: String::new(),
        }
    }

    pub fn with(mut self, factor_id: impl Into<String>, value: FactorValue) -> Self {
        self.overrides.insert(factor_id.into(), value);
        self
    }

    /// Content-derived id: the same base, overrides and note always give the same id.
    pub fn id(&self) -> String {
        let canonical = serde_json::to_vec(&Identity {
            base_model: &self.base_model,
            overrides: &self.overrides,
            note: &self.note,
        })
        .expect("scenario identity serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(digest)[..ID_LEN].to_string()
    }

    pub fn into_document(self, created_at: DateTime<Utc>) -> ScenarioDocument {
        ScenarioDocument {
            schema_version: SCHEMA_VERSION,
            id: self.id(),
            base_model: self.base_model,
            overrides: self.overrides,
            created_at,
            note: self.note,
        }
    }
}

impl ScenarioDocument {
    pub fn draft(&self) -> ScenarioDraft {
        ScenarioDraft {
            base_model: self.base_model.clone(),
            overrides: self.overrides.clone(),
            note: self.note.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenarios always serialize");
        s.push('\n');
        s
    }
}

pub fn load_scenario(bytes: &[u8]) -> Result<ScenarioDocument, DocumentError> {
    let text = std::str::from_utf8(bytes).map_err(|_| DocumentError::Encoding)?;
    let doc: ScenarioDocument = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocumentError::SchemaVersion {
            found: doc.schema_version,
        });
    }
    let expected = doc.draft().id();
    if doc.id != expected {
        return Err(DocumentError::Invalid {
            location: "id".into(),
            message: format!(
                "'{}' does not match the content (expected '{expected}')",
                doc.id
            ),
        });
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cascade_core::Probability;

    fn one() -> FactorValue {
        FactorValue::Known(Probability::ONE)
    }

    #[test]
    fn ids_follow_content() {
        let a = ScenarioDraft::new("tagi-2043").with("robots", one());
        let b = ScenarioDraft::new("tagi-2043").with("robots", one());
        assert_eq!(a.id(), b.id());
        assert_eq!(a.id().len(), 12);
        assert_ne!(a.id(), ScenarioDraft::new("tagi-2043").id());
        assert_ne!(
            a.id(),
            ScenarioDraft::new("tagi-2100").with("robots", one()).id()
        );
        let noted = ScenarioDraft {
            note: "x".into(),
            ..a.clone()
        };
        assert_ne!(a.id(), noted.id());
    }

    #[test]
    fn document_round_trip() {
        let doc = ScenarioDraft::new("tagi-2043")
            .with("robots", one())
            .with("learning", FactorValue::NotApplicable)
            .into_document(Utc::now());
        let text = doc.to_json();
        let back = load_scenario(text.as_bytes()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn tampered_id_rejected() {
        let doc = ScenarioDraft::new("tagi-2043").into_document(Utc::now());
        let text = doc.to_json().replace(&doc.id, "000000000000");
        assert!(matches!(
            load_scenario(text.as_bytes()),
            Err(DocumentError::Invalid { .. })
        ));
    }
}
