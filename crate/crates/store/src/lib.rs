//! Model and scenario documents on disk, the bundled reference models, and
//! summary-table export.

pub mod bundled;
pub mod document;
pub mod report;
pub mod scenario;
pub mod store;

pub use document::{load_model, DocumentError, ModelDocument};
pub use report::{export_report, Report};
pub use scenario::{load_scenario, ScenarioDocument, ScenarioDraft};
pub use store::{ModelOrigin, ModelSummary, Store, StoreError};
