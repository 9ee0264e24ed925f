//! Reference models compiled into the binary.

use crate::document::{load_model, DocumentError, ModelDocument};

/// `(file name, contents)` of every bundled document.
pub const FILES: &[(&str, &str)] = &[
    (
        "tagi-2043.model",
        include_str!("../bundled/tagi-2043.model"),
    ),
    (
        "tagi-2100.model",
        include_str!("../bundled/tagi-2100.model"),
    ),
];

pub fn documents() -> Result<Vec<ModelDocument>, DocumentError> {
    FILES
        .iter()
        .map(|(_, text)| load_model(text.as_bytes()))
        .collect()
}
