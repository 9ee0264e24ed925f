use cascade_core::sensitivity::SensitivityError;
use cascade_store::StoreError;

use crate::reproduce::ReproduceError;

pub const OK: u8 = 0;
pub const VALIDATION: u8 = 1;
pub const INFEASIBLE: u8 = 2;
pub const STORAGE: u8 = 3;

fn store_status(e: &StoreError) -> u8 {
    match e {
        StoreError::NotFound { .. } | StoreError::Conflict(_) | StoreError::Cascade(_) => {
            VALIDATION
        }
        StoreError::ReadOnly
        | StoreError::Io { .. }
        | StoreError::Document { .. }
        | StoreError::DuplicateModel { .. } => STORAGE,
    }
}

/// Exit status for a failed command: infeasible targets and storage problems
/// get their own codes, everything else is a validation error.
pub fn status_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<SensitivityError>() {
            if e.is_infeasible() {
                return INFEASIBLE;
            }
        }
        if let Some(e) = cause.downcast_ref::<StoreError>() {
            return store_status(e);
        }
        if let Some(ReproduceError::Store(e)) = cause.downcast_ref::<ReproduceError>() {
            return store_status(e);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return STORAGE;
        }
    }
    VALIDATION
}
