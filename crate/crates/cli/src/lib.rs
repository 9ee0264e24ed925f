//! Library side of the `cascade` command: the reproduction catalog and the
//! mapping from errors to exit statuses.

pub mod exit;
pub mod reproduce;
