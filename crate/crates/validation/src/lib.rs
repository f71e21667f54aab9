//! Acceptance suite for the workspace; see `tests/acceptance.rs`.
//!
//! Run it alone with `cargo test -p s2align-validation --test acceptance`,
//! optionally followed by a comma list of criterion numbers.
