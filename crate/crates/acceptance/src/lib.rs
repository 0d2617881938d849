//! Acceptance suite for `harq-renewal`; see `tests/acceptance.rs`.
//!
//! Kept as its own package so that it runs after the library's tests.
