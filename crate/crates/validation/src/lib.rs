//! Holds the `acceptance` integration test; see `tests/acceptance.rs`.
//!
//! Kept in its own package so the slow end-to-end criteria run after the
//! unit, property and CLI suites of the other crates.
