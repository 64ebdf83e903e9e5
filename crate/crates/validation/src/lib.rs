//! Acceptance checks for `bottomup`; see `tests/acceptance.rs`.
