//! Acceptance checks for `sphfilt`; see `tests/acceptance.rs`.
