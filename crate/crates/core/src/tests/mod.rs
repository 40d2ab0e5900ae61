//! Cross-module tests: full check runs, recon, towers and property tests.

mod properties;
mod suite;
