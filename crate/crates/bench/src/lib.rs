//! Benchmark-only crate; see `benches/propagators.rs`.
