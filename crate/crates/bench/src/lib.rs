//! Criterion benchmarks for the fslm crate; see `benches/`.
