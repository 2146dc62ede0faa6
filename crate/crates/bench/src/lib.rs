//! Criterion benchmarks for the lcdsim hot paths; see `benches/pipeline.rs`.
