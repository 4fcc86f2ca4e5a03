//! Benchmarks for holonomy-core live in `benches/`.
