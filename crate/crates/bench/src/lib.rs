//! Criterion benchmarks for `affecta-core`. See `benches/`.
