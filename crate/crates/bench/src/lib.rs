//! Criterion benchmarks for qwalk-core live in `benches/`.
