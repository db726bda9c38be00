//! Criterion benchmarks for `bcfd-core`; see `benches/solver.rs`.
