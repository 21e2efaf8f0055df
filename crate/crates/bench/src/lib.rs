//! Criterion benchmarks for `cirsim-core`; see `benches/simulation.rs`.
