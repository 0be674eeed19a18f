//! Criterion benchmarks for the kernel geometry and the simulator; see
//! `benches/`.
