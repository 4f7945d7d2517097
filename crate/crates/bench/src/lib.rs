//! Criterion benchmarks for the diolab kernels; see `benches/`.
