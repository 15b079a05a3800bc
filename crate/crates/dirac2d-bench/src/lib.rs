//! Criterion benchmarks for `dirac2d`; see `benches/`.
