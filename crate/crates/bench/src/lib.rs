//! Criterion benchmarks for tagging, decoding and retrieval; see `benches/`.
