//! Benchmark helpers live in benches/; nothing is exported.
