//! Criterion benchmarks for frame construction, field extraction and the
//! scattering transforms live under `benches/`.
