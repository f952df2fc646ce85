//! Criterion benchmarks for the PNC search and codec, the OFDM modem and a
//! full simulation trial. See `benches/`.
