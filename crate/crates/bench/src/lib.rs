// SPDX-License-Identifier: Apache-2.0

//! Benchmarks for the spectral oracle live in `benches/`.
