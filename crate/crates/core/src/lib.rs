//! Configuration-complexity analysis of C functions under preprocessor
//! variability.
//!
//! The pipeline scans unpreprocessed C ([`cparse`]), builds a variational
//! call graph labeled with presence conditions ([`vargraph`]), computes
//! per-function configuration-complexity metrics ([`metrics`]), labels
//! functions touched by vulnerability fixes ([`vulnmine`]), and compares the
//! vulnerable and non-vulnerable populations ([`stats`]). [`cli`] wires the
//! stages together through files.

pub mod cli;
pub mod cparse;
pub mod metrics;
pub mod pcalg;
pub mod stats;
pub mod vargraph;
pub mod vulnmine;
