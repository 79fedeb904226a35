//! File formats, experiment configuration, the batch runner and the summary
//! table for `jdp-pack`.

pub mod bench;
pub mod config;
pub mod io;
pub mod summarize;
