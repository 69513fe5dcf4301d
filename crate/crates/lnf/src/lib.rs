//! IO, file formats, experiment configuration and CLI plumbing on top of
//! `lnf-core`.

pub mod bench;
pub mod checkpoint_io;
pub mod config;
pub mod formats;
pub mod report;
pub mod runner;
