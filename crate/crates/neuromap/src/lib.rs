//! File formats, run manifests, the parallel sweep harness and the command
//! line front end for [`neuromap_core`].

pub mod cli;
pub mod formats;
pub mod manifest;
pub mod sweep;
