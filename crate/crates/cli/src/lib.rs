//! File formats, instance specifications and command drivers for the
//! `bipembed` executable.

pub mod args;
pub mod commands;
pub mod format;
pub mod instance;
