//! Command implementations and the HTTP trainer service behind the `affecta` binary.

pub mod commands;
pub mod http;
