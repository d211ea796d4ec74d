//! File IO, LLM gateway, configuration and commands around
//! [`ideograph_core`].

pub mod cli;
pub mod config;
pub mod gateway;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod providers;
