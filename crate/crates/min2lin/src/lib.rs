//! File formats, JSON documents and the command-line tool around
//! [`min2lin_core`].

pub mod cli;
pub mod dot;
pub mod format;
pub mod json;
pub mod parallel;
pub mod verify;
