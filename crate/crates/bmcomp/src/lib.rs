//! File formats, CSV output and the command line for `bmcomp-core`.

pub mod cli;
pub mod csvout;
pub mod curvefile;
pub mod tracefile;
pub mod wiredump;
