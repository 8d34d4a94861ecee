//! Subcommand implementations.  Each `run` takes the (possibly
//! manifest-extracted) config text, validates it against its schema,
//! executes, writes artifacts plus a manifest, and returns a one-line
//! status for stdout.

pub mod asymptotics;
pub mod diagnose;
pub mod estimate;
pub mod filters_info;
pub mod mc;
pub mod series;
pub mod simulate;
pub mod transform;
