//! Command-line tool and HTTP service around `carrier_sched`.

pub mod app;
pub mod service;

pub use app::{run, Cli, CliError, WEIGHTS_ENV};
pub use service::{router, ServiceState};
