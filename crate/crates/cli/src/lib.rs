//! Command line front end and HTTP service for `tokvec`.
//!
//! The service exposes `POST /indexes/{name}/search`, `GET /indexes/{name}/stats`
//! and `GET /healthz`. Search bodies are parsed strictly: unknown fields are
//! rejected with the offending path.

pub mod commands;
pub mod server;
pub mod wire;

/// Installs a stderr subscriber filtered by `TOKVEC_LOG` (default `warn`).
pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("TOKVEC_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}
