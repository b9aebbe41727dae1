use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use siac_core::dsp::SAMPLE_RATE;
use siac_core::synth::RirBank;
use siac_service::state::AppState;
use siac_service::{router, Config};

fn env_or<T: std::str::FromStr>(name: &str, default: T) -> Result<T, String> {
    match std::env::var(name) {
        Ok(v) => v.parse().map_err(|_| format!("{name}={v:?} is not valid")),
        Err(_) => Ok(default),
    }
}

async fn run() -> Result<(), String> {
    let data_dir = PathBuf::from(env_or("SIAC_DATA_DIR", "siac-data".to_string())?);
    let port: u16 = env_or("SIAC_PORT", 8080)?;
    let bank_dir = std::env::var_os("SIAC_BANK_DIR").map(PathBuf::from);
    let bank = RirBank::load_or_synthetic(bank_dir.as_deref(), SAMPLE_RATE).map_err(|e| e.to_string())?;

    let mut config = Config::new(data_dir);
    config.max_upload_bytes = env_or("SIAC_MAX_UPLOAD_BYTES", config.max_upload_bytes)?;
    config.workers = env_or("SIAC_WORKERS", config.workers)?;
    std::fs::create_dir_all(&config.data_dir).map_err(|e| format!("{}: {e}", config.data_dir.display()))?;

    let state = Arc::new(AppState::new(config, bank));
    let restored = state.restore().map_err(|e| e.to_string())?;
    eprintln!("restored {restored} sessions from {}", state.config.data_dir.display());

    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("{addr}: {e}"))?;
    eprintln!("listening on {addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    match run().await {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("siac-service: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
