//! HTTP API over the citytrail engine and store.
//!
//! Every body is JSON. Routes other than register, login and pack need an
//! `Authorization: Bearer <token>` header from `/api/login`.

pub mod error;
pub mod routes;
pub mod state;
pub mod views;

use std::net::SocketAddr;
use std::path::PathBuf;

use citytrail_core::content::{bari_demo_pack, ContentError, ContentPack};
use citytrail_core::persistence::{Store, StoreError};
use thiserror::Error;

pub use error::{ApiError, ErrorCode};
pub use routes::router;
pub use state::AppState;

#[derive(Debug, Clone, clap::Parser)]
#[command(
    name = "citytrail-server",
    version,
    about = "Serve the citytrail game API"
)]
pub struct Config {
    /// Address to listen on.
    #[arg(long, env = "CITYTRAIL_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Store file; created on first write.
    #[arg(long, env = "CITYTRAIL_STORE", default_value = "citytrail-store.json")]
    pub store: PathBuf,
    /// Content pack directory. The bundled Bari demo is used when absent.
    #[arg(long, env = "CITYTRAIL_PACK")]
    pub pack: Option<PathBuf>,
    /// Language for requests that do not name one. Defaults to the pack's first.
    #[arg(long, env = "CITYTRAIL_LANGUAGE")]
    pub default_language: Option<String>,
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("cannot load content pack: {0}")]
    Content(#[from] ContentError),
    #[error("cannot open store: {0}")]
    Store(#[from] StoreError),
    #[error("language {0:?} is not declared by the content pack")]
    Language(String),
}

impl Config {
    pub fn build_state(&self) -> Result<AppState, StartupError> {
        let pack = match &self.pack {
            Some(dir) => ContentPack::load_dir(dir)?,
            None => bari_demo_pack(),
        };
        let store = Store::open(&self.store)?;
        app_state(store, pack, self.default_language.clone())
    }
}

/// Assemble the shared state, checking the default language against the pack.
pub fn app_state(
    store: Store,
    pack: ContentPack,
    default_language: Option<String>,
) -> Result<AppState, StartupError> {
    let lang = match default_language {
        Some(l) if pack.settings.languages.contains(&l) => l,
        Some(l) => return Err(StartupError::Language(l)),
        None => pack.settings.languages.first().cloned().unwrap_or_default(),
    };
    Ok(AppState::new(store, pack, lang))
}

/// Serve on an already bound listener until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
