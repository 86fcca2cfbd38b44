//! HTTP/JSON front end for the flow management engine.
//!
//! [`start`] recovers state from the data directory, spawns the single
//! writer task and serves the API. Reads are answered from the latest
//! published engine snapshot; writes queue behind one another.

pub mod api;
pub mod config;
pub mod error;
pub mod queue;
pub mod store;
pub mod stream;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use tokio::sync::{mpsc, oneshot, watch};
use tokio::task::JoinHandle;

pub use config::{Config, ScenarioSource};
pub use error::StartupError;
pub use store::Scenario;

use api::AppState;
use queue::{Job, Request, Writer};
use store::Store;

pub const CLOCK_ACTOR: &str = "nas-clock";

pub struct Server {
    addr: SocketAddr,
    shutdown: watch::Sender<bool>,
    http: JoinHandle<std::io::Result<()>>,
    writer: JoinHandle<()>,
    pacer: Option<JoinHandle<()>>,
    /// Commands replayed from the journal at startup.
    pub replayed: usize,
}

impl Server {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests, closes event streams, lets queued commands
    /// finish and syncs the journal.
    pub async fn shutdown(self) -> std::io::Result<()> {
        let _ = self.shutdown.send(true);
        if let Some(pacer) = self.pacer {
            pacer.abort();
            let _ = pacer.await;
        }
        let served = self.http.await.map_err(std::io::Error::other)?;
        let _ = self.writer.await;
        served
    }

    /// Runs until ctrl-c, then shuts down.
    pub async fn run_until_ctrl_c(self) -> std::io::Result<()> {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
        self.shutdown().await
    }
}

pub async fn start(config: Config) -> Result<Server, StartupError> {
    let pacing = match config.speedup {
        Some(s) if !(s.is_finite() && s > 0.0) => {
            return Err(StartupError::Config(format!("speedup must be positive, got {s}")))
        }
        Some(_) if config.step_seconds == 0 => {
            return Err(StartupError::Config("step_seconds must be positive".into()))
        }
        Some(s) => Some(Duration::from_secs_f64(config.step_seconds as f64 / s)),
        None => None,
    };

    let actor_header = axum::http::HeaderName::from_bytes(config.actor_header.to_ascii_lowercase().as_bytes())
        .map_err(|_| StartupError::Config(format!("invalid actor header `{}`", config.actor_header)))?;

    let recovered = Store::open(&config.data_dir, || config.load_scenario())?;
    tracing::info!(
        dir = %recovered.store.dir().display(),
        replayed = recovered.replayed,
        now = %recovered.engine.now(),
        "state recovered"
    );
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| StartupError::BindFailure {
            addr: config.bind.to_string(),
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| StartupError::BindFailure {
        addr: config.bind.to_string(),
        source,
    })?;

    let mut engine = recovered.engine;
    if let Some(speedup) = config.speedup {
        engine.set_speedup(speedup, true);
        engine.set_step_seconds(config.step_seconds);
    }
    let (writer, shared) = Writer::new(engine, recovered.history, recovered.store);
    let (jobs_tx, jobs_rx) = mpsc::channel::<Job>(256);
    let writer = tokio::spawn(writer.run(jobs_rx));

    let pacer = pacing.map(|period| tokio::spawn(pace(jobs_tx.clone(), period, config.step_seconds)));

    let (shutdown_tx, shutdown_rx) = watch::channel(false);
    let state = Arc::new(AppState {
        actor_header,
        jobs: jobs_tx,
        shared,
        shutdown: shutdown_rx.clone(),
    });
    let app = api::router(state);
    let mut stop = shutdown_rx;
    let http = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = stop.wait_for(|s| *s).await;
            })
            .await
    });
    tracing::info!(%addr, "listening");
    Ok(Server {
        addr,
        shutdown: shutdown_tx,
        http,
        writer,
        pacer,
        replayed: recovered.replayed,
    })
}

async fn pace(jobs: mpsc::Sender<Job>, period: Duration, step: u32) {
    let mut ticks = tokio::time::interval(period);
    ticks.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    ticks.tick().await;
    loop {
        ticks.tick().await;
        let (reply, rx) = oneshot::channel();
        let job = Job {
            actor: CLOCK_ACTOR.to_string(),
            request: Request::AdvanceBy(step as i64),
            reply,
        };
        if jobs.send(job).await.is_err() {
            return;
        }
        match rx.await {
            Ok(Ok(_)) => {}
            Ok(Err(e)) => tracing::warn!(error = %e, "clock step failed"),
            Err(_) => return,
        }
    }
}
