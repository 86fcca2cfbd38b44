//! The single writer. Every mutation funnels through one task that owns the
//! engine and the store, so commands are applied and journaled in exactly
//! one order.

use std::sync::{Arc, RwLock};

use fmds_core::engine::{Command, Engine, Outcome, StreamEvent};
use fmds_core::error::FmdsError;
use tokio::sync::{mpsc, oneshot, watch};

use crate::store::Store;

pub enum Request {
    Apply(Command),
    /// Advance relative to the clock at the moment the request is applied.
    AdvanceBy(i64),
}

pub struct Job {
    pub actor: String,
    pub request: Request,
    pub reply: oneshot::Sender<Result<Outcome, FmdsError>>,
}

/// Read side shared with the HTTP handlers.
#[derive(Clone)]
pub struct Shared {
    pub snapshot: watch::Receiver<Arc<Engine>>,
    pub history: Arc<RwLock<Vec<StreamEvent>>>,
    pub latest: watch::Receiver<u64>,
}

impl Shared {
    pub fn engine(&self) -> Arc<Engine> {
        self.snapshot.borrow().clone()
    }
}

pub struct Writer {
    engine: Arc<Engine>,
    store: Store,
    snapshot: watch::Sender<Arc<Engine>>,
    history: Arc<RwLock<Vec<StreamEvent>>>,
    latest: watch::Sender<u64>,
}

impl Writer {
    pub fn new(engine: Engine, history: Vec<StreamEvent>, store: Store) -> (Writer, Shared) {
        let engine = Arc::new(engine);
        let last = history.last().map_or(0, |e| e.seq);
        let (snapshot_tx, snapshot_rx) = watch::channel(engine.clone());
        let (latest_tx, latest_rx) = watch::channel(last);
        let history = Arc::new(RwLock::new(history));
        let writer = Writer {
            engine,
            store,
            snapshot: snapshot_tx,
            history: history.clone(),
            latest: latest_tx,
        };
        let shared = Shared {
            snapshot: snapshot_rx,
            history,
            latest: latest_rx,
        };
        (writer, shared)
    }

    pub async fn run(mut self, mut jobs: mpsc::Receiver<Job>) {
        while let Some(job) = jobs.recv().await {
            let result = self.apply(&job.actor, job.request);
            let _ = job.reply.send(result);
        }
        if let Err(e) = self.store.sync() {
            tracing::error!(error = %e, "final sync failed");
        }
        tracing::debug!("writer stopped");
    }

    fn apply(&mut self, actor: &str, request: Request) -> Result<Outcome, FmdsError> {
        self.store.check_writable()?;
        let command = match request {
            Request::Apply(command) => command,
            Request::AdvanceBy(secs) => Command::Advance {
                to: self.engine.now() + secs,
            },
        };
        let mut staged = (*self.engine).clone();
        let logged = staged.ntml().len();
        let (outcome, events) = staged.execute(actor, command.clone())?;
        let new_entries = staged.ntml().entries()[logged..].to_vec();
        let lagging = self.store.commit(actor, &command, &new_entries)?;

        self.engine = Arc::new(staged);
        self.snapshot.send_replace(self.engine.clone());
        if !events.is_empty() {
            let last = events.last().map_or(0, |e| e.seq);
            self.history.write().expect("history lock").extend(events);
            self.latest.send_replace(last);
        }
        tracing::debug!(actor, op = command.name(), "committed");
        match lagging {
            Some(e) => {
                tracing::error!(error = %e, "NTML mirror write failed; refusing further commands until restart");
                Err(FmdsError::StorageFailure(format!(
                    "committed, but NTML mirror failed: {e}"
                )))
            }
            None => Ok(outcome),
        }
    }
}
