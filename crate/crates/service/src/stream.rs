//! Server-sent events. Each event carries its sequence number as the SSE
//! id; a client resumes with `?since=<seq>` or `Last-Event-ID` and receives
//! every later event in order.

use std::collections::VecDeque;
use std::convert::Infallible;
use std::sync::{Arc, RwLock};

use axum::extract::State;
use axum::http::HeaderMap;
use axum::response::sse::{Event, KeepAlive, Sse};
use fmds_core::engine::{EventKind, StreamEvent};
use futures_util::Stream;
use serde::Deserialize;
use tokio::sync::watch;

use crate::api::{actor_from, ApiQuery, AppState};

const BATCH: usize = 256;

#[derive(Deserialize)]
pub struct StreamQuery {
    #[serde(default)]
    since: Option<u64>,
    #[serde(default)]
    actor: Option<String>,
}

struct Subscriber {
    cursor: usize,
    pending: VecDeque<StreamEvent>,
    history: Arc<RwLock<Vec<StreamEvent>>>,
    latest: watch::Receiver<u64>,
    shutdown: watch::Receiver<bool>,
    actor: Option<String>,
}

/// JSON payload of one event plus a `silent` flag telling this subscriber
/// whether to suppress the notification.
pub fn render(event: &StreamEvent, actor: Option<&str>) -> Event {
    let silent = match (&event.kind, actor) {
        (EventKind::MessagePosted { muted_members, .. }, Some(actor)) => muted_members.contains(actor),
        _ => false,
    };
    let mut data = serde_json::to_value(event).unwrap_or_default();
    let name = data["event"].as_str().unwrap_or("event").to_string();
    data["silent"] = silent.into();
    Event::default()
        .id(event.seq.to_string())
        .event(name)
        .data(data.to_string())
}

impl Subscriber {
    async fn next(mut self) -> Option<(Result<Event, Infallible>, Self)> {
        loop {
            if let Some(event) = self.pending.pop_front() {
                let rendered = render(&event, self.actor.as_deref());
                return Some((Ok(rendered), self));
            }
            if *self.shutdown.borrow() {
                return None;
            }
            {
                let history = self.history.read().expect("history lock");
                if history.len() > self.cursor {
                    let end = history.len().min(self.cursor + BATCH);
                    self.pending.extend(history[self.cursor..end].iter().cloned());
                    self.cursor = end;
                    continue;
                }
            }
            tokio::select! {
                changed = self.latest.changed() => if changed.is_err() { return None },
                _ = self.shutdown.changed() => return None,
            }
        }
    }
}

pub async fn subscribe(
    State(s): State<Arc<AppState>>,
    headers: HeaderMap,
    ApiQuery(q): ApiQuery<StreamQuery>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let last_event_id = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok());
    let actor = q.actor.or_else(|| actor_from(&headers, &s.actor_header));
    let mut latest = s.shared.latest.clone();
    let now = *latest.borrow_and_update();
    let since = q.since.or(last_event_id).unwrap_or(now);
    let subscriber = Subscriber {
        cursor: since as usize,
        pending: VecDeque::new(),
        history: s.shared.history.clone(),
        latest,
        shutdown: s.shutdown.clone(),
        actor,
    };
    tracing::debug!(since, "stream subscriber connected");
    Sse::new(futures_util::stream::unfold(subscriber, Subscriber::next)).keep_alive(KeepAlive::default())
}
