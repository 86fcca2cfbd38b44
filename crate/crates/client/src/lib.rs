//! Typed client for the FMDS HTTP API.

pub mod hotkey;

use std::collections::BTreeSet;

use eventsource_stream::Eventsource;
use fmds_core::clock::{ClockState, FlightPosition};
use fmds_core::collab::{Meeting, MeetingSource, Message, MessageBody, Thread};
use fmds_core::engine::{AreaRequest, ComplianceRecord, Modeled, StreamEvent};
use fmds_core::geometry::{DemandHistogram, FlowArea};
use fmds_core::ntml::{NtmlEntry, NtmlEventType, StatusMap};
use fmds_core::schedule::{ConstraintOverlay, Flight};
use fmds_core::time::{TimeWindow, Timestamp};
use fmds_core::tmi::{AfpParameters, AfpProgram, ComparisonRow, DataCard};
use futures_util::{Stream, StreamExt};
use reqwest::{Method, RequestBuilder, Response};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use hotkey::{parse_hotkey, Hotkey};

pub const ACTOR_HEADER: &str = "x-fmds-actor";

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("{code}: {message} (HTTP {status})")]
    Api { status: u16, code: String, message: String },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("bad response: {0}")]
    Decode(String),
}

impl ClientError {
    /// Wire error code, when the server produced one.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaCreated {
    pub area: FlowArea,
    pub model: Option<Modeled>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramReply {
    pub program: AfpProgram,
    pub card: DataCard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advanced {
    pub now: Timestamp,
    pub events: Vec<StreamEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub now: Timestamp,
    pub latest_seq: u64,
    pub ntml_entries: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct NtmlQuery {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<Timestamp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<Timestamp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
}

impl NtmlQuery {
    pub fn event_types(mut self, types: &[NtmlEventType]) -> Self {
        let names: Vec<String> = types
            .iter()
            .filter_map(|t| serde_json::to_value(t).ok())
            .filter_map(|v| v.as_str().map(str::to_string))
            .collect();
        self.event_type = Some(names.join(","));
        self
    }
}

/// One event received on the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub event: StreamEvent,
    /// The subscriber has muted the thread this message was posted to.
    pub silent: bool,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    actor: String,
    actor_header: String,
    http: reqwest::Client,
}

async fn decode<T: DeserializeOwned>(resp: Response) -> Result<T> {
    let status = resp.status();
    let bytes = resp.bytes().await?;
    if status.is_success() {
        return serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()));
    }
    let body: Value = serde_json::from_slice(&bytes).unwrap_or_default();
    Err(ClientError::Api {
        status: status.as_u16(),
        code: body["code"].as_str().unwrap_or("UNKNOWN").to_string(),
        message: body["message"]
            .as_str()
            .map(str::to_string)
            .unwrap_or_else(|| String::from_utf8_lossy(&bytes).into_owned()),
    })
}

/// Query pairs with absent values dropped.
fn pairs(items: &[(&'static str, Option<String>)]) -> Vec<(&'static str, String)> {
    items.iter().filter_map(|(k, v)| v.clone().map(|v| (*k, v))).collect()
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            actor: "operator".into(),
            actor_header: ACTOR_HEADER.into(),
            http: reqwest::Client::new(),
        }
    }

    /// Same connection pool, different identity.
    pub fn as_actor(&self, actor: impl Into<String>) -> Self {
        Client {
            actor: actor.into(),
            ..self.clone()
        }
    }

    /// For servers configured with a different identity header.
    pub fn with_actor_header(mut self, header: impl Into<String>) -> Self {
        self.actor_header = header.into();
        self
    }

    pub fn actor(&self) -> &str {
        &self.actor
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http
            .request(method, format!("{}{}", self.base, path))
            .header(self.actor_header.as_str(), &self.actor)
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        decode(self.request(Method::GET, path).send().await?).await
    }

    async fn get_query<T: DeserializeOwned>(&self, path: &str, query: &impl Serialize) -> Result<T> {
        decode(self.request(Method::GET, path).query(query).send().await?).await
    }

    async fn post<T: DeserializeOwned>(&self, path: &str, body: &impl Serialize) -> Result<T> {
        decode(self.request(Method::POST, path).json(body).send().await?).await
    }

    pub async fn health(&self) -> Result<Health> {
        self.get("/health").await
    }

    /// Full engine state, for diagnostics and comparisons.
    pub async fn snapshot(&self) -> Result<Value> {
        self.get("/snapshot").await
    }

    pub async fn clock(&self) -> Result<ClockState> {
        self.get("/clock").await
    }

    pub async fn advance_to(&self, to: Timestamp) -> Result<Advanced> {
        self.post("/clock/advance", &json!({ "to": to })).await
    }

    pub async fn advance_by(&self, seconds: i64) -> Result<Advanced> {
        self.post("/clock/advance", &json!({ "by_seconds": seconds })).await
    }

    pub async fn flights(&self) -> Result<Vec<Flight>> {
        self.get("/flights").await
    }

    pub async fn positions(&self, at: Option<Timestamp>) -> Result<Vec<FlightPosition>> {
        self.get_query("/positions", &pairs(&[("at", at.map(|t| t.to_iso()))]))
            .await
    }

    pub async fn overlays(&self) -> Result<Vec<ConstraintOverlay>> {
        self.get("/overlays").await
    }

    pub async fn overlay_summary(&self, window: TimeWindow) -> Result<Vec<ConstraintOverlay>> {
        self.get_query("/overlays/summary", &window).await
    }

    pub async fn create_area(&self, request: &AreaRequest) -> Result<AreaCreated> {
        self.post("/areas", request).await
    }

    pub async fn areas(&self) -> Result<Vec<FlowArea>> {
        self.get("/areas").await
    }

    pub async fn area(&self, area_id: &str) -> Result<FlowArea> {
        self.get(&format!("/areas/{area_id}")).await
    }

    pub async fn area_demand(
        &self,
        area_id: &str,
        bin_width: Option<i64>,
        rate: Option<u32>,
    ) -> Result<DemandHistogram> {
        let query = pairs(&[
            ("bin_width", bin_width.map(|w| w.to_string())),
            ("rate", rate.map(|r| r.to_string())),
        ]);
        self.get_query(&format!("/areas/{area_id}/demand"), &query).await
    }

    pub async fn model_afp(&self, params: &AfpParameters) -> Result<Modeled> {
        self.post("/afps/model", params).await
    }

    pub async fn propose_afp(&self, params: &AfpParameters) -> Result<ProgramReply> {
        let mut body = serde_json::to_value(params).map_err(|e| ClientError::Decode(e.to_string()))?;
        body["propose"] = true.into();
        self.post("/afps", &body).await
    }

    pub async fn implement_afp(
        &self,
        params: &AfpParameters,
        schedule_only: bool,
        proposal_id: Option<&str>,
    ) -> Result<ProgramReply> {
        let mut body = serde_json::to_value(params).map_err(|e| ClientError::Decode(e.to_string()))?;
        body["schedule_only"] = schedule_only.into();
        body["proposal_id"] = json!(proposal_id);
        self.post("/afps", &body).await
    }

    pub async fn afps(&self) -> Result<Vec<AfpProgram>> {
        self.get("/afps").await
    }

    pub async fn afp(&self, afp_id: &str) -> Result<AfpProgram> {
        self.get(&format!("/afps/{afp_id}")).await
    }

    pub async fn revise_afp(
        &self,
        afp_id: &str,
        new_rate: Option<u32>,
        new_window: Option<TimeWindow>,
        reason: &str,
    ) -> Result<ProgramReply> {
        let body = json!({ "new_rate": new_rate, "new_window": new_window, "reason": reason });
        self.post(&format!("/afps/{afp_id}/revise"), &body).await
    }

    pub async fn purge_afp(&self, afp_id: &str) -> Result<ProgramReply> {
        self.post(&format!("/afps/{afp_id}/purge"), &json!({})).await
    }

    pub async fn compliance(&self, afp_id: &str, at: Option<Timestamp>) -> Result<ComplianceRecord> {
        let query = pairs(&[("at", at.map(|t| t.to_iso()))]);
        self.get_query(&format!("/afps/{afp_id}/compliance"), &query).await
    }

    pub async fn cards(&self) -> Result<Vec<DataCard>> {
        self.get("/cards").await
    }

    pub async fn card(&self, card_id: &str) -> Result<DataCard> {
        self.get(&format!("/cards/{card_id}")).await
    }

    pub async fn compare(&self, card_ids: &[String]) -> Result<Vec<ComparisonRow>> {
        self.post("/cards/compare", &json!({ "card_ids": card_ids })).await
    }

    pub async fn ntml(&self, query: &NtmlQuery) -> Result<Vec<NtmlEntry>> {
        self.get_query("/ntml", query).await
    }

    /// Status of every subject, folded from the log by the server.
    pub async fn replay(&self) -> Result<StatusMap> {
        self.get("/ntml/replay").await
    }

    pub async fn add_note(&self, subject_id: &str, text: &str) -> Result<NtmlEntry> {
        self.post("/ntml/notes", &json!({ "subject_id": subject_id, "text": text }))
            .await
    }

    pub async fn create_thread(&self, topic: &str, members: &BTreeSet<String>) -> Result<Thread> {
        self.post("/threads", &json!({ "topic": topic, "members": members }))
            .await
    }

    pub async fn threads(&self) -> Result<Vec<Thread>> {
        self.get("/threads").await
    }

    pub async fn messages(&self, thread_id: &str) -> Result<Vec<Message>> {
        self.get(&format!("/threads/{thread_id}/messages")).await
    }

    pub async fn post_message(&self, thread_id: &str, body: &MessageBody) -> Result<Message> {
        self.post(&format!("/threads/{thread_id}/messages"), body).await
    }

    pub async fn post_text(&self, thread_id: &str, text: &str) -> Result<Message> {
        self.post_message(thread_id, &MessageBody::Text { text: text.into() })
            .await
    }

    pub async fn share_card(&self, thread_id: &str, card_id: &str) -> Result<Message> {
        self.post_message(
            thread_id,
            &MessageBody::Card {
                card_id: card_id.into(),
            },
        )
        .await
    }

    pub async fn set_emphasis(&self, thread_id: &str, emphasized: bool) -> Result<Thread> {
        self.post(
            &format!("/threads/{thread_id}/emphasis"),
            &json!({ "emphasized": emphasized }),
        )
        .await
    }

    /// Mutes or unmutes the thread for this client's actor.
    pub async fn set_mute(&self, thread_id: &str, muted: bool) -> Result<Thread> {
        self.post(&format!("/threads/{thread_id}/mute"), &json!({ "muted": muted }))
            .await
    }

    pub async fn set_voice_presence(&self, thread_id: &str, count: u32) -> Result<Thread> {
        self.post(&format!("/threads/{thread_id}/voice"), &json!({ "count": count }))
            .await
    }

    pub async fn schedule_meeting(
        &self,
        thread_id: &str,
        scheduled_for: Timestamp,
        title: &str,
        created_via: MeetingSource,
    ) -> Result<Meeting> {
        let body = json!({
            "thread_id": thread_id,
            "scheduled_for": scheduled_for,
            "title": title,
            "created_via": created_via,
        });
        self.post("/meetings", &body).await
    }

    /// Handles a chat line typed into a thread: hotkeys run their action,
    /// anything else is posted as text.
    pub async fn submit_chat_line(&self, thread_id: &str, line: &str) -> Result<ChatResult> {
        match parse_hotkey(line) {
            Some(Ok(Hotkey::ScheduleMeeting { at, title })) => self
                .schedule_meeting(thread_id, at, &title, MeetingSource::Hotkey)
                .await
                .map(ChatResult::Meeting),
            Some(Err(reason)) => Err(ClientError::Api {
                status: 400,
                code: "INVALID_REQUEST".into(),
                message: reason,
            }),
            None => self.post_text(thread_id, line).await.map(ChatResult::Message),
        }
    }

    pub async fn meetings(&self) -> Result<Vec<Meeting>> {
        self.get("/meetings").await
    }

    /// Subscribes to the event stream. With `since = Some(k)` delivery
    /// starts at sequence `k + 1`; otherwise at the next new event.
    pub async fn subscribe(&self, since: Option<u64>) -> Result<impl Stream<Item = Result<Received>> + Unpin> {
        let mut req = self
            .request(Method::GET, "/stream")
            .query(&[("actor", self.actor.as_str())]);
        if let Some(since) = since {
            req = req.query(&[("since", since)]);
        }
        let resp = req.send().await?;
        if !resp.status().is_success() {
            return Err(decode::<Value>(resp)
                .await
                .err()
                .unwrap_or(ClientError::Decode("stream refused".into())));
        }
        let events = resp.bytes_stream().eventsource().map(|item| {
            let event = item.map_err(|e| ClientError::Decode(e.to_string()))?;
            let value: Value = serde_json::from_str(&event.data).map_err(|e| ClientError::Decode(e.to_string()))?;
            let silent = value["silent"].as_bool().unwrap_or(false);
            let event: StreamEvent = serde_json::from_value(value).map_err(|e| ClientError::Decode(e.to_string()))?;
            Ok(Received { event, silent })
        });
        Ok(Box::pin(events))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChatResult {
    Message(Message),
    Meeting(Meeting),
}
