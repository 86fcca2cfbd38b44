use std::collections::BTreeSet;
use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{FromRequest, FromRequestParts, State};
use axum::http::request::Parts;
use axum::http::{HeaderMap, HeaderName};
use axum::routing::{get, post};
use axum::{Json, Router};
use fmds_core::collab::{MeetingSource, MessageBody};
use fmds_core::engine::{AreaRequest, Command, Outcome};
use fmds_core::error::FmdsError;
use fmds_core::geometry::DEFAULT_BIN_WIDTH;
use fmds_core::ntml::{NtmlEventType, NtmlFilter};
use fmds_core::time::{TimeWindow, Timestamp};
use fmds_core::tmi::AfpParameters;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::{mpsc, oneshot, watch};

use crate::error::ApiError;
use crate::queue::{Job, Request, Shared};
use crate::stream;

pub const DEFAULT_ACTOR_HEADER: &str = "x-fmds-actor";
pub const DEFAULT_ACTOR: &str = "operator";

pub struct AppState {
    pub actor_header: HeaderName,
    pub jobs: mpsc::Sender<Job>,
    pub shared: Shared,
    pub shutdown: watch::Receiver<bool>,
}

type AppResult = Result<Json<Value>, ApiError>;
type St = State<Arc<AppState>>;

#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct ApiJson<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct ApiQuery<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Path), rejection(ApiError))]
pub struct ApiPath<T>(pub T);

/// Caller identity from the configured actor header.
pub struct Actor(pub String);

pub fn actor_from(headers: &HeaderMap, header: &HeaderName) -> Option<String> {
    headers
        .get(header)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

impl FromRequestParts<Arc<AppState>> for Actor {
    type Rejection = Infallible;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, Self::Rejection> {
        let name = actor_from(&parts.headers, &state.actor_header).unwrap_or_else(|| DEFAULT_ACTOR.to_string());
        Ok(Actor(name))
    }
}

impl AppState {
    async fn submit(&self, actor: String, request: Request) -> Result<Outcome, ApiError> {
        let (reply, rx) = oneshot::channel();
        let stopped = || ApiError(FmdsError::StorageFailure("writer is not running".into()));
        self.jobs
            .send(Job { actor, request, reply })
            .await
            .map_err(|_| stopped())?;
        rx.await.map_err(|_| stopped())?.map_err(ApiError)
    }

    async fn apply(&self, actor: Actor, command: Command) -> Result<Outcome, ApiError> {
        self.submit(actor.0, Request::Apply(command)).await
    }
}

fn unexpected(outcome: Outcome) -> ApiError {
    ApiError(FmdsError::StorageFailure(format!("unexpected outcome {outcome:?}")))
}

fn to_json<T: serde::Serialize>(value: T) -> AppResult {
    serde_json::to_value(value)
        .map(Json)
        .map_err(|e| ApiError(FmdsError::StorageFailure(e.to_string())))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/snapshot", get(snapshot))
        .route("/clock", get(clock))
        .route("/clock/advance", post(advance))
        .route("/flights", get(flights))
        .route("/positions", get(positions))
        .route("/overlays", get(overlays))
        .route("/overlays/summary", get(overlay_summary))
        .route("/areas", get(list_areas).post(create_area))
        .route("/areas/{id}", get(get_area))
        .route("/areas/{id}/demand", get(area_demand))
        .route("/afps", get(list_afps).post(create_afp))
        .route("/afps/model", post(model_afp))
        .route("/afps/{id}", get(get_afp))
        .route("/afps/{id}/revise", post(revise_afp))
        .route("/afps/{id}/purge", post(purge_afp))
        .route("/afps/{id}/compliance", get(compliance))
        .route("/cards", get(list_cards))
        .route("/cards/compare", post(compare_cards))
        .route("/cards/{id}", get(get_card))
        .route("/ntml", get(query_ntml))
        .route("/ntml/replay", get(replay_ntml))
        .route("/ntml/notes", post(add_note))
        .route("/threads", get(list_threads).post(create_thread))
        .route("/threads/{id}", get(get_thread))
        .route("/threads/{id}/messages", get(list_messages).post(post_message))
        .route("/threads/{id}/emphasis", post(set_emphasis))
        .route("/threads/{id}/mute", post(set_mute))
        .route("/threads/{id}/voice", post(set_voice))
        .route("/meetings", get(list_meetings).post(schedule_meeting))
        .route("/stream", get(stream::subscribe))
        .with_state(state)
}

async fn health(State(s): St) -> AppResult {
    let engine = s.shared.engine();
    Ok(Json(json!({
        "status": "ok",
        "now": engine.now(),
        "latest_seq": *s.shared.latest.borrow(),
        "ntml_entries": engine.ntml().len(),
    })))
}

async fn snapshot(State(s): St) -> AppResult {
    Ok(Json(s.shared.engine().state_json()))
}

async fn clock(State(s): St) -> AppResult {
    to_json(s.shared.engine().clock())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdvanceBody {
    #[serde(default)]
    to: Option<Timestamp>,
    #[serde(default)]
    by_seconds: Option<i64>,
}

async fn advance(State(s): St, actor: Actor, ApiJson(body): ApiJson<AdvanceBody>) -> AppResult {
    let request = match (body.to, body.by_seconds) {
        (Some(to), None) => Request::Apply(Command::Advance { to }),
        (None, Some(by)) => Request::AdvanceBy(by),
        _ => {
            return Err(ApiError(FmdsError::InvalidRequest(
                "give exactly one of `to` or `by_seconds`".into(),
            )))
        }
    };
    match s.submit(actor.0, request).await? {
        Outcome::Advanced { now, events } => Ok(Json(json!({ "now": now, "events": events }))),
        other => Err(unexpected(other)),
    }
}

async fn flights(State(s): St) -> AppResult {
    to_json(s.shared.engine().flight_list())
}

#[derive(Deserialize)]
struct AtQuery {
    #[serde(default)]
    at: Option<Timestamp>,
}

async fn positions(State(s): St, ApiQuery(q): ApiQuery<AtQuery>) -> AppResult {
    to_json(s.shared.engine().positions(q.at))
}

async fn overlays(State(s): St) -> AppResult {
    to_json(s.shared.engine().overlays())
}

async fn overlay_summary(State(s): St, ApiQuery(window): ApiQuery<TimeWindow>) -> AppResult {
    to_json(s.shared.engine().constraint_summary(window)?)
}

async fn list_areas(State(s): St) -> AppResult {
    to_json(s.shared.engine().areas().collect::<Vec<_>>())
}

async fn create_area(State(s): St, actor: Actor, ApiJson(request): ApiJson<AreaRequest>) -> AppResult {
    match s.apply(actor, Command::CreateArea { request }).await? {
        Outcome::AreaCreated { area, model } => Ok(Json(json!({ "area": area, "model": model }))),
        other => Err(unexpected(other)),
    }
}

async fn get_area(State(s): St, ApiPath(id): ApiPath<String>) -> AppResult {
    to_json(s.shared.engine().area(&id)?)
}

#[derive(Deserialize)]
struct DemandQuery {
    #[serde(default)]
    bin_width: Option<i64>,
    #[serde(default)]
    rate: Option<u32>,
}

async fn area_demand(State(s): St, ApiPath(id): ApiPath<String>, ApiQuery(q): ApiQuery<DemandQuery>) -> AppResult {
    let width = q.bin_width.unwrap_or(DEFAULT_BIN_WIDTH);
    to_json(s.shared.engine().area_demand(&id, width, q.rate)?)
}

async fn list_afps(State(s): St) -> AppResult {
    to_json(s.shared.engine().afps().collect::<Vec<_>>())
}

async fn get_afp(State(s): St, ApiPath(id): ApiPath<String>) -> AppResult {
    to_json(s.shared.engine().afp(&id)?)
}

async fn model_afp(State(s): St, actor: Actor, ApiJson(params): ApiJson<AfpParameters>) -> AppResult {
    match s.apply(actor, Command::ModelAfp { params }).await? {
        Outcome::Modeled(modeled) => to_json(modeled),
        other => Err(unexpected(other)),
    }
}

#[derive(Deserialize)]
struct AfpBody {
    #[serde(flatten)]
    params: AfpParameters,
    /// Record as a proposal instead of implementing.
    #[serde(default)]
    propose: bool,
    #[serde(default)]
    schedule_only: bool,
    #[serde(default)]
    proposal_id: Option<String>,
}

async fn create_afp(State(s): St, actor: Actor, ApiJson(body): ApiJson<AfpBody>) -> AppResult {
    let command = if body.propose {
        Command::ProposeAfp { params: body.params }
    } else {
        Command::ImplementAfp {
            params: body.params,
            schedule_only: body.schedule_only,
            proposal_id: body.proposal_id,
        }
    };
    match s.apply(actor, command).await? {
        Outcome::Afp { program, card } => Ok(Json(json!({ "program": program, "card": card }))),
        other => Err(unexpected(other)),
    }
}

#[derive(Deserialize)]
struct ReviseBody {
    #[serde(default)]
    new_rate: Option<u32>,
    #[serde(default)]
    new_window: Option<TimeWindow>,
    #[serde(default)]
    reason: String,
}

async fn revise_afp(
    State(s): St,
    actor: Actor,
    ApiPath(afp_id): ApiPath<String>,
    ApiJson(body): ApiJson<ReviseBody>,
) -> AppResult {
    let command = Command::ReviseAfp {
        afp_id,
        new_rate: body.new_rate,
        new_window: body.new_window,
        reason: body.reason,
    };
    match s.apply(actor, command).await? {
        Outcome::Afp { program, card } => Ok(Json(json!({ "program": program, "card": card }))),
        other => Err(unexpected(other)),
    }
}

async fn purge_afp(State(s): St, actor: Actor, ApiPath(afp_id): ApiPath<String>) -> AppResult {
    match s.apply(actor, Command::PurgeAfp { afp_id }).await? {
        Outcome::Afp { program, card } => Ok(Json(json!({ "program": program, "card": card }))),
        other => Err(unexpected(other)),
    }
}

async fn compliance(State(s): St, ApiPath(id): ApiPath<String>, ApiQuery(q): ApiQuery<AtQuery>) -> AppResult {
    to_json(s.shared.engine().compliance(&id, q.at)?)
}

async fn list_cards(State(s): St) -> AppResult {
    to_json(s.shared.engine().cards().collect::<Vec<_>>())
}

async fn get_card(State(s): St, ApiPath(id): ApiPath<String>) -> AppResult {
    to_json(s.shared.engine().card(&id)?)
}

#[derive(Deserialize)]
struct CompareBody {
    card_ids: Vec<String>,
}

async fn compare_cards(State(s): St, ApiJson(body): ApiJson<CompareBody>) -> AppResult {
    to_json(s.shared.engine().compare(&body.card_ids)?)
}

#[derive(Deserialize)]
struct NtmlQuery {
    #[serde(default)]
    start: Option<Timestamp>,
    #[serde(default)]
    end: Option<Timestamp>,
    /// Comma-separated event types.
    #[serde(default)]
    event_type: Option<String>,
    #[serde(default)]
    subject_id: Option<String>,
}

fn parse_event_types(list: &str) -> Result<BTreeSet<NtmlEventType>, ApiError> {
    list.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            serde_json::from_value(Value::String(t.to_ascii_uppercase()))
                .map_err(|_| ApiError(FmdsError::InvalidRequest(format!("unknown event type `{t}`"))))
        })
        .collect()
}

async fn query_ntml(State(s): St, ApiQuery(q): ApiQuery<NtmlQuery>) -> AppResult {
    let range = match (q.start, q.end) {
        (None, None) => None,
        (start, end) => Some(TimeWindow {
            start: start.unwrap_or(Timestamp(i64::MIN)),
            end: end.unwrap_or(Timestamp(i64::MAX)),
        }),
    };
    let filter = NtmlFilter {
        range,
        event_types: q.event_type.as_deref().map(parse_event_types).transpose()?,
        subject_id: q.subject_id,
    };
    to_json(s.shared.engine().query_ntml(&filter))
}

async fn replay_ntml(State(s): St) -> AppResult {
    to_json(fmds_core::ntml::replay(s.shared.engine().ntml().entries())?)
}

#[derive(Deserialize)]
struct NoteBody {
    subject_id: String,
    text: String,
}

async fn add_note(State(s): St, actor: Actor, ApiJson(body): ApiJson<NoteBody>) -> AppResult {
    let command = Command::AddNote {
        subject_id: body.subject_id,
        text: body.text,
    };
    match s.apply(actor, command).await? {
        Outcome::Note { entry } => to_json(entry),
        other => Err(unexpected(other)),
    }
}

#[derive(Deserialize)]
struct ThreadBody {
    topic: String,
    members: BTreeSet<String>,
}

async fn create_thread(State(s): St, actor: Actor, ApiJson(body): ApiJson<ThreadBody>) -> AppResult {
    let command = Command::CreateThread {
        topic: body.topic,
        members: body.members,
    };
    match s.apply(actor, command).await? {
        Outcome::Thread { thread } => to_json(thread),
        other => Err(unexpected(other)),
    }
}

async fn list_threads(State(s): St) -> AppResult {
    to_json(s.shared.engine().collaboration().threads().collect::<Vec<_>>())
}

async fn get_thread(State(s): St, ApiPath(id): ApiPath<String>) -> AppResult {
    to_json(s.shared.engine().collaboration().thread(&id)?)
}

async fn list_messages(State(s): St, ApiPath(id): ApiPath<String>) -> AppResult {
    let engine = s.shared.engine();
    engine.collaboration().thread(&id)?;
    to_json(engine.collaboration().messages(&id))
}

async fn post_message(
    State(s): St,
    actor: Actor,
    ApiPath(thread_id): ApiPath<String>,
    ApiJson(body): ApiJson<MessageBody>,
) -> AppResult {
    match s.apply(actor, Command::PostMessage { thread_id, body }).await? {
        Outcome::Message { message } => to_json(message),
        other => Err(unexpected(other)),
    }
}

fn thread_reply(s: &AppState, thread_id: &str) -> AppResult {
    to_json(s.shared.engine().collaboration().thread(thread_id)?)
}

#[derive(Deserialize)]
struct EmphasisBody {
    emphasized: bool,
}

async fn set_emphasis(
    State(s): St,
    actor: Actor,
    ApiPath(thread_id): ApiPath<String>,
    ApiJson(body): ApiJson<EmphasisBody>,
) -> AppResult {
    let command = Command::SetEmphasis {
        thread_id: thread_id.clone(),
        emphasized: body.emphasized,
    };
    s.apply(actor, command).await?;
    thread_reply(&s, &thread_id)
}

#[derive(Deserialize)]
struct MuteBody {
    /// Defaults to the caller.
    #[serde(default)]
    member: Option<String>,
    muted: bool,
}

async fn set_mute(
    State(s): St,
    actor: Actor,
    ApiPath(thread_id): ApiPath<String>,
    ApiJson(body): ApiJson<MuteBody>,
) -> AppResult {
    let command = Command::SetMute {
        thread_id: thread_id.clone(),
        member: body.member.unwrap_or_else(|| actor.0.clone()),
        muted: body.muted,
    };
    s.apply(actor, command).await?;
    thread_reply(&s, &thread_id)
}

#[derive(Deserialize)]
struct VoiceBody {
    count: u32,
}

async fn set_voice(
    State(s): St,
    actor: Actor,
    ApiPath(thread_id): ApiPath<String>,
    ApiJson(body): ApiJson<VoiceBody>,
) -> AppResult {
    let command = Command::SetVoicePresence {
        thread_id: thread_id.clone(),
        count: body.count,
    };
    s.apply(actor, command).await?;
    thread_reply(&s, &thread_id)
}

#[derive(Deserialize)]
struct MeetingBody {
    thread_id: String,
    scheduled_for: Timestamp,
    title: String,
    #[serde(default = "button")]
    created_via: MeetingSource,
}

fn button() -> MeetingSource {
    MeetingSource::Button
}

async fn schedule_meeting(State(s): St, actor: Actor, ApiJson(body): ApiJson<MeetingBody>) -> AppResult {
    let command = Command::ScheduleMeeting {
        thread_id: body.thread_id,
        scheduled_for: body.scheduled_for,
        title: body.title,
        created_via: body.created_via,
    };
    match s.apply(actor, command).await? {
        Outcome::Meeting { meeting } => to_json(meeting),
        other => Err(unexpected(other)),
    }
}

async fn list_meetings(State(s): St) -> AppResult {
    to_json(s.shared.engine().collaboration().calendar())
}
