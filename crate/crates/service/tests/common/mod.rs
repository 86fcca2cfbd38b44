#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use fmds_client::{Client, ClientError};
use fmds_core::engine::{AreaRequest, Command};
use fmds_core::geometry::Designation;
use fmds_core::scenario::{generate_flights, generate_overlays, ScenarioConfig};
use fmds_core::time::{TimeWindow, Timestamp};
use fmds_oracles::gen::{box_polygon, definition, START};
use fmds_service::{start, Config, Scenario, ScenarioSource, Server};
use tokio::runtime::Runtime;

pub const ACTOR: &str = "operator";

pub fn scenario(seed: u64, flights: usize) -> Scenario {
    let cfg = ScenarioConfig {
        seed,
        flights,
        start: START,
        spread_seconds: 3 * 3600,
        ..Default::default()
    };
    Scenario {
        start: START,
        flights: generate_flights(&cfg),
        overlays: generate_overlays(&cfg, 4),
    }
}

pub fn config(dir: &Path, scenario: Scenario) -> Config {
    Config::new(dir, ScenarioSource::Inline(scenario))
}

pub fn fca_request(rate: Option<u32>) -> AreaRequest {
    AreaRequest {
        definition: definition(
            Designation::Fca,
            box_polygon(1.0),
            TimeWindow {
                start: START,
                end: START + 6 * 3600,
            },
        ),
        rate,
        exempt_categories: BTreeSet::new(),
        program_window: None,
    }
}

pub fn window(start: Timestamp, hours: i64) -> TimeWindow {
    TimeWindow {
        start,
        end: start + hours * 3600,
    }
}

/// A server on a runtime of its own, so a test can kill it without a
/// graceful shutdown by dropping the runtime.
pub struct Hosted {
    rt: Option<Runtime>,
    server: Option<Server>,
    pub client: Client,
}

impl Hosted {
    pub fn start(config: Config) -> Result<Hosted, fmds_service::StartupError> {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("runtime");
        let server = rt.block_on(start(config))?;
        let client = Client::new(server.url());
        Ok(Hosted {
            rt: Some(rt),
            server: Some(server),
            client,
        })
    }

    pub fn replayed(&self) -> usize {
        self.server.as_ref().map_or(0, |s| s.replayed)
    }

    /// Abandons every task mid-flight.
    pub fn crash(mut self) {
        self.server.take();
        if let Some(rt) = self.rt.take() {
            rt.shutdown_background();
        }
    }

    pub fn stop(mut self) {
        if let (Some(rt), Some(server)) = (self.rt.take(), self.server.take()) {
            rt.block_on(server.shutdown()).expect("clean shutdown");
        }
    }
}

impl Drop for Hosted {
    fn drop(&mut self) {
        if let Some(rt) = self.rt.take() {
            rt.shutdown_background();
        }
    }
}

pub fn client_runtime() -> Runtime {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .expect("runtime")
}

/// Sends an engine command through the matching HTTP endpoint.
pub async fn apply(c: &Client, command: &Command) -> Result<(), ClientError> {
    match command.clone() {
        Command::CreateArea { request } => c.create_area(&request).await.map(drop),
        Command::ModelAfp { params } => c.model_afp(&params).await.map(drop),
        Command::ProposeAfp { params } => c.propose_afp(&params).await.map(drop),
        Command::ImplementAfp {
            params,
            schedule_only,
            proposal_id,
        } => c
            .implement_afp(&params, schedule_only, proposal_id.as_deref())
            .await
            .map(drop),
        Command::ReviseAfp {
            afp_id,
            new_rate,
            new_window,
            reason,
        } => c.revise_afp(&afp_id, new_rate, new_window, &reason).await.map(drop),
        Command::PurgeAfp { afp_id } => c.purge_afp(&afp_id).await.map(drop),
        Command::AddNote { subject_id, text } => c.add_note(&subject_id, &text).await.map(drop),
        Command::CreateThread { topic, members } => c.create_thread(&topic, &members).await.map(drop),
        Command::PostMessage { thread_id, body } => c.post_message(&thread_id, &body).await.map(drop),
        Command::SetEmphasis { thread_id, emphasized } => c.set_emphasis(&thread_id, emphasized).await.map(drop),
        Command::SetMute {
            thread_id,
            member,
            muted,
        } => c.as_actor(member).set_mute(&thread_id, muted).await.map(drop),
        Command::SetVoicePresence { thread_id, count } => c.set_voice_presence(&thread_id, count).await.map(drop),
        Command::ScheduleMeeting {
            thread_id,
            scheduled_for,
            title,
            created_via,
        } => c
            .schedule_meeting(&thread_id, scheduled_for, &title, created_via)
            .await
            .map(drop),
        Command::Advance { to } => c.advance_to(to).await.map(drop),
    }
}

impl Hosted {
    pub fn client_url(&self) -> String {
        self.server.as_ref().map(|s| s.url()).unwrap_or_default()
    }
}
