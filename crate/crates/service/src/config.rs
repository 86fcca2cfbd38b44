use std::net::SocketAddr;
use std::path::PathBuf;

use fmds_core::scenario::{generate_flights, generate_overlays, ScenarioConfig};
use fmds_core::schedule::{load_overlays, load_schedule};
use fmds_core::time::Timestamp;

use crate::error::StartupError;
use crate::store::Scenario;

/// Where the initial flights and overlays come from on first start. Once a
/// data directory holds a scenario, the stored one is used instead.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Files {
        schedule: PathBuf,
        overlays: Option<PathBuf>,
    },
    Generated {
        seed: u64,
        flights: usize,
        overlays: usize,
    },
    Inline(Scenario),
}

#[derive(Debug, Clone)]
pub struct Config {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    pub source: ScenarioSource,
    /// Clock start; defaults to the earliest departure floored to the hour.
    pub start: Option<Timestamp>,
    /// When set, the clock advances by `step_seconds` every
    /// `step_seconds / speedup` wall seconds.
    pub speedup: Option<f64>,
    pub step_seconds: u32,
    /// Request header naming the caller.
    pub actor_header: String,
}

impl Config {
    pub fn new(data_dir: impl Into<PathBuf>, source: ScenarioSource) -> Self {
        Config {
            bind: SocketAddr::from(([127, 0, 0, 1], 0)),
            data_dir: data_dir.into(),
            source,
            start: None,
            speedup: None,
            step_seconds: 60,
            actor_header: crate::api::DEFAULT_ACTOR_HEADER.to_string(),
        }
    }

    pub(crate) fn load_scenario(&self) -> Result<Scenario, StartupError> {
        let (flights, overlays, start) = match &self.source {
            ScenarioSource::Inline(s) => (s.flights.clone(), s.overlays.clone(), Some(s.start)),
            ScenarioSource::Files { schedule, overlays } => {
                let flights = load_schedule(schedule)?;
                let overlays = match overlays {
                    Some(path) => load_overlays(path)?,
                    None => Vec::new(),
                };
                (flights, overlays, None)
            }
            ScenarioSource::Generated {
                seed,
                flights,
                overlays,
            } => {
                let cfg = ScenarioConfig {
                    seed: *seed,
                    flights: *flights,
                    ..ScenarioConfig::default()
                };
                (generate_flights(&cfg), generate_overlays(&cfg, *overlays), None)
            }
        };
        let start = self
            .start
            .or(start)
            .or_else(|| {
                flights
                    .iter()
                    .map(|f| f.scheduled_departure)
                    .min()
                    .map(|t| t.floor_to(3600))
            })
            .unwrap_or_default();
        Ok(Scenario {
            start,
            flights,
            overlays,
        })
    }
}
