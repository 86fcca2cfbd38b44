use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fmds_client::{ChatResult, Client, ClientError, NtmlQuery};
use fmds_core::collab::MeetingSource;
use fmds_core::engine::AreaRequest;
use fmds_core::ntml::NtmlEventType;
use fmds_core::scenario::{generate_flights, generate_overlays, ScenarioConfig};
use fmds_core::schedule::{save_overlays, save_schedule, ExemptCategory};
use fmds_core::time::{TimeWindow, Timestamp};
use fmds_core::tmi::AfpParameters;
use futures_util::StreamExt;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "fmds",
    version,
    about = "Client for the flow management decision support service"
)]
struct Cli {
    /// Service base URL.
    #[arg(long, env = "FMDS_URL", default_value = "http://127.0.0.1:8080", global = true)]
    url: String,
    /// Identity sent with every request.
    #[arg(long, env = "FMDS_ACTOR", default_value = "operator", global = true)]
    actor: String,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Debug)]
struct ProgramArgs {
    #[arg(long)]
    area: String,
    /// Flights per hour.
    #[arg(long)]
    rate: u32,
    #[arg(long, value_parser = parse_time)]
    start: Timestamp,
    #[arg(long, value_parser = parse_time)]
    end: Timestamp,
    /// Exempt categories (AIRBORNE, INTERNATIONAL, LIFEGUARD).
    #[arg(long = "exempt", value_parser = parse_exempt)]
    exempt: Vec<ExemptCategory>,
}

impl ProgramArgs {
    fn params(&self) -> AfpParameters {
        AfpParameters {
            area_id: self.area.clone(),
            rate: self.rate,
            window: TimeWindow {
                start: self.start,
                end: self.end,
            },
            exempt_categories: self.exempt.iter().copied().collect(),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write a seeded synthetic schedule and overlay file (offline).
    Generate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        flights: usize,
        #[arg(long, default_value_t = 12)]
        overlays: usize,
        #[arg(long, default_value = "schedule.jsonl")]
        schedule_out: PathBuf,
        #[arg(long, default_value = "overlays.jsonl")]
        overlays_out: PathBuf,
    },
    Health,
    Clock,
    /// Advance simulated time.
    Advance {
        #[arg(long, value_parser = parse_time, conflicts_with = "by")]
        to: Option<Timestamp>,
        /// Seconds to advance.
        #[arg(long)]
        by: Option<i64>,
    },
    Flights,
    Positions {
        #[arg(long, value_parser = parse_time)]
        at: Option<Timestamp>,
    },
    Overlays,
    /// Areas: list, or create from a JSON request file (`-` for stdin).
    Areas {
        #[arg(long)]
        create: Option<PathBuf>,
    },
    Demand {
        area: String,
        #[arg(long)]
        bin_width: Option<i64>,
        #[arg(long)]
        rate: Option<u32>,
    },
    Model(ProgramArgs),
    Propose(ProgramArgs),
    Implement {
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long)]
        schedule_only: bool,
        #[arg(long)]
        proposal: Option<String>,
    },
    Afps,
    Revise {
        afp: String,
        #[arg(long)]
        rate: Option<u32>,
        #[arg(long, value_parser = parse_time, requires = "end")]
        start: Option<Timestamp>,
        #[arg(long, value_parser = parse_time, requires = "start")]
        end: Option<Timestamp>,
        #[arg(long, default_value = "")]
        reason: String,
    },
    Purge {
        afp: String,
    },
    Compliance {
        afp: String,
        #[arg(long, value_parser = parse_time)]
        at: Option<Timestamp>,
    },
    Cards,
    Compare {
        #[arg(required = true)]
        cards: Vec<String>,
    },
    /// Query the NTML log.
    Ntml {
        #[arg(long, value_parser = parse_time)]
        start: Option<Timestamp>,
        #[arg(long, value_parser = parse_time)]
        end: Option<Timestamp>,
        #[arg(long = "type", value_parser = parse_event_type)]
        types: Vec<NtmlEventType>,
        #[arg(long)]
        subject: Option<String>,
    },
    Note {
        subject: String,
        text: String,
    },
    Threads,
    Thread {
        #[arg(long)]
        topic: String,
        #[arg(long = "member", required = true)]
        members: Vec<String>,
    },
    Messages {
        thread: String,
    },
    /// Post a chat line; `/schedule-meeting <ISO time> <title>` schedules instead.
    Say {
        thread: String,
        #[arg(required = true, trailing_var_arg = true)]
        words: Vec<String>,
    },
    Share {
        thread: String,
        card: String,
    },
    Mute {
        thread: String,
        #[arg(long)]
        off: bool,
    },
    Emphasis {
        thread: String,
        #[arg(long)]
        off: bool,
    },
    Voice {
        thread: String,
        count: u32,
    },
    Meet {
        thread: String,
        #[arg(value_parser = parse_time)]
        at: Timestamp,
        title: String,
    },
    Meetings,
    /// Print events as they arrive.
    Watch {
        #[arg(long)]
        since: Option<u64>,
    },
}

fn parse_time(text: &str) -> Result<Timestamp, String> {
    Timestamp::parse_iso(text)
}

fn parse_exempt(text: &str) -> Result<ExemptCategory, String> {
    serde_json::from_value(serde_json::Value::String(text.to_ascii_uppercase()))
        .map_err(|_| format!("unknown exemption `{text}`"))
}

fn parse_event_type(text: &str) -> Result<NtmlEventType, String> {
    serde_json::from_value(serde_json::Value::String(text.to_ascii_uppercase()))
        .map_err(|_| format!("unknown event type `{text}`"))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("{0}")]
    Local(String),
}

fn print<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Local(e.to_string()))?;
    println!("{text}");
    Ok(())
}

async fn run(cli: Cli) -> Result<(), CliError> {
    let client = Client::new(cli.url).as_actor(cli.actor);
    match cli.command {
        Cmd::Generate {
            seed,
            flights,
            overlays,
            schedule_out,
            overlays_out,
        } => {
            let cfg = ScenarioConfig {
                seed,
                flights,
                ..ScenarioConfig::default()
            };
            let local = |e: fmds_core::error::FmdsError| CliError::Local(e.to_string());
            save_schedule(&schedule_out, &generate_flights(&cfg)).map_err(local)?;
            save_overlays(&overlays_out, &generate_overlays(&cfg, overlays)).map_err(local)?;
            println!("wrote {} and {}", schedule_out.display(), overlays_out.display());
            Ok(())
        }
        Cmd::Health => print(&client.health().await?),
        Cmd::Clock => print(&client.clock().await?),
        Cmd::Advance { to, by } => {
            let reply = match (to, by) {
                (Some(to), _) => client.advance_to(to).await?,
                (None, Some(by)) => client.advance_by(by).await?,
                (None, None) => return Err(CliError::Local("give --to or --by".into())),
            };
            print(&reply.now)?;
            println!("{} events", reply.events.len());
            Ok(())
        }
        Cmd::Flights => print(&client.flights().await?),
        Cmd::Positions { at } => print(&client.positions(at).await?),
        Cmd::Overlays => print(&client.overlays().await?),
        Cmd::Areas { create: None } => print(&client.areas().await?),
        Cmd::Areas { create: Some(path) } => {
            let text = if path.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin())
            } else {
                std::fs::read_to_string(&path)
            }
            .map_err(|e| CliError::Local(format!("{}: {e}", path.display())))?;
            let request: AreaRequest =
                serde_json::from_str(&text).map_err(|e| CliError::Local(format!("area request: {e}")))?;
            print(&client.create_area(&request).await?)
        }
        Cmd::Demand { area, bin_width, rate } => print(&client.area_demand(&area, bin_width, rate).await?),
        Cmd::Model(program) => print(&client.model_afp(&program.params()).await?),
        Cmd::Propose(program) => print(&client.propose_afp(&program.params()).await?),
        Cmd::Implement {
            program,
            schedule_only,
            proposal,
        } => print(
            &client
                .implement_afp(&program.params(), schedule_only, proposal.as_deref())
                .await?,
        ),
        Cmd::Afps => print(&client.afps().await?),
        Cmd::Revise {
            afp,
            rate,
            start,
            end,
            reason,
        } => {
            let window = start.zip(end).map(|(start, end)| TimeWindow { start, end });
            print(&client.revise_afp(&afp, rate, window, &reason).await?)
        }
        Cmd::Purge { afp } => print(&client.purge_afp(&afp).await?),
        Cmd::Compliance { afp, at } => print(&client.compliance(&afp, at).await?),
        Cmd::Cards => print(&client.cards().await?),
        Cmd::Compare { cards } => print(&client.compare(&cards).await?),
        Cmd::Ntml {
            start,
            end,
            types,
            subject,
        } => {
            let mut query = NtmlQuery {
                start,
                end,
                subject_id: subject,
                ..NtmlQuery::default()
            };
            if !types.is_empty() {
                query = query.event_types(&types);
            }
            print(&client.ntml(&query).await?)
        }
        Cmd::Note { subject, text } => print(&client.add_note(&subject, &text).await?),
        Cmd::Threads => print(&client.threads().await?),
        Cmd::Thread { topic, members } => {
            let members: BTreeSet<String> = members.into_iter().collect();
            print(&client.create_thread(&topic, &members).await?)
        }
        Cmd::Messages { thread } => print(&client.messages(&thread).await?),
        Cmd::Say { thread, words } => match client.submit_chat_line(&thread, &words.join(" ")).await? {
            ChatResult::Message(m) => print(&m),
            ChatResult::Meeting(m) => print(&m),
        },
        Cmd::Share { thread, card } => print(&client.share_card(&thread, &card).await?),
        Cmd::Mute { thread, off } => print(&client.set_mute(&thread, !off).await?),
        Cmd::Emphasis { thread, off } => print(&client.set_emphasis(&thread, !off).await?),
        Cmd::Voice { thread, count } => print(&client.set_voice_presence(&thread, count).await?),
        Cmd::Meet { thread, at, title } => print(
            &client
                .schedule_meeting(&thread, at, &title, MeetingSource::Button)
                .await?,
        ),
        Cmd::Meetings => print(&client.meetings().await?),
        Cmd::Watch { since } => {
            let mut events = client.subscribe(since).await?;
            while let Some(item) = events.next().await {
                let received = item?;
                let mut line = serde_json::to_value(&received.event).map_err(|e| CliError::Local(e.to_string()))?;
                line["silent"] = received.silent.into();
                println!("{line}");
            }
            Ok(())
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Client(ClientError::Api { code, message, .. })) => {
            eprintln!("error[{code}]: {message}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
