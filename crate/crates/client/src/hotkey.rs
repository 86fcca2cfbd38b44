//! Chat hotkeys. Currently only `/schedule-meeting <ISO time> <title>`.

use fmds_core::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Hotkey {
    ScheduleMeeting { at: Timestamp, title: String },
}

const SCHEDULE_MEETING: &str = "/schedule-meeting";

/// `None` when the line is ordinary chat; `Some(Err(_))` when it names a
/// hotkey but the arguments don't parse.
pub fn parse_hotkey(line: &str) -> Option<Result<Hotkey, String>> {
    let line = line.trim();
    let rest = line.strip_prefix(SCHEDULE_MEETING)?;
    if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
        return None;
    }
    let rest = rest.trim_start();
    let (time, title) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    if time.is_empty() {
        return Some(Err(format!("usage: {SCHEDULE_MEETING} <ISO time> <title>")));
    }
    let title = title.trim();
    if title.is_empty() {
        return Some(Err("meeting title is empty".to_string()));
    }
    Some(Timestamp::parse_iso(time).map(|at| Hotkey::ScheduleMeeting {
        at,
        title: title.to_string(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_time_and_title() {
        let parsed = parse_hotkey("/schedule-meeting 2024-06-01T15:30Z  GDP review at ZOB ").unwrap();
        assert_eq!(
            parsed,
            Ok(Hotkey::ScheduleMeeting {
                at: Timestamp(1_717_255_800),
                title: "GDP review at ZOB".into()
            })
        );
    }

    #[test]
    fn ordinary_text_is_not_a_hotkey() {
        assert!(parse_hotkey("see you at the meeting").is_none());
        assert!(parse_hotkey("/schedule-meetings later").is_none());
    }

    #[test]
    fn bad_arguments() {
        assert!(parse_hotkey("/schedule-meeting").unwrap().is_err());
        assert!(parse_hotkey("/schedule-meeting tomorrow standup").unwrap().is_err());
        assert!(parse_hotkey("/schedule-meeting 2024-06-01T15:30Z").unwrap().is_err());
    }
}
