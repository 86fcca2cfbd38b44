//! Expected NTML growth per command, derived from status changes alone.

use fmds_core::engine::Command;
use fmds_core::ntml::{StatusMap, SubjectStatus};
use fmds_core::tmi::AfpStatus;

/// Entries a successful `command` must append, given the status maps
/// before and after it. Each lifecycle transition and each note is one
/// entry; modeling and collaboration log nothing; an advance logs one entry
/// per program it activates.
pub fn expected_log_entries(command: &Command, before: &StatusMap, after: &StatusMap) -> usize {
    match command {
        Command::CreateArea { .. }
        | Command::ProposeAfp { .. }
        | Command::ImplementAfp { .. }
        | Command::ReviseAfp { .. }
        | Command::PurgeAfp { .. }
        | Command::AddNote { .. } => 1,
        Command::Advance { .. } => after
            .iter()
            .filter(|(id, s)| {
                **s == SubjectStatus::Afp(AfpStatus::Active)
                    && before.get(*id) == Some(&SubjectStatus::Afp(AfpStatus::Scheduled))
            })
            .count(),
        _ => 0,
    }
}

/// Status changes a successful command may make: only its own subject,
/// along the allowed lifecycle edges.
pub fn transition_allowed(from: Option<&SubjectStatus>, to: &SubjectStatus) -> bool {
    use AfpStatus::*;
    match (from, to) {
        (None, _) => true,
        (Some(SubjectStatus::Area(a)), SubjectStatus::Area(b)) => a == b,
        (Some(SubjectStatus::Afp(a)), SubjectStatus::Afp(b)) => {
            a == b
                || matches!(
                    (a, b),
                    (Proposed, Scheduled)
                        | (Proposed, Active)
                        | (Scheduled, Active)
                        | (Active, Purged)
                        | (Scheduled, Purged)
                        | (Proposed, Purged)
                )
        }
        _ => false,
    }
}
