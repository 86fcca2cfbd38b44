use thiserror::Error;

/// Every failure the engine reports. [`FmdsError::code`] gives the stable
/// wire code used by the HTTP layer and the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FmdsError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("schedule contains no flights")]
    EmptySchedule,
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("floor {floor_ft} ft must be below ceiling {ceiling_ft} ft")]
    InvalidAltitudeBand { floor_ft: f64, ceiling_ft: f64 },
    #[error("span length is not a multiple of the bin width")]
    MisalignedSpan,
    #[error("bin width must be positive, got {0}")]
    InvalidBinWidth(i64),
    #[error("area `{0}` is not an FCA")]
    NotAnFca(String),
    #[error("rate must be between 1 and 3600 flights/hour, got {0}")]
    InvalidRate(i64),
    #[error("AFP `{existing}` already controls this FCA over an overlapping window")]
    OverlappingAfp { existing: String },
    #[error("unknown AFP `{0}`")]
    UnknownAfp(String),
    #[error("unknown area `{0}`")]
    UnknownArea(String),
    #[error("AFP `{0}` is purged")]
    AfpTerminal(String),
    #[error("AFP `{id}` is {status}; operation needs {needed}")]
    InvalidAfpState { id: String, status: String, needed: String },
    #[error("AFP `{0}` has not been activated")]
    NotYetActive(String),
    #[error("revision supplies no change")]
    NoChange,
    #[error("timestamp {attempted} precedes the last recorded time {last}")]
    TimeRegression { last: String, attempted: String },
    #[error("storage failure: {0}")]
    StorageFailure(String),
    #[error("sequence gap: expected {expected}, found {found}")]
    GapDetected { expected: u64, found: u64 },
    #[error("thread topic is empty")]
    EmptyTopic,
    #[error("thread has no members")]
    NoMembers,
    #[error("`{actor}` is not a member of thread `{thread_id}`")]
    NotAMember { actor: String, thread_id: String },
    #[error("unknown thread `{0}`")]
    UnknownThread(String),
    #[error("unknown card `{0}`")]
    UnknownCard(String),
    #[error("meeting time {0} is not in the future")]
    PastTime(String),
    #[error("no cards to compare")]
    EmptyInput,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("io error: {0}")]
    Io(String),
}

impl FmdsError {
    pub fn code(&self) -> &'static str {
        use FmdsError::*;
        match self {
            MalformedRecord { .. } => "MALFORMED_RECORD",
            DuplicateId(_) => "DUPLICATE_ID",
            EmptySchedule => "EMPTY_SCHEDULE",
            InvalidPolygon(_) => "INVALID_POLYGON",
            InvalidWindow(_) => "INVALID_WINDOW",
            InvalidShape(_) => "INVALID_SHAPE",
            InvalidAltitudeBand { .. } => "INVALID_ALTITUDE_BAND",
            MisalignedSpan => "MISALIGNED_SPAN",
            InvalidBinWidth(_) => "INVALID_BIN_WIDTH",
            NotAnFca(_) => "NOT_AN_FCA",
            InvalidRate(_) => "INVALID_RATE",
            OverlappingAfp { .. } => "OVERLAPPING_AFP",
            UnknownAfp(_) => "UNKNOWN_AFP",
            UnknownArea(_) => "UNKNOWN_AREA",
            AfpTerminal(_) => "AFP_TERMINAL",
            InvalidAfpState { .. } => "INVALID_AFP_STATE",
            NotYetActive(_) => "NOT_YET_ACTIVE",
            NoChange => "NO_CHANGE",
            TimeRegression { .. } => "TIME_REGRESSION",
            StorageFailure(_) => "STORAGE_FAILURE",
            GapDetected { .. } => "GAP_DETECTED",
            EmptyTopic => "EMPTY_TOPIC",
            NoMembers => "NO_MEMBERS",
            NotAMember { .. } => "NOT_A_MEMBER",
            UnknownThread(_) => "UNKNOWN_THREAD",
            UnknownCard(_) => "UNKNOWN_CARD",
            PastTime(_) => "PAST_TIME",
            EmptyInput => "EMPTY_INPUT",
            InvalidRequest(_) => "INVALID_REQUEST",
            Io(_) => "IO_ERROR",
        }
    }
}

impl From<std::io::Error> for FmdsError {
    fn from(err: std::io::Error) -> Self {
        FmdsError::Io(err.to_string())
    }
}

pub type Result<T, E = FmdsError> = std::result::Result<T, E>;
