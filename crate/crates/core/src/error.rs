use alloc::string::String;

/// Errors raised by the forecasting core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid party list: {0}")]
    Parties(String),

    #[error("station `{station}`: {reason}")]
    Station { station: String, reason: String },

    #[error("duplicate station id `{0}`")]
    DuplicateStation(String),

    #[error("unknown station `{0}`")]
    UnknownStation(String),

    #[error("dataset needs at least two stations, got {0}")]
    TooFewStations(usize),

    #[error("votes sum to {sum} but the electorate is {electorate}")]
    NegativeNonvoters { sum: u64, electorate: u64 },

    #[error("station `{0}` was already declared with different votes")]
    ConflictingDeclaration(String),

    #[error("station `{0}` has no current-election votes")]
    MissingCurrentVotes(String),

    #[error("no declared stations available for estimation")]
    NoDeclaredStations,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("cannot normalize an all-zero vote vector")]
    ZeroTotal,

    #[error("grouping has {got} labels for {expected} stations")]
    GroupingLength { expected: usize, got: usize },

    #[error("label {label} out of range for {n_groups} groups")]
    LabelOutOfRange { label: u32, n_groups: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown genetic operator `{0}`")]
    UnknownOperator(String),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn station_err(station: &str, reason: impl Into<String>) -> Error {
    Error::Station {
        station: station.into(),
        reason: reason.into(),
    }
}
