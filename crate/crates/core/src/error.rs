use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("unknown dynamics `{0}`")]
    UnknownDynamics(String),

    #[error("unknown atomic proposition `{name}` in {context}")]
    UnknownAp { name: String, context: String },

    #[error("control grid is empty along dimension {dim}: no multiple of {mu} lies in [{lo}, {hi}]; decrease mu")]
    EmptyControlGrid { dim: usize, mu: f64, lo: f64, hi: f64 },

    #[error("control grid has {points} points, exceeding the supported maximum {max}; increase mu")]
    ControlGridTooLarge { points: usize, max: usize },

    #[error("too many atomic propositions: {got} (maximum {max})")]
    TooManyAps { got: usize, max: usize },

    #[error("automaton is not deterministic: state q{state} has {count} enabled transitions on label {label}")]
    NonDeterministic {
        state: usize,
        label: String,
        count: usize,
    },

    #[error("automaton is not total: state q{state} has no enabled transition on label {label}")]
    NonTotal { state: usize, label: String },

    #[error("propositions {a} and {b} are declared disjoint but their regions overlap near {witness}")]
    RegionsNotDisjoint {
        a: String,
        b: String,
        witness: String,
    },

    #[error("region for `{ap}` is not contained in the state space")]
    RegionOutsideSpace { ap: String },

    #[error("region boundary for `{ap}` at coordinate {coord} along dimension {dim} does not align with the abstraction grid")]
    RegionMisaligned { ap: String, dim: usize, coord: f64 },

    #[error("state labels use proposition `{ap}` which the automaton does not declare")]
    LabelMismatch { ap: String },

    #[error("state {index} ({name}) has no outgoing action")]
    NoOutgoingAction { index: usize, name: String },

    #[error("abstraction exceeded the memory cap: {records} transition records (cap {cap}) after {cells_done} of {cells_total} cells")]
    MemoryCap {
        records: usize,
        cap: usize,
        cells_done: usize,
        cells_total: usize,
    },

    #[error("state {x:?} with automaton state q{q} is outside the winning set")]
    OutOfWinningSet { q: usize, x: Vec<f64> },

    #[error("no transition from q{state} on label {label}")]
    UndefinedTransition { state: usize, label: String },

    #[error("controller container is corrupt: {0}")]
    Corrupt(String),

    #[error("unsupported controller container version {found} (supported {supported})")]
    VersionMismatch { found: u8, supported: u8 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
