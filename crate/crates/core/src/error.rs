use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("self connection on neuron {0}")]
    SelfEdge(usize),
    #[error("unknown neuron id {0}")]
    UnknownNeuron(usize),
    #[error("neuron {0} has no cluster assignment")]
    Unassigned(usize),
    #[error("invalid decay profile: {0}")]
    InvalidProfile(String),
    #[error("invalid core assignment: {0}")]
    InvalidAssignment(String),
    #[error("invalid fabric configuration: {0}")]
    InvalidFabric(String),
    #[error("fabric too small: {required} cores required, {available} available")]
    FabricTooSmall { required: usize, available: usize },
    #[error("invalid router depth {0}; expected 0, 1 or 2")]
    InvalidDepth(usize),
    #[error("{0} connection(s) are unplaceable; synthesis needs allow_partial")]
    Unplaceable(usize),
    #[error("routing row collision on connection {src}->{dst}: {reason}")]
    RowCollision {
        src: usize,
        dst: usize,
        reason: &'static str,
    },
    #[error("inconsistent routing tables: {0}")]
    InconsistentTables(String),
    #[error("neuron {neuron} out of range ({neurons} neurons)")]
    NeuronOutOfRange { neuron: usize, neurons: usize },
    #[error("exhaustive search supports at most {limit} neurons, got {neurons}; use the heuristic placer")]
    OracleTooLarge { neurons: usize, limit: usize },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}
