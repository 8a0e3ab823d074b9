use std::fmt;
use std::process::ExitCode;

use imrl::evalkit::EvalError;
use imrl::networks::NetworkError;
use imrl::replay::ReplayError;
use imrl::socialsim::SimError;
use imrl::trainer::{ConfigError, TrainerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Internal,
    Usage,
    Io,
    Corrupt,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Internal => 1,
            Kind::Usage => 2,
            Kind::Io => 3,
            Kind::Corrupt => 4,
        }
    }
}

/// An error together with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind,
            error: error.into(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self::new(Kind::Usage, anyhow::anyhow!("{message}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.code())
    }

    pub fn context(self, message: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            kind: self.kind,
            error: self.error.context(message),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub fn io_error(path: &std::path::Path, source: std::io::Error) -> Failure {
    Failure::new(Kind::Io, anyhow::Error::new(source).context(format!("{}", path.display())))
}

fn network_kind(e: &NetworkError) -> Kind {
    match e {
        NetworkError::Io { .. } => Kind::Io,
        NetworkError::Checkpoint(_) | NetworkError::Layout(_) | NetworkError::Tensor(_) => Kind::Corrupt,
        NetworkError::State(_) | NetworkError::EmptyBatch => Kind::Internal,
    }
}

fn replay_kind(e: &ReplayError) -> Kind {
    match e {
        ReplayError::Io { .. } => Kind::Io,
        ReplayError::Corrupt { .. } => Kind::Corrupt,
        ReplayError::Empty => Kind::Internal,
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(Kind::Usage, anyhow::anyhow!("invalid configuration:\n{e}"))
    }
}

impl From<NetworkError> for Failure {
    fn from(e: NetworkError) -> Self {
        Failure::new(network_kind(&e), e)
    }
}

impl From<ReplayError> for Failure {
    fn from(e: ReplayError) -> Self {
        Failure::new(replay_kind(&e), e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let kind = match e {
            SimError::Config(_) => Kind::Usage,
            _ => Kind::Internal,
        };
        Failure::new(kind, e)
    }
}

impl From<TrainerError> for Failure {
    fn from(e: TrainerError) -> Self {
        match e {
            TrainerError::Config(e) => e.into(),
            TrainerError::Network(e) => e.into(),
            TrainerError::Replay(e) => e.into(),
            TrainerError::Sim(e) => e.into(),
            TrainerError::Io { .. } => Failure::new(Kind::Io, e),
            TrainerError::NoData => Failure::new(Kind::Internal, e),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Network(e) => e.into(),
            EvalError::Sim(e) => e.into(),
            EvalError::Report { .. } => Failure::new(Kind::Corrupt, e),
            EvalError::NoSteps | EvalError::NoRecords => Failure::new(Kind::Usage, e),
        }
    }
}
