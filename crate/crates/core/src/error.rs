use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied value is out of its documented range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{n_turns} turns do not fit in the winding window ({capacity} lattice slots)")]
    CapacityExceeded { n_turns: usize, capacity: usize },

    #[error("scatter placement deadlocked at step {step} (seed {seed}): no supported free slot")]
    ScatterDeadlock { seed: u64, step: usize },

    #[error("turn graph is disconnected into {} components: {}", .components.len(), describe_components(.components))]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("projected capacitance matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigen solver failed: {0}")]
    Eigen(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("excitation rejected: {0}")]
    Excitation(String),

    #[error("non-finite waveform sample at index {index}")]
    NonFinite { index: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::CapacityExceeded { .. }
                | Error::ScatterDeadlock { .. }
                | Error::Disconnected { .. }
                | Error::Degenerate(_)
                | Error::Excitation(_)
                | Error::Parse(_)
                | Error::Json(_)
        )
    }
}

fn describe_components(components: &[Vec<usize>]) -> String {
    components
        .iter()
        .map(|c| {
            let shown: Vec<String> = c.iter().take(6).map(|i| i.to_string()).collect();
            if c.len() > 6 {
                format!("{{{}, ... ({} turns)}}", shown.join(", "), c.len())
            } else {
                format!("{{{}}}", shown.join(", "))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
