use thiserror::Error;

pub type Result<T, E = TopKError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TopKError {
    #[error("input is empty")]
    EmptyInput,

    #[error("rank {k} is out of range for {n} candidates")]
    RankOutOfRange { k: usize, n: usize },

    #[error("NaN at position {index}")]
    NanInput { index: usize },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("task {task}: {source}")]
    Task {
        task: usize,
        #[source]
        source: Box<TopKError>,
    },

    #[error("malformed dataset: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TopKError {
    pub(crate) fn in_task(self, task: usize) -> Self {
        TopKError::Task {
            task,
            source: Box::new(self),
        }
    }
}
