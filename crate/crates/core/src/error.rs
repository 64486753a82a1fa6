use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("enumeration of {items} items exceeds the budget of {budget} (set FABLAB_BUDGET to raise it)")]
    BudgetExceeded { items: u128, budget: u64 },

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("{k_slots} slots cannot hold a partition with {blocks} blocks")]
    TooFewSlots { k_slots: usize, blocks: usize },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("csv row {row}, column {column}: {message}")]
    Csv { row: u64, column: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error comes from a resource limit rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
