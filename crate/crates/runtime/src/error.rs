use thiserror::Error;

/// Error carried by a failed future; dependents observe it instead of a value.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{message}")]
pub struct TaskError {
    pub message: String,
}

impl TaskError {
    pub fn new(message: impl Into<String>) -> Self {
        TaskError {
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("deadlock: all workers idle, nothing in flight, unready futures remain: [{}]", origins.join(", "))]
    Deadlock { origins: Vec<String> },

    #[error("duplicate send for channel object {object:#x} tag {tag} step {step}")]
    DuplicateSend { object: u64, tag: u32, step: u64 },

    #[error(transparent)]
    Task(#[from] TaskError),
}
