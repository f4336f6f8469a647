use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParcelError {
    #[error("bad wire data: {0}")]
    Malformed(String),

    #[error("unknown action id {0}")]
    UnknownAction(u32),

    #[error("rma protocol fault on region {region}: {what}")]
    RmaFault { region: u64, what: String },

    #[error("action '{0}' not registered on every locality")]
    IncompleteRegistration(String),
}
