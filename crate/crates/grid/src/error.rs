use crate::key::TreeKey;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("index {idx:?} out of range for level {level}")]
    IndexOutOfRange { level: u8, idx: [u32; 3] },

    #[error("tree has no node {0}")]
    MissingNode(TreeKey),

    #[error("halo data for {key} direction {dir:?} never arrived")]
    HaloTimeout { key: TreeKey, dir: [i8; 3] },

    #[error("neighbor region of {key} toward {dir:?} is not covered by any node")]
    BrokenTopology { key: TreeKey, dir: [i8; 3] },

    #[error("negative density in node {0}")]
    NegativeDensity(TreeKey),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
