use octobox_grid::TreeKey;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FmmError {
    #[error("opening parameter theta = {0} outside (0, 1]")]
    BadTheta(f64),

    #[error("expansion order {0} not supported (2 or 3)")]
    BadOrder(usize),

    #[error("negative density in node {0}")]
    NegativeDensity(TreeKey),

    #[error("neighbor region of {key} toward {dir:?} has no coarse or fine mapping (gradedness violation)")]
    Structural { key: TreeKey, dir: [i8; 3] },
}
