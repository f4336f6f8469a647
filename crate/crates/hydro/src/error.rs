use octobox_grid::TreeKey;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HydroError {
    #[error("non-positive pressure {p} at cell {cell:?}{}", key.map(|k| format!(" of node {k}")).unwrap_or_default())]
    NonPositivePressure {
        key: Option<TreeKey>,
        cell: [isize; 3],
        p: f64,
    },

    #[error("non-positive density {rho} at cell {cell:?}{}", key.map(|k| format!(" of node {k}")).unwrap_or_default())]
    NonPositiveDensity {
        key: Option<TreeKey>,
        cell: [isize; 3],
        rho: f64,
    },

    #[error("dt {dt} exceeds the stability bound {bound}")]
    TimestepTooLarge { dt: f64, bound: f64 },

    #[error("ghost width {have} too small, reconstruction needs {need}")]
    GhostWidth { have: usize, need: usize },

    #[error(transparent)]
    Grid(#[from] octobox_grid::GridError),
}
