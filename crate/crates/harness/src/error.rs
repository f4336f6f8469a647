use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Grid(#[from] octobox_grid::GridError),

    #[error(transparent)]
    Fmm(#[from] octobox_fmm::FmmError),

    #[error(transparent)]
    Hydro(#[from] octobox_hydro::HydroError),

    #[error(transparent)]
    Runtime(#[from] octobox_runtime::RuntimeError),

    #[error(transparent)]
    Parcel(#[from] octobox_parcel::ParcelError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
