//! Active-message transport over simulated localities.
//!
//! Two interchangeable backends: two-sided matched messaging (full payload on
//! the matching path) and one-sided messaging (eager below a size threshold,
//! otherwise header-plus-descriptors with the payload pulled by get from the
//! sender's registered regions). Every byte is accounted per path and a
//! queueing model assigns each transfer a simulated completion time.

pub mod error;
pub mod fabric;
pub mod rma;
pub mod wire;

pub use error::ParcelError;
pub use fabric::{Backend, Counters, Fabric, NetConfig};
pub use rma::RmaRegistry;
pub use wire::{Body, Descriptor, Parcel, HEADER_LEN};
