//! Futurization substrate: single-assignment futures with chained
//! continuations, a work-stealing task scheduler whose idle workers poll
//! registered progress hooks (network and device completions), typed
//! step-keyed channels, and a stream pool that simulates a device offload
//! policy with launch-or-run-local semantics.

pub mod channel;
pub mod error;
pub mod future;
pub mod scheduler;
pub mod stream;

pub use channel::{ChannelHub, ChannelKey};
pub use error::{RuntimeError, TaskError};
pub use future::{Future, Promise};
pub use scheduler::Runtime;
pub use stream::{StreamConfig, StreamPool};
