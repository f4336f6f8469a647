//! Registered ("pinned") memory regions for the one-sided path.

use crate::error::ParcelError;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

struct Region {
    bytes: Vec<u8>,
    /// A remote get has been announced and not yet acknowledged.
    pending: bool,
}

#[derive(Default)]
pub struct RmaRegistry {
    regions: Mutex<HashMap<u64, Region>>,
    next_id: AtomicU64,
    registrations: AtomicU64,
}

impl RmaRegistry {
    pub fn register(&self, bytes: Vec<u8>) -> u64 {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        self.registrations.fetch_add(1, Ordering::Relaxed);
        self.regions.lock().unwrap().insert(
            id,
            Region {
                bytes,
                pending: false,
            },
        );
        id
    }

    pub fn mark_pending(&self, id: u64) {
        if let Some(r) = self.regions.lock().unwrap().get_mut(&id) {
            r.pending = true;
        }
    }

    /// Remote read; faults if the region was released or never existed.
    pub fn get(&self, id: u64) -> Result<Vec<u8>, ParcelError> {
        self.regions
            .lock()
            .unwrap()
            .get(&id)
            .map(|r| r.bytes.clone())
            .ok_or(ParcelError::RmaFault {
                region: id,
                what: "get on unregistered region".into(),
            })
    }

    /// Completion-acknowledged release (the normal path).
    pub fn complete_and_release(&self, id: u64) {
        self.regions.lock().unwrap().remove(&id);
    }

    /// Manual release; faults while a remote get is still outstanding.
    pub fn release(&self, id: u64) -> Result<(), ParcelError> {
        let mut regions = self.regions.lock().unwrap();
        match regions.get(&id) {
            None => Err(ParcelError::RmaFault {
                region: id,
                what: "double release".into(),
            }),
            Some(r) if r.pending => Err(ParcelError::RmaFault {
                region: id,
                what: "release before remote completion".into(),
            }),
            Some(_) => {
                regions.remove(&id);
                Ok(())
            }
        }
    }

    pub fn registered_count(&self) -> usize {
        self.regions.lock().unwrap().len()
    }

    pub fn total_registrations(&self) -> u64 {
        self.registrations.load(Ordering::Relaxed)
    }
}
