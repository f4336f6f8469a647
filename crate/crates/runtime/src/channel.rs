//! Step-keyed single-assignment channels.
//!
//! A channel key names (owning object, tag); each step index is its own
//! single-assignment slot, so the receiving end may fetch futures any number
//! of steps ahead of the sender, and sends before gets simply park the
//! payload. Payloads are byte buffers moved, not copied, on delivery.

use crate::error::RuntimeError;
use crate::future::{pair, Future, Promise};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelKey {
    pub object: u64,
    pub tag: u32,
}

impl ChannelKey {
    pub fn new(object: u64, tag: u32) -> Self {
        ChannelKey { object, tag }
    }
}

struct Entry {
    promise: Option<Promise<Vec<u8>>>,
    future: Future<Vec<u8>>,
    sent: bool,
}

/// One locality's channel registry.
#[derive(Default)]
pub struct ChannelHub {
    slots: Mutex<HashMap<(ChannelKey, u64), Entry>>,
}

impl ChannelHub {
    pub fn new() -> Arc<ChannelHub> {
        Arc::new(ChannelHub::default())
    }

    fn entry_future(&self, key: ChannelKey, step: u64) -> Future<Vec<u8>> {
        let mut slots = self.slots.lock().unwrap();
        let e = slots.entry((key, step)).or_insert_with(|| {
            let (p, f) = pair();
            Entry {
                promise: Some(p),
                future: f,
                sent: false,
            }
        });
        e.future.clone()
    }

    /// Future for (key, step); the same handle on repeated gets.
    pub fn get_future(&self, key: ChannelKey, step: u64) -> Future<Vec<u8>> {
        self.entry_future(key, step)
    }

    /// Deliver a payload; order-independent with respect to `get_future`.
    pub fn send(&self, key: ChannelKey, step: u64, payload: Vec<u8>) -> Result<(), RuntimeError> {
        let promise = {
            let mut slots = self.slots.lock().unwrap();
            let e = slots.entry((key, step)).or_insert_with(|| {
                let (p, f) = pair();
                Entry {
                    promise: Some(p),
                    future: f,
                    sent: false,
                }
            });
            if e.sent {
                return Err(RuntimeError::DuplicateSend {
                    object: key.object,
                    tag: key.tag,
                    step,
                });
            }
            e.sent = true;
            e.promise.take().expect("unsent entry keeps its promise")
        };
        promise.set(payload);
        Ok(())
    }

    /// Drop delivered slots older than `step` to bound memory on long runs.
    pub fn retire_below(&self, step: u64) {
        self.slots
            .lock()
            .unwrap()
            .retain(|(_, s), e| *s >= step || !e.sent || !e.future.is_ready());
    }

    pub fn pending_count(&self) -> usize {
        self.slots
            .lock()
            .unwrap()
            .values()
            .filter(|e| !e.sent)
            .count()
    }

    /// Slots someone asked for that no sender has filled; names the step-level
    /// timeouts when a run deadlocks.
    pub fn pending_keys(&self) -> Vec<(ChannelKey, u64)> {
        let mut keys: Vec<(ChannelKey, u64)> = self
            .slots
            .lock()
            .unwrap()
            .iter()
            .filter(|(_, e)| !e.sent)
            .map(|(k, _)| *k)
            .collect();
        keys.sort();
        keys
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn get_then_send() {
        let hub = ChannelHub::new();
        let key = ChannelKey::new(7, 1);
        let f = hub.get_future(key, 0);
        assert!(!f.is_ready());
        hub.send(key, 0, vec![1, 2, 3]).unwrap();
        assert_eq!(*f.try_get().unwrap().unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn send_then_get_immediately_ready() {
        let hub = ChannelHub::new();
        let key = ChannelKey::new(7, 1);
        hub.send(key, 3, vec![9]).unwrap();
        let f = hub.get_future(key, 3);
        assert!(f.is_ready());
    }

    #[test]
    fn out_of_order_steps_match_their_own_slots() {
        let hub = ChannelHub::new();
        let key = ChannelKey::new(42, 2);
        let futures: Vec<_> = (1..=3).map(|s| hub.get_future(key, s)).collect();
        hub.send(key, 3, vec![3]).unwrap();
        hub.send(key, 1, vec![1]).unwrap();
        hub.send(key, 2, vec![2]).unwrap();
        for (i, f) in futures.iter().enumerate() {
            assert_eq!(*f.try_get().unwrap().unwrap(), vec![(i + 1) as u8]);
        }
    }

    #[test]
    fn duplicate_send_is_a_protocol_error() {
        let hub = ChannelHub::new();
        let key = ChannelKey::new(1, 1);
        hub.send(key, 0, vec![]).unwrap();
        assert!(matches!(
            hub.send(key, 0, vec![]),
            Err(RuntimeError::DuplicateSend { .. })
        ));
    }
}
