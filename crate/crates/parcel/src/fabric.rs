//! The simulated multi-locality network.
//!
//! Localities exchange encoded parcels through per-destination FIFO queues;
//! any worker may poll its locality's progress to drain deliveries, execute
//! handlers, resolve response futures, perform rendezvous gets, and retry
//! backpressured sends. A queueing model (serialized per directed link and
//! per receiving endpoint) assigns every transfer a virtual completion time.

use crate::error::ParcelError;
use crate::rma::RmaRegistry;
use crate::wire::{Body, Descriptor, Parcel, HEADER_LEN};
use octobox_runtime::future::pair;
use octobox_runtime::{Future, TaskError};
use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

pub const ACTION_RESPONSE: u32 = 0;
pub const ACTION_RELEASE_ACK: u32 = 1;
pub const FIRST_USER_ACTION: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    TwoSided,
    OneSided,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::TwoSided => "twosided",
            Backend::OneSided => "onesided",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetConfig {
    pub backend: Backend,
    pub localities: u16,
    /// One-way hop latency, simulated microseconds.
    pub latency_us: f64,
    /// Bytes per simulated microsecond.
    pub bandwidth: f64,
    pub eager_threshold: usize,
    /// Per-message receive cost through the two-sided matching path.
    pub matching_overhead_us: f64,
    /// Per-completion cost on the one-sided path.
    pub onesided_overhead_us: f64,
    /// Receive-queue depth before senders are backpressured.
    pub queue_depth: usize,
}

impl NetConfig {
    pub fn new(localities: u16, backend: Backend) -> Self {
        NetConfig {
            backend,
            localities,
            latency_us: 1.0,
            bandwidth: 1000.0,
            eager_threshold: 4096,
            matching_overhead_us: 2.0,
            onesided_overhead_us: 0.5,
            queue_depth: 4096,
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct Counters {
    pub messages: u64,
    pub header_bytes: u64,
    pub eager_bytes: u64,
    pub rma_bytes: u64,
    pub matching_bytes: u64,
    pub handler_executions: u64,
}

#[derive(Default)]
struct AtomicCounters {
    messages: AtomicU64,
    header_bytes: AtomicU64,
    eager_bytes: AtomicU64,
    rma_bytes: AtomicU64,
    matching_bytes: AtomicU64,
    handler_executions: AtomicU64,
}

type Handler = Arc<dyn Fn(Vec<u8>) -> Result<Vec<u8>, String> + Send + Sync>;

struct Endpoint {
    rx: Mutex<VecDeque<Vec<u8>>>,
    deferred: Mutex<VecDeque<Vec<u8>>>,
    corr: Mutex<HashMap<u64, octobox_runtime::Promise<Vec<u8>>>>,
    next_corr: AtomicU64,
    rma: RmaRegistry,
    counters: AtomicCounters,
}

struct Clock {
    link_free: HashMap<(u16, u16), f64>,
    endpoint_free: HashMap<u16, f64>,
    makespan: f64,
}

pub struct Fabric {
    cfg: NetConfig,
    endpoints: Vec<Endpoint>,
    actions: RwLock<Vec<(String, Vec<Handler>)>>,
    clock: Mutex<Clock>,
    in_progress: AtomicUsize,
    faults: Mutex<Vec<ParcelError>>,
}

impl Fabric {
    pub fn new(cfg: NetConfig) -> Arc<Fabric> {
        let endpoints = (0..cfg.localities)
            .map(|_| Endpoint {
                rx: Mutex::new(VecDeque::new()),
                deferred: Mutex::new(VecDeque::new()),
                corr: Mutex::new(HashMap::new()),
                next_corr: AtomicU64::new(1),
                rma: RmaRegistry::default(),
                counters: AtomicCounters::default(),
            })
            .collect();
        Arc::new(Fabric {
            cfg,
            endpoints,
            actions: RwLock::new(Vec::new()),
            clock: Mutex::new(Clock {
                link_free: HashMap::new(),
                endpoint_free: HashMap::new(),
                makespan: 0.0,
            }),
            in_progress: AtomicUsize::new(0),
            faults: Mutex::new(Vec::new()),
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    /// Register an action with one handler per locality; the id is shared.
    pub fn register_action(
        &self,
        name: impl Into<String>,
        handlers: Vec<Handler>,
    ) -> Result<u32, ParcelError> {
        let name = name.into();
        if handlers.len() != self.endpoints.len() {
            return Err(ParcelError::IncompleteRegistration(name));
        }
        let mut actions = self.actions.write().unwrap();
        actions.push((name, handlers));
        Ok(FIRST_USER_ACTION + actions.len() as u32 - 1)
    }

    /// Convenience: one closure taking (locality, payload).
    pub fn register_action_fn(
        &self,
        name: impl Into<String>,
        f: impl Fn(u16, Vec<u8>) -> Result<Vec<u8>, String> + Send + Sync + 'static,
    ) -> Result<u32, ParcelError> {
        let f = Arc::new(f);
        let handlers = (0..self.endpoints.len() as u16)
            .map(|loc| {
                let f = f.clone();
                let h: Handler = Arc::new(move |bytes| f(loc, bytes));
                h
            })
            .collect();
        self.register_action(name, handlers)
    }

    fn handler(&self, action: u32, locality: u16) -> Option<Handler> {
        let actions = self.actions.read().unwrap();
        actions
            .get((action - FIRST_USER_ACTION) as usize)
            .map(|(_, hs)| hs[locality as usize].clone())
    }

    /// Simulated transfer accounting: serialized per directed link, then per
    /// receiving endpoint; returns the virtual completion time.
    fn charge(&self, src: u16, dst: u16, wire_bytes: usize, endpoint_cost_us: f64) -> f64 {
        let mut clock = self.clock.lock().unwrap();
        let link = clock.link_free.entry((src, dst)).or_insert(0.0);
        let link_done = *link + wire_bytes as f64 / self.cfg.bandwidth;
        *link = link_done;
        let arrive = link_done + self.cfg.latency_us;
        let ep = clock.endpoint_free.entry(dst).or_insert(0.0);
        let done = arrive.max(*ep) + endpoint_cost_us;
        *ep = done;
        clock.makespan = clock.makespan.max(done);
        done
    }

    pub fn simulated_makespan_us(&self) -> f64 {
        self.clock.lock().unwrap().makespan
    }

    pub fn reset_clock(&self) {
        let mut clock = self.clock.lock().unwrap();
        clock.link_free.clear();
        clock.endpoint_free.clear();
        clock.makespan = 0.0;
    }

    fn enqueue(&self, dest: u16, bytes: Vec<u8>) -> Result<(), Vec<u8>> {
        let mut rx = self.endpoints[dest as usize].rx.lock().unwrap();
        if rx.len() >= self.cfg.queue_depth {
            return Err(bytes);
        }
        rx.push_back(bytes);
        Ok(())
    }

    fn transmit(&self, parcel: Parcel) {
        let src = parcel.source;
        let c = &self.endpoints[src as usize].counters;
        let wire = parcel.encode();
        c.messages.fetch_add(1, Ordering::Relaxed);
        c.header_bytes.fetch_add(HEADER_LEN as u64, Ordering::Relaxed);
        match (&self.cfg.backend, &parcel.body) {
            (Backend::TwoSided, Body::Inline(p)) => {
                c.matching_bytes
                    .fetch_add((HEADER_LEN + p.len()) as u64, Ordering::Relaxed);
                self.charge(src, parcel.dest, HEADER_LEN + p.len(), self.cfg.matching_overhead_us);
            }
            (Backend::OneSided, Body::Inline(p)) => {
                c.matching_bytes
                    .fetch_add((HEADER_LEN + p.len()) as u64, Ordering::Relaxed);
                c.eager_bytes.fetch_add(p.len() as u64, Ordering::Relaxed);
                self.charge(src, parcel.dest, HEADER_LEN + p.len(), self.cfg.onesided_overhead_us);
            }
            (_, Body::Handles { descriptors, .. }) => {
                let wire_len = HEADER_LEN + 16 * descriptors.len();
                c.matching_bytes.fetch_add(wire_len as u64, Ordering::Relaxed);
                self.charge(src, parcel.dest, wire_len, self.cfg.onesided_overhead_us);
            }
        }
        let dest = parcel.dest;
        if let Err(bytes) = self.enqueue(dest, wire) {
            // Backpressure: park on the sender, retried by its progress.
            self.endpoints[src as usize]
                .deferred
                .lock()
                .unwrap()
                .push_back(bytes);
        }
    }

    /// Fire an action on `dest` with argument bytes; the future resolves with
    /// the handler result (or its error).
    pub fn send_action(
        self: &Arc<Self>,
        src: u16,
        dest: u16,
        action: u32,
        args: Vec<u8>,
    ) -> Future<Vec<u8>> {
        let (promise, future) = pair();
        if src == dest {
            // Loopback: no network bytes, the handler runs in place.
            let ep = &self.endpoints[src as usize];
            ep.counters.handler_executions.fetch_add(1, Ordering::Relaxed);
            match self.handler(action, dest) {
                Some(h) => match h(args) {
                    Ok(v) => promise.set(v),
                    Err(e) => promise.set_error(TaskError::new(e)),
                },
                None => promise.set_error(TaskError::new(
                    ParcelError::UnknownAction(action).to_string(),
                )),
            }
            return future;
        }
        let ep = &self.endpoints[src as usize];
        let corr = ep.next_corr.fetch_add(1, Ordering::Relaxed);
        ep.corr.lock().unwrap().insert(corr, promise);
        let mut payload = corr.to_le_bytes().to_vec();
        payload.extend_from_slice(&args);

        let body = if self.cfg.backend == Backend::OneSided
            && payload.len() > self.cfg.eager_threshold
        {
            let total = payload.len() as u64;
            let region = ep.rma.register(payload);
            ep.rma.mark_pending(region);
            Body::Handles {
                total_len: total,
                descriptors: vec![Descriptor { region, len: total }],
            }
        } else {
            Body::Inline(payload)
        };
        self.transmit(Parcel {
            source: src,
            dest,
            action,
            body,
        });
        future
    }

    /// Drain one locality's queues: deferred sends first, then deliveries.
    /// Returns the number of completions handled; callable from any worker.
    pub fn progress(&self, locality: u16) -> usize {
        self.in_progress.fetch_add(1, Ordering::SeqCst);
        let mut handled = 0;
        // Retry backpressured sends.
        loop {
            let next = self.endpoints[locality as usize]
                .deferred
                .lock()
                .unwrap()
                .pop_front();
            match next {
                Some(bytes) => {
                    let dest = Parcel::decode(&bytes).map(|p| p.dest).unwrap_or(locality);
                    if let Err(b) = self.enqueue(dest, bytes) {
                        self.endpoints[locality as usize]
                            .deferred
                            .lock()
                            .unwrap()
                            .push_front(b);
                        break;
                    }
                    handled += 1;
                }
                None => break,
            }
        }
        // Deliveries.
        loop {
            let next = self.endpoints[locality as usize].rx.lock().unwrap().pop_front();
            let Some(bytes) = next else { break };
            match Parcel::decode(&bytes) {
                Ok(parcel) => {
                    self.deliver(locality, parcel);
                    handled += 1;
                }
                Err(_) => {
                    handled += 1;
                }
            }
        }
        self.in_progress.fetch_sub(1, Ordering::SeqCst);
        handled
    }

    fn deliver(&self, locality: u16, parcel: Parcel) {
        debug_assert_eq!(parcel.dest, locality);
        match parcel.action {
            ACTION_RESPONSE => {
                if let Body::Inline(p) = parcel.body {
                    let corr = u64::from_le_bytes(p[0..8].try_into().unwrap());
                    let status = p[8];
                    let rest = p[9..].to_vec();
                    let promise = self.endpoints[locality as usize]
                        .corr
                        .lock()
                        .unwrap()
                        .remove(&corr);
                    if let Some(promise) = promise {
                        if status == 0 {
                            promise.set(rest);
                        } else {
                            promise.set_error(TaskError::new(
                                String::from_utf8_lossy(&rest).to_string(),
                            ));
                        }
                    }
                }
            }
            ACTION_RELEASE_ACK => {
                if let Body::Inline(p) = parcel.body {
                    for c in p.chunks_exact(8) {
                        let region = u64::from_le_bytes(c.try_into().unwrap());
                        self.endpoints[locality as usize]
                            .rma
                            .complete_and_release(region);
                    }
                }
            }
            action => {
                let (payload, acked_regions) = match parcel.body {
                    Body::Inline(p) => (p, Vec::new()),
                    Body::Handles { descriptors, .. } => {
                        // Pull each region from the sender into a buffer
                        // registered on this side for the duration.
                        let mut assembled = Vec::new();
                        let mut regions = Vec::new();
                        for d in &descriptors {
                            let src_rma = &self.endpoints[parcel.source as usize].rma;
                            match src_rma.get(d.region) {
                                Ok(bytes) => {
                                    self.endpoints[locality as usize]
                                        .counters
                                        .rma_bytes
                                        .fetch_add(bytes.len() as u64, Ordering::Relaxed);
                                    self.charge(
                                        parcel.source,
                                        locality,
                                        bytes.len(),
                                        self.cfg.onesided_overhead_us,
                                    );
                                    let local = self.endpoints[locality as usize]
                                        .rma
                                        .register(bytes);
                                    let copy = self.endpoints[locality as usize]
                                        .rma
                                        .get(local)
                                        .expect("just registered");
                                    self.endpoints[locality as usize]
                                        .rma
                                        .complete_and_release(local);
                                    assembled.extend_from_slice(&copy);
                                    regions.push(d.region);
                                }
                                Err(e) => {
                                    // Protocol fault: the message is dropped
                                    // and the fault recorded; the sender's
                                    // unresolved future surfaces through the
                                    // deadlock detector.
                                    self.faults.lock().unwrap().push(e);
                                    return;
                                }
                            }
                        }
                        (assembled, regions)
                    }
                };
                let corr = u64::from_le_bytes(payload[0..8].try_into().unwrap());
                let args = payload[8..].to_vec();
                let ep = &self.endpoints[locality as usize];
                ep.counters.handler_executions.fetch_add(1, Ordering::Relaxed);
                let result = match self.handler(action, locality) {
                    Some(h) => h(args),
                    None => Err(ParcelError::UnknownAction(action).to_string()),
                };
                if !acked_regions.is_empty() {
                    let mut ack = Vec::with_capacity(acked_regions.len() * 8);
                    for r in &acked_regions {
                        ack.extend_from_slice(&r.to_le_bytes());
                    }
                    self.transmit(Parcel {
                        source: locality,
                        dest: parcel.source,
                        action: ACTION_RELEASE_ACK,
                        body: Body::Inline(ack),
                    });
                }
                self.respond(locality, parcel.source, corr, result);
            }
        }
    }

    fn respond(&self, src: u16, dest: u16, corr: u64, result: Result<Vec<u8>, String>) {
        let mut payload = corr.to_le_bytes().to_vec();
        match result {
            Ok(v) => {
                payload.push(0);
                payload.extend_from_slice(&v);
            }
            Err(e) => {
                payload.push(1);
                payload.extend_from_slice(e.as_bytes());
            }
        }
        self.transmit(Parcel {
            source: src,
            dest,
            action: ACTION_RESPONSE,
            body: Body::Inline(payload),
        });
    }

    /// Queued and mid-delivery work, for quiescence detection.
    pub fn pending(&self) -> usize {
        let queued: usize = self
            .endpoints
            .iter()
            .map(|e| e.rx.lock().unwrap().len() + e.deferred.lock().unwrap().len())
            .sum();
        queued + self.in_progress.load(Ordering::SeqCst)
    }

    pub fn counters(&self, locality: u16) -> Counters {
        let c = &self.endpoints[locality as usize].counters;
        Counters {
            messages: c.messages.load(Ordering::Relaxed),
            header_bytes: c.header_bytes.load(Ordering::Relaxed),
            eager_bytes: c.eager_bytes.load(Ordering::Relaxed),
            rma_bytes: c.rma_bytes.load(Ordering::Relaxed),
            matching_bytes: c.matching_bytes.load(Ordering::Relaxed),
            handler_executions: c.handler_executions.load(Ordering::Relaxed),
        }
    }

    pub fn rma_registry(&self, locality: u16) -> &RmaRegistry {
        &self.endpoints[locality as usize].rma
    }

    pub fn localities(&self) -> u16 {
        self.cfg.localities
    }

    /// Protocol faults observed so far (drained).
    pub fn take_faults(&self) -> Vec<ParcelError> {
        std::mem::take(&mut self.faults.lock().unwrap())
    }
}
