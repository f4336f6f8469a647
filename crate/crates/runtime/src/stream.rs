//! Stream-pool offload simulation.
//!
//! K slots model in-flight device kernels. A submission scans only the slots
//! its worker manages (K/W each); if one is free the kernel runs and its slot
//! stays busy for the simulated device time, the future turning ready when a
//! later poll finds the slot past its deadline. With no free slot the kernel
//! runs on the calling worker immediately. Numerical output is the same
//! closure either way, so results are bitwise independent of the decision.

use crate::future::{pair, Future};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct StreamConfig {
    pub slots: usize,
    pub workers: usize,
    /// Simulated kernel launch overhead, microseconds.
    pub launch_overhead_us: f64,
    /// Device-rate / core-rate: how much faster the simulated device chews
    /// through a kernel's work than the worker would.
    pub device_speedup: f64,
    pub class_names: Vec<&'static str>,
}

impl StreamConfig {
    pub fn new(slots: usize, workers: usize, class_names: Vec<&'static str>) -> Self {
        StreamConfig {
            slots,
            workers,
            launch_overhead_us: 5.0,
            device_speedup: 20.0,
            class_names,
        }
    }
}

struct Slot {
    busy_until: Option<Instant>,
    complete: Option<Box<dyn FnOnce() + Send>>,
}

pub struct StreamPool {
    cfg: StreamConfig,
    slots: Vec<Mutex<Slot>>,
    offloaded: Vec<AtomicU64>,
    ran_local: Vec<AtomicU64>,
}

impl StreamPool {
    pub fn new(cfg: StreamConfig) -> StreamPool {
        let nclass = cfg.class_names.len();
        StreamPool {
            slots: (0..cfg.slots)
                .map(|_| {
                    Mutex::new(Slot {
                        busy_until: None,
                        complete: None,
                    })
                })
                .collect(),
            offloaded: (0..nclass).map(|_| AtomicU64::new(0)).collect(),
            ran_local: (0..nclass).map(|_| AtomicU64::new(0)).collect(),
            cfg,
        }
    }

    /// Slot range managed by one worker (streams-per-worker = K/W).
    fn own_range(&self, worker: usize) -> std::ops::Range<usize> {
        let w = self.cfg.workers.max(1);
        let per = (self.cfg.slots / w).max(1);
        let lo = (worker % w) * per;
        let hi = (lo + per).min(self.cfg.slots);
        lo..hi
    }

    /// Submit a kernel. `sim_work_us` is the kernel's core-time cost in the
    /// simulation's cost model; None means "measure the closure".
    pub fn submit<T: Send + Sync + 'static>(
        &self,
        worker: usize,
        class: usize,
        sim_work_us: Option<f64>,
        kernel: impl FnOnce() -> T + Send + 'static,
    ) -> Future<T> {
        let (promise, future) = pair();
        let now = Instant::now();
        for idx in self.own_range(worker) {
            let mut slot = self.slots[idx].lock().unwrap();
            if let Some(t) = slot.busy_until {
                if t <= now {
                    if let Some(c) = slot.complete.take() {
                        c();
                    }
                    slot.busy_until = None;
                }
            }
            if slot.busy_until.is_none() {
                // Offload: compute the result now, hold the slot busy for the
                // simulated device time, complete on a later poll.
                let t0 = Instant::now();
                let value = kernel();
                let elapsed_us = t0.elapsed().as_secs_f64() * 1e6;
                let work = sim_work_us.unwrap_or(elapsed_us);
                let device_us = self.cfg.launch_overhead_us + work / self.cfg.device_speedup;
                slot.busy_until = Some(t0 + Duration::from_secs_f64(device_us * 1e-6));
                slot.complete = Some(Box::new(move || promise.set(value)));
                self.offloaded[class].fetch_add(1, Ordering::Relaxed);
                return future;
            }
        }
        // All managed streams busy: execute as a CPU task right here.
        if let Some(work) = sim_work_us {
            spin_for_us(work);
        }
        let value = kernel();
        promise.set(value);
        self.ran_local[class].fetch_add(1, Ordering::Relaxed);
        future
    }

    /// Complete every slot whose simulated device time has elapsed.
    pub fn progress(&self) -> usize {
        let now = Instant::now();
        let mut done = 0;
        for slot in &self.slots {
            let mut s = slot.lock().unwrap();
            if let Some(t) = s.busy_until {
                if t <= now {
                    if let Some(c) = s.complete.take() {
                        c();
                        done += 1;
                    }
                    s.busy_until = None;
                }
            }
        }
        done
    }

    /// Kernels still holding a slot.
    pub fn in_flight(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.lock().unwrap().busy_until.is_some())
            .count()
    }

    /// Block until every in-flight kernel has completed (test/teardown aid).
    pub fn drain(&self) {
        while self.in_flight() > 0 {
            self.progress();
            std::thread::sleep(Duration::from_micros(100));
        }
    }

    pub fn counters(&self) -> Vec<(&'static str, u64, u64)> {
        self.cfg
            .class_names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                (
                    *name,
                    self.offloaded[i].load(Ordering::Relaxed),
                    self.ran_local[i].load(Ordering::Relaxed),
                )
            })
            .collect()
    }

    pub fn offload_fraction(&self) -> f64 {
        let off: u64 = self.offloaded.iter().map(|c| c.load(Ordering::Relaxed)).sum();
        let loc: u64 = self.ran_local.iter().map(|c| c.load(Ordering::Relaxed)).sum();
        if off + loc == 0 {
            return 1.0;
        }
        off as f64 / (off + loc) as f64
    }
}

fn spin_for_us(us: f64) {
    let t0 = Instant::now();
    let dur = Duration::from_secs_f64(us * 1e-6);
    while t0.elapsed() < dur {
        std::hint::spin_loop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_slots_third_runs_local() {
        let pool = StreamPool::new(StreamConfig::new(2, 1, vec!["k"]));
        let f1 = pool.submit(0, 0, Some(100_000.0), || 1);
        let f2 = pool.submit(0, 0, Some(100_000.0), || 2);
        let f3 = pool.submit(0, 0, Some(0.0), || 3);
        assert!(f3.is_ready(), "local path completes immediately");
        let counters = pool.counters();
        assert_eq!(counters[0].1, 2, "offloaded");
        assert_eq!(counters[0].2, 1, "ran local");
        pool.drain();
        assert!(f1.is_ready() && f2.is_ready());
    }

    #[test]
    fn serial_short_kernels_never_run_local() {
        let pool = StreamPool::new(StreamConfig::new(128, 1, vec!["k"]));
        for i in 0..200 {
            let f = pool.submit(0, 0, Some(1.0), move || i);
            // Serial: wait for this kernel before submitting the next.
            while !f.is_ready() {
                pool.progress();
            }
        }
        let counters = pool.counters();
        assert_eq!(counters[0].2, 0, "ran_local");
        assert_eq!(counters[0].1, 200);
    }

    #[test]
    fn result_bitwise_independent_of_offload_decision() {
        let kernel = || -> f64 {
            let mut acc = 0.0f64;
            for i in 1..100 {
                acc += (i as f64).sqrt().sin();
            }
            acc
        };
        // Offloaded path.
        let pool = StreamPool::new(StreamConfig::new(2, 1, vec!["k"]));
        let f_dev = pool.submit(0, 0, Some(10_000.0), kernel);
        // Fill both slots, force the local path.
        let _a = pool.submit(0, 0, Some(10_000.0), || 0.0);
        let f_loc = pool.submit(0, 0, Some(0.0), kernel);
        pool.drain();
        let a = *f_dev.try_get().unwrap().unwrap();
        let b = *f_loc.try_get().unwrap().unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(pool.offload_fraction(), 2.0 / 3.0);
    }

    #[test]
    fn counters_partition_submissions() {
        let pool = StreamPool::new(StreamConfig::new(4, 2, vec!["a", "b"]));
        for i in 0..10 {
            let _ = pool.submit(i % 2, i % 2, Some(50.0), || ());
        }
        pool.drain();
        let c = pool.counters();
        let total: u64 = c.iter().map(|(_, o, l)| o + l).sum();
        assert_eq!(total, 10);
    }
}
