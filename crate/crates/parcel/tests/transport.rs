//! Transport contracts: delivery, accounting, ordering, backend behavior.

use octobox_parcel::{Backend, Fabric, NetConfig, HEADER_LEN};
use octobox_runtime::Runtime;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

fn echo_fabric(localities: u16, backend: Backend) -> (Arc<Fabric>, u32) {
    let fabric = Fabric::new(NetConfig::new(localities, backend));
    let echo = fabric
        .register_action_fn("echo", |_loc, bytes| Ok(bytes))
        .unwrap();
    (fabric, echo)
}

fn drain(fabric: &Arc<Fabric>) {
    while fabric.pending() > 0 {
        for loc in 0..fabric.localities() {
            fabric.progress(loc);
        }
    }
}

#[test]
fn echo_round_trip() {
    let (fabric, echo) = echo_fabric(2, Backend::TwoSided);
    let f = fabric.send_action(0, 1, echo, vec![1, 2, 3]);
    drain(&fabric);
    assert_eq!(*f.try_get().unwrap().unwrap(), vec![1, 2, 3]);
}

#[test]
fn loopback_counts_no_bytes() {
    let (fabric, echo) = echo_fabric(2, Backend::TwoSided);
    let f = fabric.send_action(0, 0, echo, vec![9; 100]);
    assert!(f.is_ready());
    let c = fabric.counters(0);
    assert_eq!(c.messages, 0);
    assert_eq!(c.matching_bytes, 0);
    assert_eq!(c.handler_executions, 1);
}

#[test]
fn unknown_action_errors_the_future() {
    let (fabric, _) = echo_fabric(2, Backend::TwoSided);
    let f = fabric.send_action(0, 1, 999, vec![]);
    drain(&fabric);
    let err = f.try_get().unwrap().unwrap_err();
    assert!(err.message.contains("unknown action"), "{err}");
}

#[test]
fn twosided_accounting_small_and_large() {
    let (fabric, echo) = echo_fabric(2, Backend::TwoSided);
    let f = fabric.send_action(0, 1, echo, vec![0; 100]);
    drain(&fabric);
    assert!(f.is_ready());
    let c = fabric.counters(0);
    // corr id travels with the arguments: payload = 8 + 100.
    assert_eq!(c.matching_bytes, (HEADER_LEN + 108) as u64);
    assert_eq!(c.rma_bytes, 0);

    let big = vec![7u8; 1 << 20];
    let f = fabric.send_action(0, 1, echo, big);
    drain(&fabric);
    assert!(f.is_ready());
    let c2 = fabric.counters(0);
    let delta = c2.matching_bytes - c.matching_bytes;
    assert_eq!(delta, (HEADER_LEN + (1 << 20) + 8) as u64);
    assert_eq!(c2.rma_bytes, 0, "two-sided never uses rma");
}

#[test]
fn onesided_eager_vs_rendezvous_accounting() {
    let (fabric, echo) = echo_fabric(2, Backend::OneSided);
    // 100 bytes: below the 4096 threshold, eager, no rma bytes.
    let f = fabric.send_action(0, 1, echo, vec![0; 100]);
    drain(&fabric);
    assert!(f.is_ready());
    let c = fabric.counters(0);
    assert_eq!(c.eager_bytes, 108);
    assert_eq!(c.rma_bytes, 0);

    // 1 MiB: header + one descriptor on the matching path, payload via get.
    let f = fabric.send_action(0, 1, echo, vec![1; 1 << 20]);
    drain(&fabric);
    assert!(f.is_ready());
    let c0 = fabric.counters(0);
    let c1 = fabric.counters(1);
    assert_eq!(c0.matching_bytes - c.matching_bytes, (HEADER_LEN + 16) as u64);
    assert_eq!(c1.rma_bytes, (1 << 20) + 8);
    // Sender regions released after the remote completion acknowledgment.
    assert_eq!(fabric.rma_registry(0).registered_count(), 0);
}

#[test]
fn fifo_order_per_source() {
    let (fabric, _) = echo_fabric(2, Backend::TwoSided);
    let seen: Arc<std::sync::Mutex<Vec<u8>>> = Arc::new(std::sync::Mutex::new(Vec::new()));
    let s = seen.clone();
    let record = fabric
        .register_action_fn("record", move |_loc, bytes| {
            s.lock().unwrap().push(bytes[0]);
            Ok(vec![])
        })
        .unwrap();
    let futures: Vec<_> = (0..50u8)
        .map(|i| fabric.send_action(0, 1, record, vec![i]))
        .collect();
    drain(&fabric);
    for f in &futures {
        assert!(f.is_ready());
    }
    let seen = seen.lock().unwrap();
    assert_eq!(*seen, (0..50).collect::<Vec<u8>>(), "send order preserved");
}

#[test]
fn concurrent_sends_counting_oracle() {
    let localities = 4u16;
    let (fabric, echo) = echo_fabric(localities, Backend::OneSided);
    let rt = Runtime::new(4);
    for loc in 0..localities {
        let fab = fabric.clone();
        rt.register_progress(Arc::new(move || fab.progress(loc)));
    }
    {
        let fab = fabric.clone();
        rt.register_pending_probe(Arc::new(move || fab.pending()));
    }
    let done = Arc::new(AtomicUsize::new(0));
    let mut futures = Vec::new();
    let per_source = 2500u64;
    for src in 0..localities {
        for i in 0..per_source {
            let dest = ((src as u64 + 1 + i) % localities as u64) as u16;
            let f = fabric.send_action(src, dest, echo, vec![(i & 0xff) as u8]);
            let d = done.clone();
            futures.push(rt.then(&f, move |v| {
                let v = v?;
                assert_eq!(v[0], (i & 0xff) as u8);
                d.fetch_add(1, Ordering::SeqCst);
                Ok(())
            }));
        }
    }
    let all = rt.when_all(futures);
    rt.block_on(&all).unwrap();
    assert_eq!(done.load(Ordering::SeqCst), (per_source * localities as u64) as usize);
    // Handler executions across destinations equal messages sent.
    let handled: u64 = (0..localities)
        .map(|l| fabric.counters(l).handler_executions)
        .sum();
    assert_eq!(handled, per_source * localities as u64);
    rt.shutdown();
}

#[test]
fn progress_idle_returns_zero_and_counts_completions() {
    let (fabric, echo) = echo_fabric(2, Backend::TwoSided);
    assert_eq!(fabric.progress(0), 0);
    assert_eq!(fabric.progress(1), 0);
    let _f = fabric.send_action(0, 1, echo, vec![5]);
    // One pending delivery at locality 1.
    assert_eq!(fabric.progress(1), 1);
    // The response now waits at locality 0.
    assert_eq!(fabric.progress(0), 1);
    assert_eq!(fabric.progress(0), 0);
}

#[test]
fn concurrent_pollers_handle_each_completion_once() {
    let (fabric, _) = echo_fabric(2, Backend::TwoSided);
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    let tally = fabric
        .register_action_fn("tally", move |_loc, _| {
            h.fetch_add(1, Ordering::SeqCst);
            Ok(vec![])
        })
        .unwrap();
    let n = 500;
    for i in 0..n {
        let _ = fabric.send_action(0, 1, tally, vec![i as u8]);
    }
    // Many threads race on the same locality's progress.
    std::thread::scope(|s| {
        for _ in 0..4 {
            let fab = fabric.clone();
            s.spawn(move || {
                while fab.pending() > 0 {
                    fab.progress(1);
                    fab.progress(0);
                }
            });
        }
    });
    assert_eq!(hits.load(Ordering::SeqCst), n);
}

#[test]
fn simulated_time_monotone_and_positive() {
    let (fabric, echo) = echo_fabric(2, Backend::TwoSided);
    assert_eq!(fabric.simulated_makespan_us(), 0.0);
    let _ = fabric.send_action(0, 1, echo, vec![0; 64]);
    let t1 = fabric.simulated_makespan_us();
    assert!(t1 > 0.0);
    drain(&fabric);
    let t2 = fabric.simulated_makespan_us();
    assert!(t2 >= t1, "responses only add time");
}
