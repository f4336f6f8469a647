//! Scheduler, future-composition, and delivery contracts.

use octobox_runtime::{ChannelHub, ChannelKey, Runtime, RuntimeError};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

#[test]
fn then_chains_values() {
    let rt = Runtime::new(2);
    let f = rt.run(|| 1);
    let g = rt.then(&f, |v| Ok(*v? + 1));
    assert_eq!(*rt.block_on(&g).unwrap(), 2);
    rt.shutdown();
}

#[test]
fn when_all_of_nothing_is_ready() {
    let rt = Runtime::new(1);
    let f = rt.when_all::<u32>(Vec::new());
    assert!(f.is_ready());
    rt.shutdown();
}

#[test]
fn diamond_graph_joins_exactly_once() {
    let rt = Runtime::new(4);
    let a = rt.run(|| 10);
    let b = rt.then(&a, |v| Ok(*v? * 2));
    let c = rt.then(&a, |v| Ok(*v? + 5));
    let d_runs = Arc::new(AtomicUsize::new(0));
    let runs = d_runs.clone();
    let joined = rt.when_all(vec![b, c]);
    let d = rt.then(&joined, move |v| {
        runs.fetch_add(1, Ordering::SeqCst);
        let v = v?;
        Ok(*v[0] + *v[1])
    });
    assert_eq!(*rt.block_on(&d).unwrap(), 35);
    assert_eq!(d_runs.load(Ordering::SeqCst), 1);
    rt.shutdown();
}

#[test]
fn panic_propagates_as_errored_future() {
    let rt = Runtime::new(2);
    let f: octobox_runtime::Future<u32> = rt.run(|| panic!("boom"));
    let observed = rt.then(&f, |v| match v {
        Ok(_) => Ok("value".to_string()),
        Err(e) => Ok(format!("error: {e}")),
    });
    let got = rt.block_on(&observed).unwrap();
    assert!(got.contains("boom"), "{got}");
    // A dependent that propagates sees the error too.
    let g = rt.then(&f, |v| Ok(*v? + 1));
    assert!(rt.block_on(&g).is_err());
    rt.shutdown();
}

#[test]
fn thousand_tasks_all_complete_and_workers_participate() {
    let rt = Runtime::new(4);
    let done = Arc::new(AtomicUsize::new(0));
    let mut futures = Vec::new();
    for i in 0..1000u64 {
        let d = done.clone();
        futures.push(rt.run(move || {
            // Enough work per task that the OS rotates all four threads even
            // on a single hardware core.
            let mut acc = i;
            let t0 = std::time::Instant::now();
            while t0.elapsed() < Duration::from_micros(150) {
                acc = acc.wrapping_mul(6364136223846793005).wrapping_add(1);
            }
            d.fetch_add(1, Ordering::SeqCst);
            acc
        }));
    }
    let all = rt.when_all(futures);
    rt.block_on(&all).unwrap();
    assert_eq!(done.load(Ordering::SeqCst), 1000);
    rt.wait_quiescent();
    let per_worker = rt.executed_per_worker();
    assert_eq!(per_worker.iter().sum::<u64>(), 1000, "{per_worker:?}");
    let participants = per_worker.iter().filter(|&&c| c > 0).count();
    assert!(
        participants >= 2,
        "steal liveness: only {participants} workers ran tasks: {per_worker:?}"
    );
    rt.shutdown();
}

fn deterministic_graph(workers: usize) -> Vec<f64> {
    let rt = Runtime::new(workers);
    let futures: Vec<_> = (0..64)
        .map(|i| {
            rt.run(move || {
                let mut acc = 0.0f64;
                for k in 1..200 {
                    acc += ((i * k) as f64).sqrt().sin();
                }
                acc
            })
        })
        .collect();
    let all = rt.when_all(futures);
    let vals = rt.block_on(&all).unwrap();
    let out = vals.iter().map(|v| **v).collect();
    rt.shutdown();
    out
}

#[test]
fn results_identical_across_worker_counts() {
    let a = deterministic_graph(1);
    let b = deterministic_graph(4);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn cyclic_dependency_trips_deadlock_detector() {
    let rt = Runtime::new(2);
    let hub = ChannelHub::new();
    // a's payload is produced from b, b's from a: neither can ever arrive.
    let ka = ChannelKey::new(1, 0);
    let kb = ChannelKey::new(2, 0);
    let fa = hub.get_future(ka, 0);
    let fb = hub.get_future(kb, 0);
    rt.watch("channel a step 0", &fa);
    rt.watch("channel b step 0", &fb);
    {
        let hub = hub.clone();
        rt.then(&fa, move |v| {
            let v = v?;
            hub.send(kb, 0, v.to_vec()).ok();
            Ok(())
        });
    }
    let fin = {
        let hub = hub.clone();
        rt.then(&fb, move |v| {
            let v = v?;
            hub.send(ka, 0, v.to_vec()).ok();
            Ok(())
        })
    };
    match rt.block_on(&fin) {
        Err(RuntimeError::Deadlock { origins }) => {
            assert!(origins.iter().any(|o| o.contains("channel a")), "{origins:?}");
            assert!(origins.iter().any(|o| o.contains("channel b")), "{origins:?}");
        }
        other => panic!("expected deadlock, got {other:?}"),
    }
    rt.shutdown();
}

#[test]
fn no_continuation_runs_before_readiness() {
    // Happens-before token: the task writes the flag before setting its
    // promise; every continuation must observe it.
    let rt = Runtime::new(4);
    let violations = Arc::new(AtomicUsize::new(0));
    let mut futures = Vec::new();
    for _ in 0..200 {
        let flag = Arc::new(AtomicBool::new(false));
        let f_flag = flag.clone();
        let fut = rt.run(move || {
            f_flag.store(true, Ordering::SeqCst);
            1u32
        });
        let v = violations.clone();
        futures.push(rt.then(&fut, move |r| {
            let _ = r?;
            if !flag.load(Ordering::SeqCst) {
                v.fetch_add(1, Ordering::SeqCst);
            }
            Ok(())
        }));
    }
    let all = rt.when_all(futures);
    rt.block_on(&all).unwrap();
    assert_eq!(violations.load(Ordering::SeqCst), 0);
    rt.shutdown();
}

#[test]
fn channel_delivery_exactly_once_under_interleavings() {
    let rt = Runtime::new(4);
    let deliveries = Arc::new(AtomicUsize::new(0));
    let mut futures = Vec::new();
    for trial in 0..10_000u64 {
        let hub = ChannelHub::new();
        let key = ChannelKey::new(trial, 0);
        // Race get and send orders by alternating submission order.
        let f = if trial % 2 == 0 {
            let f = hub.get_future(key, trial);
            let h = hub.clone();
            rt.spawn(move || {
                h.send(key, trial, vec![(trial & 0xff) as u8]).unwrap();
            });
            f
        } else {
            let h = hub.clone();
            rt.spawn(move || {
                h.send(key, trial, vec![(trial & 0xff) as u8]).unwrap();
            });
            hub.get_future(key, trial)
        };
        let d = deliveries.clone();
        futures.push(rt.then(&f, move |v| {
            let v = v?;
            assert_eq!(v[0], (trial & 0xff) as u8);
            d.fetch_add(1, Ordering::SeqCst);
            Ok(())
        }));
    }
    let all = rt.when_all(futures);
    rt.block_on(&all).unwrap();
    assert_eq!(deliveries.load(Ordering::SeqCst), 10_000);
    rt.shutdown();
}
