//! Work-stealing task scheduler with progress-hook polling.
//!
//! Per-worker deques, an injector for external submissions, steal-from-random
//! victim on empty, and between tasks every idle worker polls the registered
//! progress hooks (parcel transport, stream pool) so completions are drained
//! without a dedicated thread. Quiescence plus unready futures is reported as
//! a deadlock with the registered origins.

use crate::error::{RuntimeError, TaskError};
use crate::future::{pair, Future};
use crossbeam_deque::{Injector, Steal, Stealer, Worker as Deque};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use std::cell::RefCell;
use std::rc::Rc;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::time::Duration;

type Task = Box<dyn FnOnce() + Send>;
type ProgressHook = Arc<dyn Fn() -> usize + Send + Sync>;
type PendingProbe = Arc<dyn Fn() -> usize + Send + Sync>;
type WatchProbe = Box<dyn Fn() -> Option<bool> + Send>;

struct Core {
    injector: Injector<Task>,
    stealers: Vec<Stealer<Task>>,
    outstanding: AtomicUsize,
    active: AtomicUsize,
    shutdown: AtomicBool,
    park: Mutex<()>,
    park_cond: Condvar,
    progress: RwLock<Vec<ProgressHook>>,
    pending: RwLock<Vec<PendingProbe>>,
    watch: Mutex<Vec<(String, WatchProbe)>>,
    executed_per_worker: Vec<AtomicU64>,
}

thread_local! {
    #[allow(clippy::type_complexity)]
    static WORKER: RefCell<Option<(usize, Rc<Deque<Task>>, usize)>> = const { RefCell::new(None) };
}

/// Handle to a running scheduler; cloning shares the worker pool.
#[derive(Clone)]
pub struct Runtime {
    core: Arc<Core>,
    threads: Arc<Mutex<Vec<std::thread::JoinHandle<()>>>>,
}

impl Runtime {
    pub fn new(workers: usize) -> Runtime {
        assert!(workers >= 1);
        let deques: Vec<Deque<Task>> = (0..workers).map(|_| Deque::new_fifo()).collect();
        let stealers = deques.iter().map(|d| d.stealer()).collect();
        let core = Arc::new(Core {
            injector: Injector::new(),
            stealers,
            outstanding: AtomicUsize::new(0),
            active: AtomicUsize::new(0),
            shutdown: AtomicBool::new(false),
            park: Mutex::new(()),
            park_cond: Condvar::new(),
            progress: RwLock::new(Vec::new()),
            pending: RwLock::new(Vec::new()),
            watch: Mutex::new(Vec::new()),
            executed_per_worker: (0..workers).map(|_| AtomicU64::new(0)).collect(),
        });
        let threads = deques
            .into_iter()
            .enumerate()
            .map(|(id, dq)| {
                let core = core.clone();
                std::thread::Builder::new()
                    .name(format!("worker-{id}"))
                    .spawn(move || worker_loop(core, dq, id))
                    .expect("spawn worker")
            })
            .collect();
        Runtime {
            core,
            threads: Arc::new(Mutex::new(threads)),
        }
    }

    pub fn workers(&self) -> usize {
        self.core.stealers.len()
    }

    /// Index of the current worker thread, if called from one.
    pub fn current_worker() -> Option<usize> {
        WORKER.with(|w| w.borrow().as_ref().map(|(_, _, id)| *id))
    }

    pub fn spawn(&self, task: impl FnOnce() + Send + 'static) {
        self.spawn_boxed(Box::new(task));
    }

    fn spawn_boxed(&self, boxed: Task) {
        self.core.outstanding.fetch_add(1, Ordering::SeqCst);
        let core_id = Arc::as_ptr(&self.core) as usize;
        let leftover = WORKER.with(move |w| {
            if let Some((cid, dq, _)) = w.borrow().as_ref() {
                if *cid == core_id {
                    dq.push(boxed);
                    return None;
                }
            }
            Some(boxed)
        });
        if let Some(task) = leftover {
            self.core.injector.push(task);
        }
        self.core.park_cond.notify_one();
    }

    /// Schedule a closure and expose its result (or panic) as a future.
    pub fn run<T: Send + Sync + 'static>(
        &self,
        f: impl FnOnce() -> T + Send + 'static,
    ) -> Future<T> {
        let (promise, future) = pair();
        self.spawn_boxed(Box::new(move || {
            let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f));
            match out {
                Ok(v) => promise.set(v),
                Err(p) => promise.set_error(TaskError::new(panic_message(&*p))),
            }
        }));
        future
    }

    /// Continuation chaining: runs `g` on the scheduler once `f` resolves.
    pub fn then<T, U>(
        &self,
        f: &Future<T>,
        g: impl FnOnce(Result<Arc<T>, TaskError>) -> Result<U, TaskError> + Send + 'static,
    ) -> Future<U>
    where
        T: Send + Sync + 'static,
        U: Send + Sync + 'static,
    {
        let (promise, out) = pair();
        let rt = self.clone();
        f.on_ready(move |res| {
            let res = res.clone();
            rt.spawn_boxed(Box::new(move || {
                let v = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| g(res)));
                match v {
                    Ok(r) => promise.set_result(r),
                    Err(p) => promise.set_error(TaskError::new(panic_message(&*p))),
                }
            }));
        });
        out
    }

    /// Ready when all inputs are ready; errors propagate (first one wins).
    pub fn when_all<T: Send + Sync + 'static>(
        &self,
        futures: Vec<Future<T>>,
    ) -> Future<Vec<Arc<T>>> {
        let (promise, out) = pair();
        let n = futures.len();
        if n == 0 {
            promise.set(Vec::new());
            return out;
        }
        type Slots<T> = (
            Vec<Option<Arc<T>>>,
            usize,
            Option<TaskError>,
            Option<crate::future::Promise<Vec<Arc<T>>>>,
        );
        struct Gather<T> {
            slots: Mutex<Slots<T>>,
        }
        let gather = Arc::new(Gather {
            slots: Mutex::new((vec![None; n], 0, None, Some(promise))),
        });
        for (i, f) in futures.iter().enumerate() {
            let g = gather.clone();
            f.on_ready(move |res| {
                let mut lock = g.slots.lock().unwrap();
                match res {
                    Ok(v) => lock.0[i] = Some(v.clone()),
                    Err(e) => {
                        if lock.2.is_none() {
                            lock.2 = Some(e.clone());
                        }
                    }
                }
                lock.1 += 1;
                if lock.1 == n {
                    let promise = lock.3.take().unwrap();
                    if let Some(e) = lock.2.take() {
                        promise.set_error(e);
                    } else {
                        let vals = lock.0.iter_mut().map(|s| s.take().unwrap()).collect();
                        promise.set(vals);
                    }
                }
            });
        }
        out
    }

    pub fn register_progress(&self, hook: ProgressHook) {
        self.core.progress.write().unwrap().push(hook);
    }

    pub fn register_pending_probe(&self, probe: PendingProbe) {
        self.core.pending.write().unwrap().push(probe);
    }

    /// Track a future for deadlock reporting.
    pub fn watch<T: Send + Sync + 'static>(&self, origin: impl Into<String>, f: &Future<T>) {
        let probe = f.status_probe();
        self.core
            .watch
            .lock()
            .unwrap()
            .push((origin.into(), Box::new(move || probe())));
    }

    /// No tasks outstanding and every registered pending probe at zero.
    pub fn is_quiescent(&self) -> bool {
        self.core.outstanding.load(Ordering::SeqCst) == 0
            && self
                .core
                .pending
                .read()
                .unwrap()
                .iter()
                .map(|p| p())
                .sum::<usize>()
                == 0
    }

    fn quiescent(&self) -> bool {
        self.is_quiescent()
    }

    /// Drive progress hooks from the calling thread.
    pub fn poll_progress(&self) -> usize {
        self.core.progress.read().unwrap().iter().map(|h| h()).sum()
    }

    /// Block the calling (non-worker) thread on a future, detecting deadlock.
    pub fn block_on<T: Send + Sync + 'static>(
        &self,
        f: &Future<T>,
    ) -> Result<Arc<T>, RuntimeError> {
        assert!(
            Runtime::current_worker().is_none(),
            "workers must chain continuations, not block"
        );
        loop {
            if let Some(out) = f.wait_timeout(Duration::from_millis(5)) {
                return out.map_err(RuntimeError::Task);
            }
            if self.poll_progress() > 0 {
                continue;
            }
            if self.quiescent() && !f.is_ready() {
                // Grace period: a worker may sit between counter updates.
                std::thread::sleep(Duration::from_millis(2));
                if self.quiescent() && self.poll_progress() == 0 && !f.is_ready() {
                    return Err(RuntimeError::Deadlock {
                        origins: self.unready_origins(),
                    });
                }
            }
        }
    }

    /// Wait until every spawned task and in-flight message has completed.
    pub fn wait_quiescent(&self) {
        while !self.quiescent() {
            self.poll_progress();
            std::thread::sleep(Duration::from_micros(200));
        }
    }

    /// Watched futures that are still unready (deadlock diagnostics).
    pub fn unready_watched(&self) -> Vec<String> {
        self.unready_origins()
    }

    fn unready_origins(&self) -> Vec<String> {
        let mut watch = self.core.watch.lock().unwrap();
        let mut out = Vec::new();
        watch.retain(|(origin, probe)| match probe() {
            Some(false) => {
                out.push(origin.clone());
                true
            }
            _ => false,
        });
        out
    }

    /// Tasks executed per worker since startup (steal-liveness diagnostics).
    pub fn executed_per_worker(&self) -> Vec<u64> {
        self.core
            .executed_per_worker
            .iter()
            .map(|c| c.load(Ordering::Relaxed))
            .collect()
    }

    pub fn shutdown(&self) {
        self.core.shutdown.store(true, Ordering::SeqCst);
        self.core.park_cond.notify_all();
        let mut threads = self.threads.lock().unwrap();
        for t in threads.drain(..) {
            let _ = t.join();
        }
    }
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("task panicked: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("task panicked: {s}")
    } else {
        "task panicked".to_string()
    }
}

fn worker_loop(core: Arc<Core>, dq: Deque<Task>, id: usize) {
    let dq = Rc::new(dq);
    WORKER.with(|w| {
        *w.borrow_mut() = Some((Arc::as_ptr(&core) as usize, dq.clone(), id));
    });
    let mut rng = SmallRng::seed_from_u64(0x0c70_b0c5 ^ id as u64);
    loop {
        let task = dq.pop().or_else(|| {
            loop {
                match core.injector.steal_batch_and_pop(&dq) {
                    Steal::Success(t) => return Some(t),
                    Steal::Retry => continue,
                    Steal::Empty => break,
                }
            }
            // One round over victims starting at a random index.
            let n = core.stealers.len();
            let start = rng.gen_range(0..n);
            for k in 0..n {
                let v = (start + k) % n;
                if v == id {
                    continue;
                }
                loop {
                    match core.stealers[v].steal() {
                        Steal::Success(t) => return Some(t),
                        Steal::Retry => continue,
                        Steal::Empty => break,
                    }
                }
            }
            None
        });
        match task {
            Some(t) => {
                core.active.fetch_add(1, Ordering::SeqCst);
                let _ = std::panic::catch_unwind(std::panic::AssertUnwindSafe(t));
                core.executed_per_worker[id].fetch_add(1, Ordering::Relaxed);
                core.active.fetch_sub(1, Ordering::SeqCst);
                core.outstanding.fetch_sub(1, Ordering::SeqCst);
            }
            None => {
                let completions: usize =
                    core.progress.read().unwrap().iter().map(|h| h()).sum();
                if completions > 0 {
                    continue;
                }
                if core.shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let guard = core.park.lock().unwrap();
                let _ = core
                    .park_cond
                    .wait_timeout(guard, Duration::from_micros(500))
                    .unwrap();
            }
        }
    }
    WORKER.with(|w| {
        *w.borrow_mut() = None;
    });
}
