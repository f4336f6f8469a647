//! Single-assignment value slots with attached continuations.

use crate::error::TaskError;
use std::sync::{Arc, Condvar, Mutex};

type Outcome<T> = Result<Arc<T>, TaskError>;
type Continuation<T> = Box<dyn FnOnce(&Outcome<T>) + Send>;

enum State<T> {
    Pending(Vec<Continuation<T>>),
    Done(Outcome<T>),
}

pub(crate) struct Inner<T> {
    state: Mutex<State<T>>,
    cond: Condvar,
}

/// Readable end; clones share the same slot.
pub struct Future<T> {
    inner: Arc<Inner<T>>,
}

/// Writable end; the slot is set exactly once.
pub struct Promise<T> {
    inner: Arc<Inner<T>>,
}

impl<T> Clone for Future<T> {
    fn clone(&self) -> Self {
        Future {
            inner: self.inner.clone(),
        }
    }
}

pub fn pair<T>() -> (Promise<T>, Future<T>) {
    let inner = Arc::new(Inner {
        state: Mutex::new(State::Pending(Vec::new())),
        cond: Condvar::new(),
    });
    (
        Promise {
            inner: inner.clone(),
        },
        Future { inner },
    )
}

/// Future that is already ready.
pub fn ready<T>(value: T) -> Future<T> {
    let (p, f) = pair();
    p.set(value);
    f
}

impl<T> Promise<T> {
    pub fn set(self, value: T) {
        self.resolve(Ok(Arc::new(value)));
    }

    pub fn set_error(self, err: TaskError) {
        self.resolve(Err(err));
    }

    pub fn set_result(self, r: Result<T, TaskError>) {
        self.resolve(r.map(Arc::new));
    }

    fn resolve(self, outcome: Outcome<T>) {
        let conts = {
            let mut state = self.inner.state.lock().unwrap();
            match &mut *state {
                State::Pending(c) => {
                    let conts = std::mem::take(c);
                    *state = State::Done(outcome.clone());
                    conts
                }
                State::Done(_) => panic!("future set twice"),
            }
        };
        self.inner.cond.notify_all();
        for c in conts {
            c(&outcome);
        }
    }
}

impl<T> Future<T> {
    pub fn is_ready(&self) -> bool {
        matches!(*self.inner.state.lock().unwrap(), State::Done(_))
    }

    pub fn try_get(&self) -> Option<Outcome<T>> {
        match &*self.inner.state.lock().unwrap() {
            State::Done(o) => Some(o.clone()),
            State::Pending(_) => None,
        }
    }

    /// Attach a continuation; runs immediately if already ready, otherwise
    /// exactly once when the promise resolves.
    pub fn on_ready(&self, cont: impl FnOnce(&Outcome<T>) + Send + 'static) {
        let run_now = {
            let mut state = self.inner.state.lock().unwrap();
            match &mut *state {
                State::Pending(conts) => {
                    conts.push(Box::new(cont));
                    None
                }
                State::Done(o) => Some((cont, o.clone())),
            }
        };
        if let Some((cont, o)) = run_now {
            cont(&o);
        }
    }

    /// Block the calling (non-worker) thread until ready.
    pub fn wait(&self) -> Outcome<T> {
        let mut state = self.inner.state.lock().unwrap();
        loop {
            match &*state {
                State::Done(o) => return o.clone(),
                State::Pending(_) => {
                    state = self.inner.cond.wait(state).unwrap();
                }
            }
        }
    }

    /// Weak readiness probe for deadlock reporting: None once every handle
    /// is gone, otherwise whether the slot is filled.
    pub fn status_probe(&self) -> impl Fn() -> Option<bool> + Send + 'static
    where
        T: Send + Sync + 'static,
    {
        let weak = Arc::downgrade(&self.inner);
        move || {
            weak.upgrade()
                .map(|inner| matches!(&*inner.state.lock().unwrap(), State::Done(_)))
        }
    }

    /// Block up to `dur` for readiness; None on timeout. Driver-side only.
    pub fn wait_timeout(&self, dur: std::time::Duration) -> Option<Outcome<T>> {
        let mut state = self.inner.state.lock().unwrap();
        loop {
            match &*state {
                State::Done(o) => return Some(o.clone()),
                State::Pending(_) => {
                    let (s, timeout) = self.inner.cond.wait_timeout(state, dur).unwrap();
                    state = s;
                    if timeout.timed_out() {
                        if let State::Done(o) = &*state {
                            return Some(o.clone());
                        }
                        return None;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_then_get() {
        let (p, f) = pair();
        assert!(!f.is_ready());
        p.set(41);
        assert_eq!(*f.try_get().unwrap().unwrap(), 41);
    }

    #[test]
    fn continuation_after_set_runs_inline() {
        let f = ready(7);
        let hit = std::sync::Arc::new(std::sync::atomic::AtomicBool::new(false));
        let h = hit.clone();
        f.on_ready(move |o| {
            assert_eq!(**o.as_ref().unwrap(), 7);
            h.store(true, std::sync::atomic::Ordering::SeqCst);
        });
        assert!(hit.load(std::sync::atomic::Ordering::SeqCst));
    }

    #[test]
    #[should_panic(expected = "set twice")]
    fn double_set_panics() {
        let (p, f) = pair();
        p.set(1);
        let p2 = Promise { inner: f.inner };
        p2.set(2);
    }
}
