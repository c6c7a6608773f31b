use std::sync::{Arc, Condvar, Mutex, PoisonError};

use super::scheduler::run_guarded;
use super::RuntimeError;
use crate::value::Datum;

pub type Outcome = Result<Datum, RuntimeError>;

type Callback = Box<dyn FnOnce(Outcome) + Send>;

enum State {
    Pending(Vec<Callback>),
    Resolved(Outcome),
}

struct Slot {
    state: Mutex<State>,
    ready: Condvar,
}

/// Single-assignment handle to a value that may not be computed yet.
///
/// Consumers attach continuations with [`FutureHandle::on_complete`];
/// continuations run on the thread that resolves the handle, or immediately
/// if it is already resolved. Only client threads outside the worker pool
/// should use the blocking [`FutureHandle::wait`].
#[derive(Clone)]
pub struct FutureHandle(Arc<Slot>);

impl Default for FutureHandle {
    fn default() -> Self {
        FutureHandle::pending()
    }
}

impl FutureHandle {
    pub fn pending() -> Self {
        FutureHandle(Arc::new(Slot {
            state: Mutex::new(State::Pending(Vec::new())),
            ready: Condvar::new(),
        }))
    }

    pub fn ready(outcome: Outcome) -> Self {
        FutureHandle(Arc::new(Slot {
            state: Mutex::new(State::Resolved(outcome)),
            ready: Condvar::new(),
        }))
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.0.state.lock().unwrap_or_else(PoisonError::into_inner)
    }

    /// Publishes the outcome and runs the registered continuations.
    ///
    /// # Panics
    /// If the handle was already resolved.
    pub fn resolve(&self, outcome: Outcome) {
        let callbacks = {
            let mut state = self.lock();
            match std::mem::replace(&mut *state, State::Resolved(outcome.clone())) {
                State::Pending(cbs) => cbs,
                State::Resolved(_) => panic!("future resolved twice"),
            }
        };
        self.0.ready.notify_all();
        for cb in callbacks {
            let o = outcome.clone();
            run_guarded(Box::new(move || cb(o)));
        }
    }

    pub fn on_complete(&self, cb: impl FnOnce(Outcome) + Send + 'static) {
        let mut state = self.lock();
        match &mut *state {
            State::Pending(cbs) => cbs.push(Box::new(cb)),
            State::Resolved(o) => {
                let o = o.clone();
                drop(state);
                run_guarded(Box::new(move || cb(o)));
            }
        }
    }

    pub fn try_get(&self) -> Option<Outcome> {
        match &*self.lock() {
            State::Resolved(o) => Some(o.clone()),
            State::Pending(_) => None,
        }
    }

    pub fn is_ready(&self) -> bool {
        matches!(&*self.lock(), State::Resolved(_))
    }

    /// Blocks the calling thread until the handle resolves.
    pub fn wait(&self) -> Outcome {
        let mut state = self.lock();
        loop {
            if let State::Resolved(o) = &*state {
                return o.clone();
            }
            state = self.0.ready.wait(state).unwrap_or_else(PoisonError::into_inner);
        }
    }
}
