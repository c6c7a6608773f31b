use std::cell::{Cell, RefCell};
use std::iter;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, PoisonError};
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_deque::{Injector, Stealer, Worker};

pub type Task = Box<dyn FnOnce() + Send>;

/// Nesting depth at which inline evaluation and continuation calls are
/// turned into queued tasks instead.
pub const DEFAULT_INLINE_LIMIT: usize = 96;

const WORKER_STACK: usize = 64 << 20;

struct Inner {
    injector: Injector<Task>,
    stealers: Vec<Stealer<Task>>,
    queued: AtomicUsize,
    sleepers: AtomicUsize,
    lock: Mutex<()>,
    wake: Condvar,
    shutdown: AtomicBool,
    spawned: AtomicU64,
    inline_limit: usize,
}

struct WorkerCtx {
    inner: Arc<Inner>,
    index: usize,
    local: Worker<Task>,
}

thread_local! {
    static CURRENT: RefCell<Option<WorkerCtx>> = const { RefCell::new(None) };
    static INLINE_DEPTH: Cell<usize> = const { Cell::new(0) };
}

/// Index of the pool worker running the current thread, if any.
pub fn current_worker() -> Option<usize> {
    CURRENT.with(|c| c.borrow().as_ref().map(|w| w.index))
}

/// Runs `f` inline unless this worker's inline nesting is at the limit, in
/// which case `f` is queued on the worker's own deque.
pub(crate) fn run_guarded(f: Task) {
    let depth = INLINE_DEPTH.get();
    let limit = CURRENT.with(|c| c.borrow().as_ref().map(|w| w.inner.inline_limit));
    match limit {
        Some(limit) if depth >= limit => spawn_local(f),
        _ => {
            INLINE_DEPTH.set(depth + 1);
            f();
            INLINE_DEPTH.set(depth);
        }
    }
}

/// True when the caller may nest one more inline evaluation.
pub(crate) fn may_inline() -> bool {
    let depth = INLINE_DEPTH.get();
    CURRENT.with(|c| c.borrow().as_ref().is_none_or(|w| depth < w.inner.inline_limit))
}

pub(crate) fn inline<R>(f: impl FnOnce() -> R) -> R {
    let depth = INLINE_DEPTH.get();
    INLINE_DEPTH.set(depth + 1);
    let r = f();
    INLINE_DEPTH.set(depth);
    r
}

pub(crate) fn spawn_local(f: Task) {
    let rejected = CURRENT.with(|c| match c.borrow().as_ref() {
        Some(w) => {
            w.inner.spawned.fetch_add(1, Ordering::Relaxed);
            w.inner.queued.fetch_add(1, Ordering::SeqCst);
            w.local.push(f);
            w.inner.notify();
            None
        }
        None => Some(f),
    });
    if let Some(f) = rejected {
        f();
    }
}

impl Inner {
    fn notify(&self) {
        if self.sleepers.load(Ordering::SeqCst) > 0 {
            let _guard = self.lock.lock().unwrap_or_else(PoisonError::into_inner);
            self.wake.notify_one();
        }
    }

    fn find_task(&self, local: &Worker<Task>, index: usize) -> Option<Task> {
        let task = local.pop().or_else(|| {
            iter::repeat_with(|| {
                self.injector.steal_batch_and_pop(local).or_else(|| {
                    let n = self.stealers.len();
                    (1..n)
                        .map(|k| self.stealers[(index + k) % n].steal())
                        .collect()
                })
            })
            .find(|s| !s.is_retry())
            .and_then(|s| s.success())
        });
        if task.is_some() {
            self.queued.fetch_sub(1, Ordering::SeqCst);
        }
        task
    }
}

/// Fixed pool of W workers, each with its own deque; idle workers steal
/// from the shared injector and from each other.
pub struct Scheduler {
    inner: Arc<Inner>,
    threads: Vec<JoinHandle<()>>,
}

impl Scheduler {
    pub fn new(workers: usize) -> Self {
        Self::with_inline_limit(workers, DEFAULT_INLINE_LIMIT)
    }

    pub fn with_inline_limit(workers: usize, inline_limit: usize) -> Self {
        let workers = workers.max(1);
        let locals: Vec<Worker<Task>> = (0..workers).map(|_| Worker::new_lifo()).collect();
        let inner = Arc::new(Inner {
            injector: Injector::new(),
            stealers: locals.iter().map(Worker::stealer).collect(),
            queued: AtomicUsize::new(0),
            sleepers: AtomicUsize::new(0),
            lock: Mutex::new(()),
            wake: Condvar::new(),
            shutdown: AtomicBool::new(false),
            spawned: AtomicU64::new(0),
            inline_limit,
        });
        let threads = locals
            .into_iter()
            .enumerate()
            .map(|(index, local)| {
                let inner = inner.clone();
                std::thread::Builder::new()
                    .name(format!("fut-worker-{index}"))
                    .stack_size(WORKER_STACK)
                    .spawn(move || worker_loop(inner, index, local))
                    .expect("spawn worker thread")
            })
            .collect();
        Scheduler { inner, threads }
    }

    pub fn workers(&self) -> usize {
        self.threads.len()
    }

    /// Total tasks queued since creation.
    pub fn tasks_spawned(&self) -> u64 {
        self.inner.spawned.load(Ordering::Relaxed)
    }

    /// Queues a task, on the calling worker's deque when called from one of
    /// this pool's workers.
    pub fn spawn(&self, task: Task) {
        let task = CURRENT.with(|c| match c.borrow().as_ref() {
            Some(w) if Arc::ptr_eq(&w.inner, &self.inner) => {
                self.inner.spawned.fetch_add(1, Ordering::Relaxed);
                self.inner.queued.fetch_add(1, Ordering::SeqCst);
                w.local.push(task);
                None
            }
            _ => Some(task),
        });
        if let Some(task) = task {
            self.inner.spawned.fetch_add(1, Ordering::Relaxed);
            self.inner.queued.fetch_add(1, Ordering::SeqCst);
            self.inner.injector.push(task);
        }
        self.inner.notify();
    }
}

impl Drop for Scheduler {
    /// Drains queued tasks, then joins the workers.
    fn drop(&mut self) {
        self.inner.shutdown.store(true, Ordering::SeqCst);
        {
            let _guard = self.inner.lock.lock().unwrap_or_else(PoisonError::into_inner);
            self.inner.wake.notify_all();
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

fn worker_loop(inner: Arc<Inner>, index: usize, local: Worker<Task>) {
    CURRENT.with(|c| {
        *c.borrow_mut() = Some(WorkerCtx {
            inner: inner.clone(),
            index,
            local,
        })
    });
    loop {
        let task = CURRENT.with(|c| {
            let c = c.borrow();
            let w = c.as_ref().expect("worker context");
            inner.find_task(&w.local, index)
        });
        if let Some(task) = task {
            task();
            continue;
        }
        let guard = inner.lock.lock().unwrap_or_else(PoisonError::into_inner);
        inner.sleepers.fetch_add(1, Ordering::SeqCst);
        if inner.queued.load(Ordering::SeqCst) == 0 {
            if inner.shutdown.load(Ordering::SeqCst) {
                inner.sleepers.fetch_sub(1, Ordering::SeqCst);
                break;
            }
            let _ = inner
                .wake
                .wait_timeout(guard, Duration::from_millis(50))
                .unwrap_or_else(PoisonError::into_inner);
        }
        inner.sleepers.fetch_sub(1, Ordering::SeqCst);
    }
    CURRENT.with(|c| c.borrow_mut().take());
}

/// Default worker count: `FUT_THREADS` if set, else the logical CPU count.
pub fn default_threads() -> usize {
    std::env::var("FUT_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
