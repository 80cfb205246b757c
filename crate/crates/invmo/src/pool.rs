//! Fan-out of independent jobs over scoped threads.

use std::sync::mpsc;
use std::thread;

/// Applies `f` to every item on up to `jobs` threads and returns the results
/// in input order. Worker `w` takes items `w, w + jobs, …`; results travel
/// back over a channel, so no state is shared between jobs.
pub fn map<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let (tx, rx) = mpsc::channel();
    thread::scope(|s| {
        for w in 0..jobs {
            let tx = tx.clone();
            let f = &f;
            s.spawn(move || {
                for i in (w..items.len()).step_by(jobs) {
                    if tx.send((i, f(&items[i]))).is_err() {
                        return;
                    }
                }
            });
        }
    });
    drop(tx);
    let mut out: Vec<(usize, R)> = rx.into_iter().collect();
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, r)| r).collect()
}
