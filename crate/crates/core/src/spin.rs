//! CPU-time busy waiting.
//!
//! Synthetic costs are charged against the calling thread's CPU clock, not
//! the wall clock: a preempted spinner keeps spinning until it has actually
//! burned its budget, so oversubscribed threads serialize as real work would.

use std::hint;
use std::time::{Duration, Instant};

/// CPU time consumed so far by the calling thread.
pub fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// Burn at least `budget` of this thread's CPU time.
pub fn spin_for(budget: Duration) {
    if budget.is_zero() {
        return;
    }
    let start = thread_cpu_time();
    if start.is_zero() {
        // No thread clock available; fall back to wall time.
        let t0 = Instant::now();
        while t0.elapsed() < budget {
            hint::spin_loop();
        }
        return;
    }
    while thread_cpu_time() - start < budget {
        hint::spin_loop();
    }
}
