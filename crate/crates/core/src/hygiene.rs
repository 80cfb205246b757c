//! Process-wide counters of solver self-checks.
//!
//! Every `Optimal` return from the barrier kernel and the simplex solver is
//! re-verified independently; failed verifications are counted here.

use core::sync::atomic::{AtomicUsize, Ordering};

static LP_OPTIMAL: AtomicUsize = AtomicUsize::new(0);
static LP_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);
static KERNEL_OPTIMAL: AtomicUsize = AtomicUsize::new(0);
static KERNEL_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HygieneCounts {
    pub lp_optimal: usize,
    pub lp_violations: usize,
    pub kernel_optimal: usize,
    pub kernel_violations: usize,
}

impl HygieneCounts {
    pub fn violations(&self) -> usize {
        self.lp_violations + self.kernel_violations
    }
}

pub fn snapshot() -> HygieneCounts {
    HygieneCounts {
        lp_optimal: LP_OPTIMAL.load(Ordering::Relaxed),
        lp_violations: LP_VIOLATIONS.load(Ordering::Relaxed),
        kernel_optimal: KERNEL_OPTIMAL.load(Ordering::Relaxed),
        kernel_violations: KERNEL_VIOLATIONS.load(Ordering::Relaxed),
    }
}

pub(crate) fn record_lp(ok: bool) {
    LP_OPTIMAL.fetch_add(1, Ordering::Relaxed);
    if !ok {
        LP_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }
}

pub(crate) fn record_kernel(ok: bool) {
    KERNEL_OPTIMAL.fetch_add(1, Ordering::Relaxed);
    if !ok {
        KERNEL_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }
}
