//! Budget accounting in descriptor-computation units.
//!
//! The unit of computational cost throughout the optimizers is one computed
//! graph representation. The ledger is the single piece of shared mutable
//! state in a run; increments are atomic so candidate evaluation can be
//! parallelized.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

#[derive(Debug, Error)]
#[error("descriptor budget exhausted")]
pub struct BudgetExhausted;

/// Counts descriptor computations against a fixed limit.
#[derive(Debug)]
pub struct BudgetLedger {
    limit: u64,
    used: AtomicU64,
}

impl BudgetLedger {
    pub fn new(limit: u64) -> Self {
        BudgetLedger {
            limit,
            used: AtomicU64::new(0),
        }
    }

    /// Ledger that never refuses; used by reporting paths that are not part
    /// of a budgeted optimization run.
    pub fn unlimited() -> Self {
        BudgetLedger::new(u64::MAX)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used())
    }

    /// Charge one descriptor computation.
    pub fn charge(&self) -> Result<(), BudgetExhausted> {
        self.used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| {
                (used < self.limit).then_some(used + 1)
            })
            .map(|_| ())
            .map_err(|_| BudgetExhausted)
    }

    /// Reserve up to `want` units in one step and return how many were
    /// granted. Pool ingestion reserves up front so that which elements get
    /// descriptors never depends on thread timing.
    pub fn reserve(&self, want: u64) -> u64 {
        let mut granted = 0;
        let _ = self
            .used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| {
                granted = want.min(self.limit - used.min(self.limit));
                Some(used + granted)
            });
        granted
    }

    /// Return unused reserved units (e.g. a pool that ended early).
    pub fn refund(&self, units: u64) {
        self.used.fetch_sub(units, Ordering::SeqCst);
    }
}
