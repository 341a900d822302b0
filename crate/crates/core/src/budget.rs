//! Resource limits shared by searches.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget {
        max_nodes: None,
        max_time: None,
    };

    pub fn nodes(max_nodes: u64) -> Self {
        Budget {
            max_nodes: Some(max_nodes),
            max_time: None,
        }
    }

    pub fn time(max_time: Duration) -> Self {
        Budget {
            max_nodes: None,
            max_time: Some(max_time),
        }
    }

    pub(crate) fn start(&self) -> Meter {
        Meter {
            max_nodes: self.max_nodes,
            deadline: self.max_time.map(|d| Instant::now() + d),
            nodes: AtomicU64::new(0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum BudgetExceeded {
    #[error("node budget exceeded")]
    Nodes,
    #[error("time budget exceeded")]
    Time,
}

/// A running budget. Safe to share between threads.
pub(crate) struct Meter {
    max_nodes: Option<u64>,
    deadline: Option<Instant>,
    nodes: AtomicU64,
}

impl Meter {
    /// Counts one node and reports whether the budget still holds.
    #[inline]
    pub(crate) fn tick(&self) -> Result<(), BudgetExceeded> {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(max) = self.max_nodes {
            if n > max {
                return Err(BudgetExceeded::Nodes);
            }
        }
        if n % 256 == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                        return Err(BudgetExceeded::Time);
                }
            }
        }
        Ok(())
    }

    /// A fresh node counter that shares this meter's deadline.
    pub(crate) fn child(&self, max_nodes: Option<u64>) -> Meter {
        Meter {
            max_nodes,
            deadline: self.deadline,
            nodes: AtomicU64::new(0),
        }
    }

    pub(crate) fn nodes(&self) -> u64 {
        self.nodes.load(Ordering::Relaxed)
    }
}

impl fmt::Debug for Meter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Meter").field("nodes", &self.nodes()).finish()
    }
}
