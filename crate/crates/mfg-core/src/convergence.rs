//! Per-iteration convergence records shared by all outer solvers.

use std::time::Instant;

/// One outer iteration: its 1-based index, the convergence metric measured
/// after the iteration, and the wall-clock time since the solve started.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRecord {
    pub iteration: usize,
    pub metric: f64,
    pub wall_time_seconds: f64,
}

/// Append-only history of outer iterations. The number of records is the
/// iteration count reported by a solver.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceLog {
    records: Vec<LogRecord>,
}

impl ConvergenceLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, iteration: usize, metric: f64, wall_time_seconds: f64) {
        debug_assert_eq!(
            iteration,
            self.records.len() + 1,
            "iterations are recorded consecutively from 1"
        );
        self.records.push(LogRecord {
            iteration,
            metric,
            wall_time_seconds,
        });
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&LogRecord> {
        self.records.last()
    }

    /// Metric of the last recorded iteration, if any.
    pub fn final_metric(&self) -> Option<f64> {
        self.last().map(|r| r.metric)
    }

    /// Total wall time of the last recorded iteration, if any.
    pub fn total_wall_time(&self) -> Option<f64> {
        self.last().map(|r| r.wall_time_seconds)
    }
}

/// Stopwatch measuring wall time for the log records.
pub(crate) struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
