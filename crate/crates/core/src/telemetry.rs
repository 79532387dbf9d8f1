//! Per-generation telemetry of a run.
//!
//! Every recorded run gets the scalar columns of [`TelemetryRow`]; the
//! `levels` and `n_events` trackers additionally keep the current-level state
//! and the full offspring trace.

use std::io::{self, Write};

use serde::Serialize;

use crate::config::{ExperimentConfig, Tracker};
use crate::ea::{GenerationEvent, Observer, Population};
use crate::error::Result;
use crate::level::{CurrentLevelState, LevelTracker};
use crate::potential::{
    h_potential, log_g_from_histogram, log_z_from_log_g, n1_holds_pool, trace_of,
    GenerationTrace, PotentialParams, LOG_ZERO,
};
use crate::report::{fmt_f64, TELEMETRY_HEADER};

/// One row of the telemetry CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TelemetryRow {
    pub generation: u64,
    pub f_top: usize,
    pub x_top: usize,
    /// ln g(P_t); `-inf` when g is zero.
    pub log_g: f64,
    pub z_is_zero: bool,
    pub h_value: f64,
    /// Whether the generation that produced this population satisfied `N_1`
    /// relative to the previous top level. Vacuously true for generation 0.
    pub n1_holds: bool,
}

impl TelemetryRow {
    fn of(pop: &Population, params: &PotentialParams, n1_holds: bool) -> Self {
        let hist = pop.histogram();
        let f_top = hist.iter().rposition(|&c| c > 0).unwrap_or(0);
        let x_top = hist[f_top];
        let log_g = log_g_from_histogram(&hist, params);
        Self {
            generation: pop.generation(),
            f_top,
            x_top,
            log_g,
            z_is_zero: log_z_from_log_g(log_g, params) == LOG_ZERO,
            h_value: h_potential(x_top, pop.mu()).expect("x_top <= mu"),
            n1_holds,
        }
    }

    fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.generation,
            self.f_top,
            self.x_top,
            fmt_f64(self.log_g),
            self.z_is_zero,
            fmt_f64(self.h_value),
            self.n1_holds
        )
    }
}

/// Everything recorded over one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunTelemetry {
    pub rows: Vec<TelemetryRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<CurrentLevelState>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<GenerationTrace>>,
}

impl RunTelemetry {
    pub fn f_tops(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.f_top).collect()
    }

    /// Column header plus one line per row.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{TELEMETRY_HEADER}")?;
        for r in &self.rows {
            r.write_csv(out)?;
        }
        Ok(())
    }
}

/// Observer that fills a [`RunTelemetry`].
pub struct TelemetryRecorder {
    params: PotentialParams,
    levels: Option<LevelTracker>,
    keep_traces: bool,
    telemetry: RunTelemetry,
}

impl TelemetryRecorder {
    /// Records generation 0 from `initial`.
    pub fn new(config: &ExperimentConfig, initial: &Population) -> Result<Self> {
        let params = PotentialParams::new(config.epsilon, config.n)?;
        let mut telemetry = RunTelemetry::default();
        telemetry.rows.push(TelemetryRow::of(initial, &params, true));
        let levels = if config.trackers.contains(&Tracker::Levels) {
            let tracker = LevelTracker::new(initial);
            telemetry.levels = Some(vec![*tracker.state()]);
            Some(tracker)
        } else {
            None
        };
        let keep_traces = config.trackers.contains(&Tracker::NEvents);
        if keep_traces {
            telemetry.traces = Some(Vec::new());
        }
        Ok(Self {
            params,
            levels,
            keep_traces,
            telemetry,
        })
    }

    pub fn telemetry(&self) -> &RunTelemetry {
        &self.telemetry
    }

    pub fn finish(self) -> RunTelemetry {
        self.telemetry
    }
}

impl Observer for TelemetryRecorder {
    fn on_generation(&mut self, event: &GenerationEvent<'_>) {
        let n1 = n1_holds_pool(event.offspring, event.before.f_top());
        self.telemetry
            .rows
            .push(TelemetryRow::of(event.after, &self.params, n1));
        if let Some(tracker) = self.levels.as_mut() {
            let state = tracker.update(event.after);
            if let Some(v) = self.telemetry.levels.as_mut() {
                v.push(state);
            }
        }
        if self.keep_traces {
            if let Some(t) = self.telemetry.traces.as_mut() {
                t.push(trace_of(event.offspring));
            }
        }
    }
}
