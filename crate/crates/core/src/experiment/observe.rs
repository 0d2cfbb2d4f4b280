//! Observers for decision traces and online conformance audits.

use std::io::Write;

use serde::Serialize;

use crate::engine::{Observer, TickContext};
use crate::strategies::{audit_tick, Decision, StrategyId, Violation};
use crate::Seconds;

/// Checks every scheduling point against the strategy rules.
#[derive(Debug)]
pub struct AuditObserver {
    strategy: StrategyId,
    pub ticks: u64,
    pub violations: Vec<Violation>,
}

impl AuditObserver {
    pub fn new(strategy: StrategyId) -> Self {
        AuditObserver {
            strategy,
            ticks: 0,
            violations: Vec::new(),
        }
    }
}

impl Observer for AuditObserver {
    fn on_tick(&mut self, ctx: &TickContext<'_>) {
        self.ticks += 1;
        self.violations
            .extend(audit_tick(ctx.view, ctx.decisions, self.strategy));
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    now: Seconds,
    free_nodes: u32,
    queued: usize,
    running: usize,
    decisions: Vec<TraceDecision<'a>>,
}

#[derive(Serialize)]
struct TraceDecision<'a> {
    kind: &'static str,
    job: &'a str,
    nodes: u32,
    /// Allocation before a resize; absent for starts.
    #[serde(skip_serializing_if = "Option::is_none")]
    from: Option<u32>,
}

/// Writes one JSON line per scheduling point that produced decisions.
pub struct JsonlTrace<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> JsonlTrace<W> {
    pub fn new(out: W) -> Self {
        JsonlTrace { out, error: None }
    }

    /// Flush and surface the first write error, if any.
    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> Observer for JsonlTrace<W> {
    fn on_tick(&mut self, ctx: &TickContext<'_>) {
        if ctx.decisions.is_empty() || self.error.is_some() {
            return;
        }
        // Sizes as of the previous decision, so a start followed by an
        // expansion in the same tick reports where it expanded from.
        let mut sizes: std::collections::HashMap<usize, u32> =
            ctx.view.running.iter().map(|r| (r.job, r.nodes)).collect();
        let decisions = ctx
            .decisions
            .iter()
            .map(|d| match *d {
                Decision::Start { job, nodes } => {
                    sizes.insert(job, nodes);
                    TraceDecision {
                        kind: "start",
                        job: &ctx.ids[job],
                        nodes,
                        from: None,
                    }
                }
                Decision::Resize { job, nodes } => {
                    let from = sizes.insert(job, nodes);
                    TraceDecision {
                        kind: if from.is_some_and(|f| nodes < f) { "shrink" } else { "expand" },
                        job: &ctx.ids[job],
                        nodes,
                        from,
                    }
                }
            })
            .collect();
        let line = TraceLine {
            now: ctx.view.now,
            free_nodes: ctx.view.free_nodes,
            queued: ctx.view.queue.len(),
            running: ctx.view.running.len(),
            decisions,
        };
        let text = serde_json::to_string(&line).expect("trace line serializes");
        if let Err(e) = writeln!(self.out, "{text}") {
            self.error = Some(e);
        }
    }
}
