//! `linear-delay`: rank and verdict for a windowed-output LTI system.

use std::fs;

use anyhow::Context;
use obskit_core::linear_delay::{analyze, tstep_observability, DelayReport, LinearDelaySystem};
use obskit_core::numerics::numeric_rank;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::OutputDir;

#[derive(Debug, Serialize)]
struct Report {
    source: String,
    #[serde(flatten)]
    delayed: DelayReport,
    /// Rank with only the current-sample tap `C_0`.
    rank_current_tap: usize,
    observable_current_tap: bool,
}

pub fn run(cfg: &RunConfig, out: &mut OutputDir) -> anyhow::Result<()> {
    let ld = &cfg.linear_delay;
    let (sys, source) = match &ld.system {
        Some(p) => {
            let path = cfg.resolve(p);
            let text = fs::read_to_string(&path).with_context(|| format!("reading system {}", path.display()))?;
            (LinearDelaySystem::from_json(&text)?, path.display().to_string())
        }
        None => (
            LinearDelaySystem::differencing_double_integrator(ld.ts)?,
            format!("differencing double integrator, Ts = {}", ld.ts),
        ),
    };
    let n = sys.state_dim();
    let current = numeric_rank(&tstep_observability(sys.a(), &sys.taps()[0], n)?, ld.rank_rtol);
    let report = Report {
        source,
        delayed: analyze(&sys, ld.rank_rtol),
        rank_current_tap: current,
        observable_current_tap: current == n,
    };
    out.json("linear_delay.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
