use collapsar::exploration::{bandit_simulate, BanditConfig};
use collapsar::training::{simulate_feedback, FeedbackSimConfig, SchedulerConfig};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, write_snapshot};
use crate::{to_json, write_file, CliError, Common, SimKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FeedbackRun {
    simulation: FeedbackSimConfig,
    scheduler: SchedulerConfig,
}

impl Default for FeedbackRun {
    fn default() -> Self {
        FeedbackRun {
            simulation: Default::default(),
            scheduler: Default::default(),
        }
    }
}

pub fn simulate(kind: SimKind, common: &Common) -> Result<(), CliError> {
    let out = &common.out;
    match kind {
        SimKind::Bandit => {
            let cfg: BanditConfig = resolve(common.table(Some("seed"))?)?;
            let trace = bandit_simulate(&cfg)?;
            write_file(&out.join("trace.json"), &to_json(&trace)?)?;
            write_snapshot(out, &["simulate", "bandit"], &cfg)?;
            println!(
                "{}",
                serde_json::json!({ "final_regret": trace.final_regret() })
            );
        }
        SimKind::DelayedFeedback => {
            let cfg: FeedbackRun = resolve(common.table(Some("simulation.seed"))?)?;
            let trace = simulate_feedback(&cfg.simulation, &cfg.scheduler)?;
            write_file(&out.join("trace.json"), &to_json(&trace)?)?;
            write_snapshot(out, &["simulate", "delayed_feedback"], &cfg)?;
            let max = trace.iter().filter_map(|s| s.wait).fold(0.0, f64::max);
            println!(
                "{}",
                serde_json::json!({ "intervals": trace.len(), "max_wait": max })
            );
        }
    }
    Ok(())
}
